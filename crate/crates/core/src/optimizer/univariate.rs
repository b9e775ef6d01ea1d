//! Brent's method for bounded univariate minimization.

const GOLDEN: f64 = 0.381_966_011_250_105_1;

#[derive(Debug, Clone, Copy)]
pub struct BrentOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for BrentOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-10,
            max_iter: 200,
        }
    }
}

/// Minimizes `f` on `[lo, hi]` starting from `x0`.
///
/// The returned value is never worse than `f(x0)`. Non-finite evaluations are
/// treated as `+inf`. When the minimizer sits within tolerance of an end
/// point, the end point itself is tried so that clamped optima land exactly
/// on the bound.
pub fn brent_minimize<F>(mut f: F, lo: f64, hi: f64, x0: f64, opts: BrentOptions) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let mut eval = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let (mut a, mut b) = (lo, hi);
    let mut x = x0.clamp(lo, hi);
    let mut fx = eval(x);
    let (mut w, mut v) = (x, x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for _ in 0..opts.max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = opts.rel_tol * x.abs() + opts.abs_tol;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            e = d;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = eval(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }

    let edge = 10.0 * (opts.rel_tol * x.abs() + opts.abs_tol);
    for bound in [lo, hi] {
        if x != bound && (x - bound).abs() <= edge {
            let fb = eval(bound);
            if fb <= fx {
                x = bound;
                fx = fb;
            }
        }
    }
    (x, fx)
}
