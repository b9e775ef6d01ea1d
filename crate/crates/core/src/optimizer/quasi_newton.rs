//! Box-constrained BFGS for the low-dimensional effect updates.

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    /// Stop when the projected gradient norm is below `grad_tol * (1 + |f|)`.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iter: 100,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    /// The projected gradient met the tolerance at `x`.
    pub converged: bool,
}

/// Minimizes `f` over the box `[lo, hi]^d`. `f` writes the gradient into its
/// second argument and returns the objective.
///
/// Returns `None` when the objective is not finite at `x0`.
pub fn bfgs_minimize<F>(
    mut f: F,
    x0: &[f64],
    lo: f64,
    hi: f64,
    opts: BfgsOptions,
) -> Option<BfgsOutcome>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let d = x0.len();
    let mut x: Vec<f64> = x0.iter().map(|v| v.clamp(lo, hi)).collect();
    let mut g = vec![0.0; d];
    let mut fx = f(&x, &mut g);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut h = identity(d);
    let mut fresh = true;
    let mut iterations = 0;
    let small = |x: &[f64], g: &[f64], fx: f64| {
        projected_grad_norm(x, g, lo, hi) < opts.grad_tol * (1.0 + fx.abs())
    };

    while iterations < opts.max_iter {
        if small(&x, &g, fx) {
            break;
        }
        iterations += 1;

        let mut p = mat_vec(&h, &g);
        p.iter_mut().for_each(|v| *v = -*v);
        // Freeze coordinates pinned against a bound.
        for i in 0..d {
            if (x[i] <= lo && p[i] < 0.0) || (x[i] >= hi && p[i] > 0.0) {
                p[i] = 0.0;
            }
        }
        if dot(&p, &g) >= 0.0 {
            if fresh {
                break;
            }
            h = identity(d);
            fresh = true;
            continue;
        }
        if fresh {
            // First step from an identity metric: cap its length.
            let norm = dot(&p, &p).sqrt();
            if norm > 1.0 {
                p.iter_mut().for_each(|v| *v /= norm);
            }
        }

        let mut t = 1.0;
        let mut accepted = None;
        let mut g_new = vec![0.0; d];
        for _ in 0..opts.max_backtracks {
            let trial: Vec<f64> = x
                .iter()
                .zip(&p)
                .map(|(xi, pi)| (xi + t * pi).clamp(lo, hi))
                .collect();
            let step: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &step);
            let f_trial = f(&trial, &mut g_new);
            if f_trial.is_finite()
                && g_new.iter().all(|v| v.is_finite())
                && f_trial <= fx + 1e-4 * decrease
            {
                accepted = Some((trial, step, f_trial));
                break;
            }
            // Minimizer of the quadratic through f(x), its slope and f_trial,
            // kept within [t/10, t/2].
            let slope = dot(&g, &p);
            let t_quad = if f_trial.is_finite() {
                -slope * t * t / (2.0 * (f_trial - fx - slope * t))
            } else {
                f64::NAN
            };
            t = if t_quad.is_finite() {
                t_quad.clamp(0.1 * t, 0.5 * t)
            } else {
                0.5 * t
            };
        }
        let Some((trial, s, f_trial)) = accepted else {
            if fresh {
                break;
            }
            h = identity(d);
            fresh = true;
            continue;
        };

        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let f_change = fx - f_trial;
        x = trial;
        g.copy_from_slice(&g_new);
        fx = f_trial;

        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if fresh {
                let scale = sy / dot(&y, &y);
                h.iter_mut()
                    .for_each(|row| row.iter_mut().for_each(|v| *v *= scale));
            }
            bfgs_update(&mut h, &s, &y, sy);
            fresh = false;
        }
        if f_change.abs() <= 1e-15 * (1.0 + fx.abs()) && dot(&s, &s).sqrt() < 1e-12 {
            break;
        }
    }
    let converged = small(&x, &g, fx);
    Some(BfgsOutcome {
        x,
        fx,
        iterations,
        converged,
    })
}

fn projected_grad_norm(x: &[f64], g: &[f64], lo: f64, hi: f64) -> f64 {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| {
            if (xi <= lo && gi > 0.0) || (xi >= hi && gi < 0.0) {
                0.0
            } else {
                gi * gi
            }
        })
        .sum::<f64>()
        .sqrt()
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let d = s.len();
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    for i in 0..d {
        for j in 0..d {
            h[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

fn identity(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let out = bfgs_minimize(
            f,
            &[-1.2, 1.0],
            -5.0,
            5.0,
            BfgsOptions {
                max_iter: 500,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(
            (out.x[0] - 1.0).abs() < 1e-5 && (out.x[1] - 1.0).abs() < 1e-5,
            "{:?}",
            out.x
        );
    }

    #[test]
    fn respects_box() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 1.0;
            g[1] = 2.0 * (x[1] - 0.5);
            x[0] + (x[1] - 0.5).powi(2)
        };
        let out = bfgs_minimize(f, &[0.0, 0.0], -3.0, 3.0, BfgsOptions::default()).unwrap();
        assert_eq!(out.x[0], -3.0);
        assert!((out.x[1] - 0.5).abs() < 1e-7);
    }

    #[test]
    fn stationary_start_is_kept() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * x[0];
            x[0] * x[0]
        };
        let out = bfgs_minimize(f, &[0.0], -1.0, 1.0, BfgsOptions::default()).unwrap();
        assert_eq!(out.x, vec![0.0]);
        assert_eq!(out.iterations, 0);
    }
}
