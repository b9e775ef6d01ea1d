//! Negative-binomial and beta-binomial log-pmfs and samplers.
//!
//! The negative binomial uses the mean / over-dispersion parameterization
//! `Var(Y) = mu + overdisp * mu^2` (size `1 / overdisp`). The beta-binomial
//! uses `alpha = p / overdisp`, `beta = (1 - p) / overdisp`, so the
//! intra-class correlation is `overdisp / (1 + overdisp)`.
//!
//! Everything is evaluated in the log domain; factorials and Beta functions
//! go through log-gamma (or exact rising-factorial sums for short runs).

use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, Poisson};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};

/// Rising factorial runs shorter than this are summed term by term.
const DIRECT_SUM_LIMIT: u64 = 48;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NbParams {
    mu: f64,
    overdisp: f64,
}

impl NbParams {
    pub fn new(mu: f64, overdisp: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::domain(format!(
                "NB mean must be finite and positive, got {mu}"
            )));
        }
        if !(overdisp.is_finite() && overdisp > 0.0) {
            return Err(Error::domain(format!(
                "NB over-dispersion must be finite and positive, got {overdisp}"
            )));
        }
        Ok(Self { mu, overdisp })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn overdisp(&self) -> f64 {
        self.overdisp
    }

    /// Size parameter `theta = 1 / overdisp`.
    pub fn size(&self) -> f64 {
        1.0 / self.overdisp
    }

    pub fn variance(&self) -> f64 {
        self.mu + self.overdisp * self.mu * self.mu
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BbParams {
    p: f64,
    overdisp: f64,
}

impl BbParams {
    pub fn new(p: f64, overdisp: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!(
                "BB mean must lie in (0, 1), got {p}"
            )));
        }
        if !(overdisp.is_finite() && overdisp > 0.0) {
            return Err(Error::domain(format!(
                "BB over-dispersion must be finite and positive, got {overdisp}"
            )));
        }
        Ok(Self { p, overdisp })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn overdisp(&self) -> f64 {
        self.overdisp
    }

    pub fn alpha(&self) -> f64 {
        self.p / self.overdisp
    }

    pub fn beta(&self) -> f64 {
        (1.0 - self.p) / self.overdisp
    }

    /// Intra-class correlation `overdisp / (1 + overdisp)`.
    pub fn icc(&self) -> f64 {
        self.overdisp / (1.0 + self.overdisp)
    }
}

/// `ln Gamma(a + k) - ln Gamma(a)`.
pub fn ln_rising(a: f64, k: u64) -> f64 {
    if k == 0 {
        0.0
    } else if k <= DIRECT_SUM_LIMIT && a < 1e12 {
        // One log per block of factors; 16 factors below 1e12 + 48 cannot
        // overflow, and positive factors cannot underflow to zero this fast.
        let mut total = 0.0;
        let mut product = 1.0;
        for i in 0..k {
            product *= a + i as f64;
            if i % 16 == 15 {
                total += product.ln();
                product = 1.0;
            }
        }
        total + product.ln()
    } else {
        ln_gamma(a + k as f64) - ln_gamma(a)
    }
}

/// `digamma(a + k) - digamma(a)`, the derivative of [`ln_rising`] in `a`.
pub fn digamma_rising(a: f64, k: u64) -> f64 {
    if k == 0 {
        0.0
    } else if k <= DIRECT_SUM_LIMIT {
        (0..k).map(|i| 1.0 / (a + i as f64)).sum()
    } else {
        digamma(a + k as f64) - digamma(a)
    }
}

pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Logistic function, `1 / (1 + exp(-x))`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(x))` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn nb_logpmf(y: u64, params: &NbParams) -> f64 {
    nb_logpmf_unchecked(y, params.mu, params.overdisp)
}

/// NB log-pmf without parameter validation; `mu` may be zero.
pub(crate) fn nb_logpmf_unchecked(y: u64, mu: f64, overdisp: f64) -> f64 {
    let size = 1.0 / overdisp;
    let scaled = overdisp * mu;
    let log1p_scaled = scaled.ln_1p();
    let mut lp = ln_rising(size, y) - ln_factorial(y) - size * log1p_scaled;
    if y > 0 {
        lp += y as f64 * (scaled.ln() - log1p_scaled);
    }
    lp
}

/// Derivative of the NB log-pmf with respect to `ln(mu)`.
pub(crate) fn nb_dlogmu(y: u64, mu: f64, overdisp: f64) -> f64 {
    (y as f64 - mu) / (1.0 + overdisp * mu)
}

pub fn bb_logpmf(n1: u64, n: u64, params: &BbParams) -> Result<f64> {
    if n1 > n {
        return Err(Error::domain(format!(
            "BB successes {n1} exceed trials {n}"
        )));
    }
    Ok(bb_logpmf_unchecked(
        n1,
        n,
        params.p,
        1.0 - params.p,
        params.overdisp,
    ))
}

/// BB log-pmf taking the mean and its complement separately so that extreme
/// logits do not lose the smaller of the two to cancellation.
pub(crate) fn bb_logpmf_unchecked(n1: u64, n: u64, p: f64, q: f64, overdisp: f64) -> f64 {
    let alpha = p / overdisp;
    let beta = q / overdisp;
    ln_choose(n, n1) + ln_rising(alpha, n1) + ln_rising(beta, n - n1) - ln_rising(1.0 / overdisp, n)
}

/// Derivative of the BB log-pmf with respect to `logit(p)`.
pub(crate) fn bb_dlogit(n1: u64, n: u64, p: f64, q: f64, overdisp: f64) -> f64 {
    let alpha = p / overdisp;
    let beta = q / overdisp;
    let dp = (digamma_rising(alpha, n1) - digamma_rising(beta, n - n1)) / overdisp;
    dp * p * q
}

/// Draws from NB(mu, overdisp) as a gamma-Poisson mixture.
pub fn nb_sample<R: Rng + ?Sized>(params: &NbParams, rng: &mut R) -> u64 {
    let size = params.size();
    let gamma = Gamma::new(size, params.mu / size).expect("validated NB parameters");
    let lambda: f64 = gamma.sample(rng);
    poisson_sample(lambda, rng)
}

fn poisson_sample<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    let lambda = lambda.min(Poisson::<f64>::MAX_LAMBDA);
    let draw: f64 = Poisson::new(lambda).expect("positive lambda").sample(rng);
    draw as u64
}

/// Draws from BB(n, p, overdisp) as a beta-binomial mixture.
pub fn bb_sample<R: Rng + ?Sized>(n: u64, params: &BbParams, rng: &mut R) -> u64 {
    if n == 0 {
        return 0;
    }
    let beta = Beta::new(params.alpha(), params.beta()).expect("validated BB parameters");
    let p: f64 = beta.sample(rng);
    binomial_sample(n, p, rng)
}

pub(crate) fn binomial_sample<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || !(p > 0.0) {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
}
