//! Coordinate-ascent maximum likelihood for the joint TReC + ASE model.
//!
//! One cycle runs three blocks in turn and repeats until the log-likelihood
//! gain drops below `epsilon`:
//!
//! 1. IRLS (Fisher scoring) on the linear terms of the NB log-mean, with the
//!    `eta` offset and over-dispersions held fixed. Each step is halved until
//!    the likelihood does not decrease.
//! 2. The free genetic / parent-of-origin effects, first jointly with BFGS
//!    and then one at a time with Brent's method.
//! 3. `ln(bb_overdisp)` and `ln(nb_overdisp)`, each with Brent's method on
//!    the clamp range.
//!
//! Every block is monotone, so the per-cycle trace never decreases.

mod linalg;
mod quasi_newton;
mod univariate;

pub use quasi_newton::{bfgs_minimize, BfgsOptions, BfgsOutcome};
pub use univariate::{brent_minimize, BrentOptions};

use statrs::function::gamma::gamma_ur;

use crate::distributions::{bb_dlogit, nb_dlogmu, nb_logpmf_unchecked, sigmoid};
use crate::error::{Error, Result};
use crate::model::{
    ase_loglik, bb_logit_mean, eta_gradient, trec_log_mean, trec_loglik, GeneData, LikelihoodKind,
    ModelParams, OVERDISP_MAX, OVERDISP_MIN,
};

/// Search box for `b0` and `b1`.
pub const EFFECT_BOUND: f64 = 25.0;

const IRLS_MAX_STEPS: usize = 50;
const MAX_HALVINGS: usize = 30;
const WARM_WINDOW: f64 = 0.5;
/// Effects beyond this are only reached on a (near) monotone likelihood.
const SNAP_FROM: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Convergence tolerance on the absolute per-cycle log-likelihood change.
    pub epsilon: f64,
    pub max_iters: usize,
    pub overdisp_bounds: (f64, f64),
    pub min_ase_reads: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            max_iters: 200,
            overdisp_bounds: (OVERDISP_MIN, OVERDISP_MAX),
            min_ase_reads: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::domain(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::domain("max_iters must be at least 1"));
        }
        let (lo, hi) = self.overdisp_bounds;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::domain(format!(
                "invalid over-dispersion bounds ({lo}, {hi})"
            )));
        }
        Ok(())
    }

    fn ase_threshold(&self) -> u64 {
        self.min_ase_reads.max(1)
    }
}

/// Which effects are estimated (the others stay at their starting value,
/// zero unless warm-started) and which likelihood is maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    pub fit_b0: bool,
    pub fit_b1: bool,
    pub likelihood: LikelihoodKind,
}

impl ModelSpec {
    pub fn full(likelihood: LikelihoodKind) -> Self {
        Self {
            fit_b0: true,
            fit_b1: true,
            likelihood,
        }
    }

    /// Only the additive genetic effect; `b1` fixed.
    pub fn genetic_only(likelihood: LikelihoodKind) -> Self {
        Self {
            fit_b0: true,
            fit_b1: false,
            likelihood,
        }
    }

    /// Only the parent-of-origin effect; `b0` fixed.
    pub fn poo_only(likelihood: LikelihoodKind) -> Self {
        Self {
            fit_b0: false,
            fit_b1: true,
            likelihood,
        }
    }

    pub fn no_effects(likelihood: LikelihoodKind) -> Self {
        Self {
            fit_b0: false,
            fit_b1: false,
            likelihood,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.likelihood == LikelihoodKind::AseOnly && !self.fit_b0 && !self.fit_b1 {
            return Err(Error::domain(
                "an ASE-only model needs at least one free effect",
            ));
        }
        Ok(())
    }

    fn free_effects(&self) -> Vec<usize> {
        let mut free = Vec::with_capacity(2);
        if self.fit_b0 {
            free.push(0);
        }
        if self.fit_b1 {
            free.push(1);
        }
        free
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub params: ModelParams,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// A free effect ended on the search box.
    pub boundary: bool,
    /// Log-likelihood after each cycle.
    pub trace: Vec<f64>,
}

/// Linear part of the NB log-mean: intercept, `ln(kappa)` when it varies
/// across samples, then the covariates.
#[derive(Debug, Clone)]
struct Design {
    rows: Vec<Vec<f64>>,
    has_kappa: bool,
}

impl Design {
    fn new(data: &GeneData) -> Result<Self> {
        let samples = data.samples();
        let log_kappa: Vec<f64> = samples.iter().map(|s| s.kappa.ln()).collect();
        let (min, max) = log_kappa
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let has_kappa = max - min > 1e-12;

        let mut names = vec!["intercept".to_string()];
        if has_kappa {
            names.push("log_kappa".to_string());
        }
        names.extend(data.covariate_names().iter().cloned());

        let rows: Vec<Vec<f64>> = samples
            .iter()
            .zip(&log_kappa)
            .map(|(s, &lk)| {
                let mut row = Vec::with_capacity(names.len());
                row.push(1.0);
                if has_kappa {
                    row.push(lk);
                }
                row.extend_from_slice(&s.covariates);
                row
            })
            .collect();
        if let Some(col) = linalg::first_dependent_column(&rows, names.len()) {
            return Err(Error::SingularDesign {
                column: names[col].clone(),
            });
        }
        Ok(Self { rows, has_kappa })
    }

    fn n_cols(&self) -> usize {
        self.rows[0].len()
    }

    fn coefs(&self, params: &ModelParams) -> Vec<f64> {
        let mut c = vec![params.gamma0];
        if self.has_kappa {
            c.push(params.beta_kappa);
        }
        c.extend_from_slice(&params.betas);
        c
    }

    fn set_coefs(&self, params: &mut ModelParams, coefs: &[f64]) {
        params.gamma0 = coefs[0];
        let offset = if self.has_kappa {
            params.beta_kappa = coefs[1];
            2
        } else {
            params.beta_kappa = 0.0;
            1
        };
        params.betas.copy_from_slice(&coefs[offset..]);
    }
}

/// The likelihood being maximized for one gene under one model.
struct Objective<'a> {
    data: &'a GeneData,
    kind: LikelihoodKind,
    ase_threshold: u64,
    design: Option<Design>,
    has_ase: bool,
}

impl<'a> Objective<'a> {
    fn new(data: &'a GeneData, kind: LikelihoodKind, config: &FitConfig) -> Result<Self> {
        let ase_threshold = config.ase_threshold();
        let design = if kind.uses_trec() {
            Some(Design::new(data)?)
        } else {
            None
        };
        let has_ase = kind.uses_ase() && data.n_informative(config.min_ase_reads) > 0;
        Ok(Self {
            data,
            kind,
            ase_threshold,
            design,
            has_ase,
        })
    }

    fn trec_ll(&self, p: &ModelParams) -> f64 {
        if !self.kind.uses_trec() {
            return 0.0;
        }
        self.data.samples().iter().map(|s| trec_loglik(s, p)).sum()
    }

    fn ase_ll(&self, p: &ModelParams) -> f64 {
        if !self.has_ase {
            return 0.0;
        }
        self.data
            .samples()
            .iter()
            .filter(|s| s.ase_total >= self.ase_threshold)
            .map(|s| ase_loglik(s, p))
            .sum()
    }

    fn loglik(&self, p: &ModelParams) -> f64 {
        let ll = self.trec_ll(p) + self.ase_ll(p);
        if ll.is_nan() {
            f64::NEG_INFINITY
        } else {
            ll
        }
    }

    /// Log-likelihood and its gradient in `(b0, b1)`.
    fn effect_gradient(&self, p: &ModelParams) -> (f64, [f64; 2]) {
        let mut ll = 0.0;
        let mut grad = [0.0; 2];
        for s in self.data.samples() {
            let x = s.x_code();
            if self.kind.uses_trec() {
                let mu = trec_log_mean(s, p).exp();
                ll += nb_logpmf_unchecked(s.total, mu, p.nb_overdisp);
                let score = nb_dlogmu(s.total, mu, p.nb_overdisp);
                let (d0, d1) = eta_gradient(s.genotype, x, p.b0, p.b1);
                grad[0] += score * d0;
                grad[1] += score * d1;
            }
            if self.has_ase && s.ase_total >= self.ase_threshold {
                ll += ase_loglik(s, p);
                let z = s.z_code();
                let logit = bb_logit_mean(z, x, p.b0, p.b1);
                let score = bb_dlogit(
                    s.ase_hap1,
                    s.ase_total,
                    sigmoid(logit),
                    sigmoid(-logit),
                    p.bb_overdisp,
                );
                grad[0] += score * f64::from(z);
                grad[1] += score * f64::from(x);
            }
        }
        (ll, grad)
    }
}

fn set_effect(p: &mut ModelParams, which: usize, value: f64) {
    if which == 0 {
        p.b0 = value;
    } else {
        p.b1 = value;
    }
}

fn effect(p: &ModelParams, which: usize) -> f64 {
    if which == 0 {
        p.b0
    } else {
        p.b1
    }
}

/// Raw scoring direction for the linear coefficients, or `None` if the
/// weighted normal equations cannot be solved.
fn irls_direction(design: &Design, data: &GeneData, p: &ModelParams) -> Option<Vec<f64>> {
    let q = design.n_cols();
    let mut xtwx = vec![0.0; q * q];
    let mut xtwk = vec![0.0; q];
    for (s, row) in data.samples().iter().zip(&design.rows) {
        let mu = trec_log_mean(s, p).exp();
        let w = mu / (1.0 + p.nb_overdisp * mu);
        let k = (s.total as f64 - mu) / mu;
        if !(w.is_finite() && k.is_finite()) {
            return None;
        }
        for i in 0..q {
            xtwk[i] += row[i] * w * k;
            for j in 0..q {
                xtwx[i * q + j] += row[i] * w * row[j];
            }
        }
    }
    linalg::spd_solve(&xtwx, &xtwk)
}

/// One IRLS update with step-halving. Returns whether the parameters moved.
fn irls_update(obj: &Objective, design: &Design, p: &mut ModelParams, current: f64) -> (bool, f64) {
    let Some(delta) = irls_direction(design, obj.data, p) else {
        return (false, current);
    };
    let base = design.coefs(p);
    let mut trial = p.clone();
    let mut t = 1.0;
    for _ in 0..=MAX_HALVINGS {
        let coefs: Vec<f64> = base.iter().zip(&delta).map(|(b, d)| b + t * d).collect();
        design.set_coefs(&mut trial, &coefs);
        let ll = obj.trec_ll(&trial);
        if ll >= current {
            *p = trial;
            return (true, ll);
        }
        t *= 0.5;
    }
    (false, current)
}

fn linear_block(obj: &Objective, p: &mut ModelParams) {
    let Some(design) = obj.design.as_ref() else {
        return;
    };
    let mut current = obj.trec_ll(p);
    for _ in 0..IRLS_MAX_STEPS {
        let (moved, ll) = irls_update(obj, design, p, current);
        let gain = ll - current;
        current = ll;
        if !moved || gain < 1e-10 {
            break;
        }
    }
}

fn effects_block(obj: &Objective, spec: &ModelSpec, p: &mut ModelParams) -> Result<()> {
    let free = spec.free_effects();
    if free.is_empty() {
        return Ok(());
    }
    let start: Vec<f64> = free.iter().map(|&i| effect(p, i)).collect();
    let mut work = p.clone();
    let outcome = bfgs_minimize(
        |v, g| {
            for (&i, &val) in free.iter().zip(v) {
                set_effect(&mut work, i, val);
            }
            let (ll, grad) = obj.effect_gradient(&work);
            for (slot, &i) in g.iter_mut().zip(&free) {
                *slot = -grad[i];
            }
            -ll
        },
        &start,
        -EFFECT_BOUND,
        EFFECT_BOUND,
        BfgsOptions::default(),
    )
    .ok_or_else(|| {
        Error::OptimizationFailed("log-likelihood is not finite at the starting effects".into())
    })?;
    let before = obj.loglik(p);
    let mut candidate = p.clone();
    for (&i, &val) in free.iter().zip(&outcome.x) {
        set_effect(&mut candidate, i, val);
    }
    let accepted = obj.loglik(&candidate) >= before;
    if accepted {
        *p = candidate;
    }

    for &i in &free {
        // The univariate polish is only needed when BFGS stalled.
        if !(accepted && outcome.converged) {
            polish_effect(obj, p, i);
        }
        // A monotone likelihood is flat to rounding long before the box, so
        // the search stops short of it. Ties go to the edge.
        let v_now = effect(p, i);
        if v_now.abs() > SNAP_FROM && v_now.abs() < EFFECT_BOUND {
            let mut edge = p.clone();
            set_effect(&mut edge, i, EFFECT_BOUND.copysign(v_now));
            if obj.loglik(&edge) >= obj.loglik(p) {
                *p = edge;
            }
        }
    }
    Ok(())
}

fn polish_effect(obj: &Objective, p: &mut ModelParams, i: usize) {
    let mut work = p.clone();
    let (best, _) = brent_minimize(
        |v| {
            set_effect(&mut work, i, v);
            -obj.loglik(&work)
        },
        -EFFECT_BOUND,
        EFFECT_BOUND,
        effect(p, i),
        BrentOptions::default(),
    );
    let mut candidate = p.clone();
    set_effect(&mut candidate, i, best);
    if obj.loglik(&candidate) > obj.loglik(p) {
        *p = candidate;
    }
}

/// Brent over `[lo, hi]` from a warm start. The search first stays within
/// `WARM_WINDOW` of `x0`, which is where the optimum sits once the cycles
/// settle, and widens to the full range only if it runs into that window.
fn warm_brent(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, x0: f64) -> f64 {
    let x0 = x0.clamp(lo, hi);
    let (a, b) = ((x0 - WARM_WINDOW).max(lo), (x0 + WARM_WINDOW).min(hi));
    // A log-scale error of 1e-7 costs far less than any stopping tolerance.
    let opts = BrentOptions {
        rel_tol: 1e-7,
        abs_tol: 1e-7,
        ..BrentOptions::default()
    };
    let (x, _) = brent_minimize(&mut f, a, b, x0, opts);
    let near = |edge: f64| edge != lo && edge != hi && (x - edge).abs() <= 1e-6;
    if near(a) || near(b) {
        brent_minimize(&mut f, lo, hi, x, opts).0
    } else {
        x
    }
}

fn overdispersion_block(obj: &Objective, config: &FitConfig, p: &mut ModelParams) {
    let (lo, hi) = config.overdisp_bounds;
    let (llo, lhi) = (lo.ln(), hi.ln());
    if obj.has_ase {
        let mut work = p.clone();
        let best = warm_brent(
            |v| {
                work.bb_overdisp = v.exp();
                -obj.ase_ll(&work)
            },
            llo,
            lhi,
            p.bb_overdisp.ln(),
        );
        let value = if best == llo {
            lo
        } else if best == lhi {
            hi
        } else {
            best.exp()
        };
        let mut candidate = p.clone();
        candidate.bb_overdisp = value;
        if obj.ase_ll(&candidate) >= obj.ase_ll(p) {
            *p = candidate;
        }
    }
    if obj.kind.uses_trec() {
        let mut work = p.clone();
        let best = warm_brent(
            |v| {
                work.nb_overdisp = v.exp();
                -obj.trec_ll(&work)
            },
            llo,
            lhi,
            p.nb_overdisp.ln(),
        );
        let value = if best == llo {
            lo
        } else if best == lhi {
            hi
        } else {
            best.exp()
        };
        let mut candidate = p.clone();
        candidate.nb_overdisp = value;
        if obj.trec_ll(&candidate) >= obj.trec_ll(p) {
            *p = candidate;
        }
    }
}

/// One IRLS update of `(gamma0, beta_kappa, betas)` on the joint likelihood,
/// with the `eta` offset and over-dispersions held fixed.
pub fn irls_step(data: &GeneData, params: &ModelParams) -> Result<ModelParams> {
    params.validate(data.n_covariates())?;
    let obj = Objective::new(data, LikelihoodKind::Joint, &FitConfig::default())?;
    let design = obj.design.as_ref().expect("joint likelihood has a design");
    let mut p = params.clone();
    let current = obj.trec_ll(&p);
    irls_update(&obj, design, &mut p, current);
    Ok(p)
}

/// Step 2 on its own: BFGS over the free effects, then a Brent pass on each.
/// Returns the updated parameters and whether an effect sits on the box.
pub fn optimize_effects(
    data: &GeneData,
    params: &ModelParams,
    spec: &ModelSpec,
    config: &FitConfig,
) -> Result<(ModelParams, bool)> {
    spec.validate()?;
    params.validate(data.n_covariates())?;
    let obj = Objective::new(data, spec.likelihood, config)?;
    let mut p = params.clone();
    effects_block(&obj, spec, &mut p)?;
    let boundary = at_boundary(spec, &p);
    Ok((p, boundary))
}

/// Step 3 on its own: Brent on each log over-dispersion within the clamp range.
pub fn optimize_overdispersion(
    data: &GeneData,
    params: &ModelParams,
    likelihood: LikelihoodKind,
    config: &FitConfig,
) -> Result<ModelParams> {
    params.validate(data.n_covariates())?;
    let obj = Objective::new(data, likelihood, config)?;
    let mut p = params.clone();
    clamp_overdispersion(&mut p, config);
    overdispersion_block(&obj, config, &mut p);
    Ok(p)
}

fn at_boundary(spec: &ModelSpec, p: &ModelParams) -> bool {
    let hit = |v: f64| v.abs() >= EFFECT_BOUND - 1e-6;
    (spec.fit_b0 && hit(p.b0)) || (spec.fit_b1 && hit(p.b1))
}

fn clamp_overdispersion(p: &mut ModelParams, config: &FitConfig) {
    let (lo, hi) = config.overdisp_bounds;
    p.bb_overdisp = p.bb_overdisp.clamp(lo, hi);
    p.nb_overdisp = p.nb_overdisp.clamp(lo, hi);
}

fn check_informative(data: &GeneData, spec: &ModelSpec, config: &FitConfig) -> Result<()> {
    if spec.likelihood.uses_trec() && data.samples().iter().all(|s| s.total == 0) {
        return Err(Error::InsufficientData(format!(
            "gene {} has no total reads",
            data.gene_id()
        )));
    }
    if spec.likelihood == LikelihoodKind::AseOnly && data.n_informative(config.min_ase_reads) == 0 {
        return Err(Error::InsufficientData(format!(
            "gene {} has no sample with at least {} allele-specific reads",
            data.gene_id(),
            config.ase_threshold()
        )));
    }
    Ok(())
}

/// Moment-based starting point with both effects at zero.
pub fn initial_params(data: &GeneData, config: &FitConfig) -> ModelParams {
    let (lo, hi) = config.overdisp_bounds;
    let totals: Vec<f64> = data.samples().iter().map(|s| s.total as f64).collect();
    let n = totals.len() as f64;
    let mean = totals.iter().sum::<f64>() / n;
    let var = if totals.len() > 1 {
        totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let nb_overdisp = if mean > 0.0 {
        ((var - mean) / (mean * mean)).clamp(lo, hi)
    } else {
        lo
    };
    ModelParams {
        b0: 0.0,
        b1: 0.0,
        gamma0: if mean > 0.0 { mean.ln() } else { 0.0 },
        beta_kappa: 0.0,
        betas: vec![0.0; data.n_covariates()],
        bb_overdisp: 0.1f64.clamp(lo, hi),
        nb_overdisp,
    }
}

/// Fits `spec` from the default starting point. A joint fit with a free
/// genetic effect is seeded by a TReC-only fit of `b0` alone.
pub fn fit(data: &GeneData, spec: &ModelSpec, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    spec.validate()?;
    check_informative(data, spec, config)?;
    let mut start = initial_params(data, config);
    if spec.likelihood == LikelihoodKind::Joint && spec.fit_b0 {
        let pre = fit_from(
            data,
            &ModelSpec::genetic_only(LikelihoodKind::TrecOnly),
            config,
            &start,
        )?;
        start = ModelParams {
            b1: 0.0,
            bb_overdisp: start.bb_overdisp,
            ..pre.params
        };
    }
    fit_from(data, spec, config, &start)
}

/// Fits `spec` starting from `start`. Effects that the spec does not free
/// keep their value from `start`.
pub fn fit_from(
    data: &GeneData,
    spec: &ModelSpec,
    config: &FitConfig,
    start: &ModelParams,
) -> Result<FitResult> {
    config.validate()?;
    spec.validate()?;
    start.validate(data.n_covariates())?;
    check_informative(data, spec, config)?;
    let obj = Objective::new(data, spec.likelihood, config)?;

    let mut p = start.clone();
    clamp_overdispersion(&mut p, config);
    for i in spec.free_effects() {
        let v = effect(&p, i).clamp(-EFFECT_BOUND, EFFECT_BOUND);
        set_effect(&mut p, i, v);
    }
    let mut ll = obj.loglik(&p);
    if !ll.is_finite() {
        return Err(Error::OptimizationFailed(format!(
            "gene {}: log-likelihood is not finite at the starting values",
            data.gene_id()
        )));
    }

    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_iters {
        linear_block(&obj, &mut p);
        effects_block(&obj, spec, &mut p)?;
        overdispersion_block(&obj, config, &mut p);
        let next = obj.loglik(&p);
        if !next.is_finite() {
            return Err(Error::OptimizationFailed(format!(
                "gene {}: log-likelihood became non-finite",
                data.gene_id()
            )));
        }
        trace.push(next);
        let change = (next - ll).abs();
        ll = next;
        if change < config.epsilon {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        spec: *spec,
        boundary: at_boundary(spec, &p),
        params: p,
        loglik: ll,
        iterations: trace.len(),
        converged,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrtResult {
    pub statistic: f64,
    pub p_value: f64,
    pub df: u32,
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(x: f64, df: u32) -> f64 {
    if !(x > 0.0) {
        return 1.0;
    }
    gamma_ur(f64::from(df) / 2.0, x / 2.0).clamp(0.0, 1.0)
}

/// Likelihood-ratio test from two maximized log-likelihoods.
pub fn lrt_from_logliks(full: f64, null: f64, df: u32) -> Result<LrtResult> {
    if df == 0 {
        return Err(Error::domain("LRT needs at least one degree of freedom"));
    }
    if !(full.is_finite() && null.is_finite()) {
        return Err(Error::domain("LRT needs finite log-likelihoods"));
    }
    if full < null - 1e-6 {
        return Err(Error::NestingViolation { full, null });
    }
    let statistic = (2.0 * (full - null)).max(0.0);
    Ok(LrtResult {
        statistic,
        p_value: chi_square_sf(statistic, df),
        df,
    })
}

pub fn lrt(full: &FitResult, null: &FitResult, df: u32) -> Result<LrtResult> {
    lrt_from_logliks(full.loglik, null.loglik, df)
}

/// Full model, both single-effect nulls, and the two LRTs for one gene.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneFit {
    pub full: FitResult,
    /// `b0 = 0`, `b1` free.
    pub null_genetic: FitResult,
    /// `b1 = 0`, `b0` free.
    pub null_poo: FitResult,
    pub genetic: LrtResult,
    pub poo: LrtResult,
}

/// Fits the full model and the two constrained models, and tests each effect.
pub fn analyze_gene(
    data: &GeneData,
    likelihood: LikelihoodKind,
    config: &FitConfig,
) -> Result<GeneFit> {
    let full_spec = ModelSpec::full(likelihood);
    let mut full = fit(data, &full_spec, config)?;

    let null_genetic = fit_from(
        data,
        &ModelSpec::poo_only(likelihood),
        config,
        &ModelParams {
            b0: 0.0,
            ..full.params.clone()
        },
    )?;
    let null_poo = fit_from(
        data,
        &ModelSpec::genetic_only(likelihood),
        config,
        &ModelParams {
            b1: 0.0,
            ..full.params.clone()
        },
    )?;

    // Coordinate ascent can stall on a ridge; restart the full model from a
    // constrained optimum that beats it.
    for null in [&null_genetic, &null_poo] {
        if null.loglik > full.loglik {
            let refit = fit_from(data, &full_spec, config, &null.params)?;
            if refit.loglik > full.loglik {
                full = refit;
            }
        }
    }

    let genetic = lrt(&full, &null_genetic, 1)?;
    let poo = lrt(&full, &null_poo, 1)?;
    Ok(GeneFit {
        full,
        null_genetic,
        null_poo,
        genetic,
        poo,
    })
}

#[cfg(test)]
mod tests;
