//! Generative model and the simulation harnesses: estimator bias, power and
//! type-I error across fitters, and fit timing.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distributions::{bb_sample, binomial_sample, nb_sample, sigmoid, BbParams, NbParams};
use crate::error::{Error, Result};
use crate::model::{
    bb_logit_mean, eta_offset, GeneData, Genotype, LikelihoodKind, ModelParams, Parent,
    SampleRecord,
};
use crate::optimizer::{analyze_gene, fit, FitConfig, GeneFit, ModelSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_samples: usize,
    pub b0: f64,
    pub b1: f64,
    pub bb_overdisp: f64,
    pub nb_overdisp: f64,
    /// Population mean of the total read count.
    pub mean_total: f64,
    /// Expected share of total reads that are allele-specific.
    pub ase_fraction: f64,
    /// Frequency of the A2 allele.
    pub maf: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_samples: 32,
            b0: 0.0,
            b1: 0.0,
            bb_overdisp: 0.25,
            nb_overdisp: 4.0 / 3.0,
            mean_total: 250.0,
            ase_fraction: 0.10,
            maf: 0.5,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn with_effects(mut self, b0: f64, b1: f64) -> Self {
        self.b0 = b0;
        self.b1 = b1;
        self
    }

    pub fn with_n(mut self, n_samples: usize) -> Self {
        self.n_samples = n_samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::domain("simulations need at least 2 samples"));
        }
        if !(self.b0.is_finite() && self.b1.is_finite()) {
            return Err(Error::domain("effects must be finite"));
        }
        for (name, v) in [
            ("bb_overdisp", self.bb_overdisp),
            ("nb_overdisp", self.nb_overdisp),
            ("mean_total", self.mean_total),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.ase_fraction > 0.0 && self.ase_fraction < 1.0) {
            return Err(Error::domain(format!(
                "ase_fraction must lie in (0, 1), got {}",
                self.ase_fraction
            )));
        }
        if !(self.maf > 0.0 && self.maf <= 0.5) {
            return Err(Error::domain(format!(
                "maf must lie in (0, 0.5], got {}",
                self.maf
            )));
        }
        Ok(())
    }

    /// Generating parameters (no covariates, `kappa = 1`).
    pub fn params(&self) -> ModelParams {
        ModelParams {
            b0: self.b0,
            b1: self.b1,
            gamma0: baseline_log_mean(self),
            beta_kappa: 0.0,
            betas: vec![],
            bb_overdisp: self.bb_overdisp,
            nb_overdisp: self.nb_overdisp,
        }
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a path of indices.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(base), |acc, &k| mix(acc ^ mix(k)))
}

/// Intercept `gamma0` that makes the population mean of `T` equal
/// `mean_total` under Hardy-Weinberg genotypes and equiprobable phase and
/// parental origin.
pub fn baseline_log_mean(config: &SimConfig) -> f64 {
    let q = config.maf;
    let (b0, b1) = (config.b0, config.b1);
    let het = 0.5
        * (eta_offset(Genotype::HetAltRef, 1, b0, b1).exp()
            + eta_offset(Genotype::HetAltRef, -1, b0, b1).exp());
    let expected_fold = (1.0 - q).powi(2) + q * q * b0.exp() + 2.0 * q * (1.0 - q) * het;
    config.mean_total.ln() - expected_fold.ln()
}

/// Draws one gene's worth of samples.
pub fn simulate_gene<R: Rng + ?Sized>(
    config: &SimConfig,
    gene_id: &str,
    rng: &mut R,
) -> Result<GeneData> {
    config.validate()?;
    let gamma0 = baseline_log_mean(config);
    let mut samples = Vec::with_capacity(config.n_samples);
    for _ in 0..config.n_samples {
        let hap1_alt = rng.random_bool(config.maf);
        let hap2_alt = rng.random_bool(config.maf);
        let genotype = match (hap1_alt, hap2_alt) {
            (false, false) => Genotype::HomRef,
            (false, true) => Genotype::HetRefAlt,
            (true, false) => Genotype::HetAltRef,
            (true, true) => Genotype::HomAlt,
        };
        let hap1_parent = if rng.random_bool(0.5) {
            Parent::Paternal
        } else {
            Parent::Maternal
        };
        let x = hap1_parent.x_code();

        let mu = (gamma0 + eta_offset(genotype, x, config.b0, config.b1)).exp();
        let total = nb_sample(&NbParams::new(mu, config.nb_overdisp)?, rng);
        let ase_total = binomial_sample(total, config.ase_fraction, rng);
        let logit = bb_logit_mean(genotype.z_code(), x, config.b0, config.b1);
        let p = sigmoid(logit).clamp(1e-12, 1.0 - 1e-12);
        let ase_hap1 = bb_sample(ase_total, &BbParams::new(p, config.bb_overdisp)?, rng);

        samples.push(SampleRecord {
            total,
            ase_total,
            ase_hap1,
            genotype,
            hap1_parent,
            kappa: 1.0,
            covariates: vec![],
        });
    }
    GeneData::new(gene_id, vec![], samples)
}

/// [`simulate_gene`] with a generator seeded from `config.seed`.
pub fn simulate_gene_seeded(config: &SimConfig, gene_id: &str) -> Result<GeneData> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    simulate_gene(config, gene_id, &mut rng)
}

/// Seed of replicate `r` at sample size `n`. Effect settings share seeds so
/// that scenarios are compared on common random numbers.
pub fn replicate_seed(base: u64, n: usize, r: usize) -> u64 {
    derive_seed(base, &[n as u64, r as u64])
}

/// Effect estimates for one bias-experiment replicate. Failed fits are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasRow {
    pub replicate: usize,
    pub seed: u64,
    pub b0_joint: f64,
    pub b1_joint: f64,
    /// `b0` with `b1` constrained to zero.
    pub b0_only: f64,
    /// `b1` with `b0` constrained to zero.
    pub b1_only: f64,
    pub failed: bool,
}

fn bias_replicate(config: &SimConfig, fit_config: &FitConfig, r: usize) -> BiasRow {
    let seed = replicate_seed(config.seed, config.n_samples, r);
    let run = || -> Result<(f64, f64, f64, f64)> {
        let data = simulate_gene_seeded(&config.clone().with_seed(seed), "sim")?;
        let kind = LikelihoodKind::Joint;
        let joint = fit(&data, &ModelSpec::full(kind), fit_config)?;
        let b0_only = fit(&data, &ModelSpec::genetic_only(kind), fit_config)?;
        let b1_only = fit(&data, &ModelSpec::poo_only(kind), fit_config)?;
        Ok((
            joint.params.b0,
            joint.params.b1,
            b0_only.params.b0,
            b1_only.params.b1,
        ))
    };
    match run() {
        Ok((b0_joint, b1_joint, b0_only, b1_only)) => BiasRow {
            replicate: r,
            seed,
            b0_joint,
            b1_joint,
            b0_only,
            b1_only,
            failed: false,
        },
        Err(_) => BiasRow {
            replicate: r,
            seed,
            b0_joint: f64::NAN,
            b1_joint: f64::NAN,
            b0_only: f64::NAN,
            b1_only: f64::NAN,
            failed: true,
        },
    }
}

/// Per-replicate estimates from the joint fit and from each single-effect fit.
pub fn run_bias_experiment(
    config: &SimConfig,
    replicates: usize,
    fit_config: &FitConfig,
) -> Result<Vec<BiasRow>> {
    config.validate()?;
    fit_config.validate()?;
    if replicates < 100 {
        return Err(Error::domain(format!(
            "bias experiment needs at least 100 replicates, got {replicates}"
        )));
    }
    Ok((0..replicates)
        .into_par_iter()
        .map(|r| bias_replicate(config, fit_config, r))
        .collect())
}

/// Which effect a test concerns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Effect {
    Genetic,
    ParentOfOrigin,
}

impl Effect {
    pub fn name(self) -> &'static str {
        match self {
            Effect::Genetic => "genetic",
            Effect::ParentOfOrigin => "poo",
        }
    }
}

pub const FITTERS: [LikelihoodKind; 3] = [
    LikelihoodKind::Joint,
    LikelihoodKind::TrecOnly,
    LikelihoodKind::AseOnly,
];

pub fn fitter_name(kind: LikelihoodKind) -> &'static str {
    match kind {
        LikelihoodKind::Joint => "joint",
        LikelihoodKind::TrecOnly => "trec_only",
        LikelihoodKind::AseOnly => "ase_only",
    }
}

/// LRT p-values from one fitter on one replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateTest {
    pub b0_hat: f64,
    pub b1_hat: f64,
    pub p_genetic: f64,
    pub p_poo: f64,
}

impl From<&GeneFit> for ReplicateTest {
    fn from(g: &GeneFit) -> Self {
        Self {
            b0_hat: g.full.params.b0,
            b1_hat: g.full.params.b1,
            p_genetic: g.genetic.p_value,
            p_poo: g.poo.p_value,
        }
    }
}

/// All three fitters on one simulated data set; `None` where a fit failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub seed: u64,
    pub tests: [Option<ReplicateTest>; 3],
}

/// Simulates `replicates` data sets under `config` and tests both effects
/// with each fitter in [`FITTERS`].
pub fn run_replicates(
    config: &SimConfig,
    replicates: usize,
    fit_config: &FitConfig,
) -> Result<Vec<ReplicateOutcome>> {
    config.validate()?;
    fit_config.validate()?;
    Ok((0..replicates)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(config.seed, config.n_samples, r);
            let tests = match simulate_gene_seeded(&config.clone().with_seed(seed), "sim") {
                Ok(data) => FITTERS.map(|kind| {
                    analyze_gene(&data, kind, fit_config)
                        .ok()
                        .map(|g| ReplicateTest::from(&g))
                }),
                Err(_) => [None; 3],
            };
            ReplicateOutcome {
                replicate: r,
                seed,
                tests,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGrid {
    pub sample_sizes: Vec<usize>,
    pub effect_pairs: Vec<(f64, f64)>,
    /// Replicates for the `b0 = b1 = 0` row.
    pub null_replicates: usize,
    /// Replicates for every other row.
    pub power_replicates: usize,
    pub alpha: f64,
    /// Everything except `n`, effects and seed is taken from here.
    pub base: SimConfig,
}

/// Effect rows of the published power comparison.
pub const REFERENCE_EFFECTS: [(f64, f64); 6] = [
    (0.0, 0.0),
    (0.13, 0.13),
    (0.25, 0.25),
    (0.5, 0.5),
    (0.75, 0.75),
    (1.5, 1.5),
];

impl Default for ScenarioGrid {
    fn default() -> Self {
        Self {
            sample_sizes: vec![32],
            effect_pairs: REFERENCE_EFFECTS.to_vec(),
            null_replicates: 2000,
            power_replicates: 1000,
            alpha: 0.05,
            base: SimConfig::default(),
        }
    }
}

impl ScenarioGrid {
    pub fn validate(&self) -> Result<()> {
        if self.sample_sizes.is_empty() || self.effect_pairs.is_empty() {
            return Err(Error::domain("scenario grid is empty"));
        }
        if self.null_replicates == 0 || self.power_replicates == 0 {
            return Err(Error::domain("replicate counts must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        for &n in &self.sample_sizes {
            self.base.clone().with_n(n).validate()?;
        }
        Ok(())
    }

    pub fn replicates_for(&self, b0: f64, b1: f64) -> usize {
        if b0 == 0.0 && b1 == 0.0 {
            self.null_replicates
        } else {
            self.power_replicates
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerRow {
    pub n: usize,
    pub b0: f64,
    pub b1: f64,
    pub fitter: LikelihoodKind,
    pub effect: Effect,
    pub rejection_rate: f64,
    /// Replicates whose fit succeeded (the rate's denominator).
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
}

/// Rejection rates of every fitter for both effects from replicate outcomes.
pub fn summarize_power(
    n: usize,
    (b0, b1): (f64, f64),
    outcomes: &[ReplicateOutcome],
    alpha: f64,
    seed: u64,
) -> Vec<PowerRow> {
    let mut rows = Vec::with_capacity(6);
    for (slot, &fitter) in FITTERS.iter().enumerate() {
        let tests: Vec<&ReplicateTest> = outcomes
            .iter()
            .filter_map(|o| o.tests[slot].as_ref())
            .collect();
        for effect in [Effect::Genetic, Effect::ParentOfOrigin] {
            let rejected = tests
                .iter()
                .filter(|t| {
                    let p = match effect {
                        Effect::Genetic => t.p_genetic,
                        Effect::ParentOfOrigin => t.p_poo,
                    };
                    p < alpha
                })
                .count();
            let rate = if tests.is_empty() {
                f64::NAN
            } else {
                rejected as f64 / tests.len() as f64
            };
            rows.push(PowerRow {
                n,
                b0,
                b1,
                fitter,
                effect,
                rejection_rate: rate,
                replicates: tests.len(),
                alpha,
                seed,
            });
        }
    }
    rows
}

/// Rejection rates for every `(n, b0, b1)` scenario, fitter and effect.
pub fn run_power_grid(grid: &ScenarioGrid, fit_config: &FitConfig) -> Result<Vec<PowerRow>> {
    grid.validate()?;
    let mut rows = Vec::new();
    for &n in &grid.sample_sizes {
        for &(b0, b1) in &grid.effect_pairs {
            let config = grid.base.clone().with_n(n).with_effects(b0, b1);
            let outcomes = run_replicates(&config, grid.replicates_for(b0, b1), fit_config)?;
            rows.extend(summarize_power(
                n,
                (b0, b1),
                &outcomes,
                grid.alpha,
                grid.base.seed,
            ));
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub n: usize,
    pub b0: f64,
    pub b1: f64,
    /// Simulated genes timed in each repeat.
    pub genes: usize,
    pub repeats: usize,
    /// Per-gene seconds: each repeat's panel time divided by `genes`.
    pub median_seconds: f64,
    pub min_seconds: f64,
    pub max_seconds: f64,
}

/// Wall-clock time of one complete gene analysis (TReC-only seed fit, full
/// joint fit and both constrained fits) per `(n, effects)` setting.
///
/// Each repeat fits the same panel of `genes` simulated genes, so the fit
/// outputs are identical across repeats. Fit cost varies a lot from gene to
/// gene, and a panel keeps one unusually easy or hard gene from setting the
/// figure. Repeats cycle through all settings in turn, so drift in machine
/// load hits every setting alike instead of skewing their ratios.
pub fn run_timing_bench(
    sample_sizes: &[usize],
    effect_pairs: &[(f64, f64)],
    genes: usize,
    repeats: usize,
    base: &SimConfig,
    fit_config: &FitConfig,
) -> Result<Vec<TimingRow>> {
    if repeats == 0 || genes == 0 {
        return Err(Error::domain(
            "timing needs at least one gene and one repeat",
        ));
    }
    let mut settings = Vec::new();
    for &n in sample_sizes {
        for &(b0, b1) in effect_pairs {
            let config = base.clone().with_n(n).with_effects(b0, b1);
            let panel = (0..genes)
                .map(|g| {
                    let seed = replicate_seed(config.seed, n, g);
                    simulate_gene_seeded(&config.clone().with_seed(seed), "bench")
                })
                .collect::<Result<Vec<_>>>()?;
            settings.push((n, b0, b1, panel));
        }
    }
    let fit_panel = |panel: &[GeneData]| {
        panel
            .iter()
            .map(|data| analyze_gene(data, LikelihoodKind::Joint, fit_config))
            .collect::<Result<Vec<_>>>()
    };
    // Warm-up, not timed.
    let reference = settings
        .iter()
        .map(|(.., panel)| fit_panel(panel))
        .collect::<Result<Vec<_>>>()?;

    let mut times = vec![Vec::with_capacity(repeats); settings.len()];
    for _ in 0..repeats {
        for ((setting, expected), slot) in settings.iter().zip(&reference).zip(&mut times) {
            let start = Instant::now();
            let results = fit_panel(&setting.3)?;
            slot.push(start.elapsed().as_secs_f64() / genes as f64);
            if &results != expected {
                return Err(Error::OptimizationFailed(
                    "repeated fit gave a different result".into(),
                ));
            }
        }
    }

    let rows = settings
        .iter()
        .zip(&mut times)
        .map(|(&(n, b0, b1, _), t)| {
            t.sort_by(f64::total_cmp);
            let mid = t.len() / 2;
            let median = if t.len() % 2 == 0 {
                0.5 * (t[mid - 1] + t[mid])
            } else {
                t[mid]
            };
            TimingRow {
                n,
                b0,
                b1,
                genes,
                repeats,
                median_seconds: median,
                min_seconds: t[0],
                max_seconds: t[t.len() - 1],
            }
        })
        .collect();
    Ok(rows)
}
