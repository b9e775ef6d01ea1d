//! Per-gene data model, design codes and the joint TReC + ASE likelihood.

use crate::distributions::{bb_logpmf_unchecked, nb_logpmf_unchecked, sigmoid, softplus};
use crate::error::{Error, Result};

/// Lower and upper clamp for both over-dispersion parameters.
pub const OVERDISP_MIN: f64 = 1e-4;
pub const OVERDISP_MAX: f64 = 1e4;

/// Genotype of the candidate eQTL, ordered as (haplotype 1, haplotype 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Genotype {
    /// A1A1
    HomRef,
    /// A1A2: haplotype 1 carries A1, haplotype 2 carries A2.
    HetRefAlt,
    /// A2A1: haplotype 1 carries A2, haplotype 2 carries A1.
    HetAltRef,
    /// A2A2
    HomAlt,
}

impl Genotype {
    /// Orientation code `z`: 0 for homozygotes, +1 for A2A1, -1 for A1A2.
    pub fn z_code(self) -> i8 {
        match self {
            Genotype::HomRef | Genotype::HomAlt => 0,
            Genotype::HetAltRef => 1,
            Genotype::HetRefAlt => -1,
        }
    }

    pub fn is_het(self) -> bool {
        matches!(self, Genotype::HetRefAlt | Genotype::HetAltRef)
    }

    /// The same genotype with haplotype labels exchanged.
    pub fn swapped(self) -> Self {
        match self {
            Genotype::HetRefAlt => Genotype::HetAltRef,
            Genotype::HetAltRef => Genotype::HetRefAlt,
            g => g,
        }
    }
}

pub fn z_code(genotype: Genotype) -> i8 {
    genotype.z_code()
}

/// Parent that transmitted haplotype 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parent {
    Paternal,
    Maternal,
}

impl Parent {
    /// `x`: +1 when haplotype 1 is paternal.
    pub fn x_code(self) -> i8 {
        match self {
            Parent::Paternal => 1,
            Parent::Maternal => -1,
        }
    }

    pub fn from_x(x: i8) -> Result<Self> {
        match x {
            1 => Ok(Parent::Paternal),
            -1 => Ok(Parent::Maternal),
            other => Err(Error::domain(format!(
                "parental code must be +1 or -1, got {other}"
            ))),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Parent::Paternal => Parent::Maternal,
            Parent::Maternal => Parent::Paternal,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    /// Total read count `T`.
    pub total: u64,
    /// Allele-specific read count `N`.
    pub ase_total: u64,
    /// Allele-specific reads on haplotype 1, `N1`.
    pub ase_hap1: u64,
    pub genotype: Genotype,
    pub hap1_parent: Parent,
    /// Read-depth normalizer.
    pub kappa: f64,
    pub covariates: Vec<f64>,
}

impl SampleRecord {
    pub fn validate(&self) -> Result<()> {
        if self.ase_hap1 > self.ase_total {
            return Err(Error::domain(format!(
                "ase_hap1 ({}) exceeds ase_total ({})",
                self.ase_hap1, self.ase_total
            )));
        }
        if self.ase_total > self.total {
            return Err(Error::domain(format!(
                "ase_total ({}) exceeds total_count ({})",
                self.ase_total, self.total
            )));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::domain(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if let Some(c) = self.covariates.iter().find(|c| !c.is_finite()) {
            return Err(Error::domain(format!("non-finite covariate value {c}")));
        }
        Ok(())
    }

    pub fn x_code(&self) -> i8 {
        self.hap1_parent.x_code()
    }

    pub fn z_code(&self) -> i8 {
        self.genotype.z_code()
    }

    /// Relabels haplotypes 1 and 2; the likelihood is invariant under this.
    pub fn relabeled(&self) -> Self {
        Self {
            ase_hap1: self.ase_total - self.ase_hap1,
            genotype: self.genotype.swapped(),
            hap1_parent: self.hap1_parent.flipped(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneData {
    gene_id: String,
    covariate_names: Vec<String>,
    samples: Vec<SampleRecord>,
}

impl GeneData {
    pub fn new(
        gene_id: impl Into<String>,
        covariate_names: Vec<String>,
        samples: Vec<SampleRecord>,
    ) -> Result<Self> {
        let gene_id = gene_id.into();
        if samples.is_empty() {
            return Err(Error::InsufficientData(format!(
                "gene {gene_id} has no samples"
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            s.validate()
                .map_err(|e| Error::domain(format!("gene {gene_id}, sample {i}: {e}")))?;
            if s.covariates.len() != covariate_names.len() {
                return Err(Error::domain(format!(
                    "gene {gene_id}, sample {i}: expected {} covariates, found {}",
                    covariate_names.len(),
                    s.covariates.len()
                )));
            }
        }
        Ok(Self {
            gene_id,
            covariate_names,
            samples,
        })
    }

    pub fn gene_id(&self) -> &str {
        &self.gene_id
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn samples(&self) -> &[SampleRecord] {
        &self.samples
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    /// Samples with at least `max(1, min_ase)` allele-specific reads.
    pub fn n_informative(&self, min_ase: u64) -> usize {
        let threshold = min_ase.max(1);
        self.samples
            .iter()
            .filter(|s| s.ase_total >= threshold)
            .count()
    }

    pub fn mean_total(&self) -> f64 {
        self.samples.iter().map(|s| s.total as f64).sum::<f64>() / self.samples.len() as f64
    }

    pub fn map_samples(&self, f: impl FnMut(&SampleRecord) -> SampleRecord) -> Result<Self> {
        let samples = self.samples.iter().map(f).collect();
        Self::new(self.gene_id.clone(), self.covariate_names.clone(), samples)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Additive genetic (cis-eQTL) effect.
    pub b0: f64,
    /// Parent-of-origin effect.
    pub b1: f64,
    pub gamma0: f64,
    pub beta_kappa: f64,
    pub betas: Vec<f64>,
    pub bb_overdisp: f64,
    pub nb_overdisp: f64,
}

impl ModelParams {
    pub fn null(n_covariates: usize) -> Self {
        Self {
            b0: 0.0,
            b1: 0.0,
            gamma0: 0.0,
            beta_kappa: 0.0,
            betas: vec![0.0; n_covariates],
            bb_overdisp: 0.1,
            nb_overdisp: 0.1,
        }
    }

    pub fn validate(&self, n_covariates: usize) -> Result<()> {
        let finite = [self.b0, self.b1, self.gamma0, self.beta_kappa]
            .iter()
            .chain(self.betas.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::domain("model parameters must be finite"));
        }
        if self.betas.len() != n_covariates {
            return Err(Error::domain(format!(
                "expected {n_covariates} covariate coefficients, got {}",
                self.betas.len()
            )));
        }
        for (name, v) in [
            ("bb_overdisp", self.bb_overdisp),
            ("nb_overdisp", self.nb_overdisp),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Which likelihood components contribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LikelihoodKind {
    Joint,
    TrecOnly,
    AseOnly,
}

impl LikelihoodKind {
    pub fn uses_trec(self) -> bool {
        matches!(self, LikelihoodKind::Joint | LikelihoodKind::TrecOnly)
    }

    pub fn uses_ase(self) -> bool {
        matches!(self, LikelihoodKind::Joint | LikelihoodKind::AseOnly)
    }
}

/// Logit of the haplotype-1 expression fraction: `b0 * z + b1 * x`.
pub fn bb_logit_mean(z: i8, x: i8, b0: f64, b1: f64) -> f64 {
    b0 * f64::from(z) + b1 * f64::from(x)
}

/// Log fold change of total expression relative to an A1A1 sample.
///
/// For heterozygotes the paternal-allele sign is `s = z * x` (+1 when A2 is
/// paternal), giving `ln(1 + e^(b0 + s b1)) - ln(1 + e^(s b1))`.
pub fn eta_offset(genotype: Genotype, x: i8, b0: f64, b1: f64) -> f64 {
    match genotype {
        Genotype::HomRef => 0.0,
        Genotype::HomAlt => b0,
        het => {
            let s = f64::from(het.z_code() * x);
            softplus(b0 + s * b1) - softplus(s * b1)
        }
    }
}

/// Partial derivatives of [`eta_offset`] with respect to `(b0, b1)`.
pub(crate) fn eta_gradient(genotype: Genotype, x: i8, b0: f64, b1: f64) -> (f64, f64) {
    match genotype {
        Genotype::HomRef => (0.0, 0.0),
        Genotype::HomAlt => (1.0, 0.0),
        het => {
            let s = f64::from(het.z_code() * x);
            let hi = sigmoid(b0 + s * b1);
            (hi, s * (hi - sigmoid(s * b1)))
        }
    }
}

/// `ln(mu)` for the total read count of one sample.
pub fn trec_log_mean(record: &SampleRecord, params: &ModelParams) -> f64 {
    let linear: f64 = record
        .covariates
        .iter()
        .zip(&params.betas)
        .map(|(c, b)| c * b)
        .sum();
    params.gamma0
        + params.beta_kappa * record.kappa.ln()
        + linear
        + eta_offset(record.genotype, record.x_code(), params.b0, params.b1)
}

/// NB log-likelihood contribution of one sample.
pub fn trec_loglik(record: &SampleRecord, params: &ModelParams) -> f64 {
    let mu = trec_log_mean(record, params).exp();
    nb_logpmf_unchecked(record.total, mu, params.nb_overdisp)
}

/// BB log-likelihood contribution of one sample (0 when it carries no ASE reads).
pub fn ase_loglik(record: &SampleRecord, params: &ModelParams) -> f64 {
    if record.ase_total == 0 {
        return 0.0;
    }
    let logit = bb_logit_mean(record.z_code(), record.x_code(), params.b0, params.b1);
    bb_logpmf_unchecked(
        record.ase_hap1,
        record.ase_total,
        sigmoid(logit),
        sigmoid(-logit),
        params.bb_overdisp,
    )
}

/// Log-likelihood restricted to the requested components. Samples with fewer
/// than `max(1, min_ase)` allele-specific reads contribute only their TReC term.
pub fn loglik(
    data: &GeneData,
    params: &ModelParams,
    kind: LikelihoodKind,
    min_ase: u64,
) -> Result<f64> {
    params.validate(data.n_covariates())?;
    let threshold = min_ase.max(1);
    let total = data
        .samples()
        .iter()
        .map(|s| {
            let mut ll = 0.0;
            if kind.uses_trec() {
                ll += trec_loglik(s, params);
            }
            if kind.uses_ase() && s.ase_total >= threshold {
                ll += ase_loglik(s, params);
            }
            ll
        })
        .sum();
    Ok(total)
}

/// Joint TReC + ASE log-likelihood with every sample's ASE reads used.
pub fn joint_loglik(data: &GeneData, params: &ModelParams) -> Result<f64> {
    loglik(data, params, LikelihoodKind::Joint, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{bb_logpmf, nb_logpmf, BbParams, NbParams};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{E, LN_2};

    fn record(total: u64, n: u64, n1: u64, genotype: Genotype, parent: Parent) -> SampleRecord {
        SampleRecord {
            total,
            ase_total: n,
            ase_hap1: n1,
            genotype,
            hap1_parent: parent,
            kappa: 1.0,
            covariates: vec![],
        }
    }

    fn params(b0: f64, b1: f64, gamma0: f64) -> ModelParams {
        ModelParams {
            b0,
            b1,
            gamma0,
            ..ModelParams::null(0)
        }
    }

    #[test]
    fn z_codes() {
        assert_eq!(z_code(Genotype::HetAltRef), 1);
        assert_eq!(z_code(Genotype::HetRefAlt), -1);
        assert_eq!(z_code(Genotype::HomRef), 0);
        assert_eq!(z_code(Genotype::HomAlt), 0);
    }

    #[test]
    fn logit_mean_examples() {
        assert_eq!(bb_logit_mean(0, 1, 5.0, 0.0), 0.0);
        assert_abs_diff_eq!(bb_logit_mean(1, -1, 0.5, 0.2), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(bb_logit_mean(-1, -1, 0.5, 0.2), -0.7, epsilon = 1e-15);
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_offset(Genotype::HomRef, 1, 3.0, 2.0), 0.0);
        assert_eq!(eta_offset(Genotype::HomRef, -1, 3.0, 2.0), 0.0);
        assert_eq!(eta_offset(Genotype::HomAlt, -1, 0.7, 2.0), 0.7);
        let v = eta_offset(Genotype::HetAltRef, 1, LN_2, 0.0);
        assert_abs_diff_eq!(v, 3f64.ln() - 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(v, 0.405465, epsilon = 1e-6);
        for g in [Genotype::HetAltRef, Genotype::HetRefAlt] {
            for x in [1, -1] {
                assert_eq!(eta_offset(g, x, 0.0, 0.0), 0.0);
            }
        }
    }

    #[test]
    fn eta_is_overflow_safe() {
        for &(b0, b1) in &[(50.0, 50.0), (-50.0, 50.0), (50.0, -50.0), (-50.0, -50.0)] {
            for g in [Genotype::HetAltRef, Genotype::HetRefAlt] {
                for x in [1, -1] {
                    assert!(eta_offset(g, x, b0, b1).is_finite());
                }
            }
        }
        assert_abs_diff_eq!(
            eta_offset(Genotype::HetAltRef, 1, 50.0, 50.0),
            50.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn eta_at_zero_poo_matches_average_expansion() {
        for b0 in [-3.0, -0.4, 0.0, 0.9, 4.0] {
            let expected = ((1.0 + f64::exp(b0)) / 2.0).ln();
            for g in [Genotype::HetAltRef, Genotype::HetRefAlt] {
                for x in [1, -1] {
                    assert_abs_diff_eq!(eta_offset(g, x, b0, 0.0), expected, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn eta_gradient_matches_finite_differences() {
        let h = 1e-6;
        for g in [
            Genotype::HomRef,
            Genotype::HomAlt,
            Genotype::HetAltRef,
            Genotype::HetRefAlt,
        ] {
            for x in [1, -1] {
                let (b0, b1) = (0.37, -0.81);
                let (d0, d1) = eta_gradient(g, x, b0, b1);
                let f0 = (eta_offset(g, x, b0 + h, b1) - eta_offset(g, x, b0 - h, b1)) / (2.0 * h);
                let f1 = (eta_offset(g, x, b0, b1 + h) - eta_offset(g, x, b0, b1 - h)) / (2.0 * h);
                assert_abs_diff_eq!(d0, f0, epsilon = 1e-8);
                assert_abs_diff_eq!(d1, f1, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn trec_log_mean_examples() {
        let r = record(0, 0, 0, Genotype::HomRef, Parent::Paternal);
        assert_eq!(trec_log_mean(&r, &params(0.0, 0.0, 2.0)), 2.0);

        let r = SampleRecord {
            kappa: E,
            ..record(0, 0, 0, Genotype::HomAlt, Parent::Paternal)
        };
        let p = ModelParams {
            beta_kappa: 1.0,
            ..params(0.5, 0.0, 0.0)
        };
        assert_abs_diff_eq!(trec_log_mean(&r, &p), 1.5, epsilon = 1e-12);

        let r = record(0, 0, 0, Genotype::HetAltRef, Parent::Paternal);
        assert_abs_diff_eq!(
            trec_log_mean(&r, &params(LN_2, 0.0, 1.0)),
            1.405465,
            epsilon = 1e-6
        );
    }

    #[test]
    fn joint_loglik_single_sample_without_ase() {
        let data = GeneData::new(
            "g",
            vec![],
            vec![record(3, 0, 0, Genotype::HomRef, Parent::Paternal)],
        )
        .unwrap();
        let p = ModelParams {
            nb_overdisp: 0.7,
            ..params(0.3, -0.2, 1.1)
        };
        let expected = nb_logpmf(3, &NbParams::new(1.1f64.exp(), 0.7).unwrap());
        assert_abs_diff_eq!(joint_loglik(&data, &p).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn joint_loglik_is_additive() {
        let a = record(12, 5, 2, Genotype::HetRefAlt, Parent::Maternal);
        let b = record(30, 9, 7, Genotype::HomAlt, Parent::Paternal);
        let p = params(0.4, 0.9, 2.5);
        let one = |r: &SampleRecord| {
            joint_loglik(&GeneData::new("g", vec![], vec![r.clone()]).unwrap(), &p).unwrap()
        };
        let both = joint_loglik(
            &GeneData::new("g", vec![], vec![a.clone(), b.clone()]).unwrap(),
            &p,
        )
        .unwrap();
        assert_abs_diff_eq!(both, one(&a) + one(&b), epsilon = 1e-12);
    }

    #[test]
    fn joint_loglik_matches_termwise_oracle() {
        let samples = vec![
            SampleRecord {
                kappa: 0.8,
                covariates: vec![1.0],
                ..record(14, 6, 1, Genotype::HetRefAlt, Parent::Paternal)
            },
            SampleRecord {
                kappa: 1.3,
                covariates: vec![0.0],
                ..record(40, 11, 8, Genotype::HetAltRef, Parent::Maternal)
            },
            SampleRecord {
                kappa: 2.1,
                covariates: vec![-0.5],
                ..record(7, 0, 0, Genotype::HomAlt, Parent::Paternal)
            },
            SampleRecord {
                kappa: 0.5,
                covariates: vec![2.0],
                ..record(25, 3, 3, Genotype::HomRef, Parent::Maternal)
            },
        ];
        let data = GeneData::new("g", vec!["batch".into()], samples.clone()).unwrap();
        let p = ModelParams {
            b0: 0.6,
            b1: -0.35,
            gamma0: 2.2,
            beta_kappa: 0.9,
            betas: vec![0.15],
            bb_overdisp: 0.25,
            nb_overdisp: 4.0 / 3.0,
        };
        // Hand-expanded log-means and hap-1 fractions for each record.
        let log_mu = [
            2.2 + 0.9 * 0.8f64.ln()
                + 0.15
                + ((1.0 + (0.6f64 + 0.35).exp()) / (1.0 + 0.35f64.exp())).ln(),
            2.2 + 0.9 * 1.3f64.ln() + ((1.0 + (0.6f64 + 0.35).exp()) / (1.0 + 0.35f64.exp())).ln(),
            2.2 + 0.9 * 2.1f64.ln() - 0.075 + 0.6,
            2.2 + 0.9 * 0.5f64.ln() + 0.3,
        ];
        let logits = [-0.6 - 0.35, 0.6 + 0.35, 0.0, 0.35];
        let mut expected = 0.0;
        for (k, s) in samples.iter().enumerate() {
            expected += nb_logpmf(
                s.total,
                &NbParams::new(log_mu[k].exp(), p.nb_overdisp).unwrap(),
            );
            if s.ase_total > 0 {
                let pk = 1.0 / (1.0 + f64::exp(-logits[k]));
                expected += bb_logpmf(
                    s.ase_hap1,
                    s.ase_total,
                    &BbParams::new(pk, p.bb_overdisp).unwrap(),
                )
                .unwrap();
            }
        }
        assert_abs_diff_eq!(joint_loglik(&data, &p).unwrap(), expected, epsilon = 1e-10);
    }

    #[test]
    fn min_ase_threshold_drops_bb_terms() {
        let samples = vec![
            record(10, 2, 1, Genotype::HetRefAlt, Parent::Paternal),
            record(20, 8, 6, Genotype::HomRef, Parent::Maternal),
        ];
        let data = GeneData::new("g", vec![], samples.clone()).unwrap();
        let p = params(0.2, 0.4, 2.0);
        let with_all = loglik(&data, &p, LikelihoodKind::Joint, 0).unwrap();
        let filtered = loglik(&data, &p, LikelihoodKind::Joint, 5).unwrap();
        assert_abs_diff_eq!(
            with_all - filtered,
            ase_loglik(&samples[0], &p),
            epsilon = 1e-12
        );
        assert_eq!(data.n_informative(5), 1);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let bad = record(3, 5, 1, Genotype::HomRef, Parent::Paternal);
        assert!(GeneData::new("g", vec![], vec![bad]).is_err());
        assert!(GeneData::new("g", vec![], vec![]).is_err());
        let data = GeneData::new(
            "g",
            vec![],
            vec![record(3, 1, 1, Genotype::HomRef, Parent::Paternal)],
        )
        .unwrap();
        let p = ModelParams {
            nb_overdisp: 0.0,
            ..params(0.0, 0.0, 0.0)
        };
        assert!(joint_loglik(&data, &p).is_err());
        assert!(Parent::from_x(0).is_err());
    }

    /// Reading the heterozygote offset with the raw parental code `x` instead of
    /// `z * x` breaks haplotype relabeling; pin that down so the two readings
    /// cannot be confused.
    #[test]
    fn literal_parental_code_breaks_relabeling() {
        let literal = |g: Genotype, x: i8, b0: f64, b1: f64| match g {
            Genotype::HomRef => 0.0,
            Genotype::HomAlt => b0,
            _ => softplus(b0 + f64::from(x) * b1) - softplus(f64::from(x) * b1),
        };
        let g = Genotype::HetAltRef;
        let (b0, b1) = (0.8, 0.6);
        assert!((literal(g, 1, b0, b1) - literal(g.swapped(), -1, b0, b1)).abs() > 0.1);
        assert_eq!(
            eta_offset(g, 1, b0, b1),
            eta_offset(g.swapped(), -1, b0, b1)
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_record() -> impl Strategy<Value = SampleRecord> {
            (
                0u64..300,
                0.0f64..=1.0,
                0.0f64..=1.0,
                0usize..4,
                any::<bool>(),
                0.2f64..5.0,
                -2.0f64..2.0,
            )
                .prop_map(|(t, fa, f1, g, pat, kappa, c)| {
                    let n = (t as f64 * fa).round() as u64;
                    let n1 = (n as f64 * f1).round() as u64;
                    let genotype = [
                        Genotype::HomRef,
                        Genotype::HetRefAlt,
                        Genotype::HetAltRef,
                        Genotype::HomAlt,
                    ][g];
                    SampleRecord {
                        total: t,
                        ase_total: n,
                        ase_hap1: n1,
                        genotype,
                        hap1_parent: if pat {
                            Parent::Paternal
                        } else {
                            Parent::Maternal
                        },
                        kappa,
                        covariates: vec![c],
                    }
                })
        }

        proptest! {
            #[test]
            fn haplotype_relabeling_invariance(
                samples in proptest::collection::vec(arb_record(), 1..12),
                b0 in -5.0f64..5.0, b1 in -5.0f64..5.0, g0 in -1.0f64..5.0,
                bk in -1.0f64..2.0, beta in -1.0f64..1.0,
                lbb in -9.0f64..9.0, lnb in -9.0f64..9.0,
            ) {
                let data = GeneData::new("g", vec!["c".into()], samples).unwrap();
                let flipped = data.map_samples(SampleRecord::relabeled).unwrap();
                let p = ModelParams {
                    b0, b1, gamma0: g0, beta_kappa: bk, betas: vec![beta],
                    bb_overdisp: lbb.exp(), nb_overdisp: lnb.exp(),
                };
                let a = joint_loglik(&data, &p).unwrap();
                let b = joint_loglik(&flipped, &p).unwrap();
                prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
            }

            #[test]
            fn ase_term_ignores_depth_and_covariates(
                r in arb_record(), kappa in 0.1f64..10.0, c in -3.0f64..3.0,
                b0 in -3.0f64..3.0, b1 in -3.0f64..3.0,
            ) {
                let p = ModelParams { b0, b1, betas: vec![0.7], beta_kappa: 1.3, ..ModelParams::null(1) };
                let moved = SampleRecord { kappa, covariates: vec![c], ..r.clone() };
                prop_assert_eq!(ase_loglik(&r, &p), ase_loglik(&moved, &p));
            }
        }
    }
}
