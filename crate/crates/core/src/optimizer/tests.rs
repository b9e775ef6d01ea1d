use super::*;
use crate::model::{joint_loglik, Genotype, Parent, SampleRecord};
use crate::simulate::{simulate_gene_seeded, SimConfig};
use approx::assert_abs_diff_eq;

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

fn gene(samples: Vec<SampleRecord>) -> GeneData {
    GeneData::new("g", vec![], samples).unwrap()
}

#[test]
fn irls_hand_computed_steps() {
    let data = gene(vec![
        record(2, 0, 0, Genotype::HomRef, Parent::Paternal),
        record(2, 0, 0, Genotype::HomRef, Parent::Maternal),
    ]);
    let start = ModelParams {
        nb_overdisp: 1e-10,
        ..ModelParams::null(0)
    };
    let one = irls_step(
        &data,
        &ModelParams {
            gamma0: 0.0,
            ..start.clone()
        },
    )
    .unwrap();
    assert_abs_diff_eq!(one.gamma0, 1.0, epsilon = 1e-8);
    let two = irls_step(&data, &one).unwrap();
    // 1 + (2 - e) / e
    assert_abs_diff_eq!(two.gamma0, 2.0 / std::f64::consts::E, epsilon = 1e-8);
    assert_abs_diff_eq!(two.gamma0, 0.7358, epsilon = 1e-4);
}

#[test]
fn irls_fixed_point_when_fitted_exactly() {
    let data = gene(vec![
        record(5, 0, 0, Genotype::HomRef, Parent::Paternal),
        record(5, 0, 0, Genotype::HomRef, Parent::Maternal),
    ]);
    let p = ModelParams {
        gamma0: 5f64.ln(),
        nb_overdisp: 0.3,
        ..ModelParams::null(0)
    };
    let next = irls_step(&data, &p).unwrap();
    assert_abs_diff_eq!(next.gamma0, p.gamma0, epsilon = 1e-14);
}

#[test]
fn singular_design_names_column() {
    let mut samples = vec![
        record(5, 0, 0, Genotype::HomRef, Parent::Paternal),
        record(9, 0, 0, Genotype::HomAlt, Parent::Maternal),
        record(7, 0, 0, Genotype::HomRef, Parent::Maternal),
    ];
    for (s, (k, c)) in samples.iter_mut().zip([(1.0, 2.0), (2.0, 2.0), (3.0, 2.0)]) {
        s.kappa = k;
        s.covariates = vec![c];
    }
    let data = GeneData::new("g", vec!["constant".into()], samples).unwrap();
    let err = fit(
        &data,
        &ModelSpec::full(LikelihoodKind::Joint),
        &FitConfig::default(),
    )
    .unwrap_err();
    assert_eq!(
        err,
        Error::SingularDesign {
            column: "constant".into()
        }
    );
}

#[test]
fn null_simulation_effects_near_zero() {
    let data = simulate_gene_seeded(&SimConfig::default().with_n(1024).with_seed(17), "g").unwrap();
    let r = fit(
        &data,
        &ModelSpec::full(LikelihoodKind::Joint),
        &FitConfig::default(),
    )
    .unwrap();
    assert!(r.converged);
    assert!(
        r.params.b0.abs() < 0.2 && r.params.b1.abs() < 0.2,
        "{:?}",
        r.params
    );
}

#[test]
fn stationary_effects_are_kept() {
    let data = simulate_gene_seeded(
        &SimConfig::default().with_effects(0.4, 0.3).with_seed(5),
        "g",
    )
    .unwrap();
    let config = FitConfig {
        epsilon: 1e-12,
        ..FitConfig::default()
    };
    let spec = ModelSpec::full(LikelihoodKind::Joint);
    let r = fit(&data, &spec, &config).unwrap();
    let (p, _) = optimize_effects(&data, &r.params, &spec, &config).unwrap();
    assert!((p.b0 - r.params.b0).abs() < 1e-8 && (p.b1 - r.params.b1).abs() < 1e-8);
}

#[test]
fn monotone_ase_drives_effect_to_bound() {
    let data = gene(vec![record(
        20,
        12,
        12,
        Genotype::HetAltRef,
        Parent::Paternal,
    )]);
    let spec = ModelSpec::genetic_only(LikelihoodKind::AseOnly);
    let r = fit(&data, &spec, &FitConfig::default()).unwrap();
    assert!(r.boundary);
    assert_abs_diff_eq!(r.params.b0, EFFECT_BOUND, epsilon = 1e-6);
    let (p, boundary) =
        optimize_effects(&data, &ModelParams::null(0), &spec, &FitConfig::default()).unwrap();
    assert!(boundary);
    assert_abs_diff_eq!(p.b0, EFFECT_BOUND, epsilon = 1e-6);
}

#[test]
fn all_degenerate_ase_stays_finite() {
    let data = gene(vec![
        record(30, 6, 6, Genotype::HetAltRef, Parent::Paternal),
        record(25, 4, 0, Genotype::HetRefAlt, Parent::Paternal),
        record(28, 5, 5, Genotype::HomRef, Parent::Paternal),
        record(33, 7, 0, Genotype::HomAlt, Parent::Maternal),
    ]);
    let r = fit(
        &data,
        &ModelSpec::full(LikelihoodKind::Joint),
        &FitConfig::default(),
    )
    .unwrap();
    assert!(r.converged && r.loglik.is_finite());
    // Every het is all-or-nothing, which BB absorbs through maximal over-dispersion.
    assert_eq!(r.params.bb_overdisp, OVERDISP_MAX);
}

#[test]
fn equidispersed_totals_hit_lower_clamp() {
    use crate::distributions::binomial_sample;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    // Binomial(50, 0.8) has variance 8 against a mean of 40.
    let samples = (0..300)
        .map(|_| {
            record(
                binomial_sample(50, 0.8, &mut rng),
                0,
                0,
                Genotype::HomRef,
                Parent::Paternal,
            )
        })
        .collect();
    let data = gene(samples);
    let start = ModelParams {
        gamma0: data.mean_total().ln(),
        ..ModelParams::null(0)
    };
    let p = optimize_overdispersion(
        &data,
        &start,
        LikelihoodKind::TrecOnly,
        &FitConfig::default(),
    )
    .unwrap();
    assert_eq!(p.nb_overdisp, OVERDISP_MIN);
}

#[test]
fn bb_overdispersion_recovered() {
    let data = simulate_gene_seeded(&SimConfig::default().with_n(1024).with_seed(23), "g").unwrap();
    let r = fit(
        &data,
        &ModelSpec::full(LikelihoodKind::Joint),
        &FitConfig::default(),
    )
    .unwrap();
    assert!(
        (r.params.bb_overdisp - 0.25).abs() < 0.1,
        "{}",
        r.params.bb_overdisp
    );
}

#[test]
fn single_sample_overdispersions_clamp() {
    let data = gene(vec![record(40, 10, 7, Genotype::HomRef, Parent::Paternal)]);
    let r = fit(
        &data,
        &ModelSpec::full(LikelihoodKind::Joint),
        &FitConfig::default(),
    )
    .unwrap();
    let clamped = |v: f64| v == OVERDISP_MIN || v == OVERDISP_MAX;
    assert!(clamped(r.params.nb_overdisp), "{}", r.params.nb_overdisp);
    assert!(clamped(r.params.bb_overdisp), "{}", r.params.bb_overdisp);
}

#[test]
fn recovers_simulated_effects() {
    let data = simulate_gene_seeded(
        &SimConfig::default()
            .with_n(256)
            .with_effects(0.5, 0.5)
            .with_seed(2024),
        "g",
    )
    .unwrap();
    let r = fit(
        &data,
        &ModelSpec::full(LikelihoodKind::Joint),
        &FitConfig::default(),
    )
    .unwrap();
    assert!(r.converged);
    assert!((r.params.b0 - 0.5).abs() < 0.15, "b0 {}", r.params.b0);
    assert!((r.params.b1 - 0.5).abs() < 0.15, "b1 {}", r.params.b1);
}

#[test]
fn trace_is_monotone_and_ends_at_loglik() {
    for seed in 0..20 {
        let c = SimConfig::default()
            .with_n(24)
            .with_effects(0.3, -0.6)
            .with_seed(seed);
        let data = simulate_gene_seeded(&c, "g").unwrap();
        for kind in [
            LikelihoodKind::Joint,
            LikelihoodKind::TrecOnly,
            LikelihoodKind::AseOnly,
        ] {
            let r = fit(&data, &ModelSpec::full(kind), &FitConfig::default()).unwrap();
            assert_eq!(*r.trace.last().unwrap(), r.loglik);
            assert_eq!(r.iterations, r.trace.len());
            for w in r.trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "{:?}", r.trace);
            }
        }
    }
}

#[test]
fn fit_loglik_matches_model_evaluation() {
    let data = simulate_gene_seeded(
        &SimConfig::default().with_effects(0.2, 0.7).with_seed(8),
        "g",
    )
    .unwrap();
    let r = fit(
        &data,
        &ModelSpec::full(LikelihoodKind::Joint),
        &FitConfig::default(),
    )
    .unwrap();
    assert_abs_diff_eq!(
        r.loglik,
        joint_loglik(&data, &r.params).unwrap(),
        epsilon = 1e-9
    );
}

#[test]
fn deterministic_results() {
    let data = simulate_gene_seeded(
        &SimConfig::default().with_effects(0.6, 0.1).with_seed(3),
        "g",
    )
    .unwrap();
    let a = analyze_gene(&data, LikelihoodKind::Joint, &FitConfig::default()).unwrap();
    let b = analyze_gene(&data, LikelihoodKind::Joint, &FitConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn nested_fits_never_beat_full() {
    for seed in 0..15 {
        let c = SimConfig::default()
            .with_n(20)
            .with_effects(0.4, 0.4)
            .with_seed(100 + seed);
        let data = simulate_gene_seeded(&c, "g").unwrap();
        for kind in [
            LikelihoodKind::Joint,
            LikelihoodKind::TrecOnly,
            LikelihoodKind::AseOnly,
        ] {
            let g = analyze_gene(&data, kind, &FitConfig::default()).unwrap();
            assert!(g.full.loglik >= g.null_genetic.loglik - 1e-6);
            assert!(g.full.loglik >= g.null_poo.loglik - 1e-6);
            let b0_only =
                fit(&data, &ModelSpec::genetic_only(kind), &FitConfig::default()).unwrap();
            let b1_only = fit(&data, &ModelSpec::poo_only(kind), &FitConfig::default()).unwrap();
            assert!(
                g.full.loglik >= b0_only.loglik - 1e-6,
                "seed {seed} {kind:?}"
            );
            assert!(
                g.full.loglik >= b1_only.loglik - 1e-6,
                "seed {seed} {kind:?}"
            );
        }
    }
}

#[test]
fn lrt_examples() {
    let r = lrt_from_logliks(-5.0, -5.0, 1).unwrap();
    assert_eq!(r.statistic, 0.0);
    assert_eq!(r.p_value, 1.0);
    // Chi-square(1) upper tail: P(X > 3.841459) = 0.05.
    assert_abs_diff_eq!(
        chi_square_sf(3.841_458_820_694_124, 1),
        0.05,
        epsilon = 1e-9
    );
    let r = lrt_from_logliks(-8.0, -10.0, 1).unwrap();
    assert_eq!(r.statistic, 4.0);
    // erfc(sqrt(2)) = 0.0455002638963584
    assert_abs_diff_eq!(r.p_value, 0.045_500_263_896_358_4, epsilon = 1e-10);
    // Tiny negative differences within tolerance floor to zero.
    assert_eq!(
        lrt_from_logliks(-10.0, -10.0 + 5e-7, 1).unwrap().statistic,
        0.0
    );
    assert!(matches!(
        lrt_from_logliks(-10.0, -9.0, 1),
        Err(Error::NestingViolation { .. })
    ));
    assert!(lrt_from_logliks(-1.0, -2.0, 0).is_err());
}

#[test]
fn chi_square_matches_closed_forms() {
    // df = 2 is exponential with mean 2.
    for x in [0.1, 1.0, 5.0, 20.0] {
        assert_abs_diff_eq!(chi_square_sf(x, 2), (-x / 2.0).exp(), epsilon = 1e-13);
    }
}

#[test]
fn ase_only_requires_informative_samples() {
    let data = gene(vec![record(
        20,
        0,
        0,
        Genotype::HetAltRef,
        Parent::Paternal,
    )]);
    let err = fit(
        &data,
        &ModelSpec::full(LikelihoodKind::AseOnly),
        &FitConfig::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::InsufficientData(_)));
    assert!(fit(
        &data,
        &ModelSpec::no_effects(LikelihoodKind::AseOnly),
        &FitConfig::default()
    )
    .is_err());
    let config = FitConfig {
        min_ase_reads: 5,
        ..FitConfig::default()
    };
    let data = gene(vec![record(
        20,
        3,
        1,
        Genotype::HetAltRef,
        Parent::Paternal,
    )]);
    assert!(fit(&data, &ModelSpec::full(LikelihoodKind::AseOnly), &config).is_err());
}

#[test]
fn zero_ase_gene_uses_trec_only() {
    let c = SimConfig::default().with_effects(0.8, 0.0).with_seed(12);
    let sim = simulate_gene_seeded(&c, "g").unwrap();
    let data = sim
        .map_samples(|s| SampleRecord {
            ase_total: 0,
            ase_hap1: 0,
            ..s.clone()
        })
        .unwrap();
    let g = analyze_gene(&data, LikelihoodKind::Joint, &FitConfig::default()).unwrap();
    let t = analyze_gene(&data, LikelihoodKind::TrecOnly, &FitConfig::default()).unwrap();
    assert!((g.full.loglik - t.full.loglik).abs() < 1e-4);
    assert!((0.0..=1.0).contains(&g.poo.p_value));
}

#[test]
fn invalid_configs_rejected() {
    let data = gene(vec![record(
        20,
        4,
        2,
        Genotype::HetAltRef,
        Parent::Paternal,
    )]);
    let spec = ModelSpec::full(LikelihoodKind::Joint);
    for bad in [
        FitConfig {
            epsilon: 0.0,
            ..FitConfig::default()
        },
        FitConfig {
            max_iters: 0,
            ..FitConfig::default()
        },
        FitConfig {
            overdisp_bounds: (1.0, 0.5),
            ..FitConfig::default()
        },
    ] {
        assert!(fit(&data, &spec, &bad).is_err());
    }
    let zeros = gene(vec![record(0, 0, 0, Genotype::HomRef, Parent::Paternal); 3]);
    assert!(matches!(
        fit(&zeros, &spec, &FitConfig::default()),
        Err(Error::InsufficientData(_))
    ));
}

#[test]
fn parental_flip_flips_poo_sign() {
    let c = SimConfig::default().with_effects(0.3, 0.9).with_seed(31);
    let data = simulate_gene_seeded(&c, "g").unwrap();
    let flipped = data
        .map_samples(|s| SampleRecord {
            hap1_parent: s.hap1_parent.flipped(),
            ..s.clone()
        })
        .unwrap();
    let a = fit(
        &data,
        &ModelSpec::full(LikelihoodKind::Joint),
        &FitConfig::default(),
    )
    .unwrap();
    let b = fit(
        &flipped,
        &ModelSpec::full(LikelihoodKind::Joint),
        &FitConfig::default(),
    )
    .unwrap();
    assert!(a.params.b1 > 0.0 && b.params.b1 < 0.0);
    assert!((a.params.b1 + b.params.b1).abs() < 1e-3);
    assert!((a.loglik - b.loglik).abs() < 1e-4);
}
