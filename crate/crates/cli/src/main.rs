// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use imprint_core::io::{
    build_genes, fit_genes, parse_counts, parse_covariates, write_bias, write_power, write_results,
    write_simulated, write_timing, BatchOptions, CountsTable, CovariateRow, CovariatesTable,
};
use imprint_core::simulate::{
    derive_seed, run_bias_experiment, run_power_grid, run_timing_bench, simulate_gene_seeded,
    ScenarioGrid, SimConfig, REFERENCE_EFFECTS,
};
use imprint_core::{Error, FitConfig};

#[derive(Parser)]
#[command(
    name = "imprint",
    version,
    about = "Joint estimation of cis-eQTL and parent-of-origin effects from RNA-seq counts"
)]
struct Cli {
    /// Worker threads (0 = one per core). Never changes any output byte.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the joint model to every gene in a counts table.
    Fit(FitCmd),
    /// Simulate genes from the generative model.
    Simulate(SimulateCmd),
    /// Rejection rates of the joint and single-source models over a scenario grid.
    Power(PowerCmd),
    /// Wall-clock time of one gene analysis by sample size.
    Bench(BenchCmd),
}

#[derive(Args)]
struct FitFlags {
    /// Convergence tolerance on the log-likelihood change per cycle.
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    /// Maximum coordinate-ascent cycles per fit.
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Samples need at least this many allele-specific reads (and at least one) to enter the ASE likelihood.
    #[arg(long, default_value_t = 0)]
    min_ase: u64,
}

impl FitFlags {
    fn config(&self) -> FitConfig {
        FitConfig {
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            min_ase_reads: self.min_ase,
            ..FitConfig::default()
        }
    }
}

#[derive(Args)]
struct FitCmd {
    /// Counts table (TSV).
    #[arg(long)]
    counts: PathBuf,
    /// Covariates table (TSV) with sample_id, kappa and numeric covariates.
    /// Without it every sample gets kappa = 1 and no covariates.
    #[arg(long)]
    covariates: Option<PathBuf>,
    /// Results table; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Genes with a lower mean total count are reported as low_expression.
    #[arg(long, default_value_t = 0.0)]
    min_total_mean: f64,
    #[command(flatten)]
    fit: FitFlags,
}

#[derive(Args)]
struct SimFlags {
    #[arg(long, default_value_t = 0.25)]
    bb_overdisp: f64,
    #[arg(long, default_value_t = 4.0 / 3.0)]
    nb_overdisp: f64,
    #[arg(long, default_value_t = 250.0)]
    mean_total: f64,
    #[arg(long, default_value_t = 0.10)]
    ase_fraction: f64,
    #[arg(long, default_value_t = 0.5)]
    maf: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl SimFlags {
    fn config(&self) -> SimConfig {
        SimConfig {
            bb_overdisp: self.bb_overdisp,
            nb_overdisp: self.nb_overdisp,
            mean_total: self.mean_total,
            ase_fraction: self.ase_fraction,
            maf: self.maf,
            seed: self.seed,
            ..SimConfig::default()
        }
    }
}

#[derive(Args)]
struct SimulateCmd {
    /// Samples per gene.
    #[arg(long = "n", default_value_t = 32)]
    n_samples: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    b0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    b1: f64,
    /// Number of genes; gene i is drawn with a seed derived from (seed, i).
    #[arg(long, default_value_t = 1)]
    genes: usize,
    /// Output counts table.
    #[arg(long)]
    counts: PathBuf,
    /// Output covariates table.
    #[arg(long)]
    covariates: PathBuf,
    #[command(flatten)]
    sim: SimFlags,
}

#[derive(Args)]
struct PowerCmd {
    /// Sample sizes, comma separated.
    #[arg(long = "n", value_delimiter = ',', default_values_t = [32])]
    sample_sizes: Vec<usize>,
    /// Effect pairs as b0:b1, comma separated. Defaults to the six published rows.
    #[arg(long, value_delimiter = ',', value_parser = parse_pair, allow_hyphen_values = true)]
    effects: Vec<(f64, f64)>,
    /// Replicates for the b0 = b1 = 0 row.
    #[arg(long, default_value_t = 2000)]
    null_replicates: usize,
    /// Replicates for every other row.
    #[arg(long, default_value_t = 1000)]
    replicates: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Power table; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-replicate estimates of the joint and single-effect fits.
    #[arg(long)]
    bias_out: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    bias_n: usize,
    #[arg(long, default_value_t = 500)]
    bias_replicates: usize,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    bias_b0: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    bias_b1: f64,
    #[command(flatten)]
    sim: SimFlags,
    #[command(flatten)]
    fit: FitFlags,
}

#[derive(Args)]
struct BenchCmd {
    /// Sample sizes, comma separated.
    #[arg(long = "n", value_delimiter = ',', default_values_t = [32, 64, 128, 256])]
    sample_sizes: Vec<usize>,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    b0: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    b1: f64,
    /// Simulated genes timed in each repeat.
    #[arg(long, default_value_t = 10)]
    genes: usize,
    /// Timed repeats per setting (after one untimed warm-up).
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Timing table; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    sim: SimFlags,
    #[command(flatten)]
    fit: FitFlags,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected b0:b1, got '{s}'"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"));
    Ok((parse(a)?, parse(b)?))
}

/// Usage errors exit with 2, everything else with 1.
enum Failure {
    Usage(String),
    Fatal(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Fatal(e)
    }
}

/// Bad parameter values surface from the library as domain errors.
fn classify(e: Error) -> Failure {
    match e {
        Error::Domain(msg) => Failure::Usage(msg),
        other => Failure::Fatal(other.into()),
    }
}

fn usage_check(config: &FitConfig) -> Result<(), Failure> {
    config.validate().map_err(classify)
}

fn open_out(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

/// Every sample in the counts table with kappa = 1 and no covariates.
fn unit_covariates(counts: &CountsTable) -> CovariatesTable {
    let mut seen = std::collections::HashSet::new();
    let rows = counts
        .rows
        .iter()
        .filter(|r| seen.insert(r.sample_id.clone()))
        .map(|r| CovariateRow {
            sample_id: r.sample_id.clone(),
            kappa: 1.0,
            values: vec![],
        })
        .collect();
    CovariatesTable {
        names: vec![],
        rows,
    }
}

fn cmd_fit(cmd: &FitCmd) -> Result<(), Failure> {
    let config = cmd.fit.config();
    usage_check(&config)?;
    if !(cmd.min_total_mean >= 0.0) {
        return Err(Failure::Usage(
            "--min-total-mean must be non-negative".into(),
        ));
    }
    let counts = parse_counts(&cmd.counts).map_err(anyhow::Error::from)?;
    let covariates = match &cmd.covariates {
        Some(p) => parse_covariates(p).map_err(anyhow::Error::from)?,
        None => unit_covariates(&counts),
    };
    let genes = build_genes(&counts, &covariates).map_err(anyhow::Error::from)?;
    let options = BatchOptions {
        fit: config,
        min_total_mean: cmd.min_total_mean,
    };
    let reports = fit_genes(&genes, &options).map_err(classify)?;
    let mut out = open_out(cmd.out.as_deref())?;
    write_results(&mut out, &reports).map_err(anyhow::Error::from)?;
    out.flush().context("cannot write results")?;
    Ok(())
}

fn cmd_simulate(cmd: &SimulateCmd) -> Result<(), Failure> {
    if cmd.genes == 0 {
        return Err(Failure::Usage("--genes must be at least 1".into()));
    }
    let base = SimConfig {
        n_samples: cmd.n_samples,
        ..cmd.sim.config()
    }
    .with_effects(cmd.b0, cmd.b1);
    base.validate().map_err(classify)?;
    let genes = (0..cmd.genes)
        .map(|i| {
            let config = base.clone().with_seed(derive_seed(base.seed, &[i as u64]));
            simulate_gene_seeded(&config, &format!("gene{}", i + 1))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(classify)?;
    let mut counts = create(&cmd.counts)?;
    let mut covariates = create(&cmd.covariates)?;
    write_simulated(&mut counts, &mut covariates, &genes).map_err(anyhow::Error::from)?;
    counts.flush().context("cannot write counts")?;
    covariates.flush().context("cannot write covariates")?;
    Ok(())
}

fn cmd_power(cmd: &PowerCmd) -> Result<(), Failure> {
    let fit = cmd.fit.config();
    usage_check(&fit)?;
    let grid = ScenarioGrid {
        sample_sizes: cmd.sample_sizes.clone(),
        effect_pairs: if cmd.effects.is_empty() {
            REFERENCE_EFFECTS.to_vec()
        } else {
            cmd.effects.clone()
        },
        null_replicates: cmd.null_replicates,
        power_replicates: cmd.replicates,
        alpha: cmd.alpha,
        base: cmd.sim.config(),
    };
    grid.validate().map_err(classify)?;
    let bias_config = cmd
        .sim
        .config()
        .with_n(cmd.bias_n)
        .with_effects(cmd.bias_b0, cmd.bias_b1);
    if cmd.bias_out.is_some() {
        bias_config.validate().map_err(classify)?;
        if cmd.bias_replicates < 100 {
            return Err(Failure::Usage(
                "--bias-replicates must be at least 100".into(),
            ));
        }
    }

    let rows = run_power_grid(&grid, &fit).map_err(classify)?;
    let mut out = open_out(cmd.out.as_deref())?;
    write_power(&mut out, &rows).map_err(anyhow::Error::from)?;
    out.flush().context("cannot write power table")?;

    if let Some(path) = &cmd.bias_out {
        let bias =
            run_bias_experiment(&bias_config, cmd.bias_replicates, &fit).map_err(classify)?;
        let mut w = create(path)?;
        write_bias(&mut w, cmd.bias_n, (cmd.bias_b0, cmd.bias_b1), &bias, true)
            .map_err(anyhow::Error::from)?;
        w.flush().context("cannot write bias table")?;
    }
    Ok(())
}

fn cmd_bench(cmd: &BenchCmd) -> Result<(), Failure> {
    let fit = cmd.fit.config();
    usage_check(&fit)?;
    if cmd.sample_sizes.is_empty() {
        return Err(Failure::Usage("--n needs at least one sample size".into()));
    }
    let base = cmd.sim.config();
    for &n in &cmd.sample_sizes {
        base.clone().with_n(n).validate().map_err(classify)?;
    }
    let rows = run_timing_bench(
        &cmd.sample_sizes,
        &[(cmd.b0, cmd.b1)],
        cmd.genes,
        cmd.repeats,
        &base,
        &fit,
    )
    .map_err(classify)?;
    let mut out = open_out(cmd.out.as_deref())?;
    write_timing(&mut out, &rows).map_err(anyhow::Error::from)?;
    out.flush().context("cannot write timing table")?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Failure::Fatal(anyhow::anyhow!("cannot start worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Fit(c) => cmd_fit(c),
        Command::Simulate(c) => cmd_simulate(c),
        Command::Power(c) => cmd_power(c),
        Command::Bench(c) => cmd_bench(c),
    })
}

fn main() -> ExitCode {
    // clap exits with status 2 on its own usage errors.
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Fatal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
