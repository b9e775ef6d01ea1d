//! Tab-separated file formats and per-gene batch fitting.
//!
//! All tables carry a header row; lines starting with `#` are comments.
//! Numbers are written with Rust's shortest round-trip formatting and missing
//! values as `NA`.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inference::{bh_qvalues, classify_direction, Direction};
use crate::model::{GeneData, Genotype, LikelihoodKind, Parent, SampleRecord};
use crate::optimizer::{analyze_gene, FitConfig};
use crate::simulate::{fitter_name, BiasRow, PowerRow, TimingRow};

pub const COUNTS_COLUMNS: [&str; 7] = [
    "gene_id",
    "sample_id",
    "total_count",
    "ase_total",
    "ase_hap1",
    "geno_class",
    "hap1_parent",
];

pub const RESULTS_COLUMNS: [&str; 16] = [
    "gene_id",
    "n",
    "n_informative",
    "b0_hat",
    "b1_hat",
    "bb_overdisp",
    "nb_overdisp",
    "loglik",
    "p_genetic",
    "p_poo",
    "q_genetic",
    "q_poo",
    "direction",
    "converged",
    "boundary",
    "status",
];

pub const POWER_COLUMNS: [&str; 9] = [
    "n",
    "b0",
    "b1",
    "fitter",
    "effect",
    "rejection_rate",
    "replicates",
    "alpha",
    "seed",
];

pub const BIAS_COLUMNS: [&str; 10] = [
    "n",
    "b0",
    "b1",
    "replicate",
    "seed",
    "b0_joint",
    "b1_joint",
    "b0_only",
    "b1_only",
    "failed",
];

pub const TIMING_COLUMNS: [&str; 8] = [
    "n",
    "b0",
    "b1",
    "genes",
    "repeats",
    "median_seconds",
    "min_seconds",
    "max_seconds",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CountsRow {
    pub gene_id: String,
    pub sample_id: String,
    pub total_count: u64,
    pub ase_total: u64,
    pub ase_hap1: u64,
    pub genotype: Genotype,
    pub hap1_parent: Parent,
    pub line: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CountsTable {
    pub rows: Vec<CountsRow>,
}

impl CountsTable {
    /// Gene ids in order of first appearance.
    pub fn gene_ids(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.rows
            .iter()
            .filter(|r| seen.insert(r.gene_id.as_str()))
            .map(|r| r.gene_id.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariateRow {
    pub sample_id: String,
    pub kappa: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CovariatesTable {
    pub names: Vec<String>,
    pub rows: Vec<CovariateRow>,
}

pub fn genotype_from_code(code: &str) -> Option<Genotype> {
    match code {
        "AA" => Some(Genotype::HomRef),
        "AB" => Some(Genotype::HetRefAlt),
        "BA" => Some(Genotype::HetAltRef),
        "BB" => Some(Genotype::HomAlt),
        _ => None,
    }
}

pub fn genotype_code(g: Genotype) -> &'static str {
    match g {
        Genotype::HomRef => "AA",
        Genotype::HetRefAlt => "AB",
        Genotype::HetAltRef => "BA",
        Genotype::HomAlt => "BB",
    }
}

pub fn parent_from_code(code: &str) -> Option<Parent> {
    match code {
        "paternal" => Some(Parent::Paternal),
        "maternal" => Some(Parent::Maternal),
        _ => None,
    }
}

pub fn parent_code(p: Parent) -> &'static str {
    match p {
        Parent::Paternal => "paternal",
        Parent::Maternal => "maternal",
    }
}

fn tsv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .comment(Some(b'#'))
        .has_headers(true)
        .flexible(false)
        .from_reader(reader)
}

fn parse_err(source: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: source.to_string(),
        line,
        message: message.into(),
    }
}

fn csv_err(source: &str, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(format!("{source}: {e}")),
        _ => parse_err(source, line, e.to_string()),
    }
}

fn header_index(source: &str, headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| parse_err(source, 1, format!("missing column `{name}`")))
}

fn parse_field<T: std::str::FromStr>(
    source: &str,
    line: u64,
    column: &str,
    raw: &str,
) -> Result<T> {
    raw.parse().map_err(|_| {
        parse_err(
            source,
            line,
            format!("column `{column}`: cannot parse `{raw}`"),
        )
    })
}

pub fn parse_counts(path: impl AsRef<Path>) -> Result<CountsTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_counts_reader(BufReader::new(file), &path.display().to_string())
}

pub fn parse_counts_reader<R: Read>(reader: R, source: &str) -> Result<CountsTable> {
    let mut rdr = tsv_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err(source, e))?.clone();
    let idx: Vec<usize> = COUNTS_COLUMNS
        .iter()
        .map(|c| header_index(source, &headers, c))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(source, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(idx[i]).unwrap_or("").trim();

        let gene_id = field(0).to_string();
        let sample_id = field(1).to_string();
        if gene_id.is_empty() || sample_id.is_empty() {
            return Err(parse_err(source, line, "empty gene_id or sample_id"));
        }
        let total_count: u64 = parse_field(source, line, COUNTS_COLUMNS[2], field(2))?;
        let ase_total: u64 = parse_field(source, line, COUNTS_COLUMNS[3], field(3))?;
        let ase_hap1: u64 = parse_field(source, line, COUNTS_COLUMNS[4], field(4))?;
        let genotype = genotype_from_code(field(5)).ok_or_else(|| {
            parse_err(
                source,
                line,
                format!(
                    "geno_class must be one of AA, AB, BA, BB; got `{}`",
                    field(5)
                ),
            )
        })?;
        let hap1_parent = parent_from_code(field(6)).ok_or_else(|| {
            parse_err(
                source,
                line,
                format!(
                    "hap1_parent must be paternal or maternal; got `{}`",
                    field(6)
                ),
            )
        })?;
        if ase_hap1 > ase_total {
            return Err(parse_err(
                source,
                line,
                format!("gene {gene_id}, sample {sample_id}: ase_hap1 ({ase_hap1}) exceeds ase_total ({ase_total})"),
            ));
        }
        if ase_total > total_count {
            return Err(parse_err(
                source,
                line,
                format!("gene {gene_id}, sample {sample_id}: ase_total ({ase_total}) exceeds total_count ({total_count})"),
            ));
        }
        if !seen.insert((gene_id.clone(), sample_id.clone())) {
            return Err(parse_err(
                source,
                line,
                format!("duplicate row for gene {gene_id}, sample {sample_id}"),
            ));
        }
        rows.push(CountsRow {
            gene_id,
            sample_id,
            total_count,
            ase_total,
            ase_hap1,
            genotype,
            hap1_parent,
            line,
        });
    }
    Ok(CountsTable { rows })
}

pub fn parse_covariates(path: impl AsRef<Path>) -> Result<CovariatesTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_covariates_reader(BufReader::new(file), &path.display().to_string())
}

pub fn parse_covariates_reader<R: Read>(reader: R, source: &str) -> Result<CovariatesTable> {
    let mut rdr = tsv_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err(source, e))?.clone();
    let sample_idx = header_index(source, &headers, "sample_id")?;
    let kappa_idx = header_index(source, &headers, "kappa")?;
    let cov_idx: Vec<usize> = (0..headers.len())
        .filter(|&i| i != sample_idx && i != kappa_idx)
        .collect();
    let names: Vec<String> = cov_idx.iter().map(|&i| headers[i].to_string()).collect();

    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(source, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let sample_id = record[sample_idx].trim().to_string();
        if sample_id.is_empty() {
            return Err(parse_err(source, line, "empty sample_id"));
        }
        let kappa: f64 = parse_field(source, line, "kappa", record[kappa_idx].trim())?;
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(parse_err(
                source,
                line,
                format!("kappa must be positive, got {kappa}"),
            ));
        }
        let values = cov_idx
            .iter()
            .zip(&names)
            .map(|(&i, name)| {
                let v: f64 = parse_field(source, line, name, record[i].trim())?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(parse_err(
                        source,
                        line,
                        format!("column `{name}`: non-finite value"),
                    ))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if !seen.insert(sample_id.clone()) {
            return Err(parse_err(
                source,
                line,
                format!("duplicate sample {sample_id}"),
            ));
        }
        rows.push(CovariateRow {
            sample_id,
            kappa,
            values,
        });
    }
    Ok(CovariatesTable { names, rows })
}

/// Joins counts with per-sample covariates into one [`GeneData`] per gene,
/// genes in first-seen order and samples in file order.
pub fn build_genes(counts: &CountsTable, covariates: &CovariatesTable) -> Result<Vec<GeneData>> {
    let by_sample: HashMap<&str, &CovariateRow> = covariates
        .rows
        .iter()
        .map(|r| (r.sample_id.as_str(), r))
        .collect();
    let mut used = HashSet::new();
    let mut order: Vec<String> = Vec::new();
    let mut grouped: HashMap<String, Vec<SampleRecord>> = HashMap::new();
    for row in &counts.rows {
        let cov = by_sample.get(row.sample_id.as_str()).ok_or_else(|| {
            Error::domain(format!(
                "sample {} (counts line {}) has no covariates row",
                row.sample_id, row.line
            ))
        })?;
        used.insert(row.sample_id.as_str());
        let record = SampleRecord {
            total: row.total_count,
            ase_total: row.ase_total,
            ase_hap1: row.ase_hap1,
            genotype: row.genotype,
            hap1_parent: row.hap1_parent,
            kappa: cov.kappa,
            covariates: cov.values.clone(),
        };
        grouped
            .entry(row.gene_id.clone())
            .or_insert_with(|| {
                order.push(row.gene_id.clone());
                Vec::new()
            })
            .push(record);
    }
    if let Some(extra) = covariates
        .rows
        .iter()
        .find(|r| !used.contains(r.sample_id.as_str()))
    {
        return Err(Error::domain(format!(
            "covariates list sample {} which has no counts",
            extra.sample_id
        )));
    }
    order
        .into_iter()
        .map(|gene| {
            let samples = grouped.remove(&gene).expect("grouped by gene");
            GeneData::new(gene, covariates.names.clone(), samples)
        })
        .collect()
}

/// Outcome code for one gene in a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneStatus {
    Ok,
    LowExpression,
    InsufficientData,
    SingularDesign,
    OptimizationFailed,
    InvalidInput,
}

impl GeneStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            GeneStatus::Ok => "ok",
            GeneStatus::LowExpression => "low_expression",
            GeneStatus::InsufficientData => "insufficient_data",
            GeneStatus::SingularDesign => "singular_design",
            GeneStatus::OptimizationFailed => "optimization_failed",
            GeneStatus::InvalidInput => "invalid_input",
        }
    }

    fn from_error(e: &Error) -> Self {
        match e {
            Error::InsufficientData(_) => GeneStatus::InsufficientData,
            Error::SingularDesign { .. } => GeneStatus::SingularDesign,
            Error::OptimizationFailed(_) | Error::NestingViolation { .. } => {
                GeneStatus::OptimizationFailed
            }
            _ => GeneStatus::InvalidInput,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneEstimates {
    pub b0_hat: f64,
    pub b1_hat: f64,
    /// `None` when no sample carries allele-specific reads.
    pub bb_overdisp: Option<f64>,
    pub nb_overdisp: f64,
    pub loglik: f64,
    pub p_genetic: f64,
    pub p_poo: f64,
    pub converged: bool,
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneReport {
    pub gene_id: String,
    pub n: usize,
    pub n_informative: usize,
    pub estimates: Option<GeneEstimates>,
    pub q_genetic: Option<f64>,
    pub q_poo: Option<f64>,
    pub status: GeneStatus,
}

impl GeneReport {
    pub fn direction(&self) -> Option<Direction> {
        self.estimates
            .as_ref()
            .and_then(|e| classify_direction(e.b1_hat).ok())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOptions {
    pub fit: FitConfig,
    /// Genes whose mean total count is below this are reported, not fitted.
    pub min_total_mean: f64,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            fit: FitConfig::default(),
            min_total_mean: 0.0,
        }
    }
}

fn fit_one(gene: &GeneData, options: &BatchOptions) -> GeneReport {
    let n_informative = gene.n_informative(options.fit.min_ase_reads);
    let mut report = GeneReport {
        gene_id: gene.gene_id().to_string(),
        n: gene.n_samples(),
        n_informative,
        estimates: None,
        q_genetic: None,
        q_poo: None,
        status: GeneStatus::Ok,
    };
    if gene.mean_total() < options.min_total_mean {
        report.status = GeneStatus::LowExpression;
        return report;
    }
    match analyze_gene(gene, LikelihoodKind::Joint, &options.fit) {
        Ok(fit) => {
            let p = &fit.full.params;
            report.estimates = Some(GeneEstimates {
                b0_hat: p.b0,
                b1_hat: p.b1,
                bb_overdisp: (n_informative > 0).then_some(p.bb_overdisp),
                nb_overdisp: p.nb_overdisp,
                loglik: fit.full.loglik,
                p_genetic: fit.genetic.p_value,
                p_poo: fit.poo.p_value,
                converged: fit.full.converged
                    && fit.null_genetic.converged
                    && fit.null_poo.converged,
                boundary: fit.full.boundary,
            });
        }
        Err(e) => report.status = GeneStatus::from_error(&e),
    }
    report
}

/// Fits every gene (in parallel on the current rayon pool) and computes
/// q-values across the genes that were fitted. Output order follows input.
pub fn fit_genes(genes: &[GeneData], options: &BatchOptions) -> Result<Vec<GeneReport>> {
    options.fit.validate()?;
    let mut reports: Vec<GeneReport> = genes.par_iter().map(|g| fit_one(g, options)).collect();
    let fitted: Vec<usize> = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| r.estimates.is_some())
        .map(|(i, _)| i)
        .collect();
    let est = |i: usize| reports[i].estimates.as_ref().expect("fitted");
    let qg = bh_qvalues(&fitted.iter().map(|&i| est(i).p_genetic).collect::<Vec<_>>())?;
    let qp = bh_qvalues(&fitted.iter().map(|&i| est(i).p_poo).collect::<Vec<_>>())?;
    for (k, &i) in fitted.iter().enumerate() {
        reports[i].q_genetic = Some(qg[k]);
        reports[i].q_poo = Some(qp[k]);
    }
    Ok(reports)
}

/// Shortest round-trip decimal; `NA` for NaN.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NA".to_string()
    } else {
        format!("{v}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "NA".to_string())
}

fn write_header<W: Write>(out: &mut W, columns: &[&str]) -> Result<()> {
    writeln!(out, "{}", columns.join("\t"))?;
    Ok(())
}

pub fn write_results<W: Write>(out: &mut W, reports: &[GeneReport]) -> Result<()> {
    write_header(out, &RESULTS_COLUMNS)?;
    for r in reports {
        let e = r.estimates.as_ref();
        let fields = [
            r.gene_id.clone(),
            r.n.to_string(),
            r.n_informative.to_string(),
            fmt_opt(e.map(|e| e.b0_hat)),
            fmt_opt(e.map(|e| e.b1_hat)),
            fmt_opt(e.and_then(|e| e.bb_overdisp)),
            fmt_opt(e.map(|e| e.nb_overdisp)),
            fmt_opt(e.map(|e| e.loglik)),
            fmt_opt(e.map(|e| e.p_genetic)),
            fmt_opt(e.map(|e| e.p_poo)),
            fmt_opt(r.q_genetic),
            fmt_opt(r.q_poo),
            r.direction().map_or("NA", Direction::as_str).to_string(),
            e.map_or("NA".to_string(), |e| e.converged.to_string()),
            e.map_or("NA".to_string(), |e| e.boundary.to_string()),
            r.status.as_str().to_string(),
        ];
        writeln!(out, "{}", fields.join("\t"))?;
    }
    Ok(())
}

/// Writes genes as a counts table plus a covariates table. All genes must
/// share sample count and covariate values per sample position; samples are
/// named `s1..sn`.
pub fn write_simulated<W1: Write, W2: Write>(
    counts: &mut W1,
    covariates: &mut W2,
    genes: &[GeneData],
) -> Result<()> {
    let first = genes
        .first()
        .ok_or_else(|| Error::domain("nothing to write"))?;
    if genes.iter().any(|g| g.n_samples() != first.n_samples()) {
        return Err(Error::domain(
            "all simulated genes must have the same sample count",
        ));
    }
    write_header(counts, &COUNTS_COLUMNS)?;
    for g in genes {
        for (k, s) in g.samples().iter().enumerate() {
            writeln!(
                counts,
                "{}\ts{}\t{}\t{}\t{}\t{}\t{}",
                g.gene_id(),
                k + 1,
                s.total,
                s.ase_total,
                s.ase_hap1,
                genotype_code(s.genotype),
                parent_code(s.hap1_parent)
            )?;
        }
    }
    let mut header = vec!["sample_id", "kappa"];
    header.extend(first.covariate_names().iter().map(String::as_str));
    write_header(covariates, &header)?;
    for (k, s) in first.samples().iter().enumerate() {
        let mut fields = vec![format!("s{}", k + 1), fmt_f64(s.kappa)];
        fields.extend(s.covariates.iter().map(|&c| fmt_f64(c)));
        writeln!(covariates, "{}", fields.join("\t"))?;
    }
    Ok(())
}

pub fn write_power<W: Write>(out: &mut W, rows: &[PowerRow]) -> Result<()> {
    write_header(out, &POWER_COLUMNS)?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.n,
            fmt_f64(r.b0),
            fmt_f64(r.b1),
            fitter_name(r.fitter),
            r.effect.name(),
            fmt_f64(r.rejection_rate),
            r.replicates,
            fmt_f64(r.alpha),
            r.seed
        )?;
    }
    Ok(())
}

pub fn write_bias<W: Write>(
    out: &mut W,
    n: usize,
    (b0, b1): (f64, f64),
    rows: &[BiasRow],
    header: bool,
) -> Result<()> {
    if header {
        write_header(out, &BIAS_COLUMNS)?;
    }
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            n,
            fmt_f64(b0),
            fmt_f64(b1),
            r.replicate,
            r.seed,
            fmt_f64(r.b0_joint),
            fmt_f64(r.b1_joint),
            fmt_f64(r.b0_only),
            fmt_f64(r.b1_only),
            r.failed
        )?;
    }
    Ok(())
}

pub fn write_timing<W: Write>(out: &mut W, rows: &[TimingRow]) -> Result<()> {
    write_header(out, &TIMING_COLUMNS)?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.n,
            fmt_f64(r.b0),
            fmt_f64(r.b1),
            r.genes,
            r.repeats,
            fmt_f64(r.median_seconds),
            fmt_f64(r.min_seconds),
            fmt_f64(r.max_seconds)
        )?;
    }
    Ok(())
}
