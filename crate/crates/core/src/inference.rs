//! Multiple-testing adjustment, imprinting direction, and chromosome-level
//! tests of whether imprinting direction is shared within chromosomes.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distributions::ln_choose;
use crate::error::{Error, Result};

/// Relative slack when comparing table probabilities against the observed one.
const PROB_TIE_TOL: f64 = 1e-7;

/// Tables with more configurations than this fall back to Monte Carlo.
pub const EXACT_TABLE_LIMIT: u64 = 1_000_000;
pub const MONTE_CARLO_DRAWS: usize = 100_000;
pub const MONTE_CARLO_SEED: u64 = 20_160_101;

/// Benjamini-Hochberg adjusted p-values, in input order.
pub fn bh_qvalues(pvals: &[f64]) -> Result<Vec<f64>> {
    if let Some(p) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::domain(format!("p-value {p} outside [0, 1]")));
    }
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| pvals[i].total_cmp(&pvals[j]).then(i.cmp(&j)));
    let mut q = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        running = running.min(pvals[i] * m as f64 / (rank + 1) as f64);
        q[i] = running.min(1.0);
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    PaternalHigher,
    MaternalHigher,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::PaternalHigher => "paternal",
            Direction::MaternalHigher => "maternal",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Positive `b1` raises the haplotype-1 share exactly when haplotype 1 is
/// paternal, so the paternal allele is the more expressed one.
pub fn classify_direction(b1_hat: f64) -> Result<Direction> {
    if !b1_hat.is_finite() {
        return Err(Error::domain(format!(
            "non-finite parent-of-origin estimate {b1_hat}"
        )));
    }
    if b1_hat > 0.0 {
        Ok(Direction::PaternalHigher)
    } else if b1_hat < 0.0 {
        Ok(Direction::MaternalHigher)
    } else {
        Err(Error::UndefinedDirection)
    }
}

fn hypergeom_ln(k: u64, row1: u64, row2: u64, col1: u64) -> f64 {
    ln_choose(row1, k) + ln_choose(row2, col1 - k) - ln_choose(row1 + row2, col1)
}

/// Two-sided Fisher exact test for `[[a, b], [c, d]]`: total probability of
/// all tables with the observed margins that are no more likely than the
/// observed one.
pub fn fisher_exact_2x2(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let (row1, row2, col1) = (a + b, c + d, a + c);
    let lo = col1.saturating_sub(row2);
    let hi = row1.min(col1);
    let observed = hypergeom_ln(a, row1, row2, col1);
    let cutoff = observed + PROB_TIE_TOL.ln_1p();
    let p: f64 = (lo..=hi)
        .map(|k| hypergeom_ln(k, row1, row2, col1))
        .filter(|&lp| lp <= cutoff)
        .map(f64::exp)
        .sum();
    p.min(1.0)
}

/// Number of `r x 2` tables with the given row totals and first-column total,
/// saturating at `cap + 1`.
fn count_tables(rows: &[u64], col1: u64, cap: u64) -> u64 {
    // ways[s] = number of ways to reach first-column sum s with the rows so far
    let mut ways = vec![0u64; col1 as usize + 1];
    ways[0] = 1;
    for &t in rows {
        let mut next = vec![0u64; col1 as usize + 1];
        for (s, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for k in 0..=t.min(col1 - s as u64) {
                let slot = &mut next[s + k as usize];
                *slot = slot.saturating_add(w).min(cap + 1);
            }
        }
        ways = next;
    }
    ways[col1 as usize]
}

fn table_ln_prob(first_col: &[u64], rows: &[u64], ln_norm: f64) -> f64 {
    first_col
        .iter()
        .zip(rows)
        .map(|(&k, &t)| ln_choose(t, k))
        .sum::<f64>()
        - ln_norm
}

fn enumerate_tables(rows: &[u64], col1: u64, f: &mut impl FnMut(&[u64])) {
    fn rec(
        rows: &[u64],
        suffix_cap: &[u64],
        idx: usize,
        left: u64,
        cur: &mut Vec<u64>,
        f: &mut impl FnMut(&[u64]),
    ) {
        if idx == rows.len() {
            if left == 0 {
                f(cur);
            }
            return;
        }
        let rest = suffix_cap[idx + 1];
        let lo = left.saturating_sub(rest);
        let hi = rows[idx].min(left);
        for k in lo..=hi {
            cur.push(k);
            rec(rows, suffix_cap, idx + 1, left - k, cur, f);
            cur.pop();
        }
    }
    let mut suffix_cap = vec![0u64; rows.len() + 1];
    for i in (0..rows.len()).rev() {
        suffix_cap[i] = suffix_cap[i + 1] + rows[i];
    }
    let mut cur = Vec::with_capacity(rows.len());
    rec(rows, &suffix_cap, 0, col1, &mut cur, f);
}

/// Fisher exact test (Freeman-Halton) on an `r x 2` table given as
/// `(first column, second column)` counts per row. Exact enumeration when the
/// table has at most [`EXACT_TABLE_LIMIT`] configurations, otherwise a seeded
/// Monte Carlo estimate with [`MONTE_CARLO_DRAWS`] draws.
pub fn fisher_exact_rx2(table: &[(u64, u64)]) -> f64 {
    let rows: Vec<u64> = table.iter().map(|&(a, b)| a + b).collect();
    let observed: Vec<u64> = table.iter().map(|&(a, _)| a).collect();
    let col1: u64 = observed.iter().sum();
    let total: u64 = rows.iter().sum();
    if total == 0 {
        return 1.0;
    }
    let ln_norm = ln_choose(total, col1);
    let obs_lp = table_ln_prob(&observed, &rows, ln_norm);
    let cutoff = obs_lp + PROB_TIE_TOL.ln_1p();

    if count_tables(&rows, col1, EXACT_TABLE_LIMIT) <= EXACT_TABLE_LIMIT {
        let mut p = 0.0;
        enumerate_tables(&rows, col1, &mut |cur| {
            let lp = table_ln_prob(cur, &rows, ln_norm);
            if lp <= cutoff {
                p += lp.exp();
            }
        });
        return p.min(1.0);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(MONTE_CARLO_SEED);
    let mut labels: Vec<bool> = (0..total).map(|i| i < col1).collect();
    let mut hits = 0usize;
    let mut cur = vec![0u64; rows.len()];
    for _ in 0..MONTE_CARLO_DRAWS {
        labels.shuffle(&mut rng);
        let mut offset = 0usize;
        for (slot, &t) in cur.iter_mut().zip(&rows) {
            *slot = labels[offset..offset + t as usize]
                .iter()
                .filter(|&&l| l)
                .count() as u64;
            offset += t as usize;
        }
        if table_ln_prob(&cur, &rows, ln_norm) <= cutoff {
            hits += 1;
        }
    }
    (hits + 1) as f64 / (MONTE_CARLO_DRAWS + 1) as f64
}

/// Imprinted-gene counts on one chromosome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChromosomeSummary {
    pub chrom: String,
    pub paternal_count: u64,
    pub total_count: u64,
}

impl ChromosomeSummary {
    pub fn new(chrom: impl Into<String>, paternal_count: u64, total_count: u64) -> Result<Self> {
        if paternal_count > total_count {
            return Err(Error::domain(format!(
                "paternal count {paternal_count} exceeds total {total_count}"
            )));
        }
        Ok(Self {
            chrom: chrom.into(),
            paternal_count,
            total_count,
        })
    }

    pub fn maternal_count(&self) -> u64 {
        self.total_count - self.paternal_count
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionConsistency {
    /// Heterogeneity of the paternal share across chromosomes with at least
    /// two genes; `None` when fewer than two chromosomes qualify.
    pub overall_p: Option<f64>,
    /// One chromosome against all others pooled; `None` below `min_genes`.
    pub per_chromosome: Vec<(String, Option<f64>)>,
}

pub fn direction_consistency_test(
    summaries: &[ChromosomeSummary],
    min_genes: u64,
) -> Result<DirectionConsistency> {
    if summaries.is_empty() {
        return Err(Error::domain("no chromosome summaries"));
    }
    if min_genes < 2 {
        return Err(Error::domain(format!(
            "min_genes must be at least 2, got {min_genes}"
        )));
    }
    if let Some(s) = summaries.iter().find(|s| s.paternal_count > s.total_count) {
        return Err(Error::domain(format!(
            "chromosome {}: paternal count exceeds total",
            s.chrom
        )));
    }

    let eligible: Vec<(u64, u64)> = summaries
        .iter()
        .filter(|s| s.total_count >= 2)
        .map(|s| (s.paternal_count, s.maternal_count()))
        .collect();
    let overall_p = (eligible.len() >= 2).then(|| fisher_exact_rx2(&eligible));

    let pat_all: u64 = summaries.iter().map(|s| s.paternal_count).sum();
    let mat_all: u64 = summaries
        .iter()
        .map(ChromosomeSummary::maternal_count)
        .sum();
    let per_chromosome = summaries
        .iter()
        .map(|s| {
            let p = (s.total_count >= min_genes).then(|| {
                fisher_exact_2x2(
                    s.paternal_count,
                    s.maternal_count(),
                    pat_all - s.paternal_count,
                    mat_all - s.maternal_count(),
                )
            });
            (s.chrom.clone(), p)
        })
        .collect();
    Ok(DirectionConsistency {
        overall_p,
        per_chromosome,
    })
}

/// Test results for one gene.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneTestResult {
    pub gene_id: String,
    pub b0_hat: f64,
    pub b1_hat: f64,
    pub p_genetic: f64,
    pub p_poo: f64,
    pub q_genetic: f64,
    pub q_poo: f64,
    pub direction: Option<Direction>,
    pub n_informative: usize,
    pub converged: bool,
    pub boundary: bool,
}

/// Fills `q_genetic` and `q_poo` across all results.
pub fn assign_qvalues(results: &mut [GeneTestResult]) -> Result<()> {
    let qg = bh_qvalues(&results.iter().map(|r| r.p_genetic).collect::<Vec<_>>())?;
    let qp = bh_qvalues(&results.iter().map(|r| r.p_poo).collect::<Vec<_>>())?;
    for ((r, g), p) in results.iter_mut().zip(qg).zip(qp) {
        r.q_genetic = g;
        r.q_poo = p;
    }
    Ok(())
}

/// Paternal / total imprinted-gene counts per chromosome among genes whose
/// parent-of-origin q-value is below `q_cutoff`, in first-seen order.
pub fn summarize_by_chromosome(
    genes: &[(String, Direction, f64)],
    q_cutoff: f64,
) -> Vec<ChromosomeSummary> {
    let mut out: Vec<ChromosomeSummary> = Vec::new();
    for (chrom, dir, q) in genes {
        let idx = match out.iter().position(|s| &s.chrom == chrom) {
            Some(i) => i,
            None => {
                out.push(ChromosomeSummary {
                    chrom: chrom.clone(),
                    paternal_count: 0,
                    total_count: 0,
                });
                out.len() - 1
            }
        };
        if *q < q_cutoff {
            out[idx].total_count += 1;
            if *dir == Direction::PaternalHigher {
                out[idx].paternal_count += 1;
            }
        }
    }
    out
}
