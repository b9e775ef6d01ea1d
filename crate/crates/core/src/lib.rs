//! Joint estimation of additive genetic (cis-eQTL) and parent-of-origin
//! effects on gene expression from total read counts (negative binomial)
//! and allele-specific read counts (beta-binomial).
//!
//! The crate is organized bottom-up:
//!
//! - [`distributions`]: log-pmfs and samplers.
//! - [`model`]: per-gene data, design codes and the joint likelihood.
//! - [`optimizer`]: coordinate-ascent maximum likelihood and LRTs.
//! - [`inference`]: q-values, imprinting direction, chromosome-level tests.
//! - [`simulate`]: the generative model and simulation harnesses.
//! - [`io`]: TSV formats and batch fitting across genes.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod inference;
pub mod io;
pub mod model;
pub mod optimizer;
pub mod simulate;

pub use error::{Error, Result};
pub use inference::{Direction, GeneTestResult};
pub use model::{GeneData, Genotype, LikelihoodKind, ModelParams, Parent, SampleRecord};
pub use optimizer::{
    analyze_gene, fit, fit_from, FitConfig, FitResult, GeneFit, LrtResult, ModelSpec,
};
pub use simulate::{PowerRow, ScenarioGrid, SimConfig};
