//! Benchmark protocol: per-assay rank correlation, grouped averaging,
//! bootstrap spread, per-assay model ranks and the blend-ratio sweep.

mod aggregate;
mod ranks;
mod spearman;
mod sweep;

pub use aggregate::{
    aggregate, bootstrap_std, bootstrap_std_mutants, evaluate_assays, run_benchmark, AssayPredictions, AssayResult,
    BenchmarkOptions, BenchmarkReport, BootstrapScheme, GroupBy,
};
pub use ranks::{rank_summary, RankHistogram};
pub use spearman::{average_ranks, spearman, SpearmanResult};
pub use sweep::{alpha_sweep, subsample_assays, subsample_indices, SweepAssay, SweepOptions, SweepRow};

use crate::scoring::ScoringError;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {pred} predictions vs {truth} ground-truth values")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("need at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("rank correlation undefined: {0} input is constant")]
    Undefined(&'static str),
    #[error("no assays to evaluate")]
    Empty,
    #[error("duplicate assay '{0}'")]
    DuplicateAssay(String),
    #[error("assay '{assay}': {source}")]
    Assay {
        assay: String,
        #[source]
        source: Box<EvalError>,
    },
    #[error("model '{model}' has no score for assay '{assay}'")]
    MissingCell { model: String, assay: String },
    #[error("replicate count must be at least 1")]
    NoReplicates,
    #[error("subsample fraction {0} outside (0, 1]")]
    Subsample(f64),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

impl EvalError {
    pub(crate) fn in_assay(self, assay: &str) -> Self {
        EvalError::Assay {
            assay: assay.to_string(),
            source: Box::new(self),
        }
    }
}
