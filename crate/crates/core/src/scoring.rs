//! Blending native and evolutionary log-probabilities, and scoring mutants
//! by summed log-probability differences.

use crate::bio_io::MutantSpec;
use crate::logits::{EvolutionaryLogits, LogitsMatrix, NativeLogits};
use rayon::prelude::*;
use thiserror::Error;

/// Default retrieval ratio.
pub const DEFAULT_ALPHA: f64 = 0.8;

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error("logits shapes differ: native has {native} rows, evolutionary has {evo}")]
    ShapeMismatch { native: usize, evo: usize },
    #[error("alpha {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("mutant {index} ('{label}'): position {position} outside 1..={len}")]
    PositionOutOfRange {
        index: usize,
        label: String,
        position: usize,
        len: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlendedLogits {
    data: LogitsMatrix,
    alpha: f64,
}

impl BlendedLogits {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn matrix(&self) -> &LogitsMatrix {
        &self.data
    }

    /// Uses an arbitrary matrix directly (e.g. evolutionary logits alone).
    pub fn from_matrix(data: LogitsMatrix, alpha: f64) -> Self {
        Self { data, alpha }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitnessScore {
    pub mutant_label: String,
    pub value: f64,
}

pub fn check_alpha(alpha: f64) -> Result<f64, ScoringError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(alpha)
    } else {
        Err(ScoringError::AlphaOutOfRange(alpha))
    }
}

/// `(1 - alpha) * native + alpha * evo`, element-wise.
pub fn blend_logits(
    native: &NativeLogits,
    evo: &EvolutionaryLogits,
    alpha: f64,
) -> Result<BlendedLogits, ScoringError> {
    check_alpha(alpha)?;
    if native.data().dim() != evo.data().dim() {
        return Err(ScoringError::ShapeMismatch {
            native: native.len(),
            evo: evo.len(),
        });
    }
    let mut out = native.data().clone();
    out.zip_mut_with(evo.data(), |n, &e| *n = (1.0 - alpha) * *n + alpha * e);
    let data = LogitsMatrix::new(out).expect("convex combination of finite values");
    Ok(BlendedLogits { data, alpha })
}

fn score_at(logits: &BlendedLogits, mutant: &MutantSpec, index: usize) -> Result<FitnessScore, ScoringError> {
    let len = logits.data.len();
    let mut value = 0.0;
    for s in mutant.substitutions() {
        if s.position == 0 || s.position > len {
            return Err(ScoringError::PositionOutOfRange {
                index,
                label: mutant.label().to_string(),
                position: s.position,
                len,
            });
        }
        let row = s.position - 1;
        value += logits.data.get(row, s.to as usize) - logits.data.get(row, s.from as usize);
    }
    Ok(FitnessScore {
        mutant_label: mutant.label().to_string(),
        value,
    })
}

/// Sum over substitutions of `O[t][mutant] - O[t][wild type]`.
pub fn score_mutant(logits: &BlendedLogits, mutant: &MutantSpec) -> Result<FitnessScore, ScoringError> {
    score_at(logits, mutant, 0)
}

/// Scores every mutant in parallel; output order follows input order and
/// the first invalid mutant (lowest index) is reported.
pub fn score_batch(logits: &BlendedLogits, mutants: &[MutantSpec]) -> Result<Vec<FitnessScore>, ScoringError> {
    mutants
        .par_iter()
        .enumerate()
        .map(|(i, m)| score_at(logits, m, i))
        .collect()
}
