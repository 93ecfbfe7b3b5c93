//! Evolutionary log-probabilities from a homolog alignment.
//!
//! Per column, every row contributes one count to its token (pad included),
//! counts are divided by the row count, and the resulting frequencies are
//! passed through a log-softmax. No sequence weighting or pseudocounts.

use crate::bio_io::AlignmentMatrix;
use crate::logits::{EvolutionaryLogits, LogitsError, LogitsMatrix};
use crate::vocab::Vocabulary;
use ndarray::Array2;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvoError {
    #[error("alignment has no rows")]
    EmptyAlignment,
    #[error(transparent)]
    Logits(#[from] LogitsError),
}

/// Per-column token frequencies, `L x 25`; every row sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct CountMatrix {
    data: Array2<f64>,
}

impl CountMatrix {
    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn get(&self, position: usize, token: usize) -> f64 {
        self.data[[position, token]]
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn to_csv(&self) -> String {
        LogitsMatrix::new(self.data.clone())
            .expect("frequencies are finite")
            .to_csv()
    }
}

pub fn build_count_matrix(alignment: &AlignmentMatrix) -> Result<CountMatrix, EvoError> {
    let n = alignment.rows();
    if n == 0 {
        return Err(EvoError::EmptyAlignment);
    }
    let mut counts = Array2::<f64>::zeros((alignment.cols(), Vocabulary::SIZE));
    for row in alignment.iter_rows() {
        for (i, &t) in row.iter().enumerate() {
            counts[[i, t as usize]] += 1.0;
        }
    }
    counts.mapv_inplace(|c| c / n as f64);
    Ok(CountMatrix { data: counts })
}

pub fn evo_logits(counts: &CountMatrix) -> Result<EvolutionaryLogits, EvoError> {
    let mut out = counts.data.clone();
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        if let Some(col) = row.iter().position(|v| !v.is_finite()) {
            return Err(LogitsError::NonFinite { row: i, col }.into());
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|c| (c - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|c| c - lse);
    }
    Ok(EvolutionaryLogits(LogitsMatrix::new(out)?))
}

/// Counts then log-softmax in one call.
pub fn alignment_logits(alignment: &AlignmentMatrix) -> Result<EvolutionaryLogits, EvoError> {
    evo_logits(&build_count_matrix(alignment)?)
}
