//! L x V log-probability matrices and the roles they play in the pipeline.

use crate::vocab::Vocabulary;
use ndarray::{Array2, ArrayView1};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LogitsError {
    #[error("expected {expected} columns, found {found}")]
    Width { expected: usize, found: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("logits csv: {0}")]
    Csv(String),
}

/// Numerically stable log-softmax of one row.
pub fn log_softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    row.iter().map(|x| x - lse).collect()
}

/// Row-major `L x 25` matrix over the residue vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitsMatrix {
    data: Array2<f64>,
}

impl LogitsMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self, LogitsError> {
        if data.ncols() != Vocabulary::SIZE {
            return Err(LogitsError::Width {
                expected: Vocabulary::SIZE,
                found: data.ncols(),
            });
        }
        if let Some(((row, col), _)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(LogitsError::NonFinite { row, col });
        }
        Ok(Self { data })
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn get(&self, row: usize, token: usize) -> f64 {
        self.data[[row, token]]
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.row(i)
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.data
    }

    /// `sum_v exp(row[v])` for every row.
    pub fn row_exp_sums(&self) -> Vec<f64> {
        self.data
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|x| x.exp()).sum())
            .collect()
    }

    /// CSV with a header of vocabulary symbols, one row per position.
    pub fn to_csv(&self) -> String {
        let mut out = Vocabulary::symbols().join(",");
        out.push('\n');
        for row in self.data.rows() {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                first = false;
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, LogitsError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| LogitsError::Csv(e.to_string()))?.clone();
        let symbols: Vec<&str> = headers.iter().collect();
        if symbols != Vocabulary::symbols().as_slice() {
            return Err(LogitsError::Csv(
                "header must list the 25 vocabulary symbols in order".into(),
            ));
        }
        let mut values = Vec::new();
        let mut rows = 0;
        for rec in reader.records() {
            let rec = rec.map_err(|e| LogitsError::Csv(e.to_string()))?;
            for field in rec.iter() {
                values.push(
                    field
                        .parse::<f64>()
                        .map_err(|_| LogitsError::Csv(format!("row {}: bad value '{field}'", rows + 1)))?,
                );
            }
            rows += 1;
        }
        let data =
            Array2::from_shape_vec((rows, Vocabulary::SIZE), values).map_err(|e| LogitsError::Csv(e.to_string()))?;
        Self::new(data)
    }
}

/// Log-probabilities from the structure-aware language model.
#[derive(Debug, Clone, PartialEq)]
pub struct NativeLogits(pub LogitsMatrix);

/// Log-probabilities derived from homolog frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionaryLogits(pub LogitsMatrix);

impl std::ops::Deref for NativeLogits {
    type Target = LogitsMatrix;
    fn deref(&self) -> &LogitsMatrix {
        &self.0
    }
}

impl std::ops::Deref for EvolutionaryLogits {
    type Target = LogitsMatrix;
    fn deref(&self) -> &LogitsMatrix {
        &self.0
    }
}
