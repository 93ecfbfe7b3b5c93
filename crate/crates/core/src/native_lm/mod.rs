//! Toy-scale masked language model over residue tokens with disentangled
//! attention across residue content, structure tokens and relative
//! positions. Produces per-position native log-probabilities.
//!
//! Gradients are written by hand; everything runs in `f64` on the CPU.

mod attention;
mod config;
mod io;
mod model;
mod params;
mod train;

pub use attention::{disentangled_attention, relative_bucket, HeadAttention};
pub use config::{InferenceMode, ModelConfig, TrainOptions};
pub use io::{load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use model::{forward, native_logits};
pub use params::{LayerParams, ModelParams};
pub use train::{
    masked_cross_entropy, masked_lm_loss, select_masks, synthetic_corpus, train_toy, Example, LossAndGrads, TrainReport,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("sequence has {residues} residues but {structure} structure tokens")]
    LengthMismatch { residues: usize, structure: usize },
    #[error("{kind} token {token} at position {position} outside [0, {limit})")]
    TokenOutOfRange {
        kind: &'static str,
        token: usize,
        position: usize,
        limit: usize,
    },
    #[error("relative position table has {found} rows, expected {expected}")]
    RelativeTable { found: usize, expected: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("mask rate {0} outside (0, 1)")]
    MaskRate(f64),
    #[error("training diverged at step {step} (loss {loss})")]
    Diverged { step: usize, loss: f64 },
    #[error("not a model file (bad magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed model file: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
