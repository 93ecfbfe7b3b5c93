use super::ModelError;
use crate::vocab::Vocabulary;

/// Model hyperparameters. Hidden width is `heads * head_dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    /// Per-head width `d`; attention scores are scaled by `1/sqrt(5d)`.
    pub head_dim: usize,
    pub heads: usize,
    pub layers: usize,
    pub vocab: usize,
    /// Structure-token vocabulary (codebook size).
    pub struct_vocab: usize,
    /// Relative offsets are clipped to `[-w, w]`.
    pub rel_window: usize,
    pub ffn_dim: usize,
    pub mask_rate: f64,
    pub init_std: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            head_dim: 16,
            heads: 4,
            layers: 2,
            vocab: Vocabulary::SIZE,
            struct_vocab: 64,
            rel_window: 32,
            ffn_dim: 128,
            mask_rate: 0.15,
            init_std: 0.05,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn hidden(&self) -> usize {
        self.heads * self.head_dim
    }

    pub fn rel_buckets(&self) -> usize {
        2 * self.rel_window + 1
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("head_dim", self.head_dim),
            ("heads", self.heads),
            ("layers", self.layers),
            ("struct_vocab", self.struct_vocab),
            ("rel_window", self.rel_window),
            ("ffn_dim", self.ffn_dim),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::InvalidConfig(format!("{name} must be positive")));
        }
        if self.vocab != Vocabulary::SIZE {
            return Err(ModelError::InvalidConfig(format!(
                "vocab must be {}, got {}",
                Vocabulary::SIZE,
                self.vocab
            )));
        }
        if !(self.mask_rate > 0.0 && self.mask_rate < 1.0) {
            return Err(ModelError::MaskRate(self.mask_rate));
        }
        if !(self.init_std.is_finite() && self.init_std > 0.0) {
            return Err(ModelError::InvalidConfig("init_std must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub steps: usize,
    pub learning_rate: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            steps: 200,
            learning_rate: 1e-2,
        }
    }
}

/// How per-position log-probabilities are read out at scoring time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InferenceMode {
    /// One unmasked forward pass over the wild type.
    #[default]
    WildTypeMarginals,
    /// One pass per position with that position masked.
    MaskedMarginals,
}
