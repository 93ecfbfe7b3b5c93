use super::config::ModelConfig;
use super::ModelError;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Weights of one attention + feed-forward block. Vectors are stored as
/// `1 x n` matrices so every tensor shares one type.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub q_r: Array2<f64>,
    pub k_r: Array2<f64>,
    pub v_r: Array2<f64>,
    pub q_s: Array2<f64>,
    pub k_s: Array2<f64>,
    pub q_p: Array2<f64>,
    pub k_p: Array2<f64>,
    pub out: Array2<f64>,
    pub ln1_gamma: Array2<f64>,
    pub ln1_beta: Array2<f64>,
    pub ff_w1: Array2<f64>,
    pub ff_b1: Array2<f64>,
    pub ff_w2: Array2<f64>,
    pub ff_b2: Array2<f64>,
    pub ln2_gamma: Array2<f64>,
    pub ln2_beta: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub emb_residue: Array2<f64>,
    pub emb_structure: Array2<f64>,
    pub emb_relative: Array2<f64>,
    pub layers: Vec<LayerParams>,
    pub head_w: Array2<f64>,
    pub head_b: Array2<f64>,
}

impl LayerParams {
    fn zeros(config: &ModelConfig) -> Self {
        let d = config.hidden();
        let f = config.ffn_dim;
        let sq = || Array2::zeros((d, d));
        Self {
            q_r: sq(),
            k_r: sq(),
            v_r: sq(),
            q_s: sq(),
            k_s: sq(),
            q_p: sq(),
            k_p: sq(),
            out: sq(),
            ln1_gamma: Array2::zeros((1, d)),
            ln1_beta: Array2::zeros((1, d)),
            ff_w1: Array2::zeros((d, f)),
            ff_b1: Array2::zeros((1, f)),
            ff_w2: Array2::zeros((f, d)),
            ff_b2: Array2::zeros((1, d)),
            ln2_gamma: Array2::zeros((1, d)),
            ln2_beta: Array2::zeros((1, d)),
        }
    }

    pub(crate) fn named(&self) -> [(&'static str, &Array2<f64>); 16] {
        [
            ("attn.q_r", &self.q_r),
            ("attn.k_r", &self.k_r),
            ("attn.v_r", &self.v_r),
            ("attn.q_s", &self.q_s),
            ("attn.k_s", &self.k_s),
            ("attn.q_p", &self.q_p),
            ("attn.k_p", &self.k_p),
            ("attn.out", &self.out),
            ("ln1.gamma", &self.ln1_gamma),
            ("ln1.beta", &self.ln1_beta),
            ("ffn.w1", &self.ff_w1),
            ("ffn.b1", &self.ff_b1),
            ("ffn.w2", &self.ff_w2),
            ("ffn.b2", &self.ff_b2),
            ("ln2.gamma", &self.ln2_gamma),
            ("ln2.beta", &self.ln2_beta),
        ]
    }

    pub(crate) fn named_mut(&mut self) -> [(&'static str, &mut Array2<f64>); 16] {
        [
            ("attn.q_r", &mut self.q_r),
            ("attn.k_r", &mut self.k_r),
            ("attn.v_r", &mut self.v_r),
            ("attn.q_s", &mut self.q_s),
            ("attn.k_s", &mut self.k_s),
            ("attn.q_p", &mut self.q_p),
            ("attn.k_p", &mut self.k_p),
            ("attn.out", &mut self.out),
            ("ln1.gamma", &mut self.ln1_gamma),
            ("ln1.beta", &mut self.ln1_beta),
            ("ffn.w1", &mut self.ff_w1),
            ("ffn.b1", &mut self.ff_b1),
            ("ffn.w2", &mut self.ff_w2),
            ("ffn.b2", &mut self.ff_b2),
            ("ln2.gamma", &mut self.ln2_gamma),
            ("ln2.beta", &mut self.ln2_beta),
        ]
    }
}

impl ModelParams {
    /// All-zero tensors with the shapes implied by `config`.
    pub fn zeros(config: &ModelConfig) -> Self {
        let d = config.hidden();
        Self {
            config: *config,
            emb_residue: Array2::zeros((config.vocab, d)),
            emb_structure: Array2::zeros((config.struct_vocab, d)),
            emb_relative: Array2::zeros((config.rel_buckets(), d)),
            layers: (0..config.layers).map(|_| LayerParams::zeros(config)).collect(),
            head_w: Array2::zeros((d, config.vocab)),
            head_b: Array2::zeros((1, config.vocab)),
        }
    }

    /// Seeded initialization: weights ~ N(0, init_std), layer-norm gains 1,
    /// biases 0.
    pub fn init(config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut params = Self::zeros(config);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let normal = Normal::new(0.0, config.init_std).expect("validated std");
        for (name, t) in params.tensors_mut() {
            if name.ends_with("gamma") {
                t.fill(1.0);
            } else if name.ends_with(".beta") || name.ends_with(".b1") || name.ends_with(".b2") || name == "head.bias" {
                t.fill(0.0);
            } else {
                t.mapv_inplace(|_| normal.sample(&mut rng));
            }
        }
        Ok(params)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.config)
    }

    /// Every tensor with a stable dotted name, in serialization order.
    pub fn tensors(&self) -> Vec<(String, &Array2<f64>)> {
        let mut out = vec![
            ("emb.residue".to_string(), &self.emb_residue),
            ("emb.structure".to_string(), &self.emb_structure),
            ("emb.relative".to_string(), &self.emb_relative),
        ];
        for (i, layer) in self.layers.iter().enumerate() {
            out.extend(layer.named().into_iter().map(|(n, t)| (format!("layers.{i}.{n}"), t)));
        }
        out.push(("head.weight".to_string(), &self.head_w));
        out.push(("head.bias".to_string(), &self.head_b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Array2<f64>)> {
        let mut out = vec![
            ("emb.residue".to_string(), &mut self.emb_residue),
            ("emb.structure".to_string(), &mut self.emb_structure),
            ("emb.relative".to_string(), &mut self.emb_relative),
        ];
        for (i, layer) in self.layers.iter_mut().enumerate() {
            out.extend(
                layer
                    .named_mut()
                    .into_iter()
                    .map(|(n, t)| (format!("layers.{i}.{n}"), t)),
            );
        }
        out.push(("head.weight".to_string(), &mut self.head_w));
        out.push(("head.bias".to_string(), &mut self.head_b));
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}
