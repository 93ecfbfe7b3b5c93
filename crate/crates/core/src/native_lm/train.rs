use super::config::{ModelConfig, TrainOptions};
use super::model::{backward, forward_cached};
use super::params::ModelParams;
use super::ModelError;
use crate::bio_io::ResidueSequence;
use crate::struct_tok::StructureTokenSequence;
use crate::vocab::{Token, Vocabulary};
use ndarray::Array2;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One training pair: residues and their structure tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub sequence: ResidueSequence,
    pub structure: StructureTokenSequence,
}

impl Example {
    pub fn new(sequence: ResidueSequence, structure: StructureTokenSequence) -> Result<Self, ModelError> {
        if sequence.len() != structure.len() {
            return Err(ModelError::LengthMismatch {
                residues: sequence.len(),
                structure: structure.len(),
            });
        }
        Ok(Self { sequence, structure })
    }
}

#[derive(Debug, Clone)]
pub struct LossAndGrads {
    pub loss: f64,
    pub grads: ModelParams,
    /// Number of masked positions the loss averages over.
    pub masked: usize,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub params: ModelParams,
    /// Masked-LM loss at each step, before that step's update.
    pub losses: Vec<f64>,
}

impl TrainReport {
    pub fn initial_loss(&self) -> f64 {
        self.losses.first().copied().unwrap_or(f64::NAN)
    }

    pub fn final_loss(&self) -> f64 {
        self.losses.last().copied().unwrap_or(f64::NAN)
    }
}

fn check_rate(mask_rate: f64) -> Result<(), ModelError> {
    if mask_rate > 0.0 && mask_rate < 1.0 {
        Ok(())
    } else {
        Err(ModelError::MaskRate(mask_rate))
    }
}

/// `max(1, round(rate * len))` distinct positions, sorted.
pub fn select_masks(len: usize, mask_rate: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    let n = ((mask_rate * len as f64).round() as usize).clamp(1, len);
    let mut picked = index::sample(rng, len, n).into_vec();
    picked.sort_unstable();
    picked
}

/// Mean negative log-probability of `targets[p]` at each position `p`.
pub fn masked_cross_entropy(logprobs: &Array2<f64>, positions: &[usize], targets: &[Token]) -> f64 {
    let total: f64 = positions.iter().map(|&p| -logprobs[[p, targets[p] as usize]]).sum();
    total / positions.len() as f64
}

/// Masks positions of each example (seeded), runs the model and returns the
/// mean cross-entropy at masked positions with gradients for every tensor.
pub fn masked_lm_loss(
    batch: &[Example],
    params: &ModelParams,
    mask_rate: f64,
    seed: u64,
) -> Result<LossAndGrads, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    check_rate(mask_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let masks: Vec<Vec<usize>> = batch
        .iter()
        .map(|ex| select_masks(ex.sequence.len(), mask_rate, &mut rng))
        .collect();
    let masked: usize = masks.iter().map(Vec::len).sum();
    if masked == 0 {
        return Err(ModelError::EmptyBatch);
    }

    let mut grads = params.zeros_like();
    let mut loss = 0.0;
    for (ex, positions) in batch.iter().zip(&masks) {
        let targets = ex.sequence.tokens();
        let mut input = targets.to_vec();
        for &p in positions {
            input[p] = Vocabulary::MASK;
        }
        let cache = forward_cached(params, &input, &ex.structure.tokens)?;
        loss += masked_cross_entropy(&cache.logprobs, positions, targets) * positions.len() as f64;
        let mut d_logits = Array2::zeros(cache.logprobs.dim());
        for &p in positions {
            let mut row = d_logits.row_mut(p);
            row.assign(&cache.logprobs.row(p).mapv(f64::exp));
            row[targets[p] as usize] -= 1.0;
            row /= masked as f64;
        }
        backward(params, &cache, &d_logits, &mut grads);
    }
    Ok(LossAndGrads {
        loss: loss / masked as f64,
        grads,
        masked,
    })
}

/// Deterministic toy corpus in which each structure token favours two
/// residues, so the masked-LM objective has learnable signal.
pub fn synthetic_corpus(sequences: usize, length: usize, struct_vocab: usize, seed: u64) -> Vec<Example> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = struct_vocab.max(1) as u32;
    (0..sequences)
        .map(|_| {
            let structure: Vec<u32> = (0..length).map(|_| rng.random_range(0..k)).collect();
            let residues: Vec<Token> = structure
                .iter()
                .map(|&t| {
                    if rng.random::<f64>() < 0.85 {
                        ((3 * t as usize + rng.random_range(0..2)) % Vocabulary::NUM_AMINO_ACIDS) as Token
                    } else {
                        rng.random_range(0..Vocabulary::NUM_AMINO_ACIDS) as Token
                    }
                })
                .collect();
            Example {
                sequence: ResidueSequence::from_tokens(residues).expect("amino-acid tokens"),
                structure: StructureTokenSequence { tokens: structure },
            }
        })
        .collect()
}

fn step_seed(seed: u64, step: usize) -> u64 {
    seed ^ (step as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct Adam {
    m: ModelParams,
    v: ModelParams,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(params: &ModelParams) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    fn update(&mut self, params: &mut ModelParams, grads: &ModelParams, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let tensors = params.tensors_mut().into_iter().zip(grads.tensors());
        let state = self.m.tensors_mut().into_iter().zip(self.v.tensors_mut());
        for (((_, p), (_, g)), ((_, m), (_, v))) in tensors.zip(state) {
            ndarray::Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
                *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
            });
        }
    }
}

/// Full-batch training from a seeded initialization with Adam at a fixed
/// learning rate. Each step draws a fresh mask from the config seed.
pub fn train_toy(corpus: &[Example], config: &ModelConfig, options: &TrainOptions) -> Result<TrainReport, ModelError> {
    if corpus.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    let mut params = ModelParams::init(config)?;
    let mut opt = Adam::new(&params);
    let mut losses = Vec::with_capacity(options.steps);
    for step in 0..options.steps {
        let out = masked_lm_loss(corpus, &params, config.mask_rate, step_seed(config.seed, step))?;
        if !out.loss.is_finite() {
            return Err(ModelError::Diverged { step, loss: out.loss });
        }
        log::debug!("step {step}: loss {:.5}", out.loss);
        losses.push(out.loss);
        opt.update(&mut params, &out.grads, options.learning_rate);
        if !params.is_finite() {
            return Err(ModelError::Diverged { step, loss: f64::NAN });
        }
    }
    Ok(TrainReport { params, losses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn tiny() -> ModelConfig {
        ModelConfig {
            head_dim: 3,
            heads: 2,
            layers: 2,
            struct_vocab: 5,
            rel_window: 2,
            ffn_dim: 7,
            mask_rate: 0.3,
            init_std: 0.4,
            seed: 9,
            ..Default::default()
        }
    }

    fn corpus() -> Vec<Example> {
        [
            ("MKTAYIAK", [0, 1, 2, 3, 4, 0, 1, 2]),
            ("GAVLIPFW", [4, 3, 2, 1, 0, 4, 3, 2]),
        ]
        .iter()
        .map(|(s, t)| {
            Example::new(
                ResidueSequence::from_letters(s).unwrap(),
                StructureTokenSequence { tokens: t.to_vec() },
            )
            .unwrap()
        })
        .collect()
    }

    #[test]
    fn mask_count_and_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(select_masks(10, 0.15, &mut rng).len(), 2);
        assert_eq!(select_masks(3, 0.01, &mut rng).len(), 1);
        let m = select_masks(40, 0.5, &mut rng);
        assert_eq!(m.len(), 20);
        assert!(m.windows(2).all(|w| w[0] < w[1]) && *m.last().unwrap() < 40);
    }

    #[test]
    fn cross_entropy_floor_and_uniform() {
        let targets = [3u8, 7, 1];
        let mut exact = Array2::from_elem((3, 25), f64::NEG_INFINITY);
        for (i, &t) in targets.iter().enumerate() {
            exact[[i, t as usize]] = 0.0;
        }
        assert_eq!(masked_cross_entropy(&exact, &[0, 2], &targets), 0.0);
        let uniform = Array2::from_elem((3, 25), -(25f64.ln()));
        assert_abs_diff_eq!(
            masked_cross_entropy(&uniform, &[0, 1, 2], &targets),
            25f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn zero_head_loss_is_ln25() {
        let mut p = ModelParams::init(&tiny()).unwrap();
        p.head_w.fill(0.0);
        let out = masked_lm_loss(&corpus(), &p, 0.3, 4).unwrap();
        assert_abs_diff_eq!(out.loss, 25f64.ln(), epsilon = 1e-12);
        assert_eq!(out.masked, 4);
    }

    #[test]
    fn loss_errors() {
        let p = ModelParams::init(&tiny()).unwrap();
        assert!(matches!(masked_lm_loss(&[], &p, 0.3, 0), Err(ModelError::EmptyBatch)));
        assert!(matches!(
            masked_lm_loss(&corpus(), &p, 0.0, 0),
            Err(ModelError::MaskRate(_))
        ));
        assert!(matches!(
            masked_lm_loss(&corpus(), &p, 1.0, 0),
            Err(ModelError::MaskRate(_))
        ));
        assert!(matches!(
            train_toy(&[], &tiny(), &TrainOptions::default()),
            Err(ModelError::EmptyCorpus)
        ));
    }

    #[test]
    fn gradients_match_central_differences_for_every_tensor() {
        let cfg = tiny();
        let mut params = ModelParams::init(&cfg).unwrap();
        // non-trivial layer-norm affine parameters so their gradients are exercised
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for (name, t) in params.tensors_mut() {
            if name.contains("ln") || name.contains(".b") || name == "head.bias" {
                t.mapv_inplace(|v| v + rng.random_range(-0.3..0.3));
            }
        }
        let batch = corpus();
        let seed = 5;
        let analytic = masked_lm_loss(&batch, &params, cfg.mask_rate, seed).unwrap().grads;
        let eps = 1e-4;
        let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
        let mut checked = 0;
        for (ti, name) in names.iter().enumerate() {
            let shape = params.tensors()[ti].1.dim();
            for _ in 0..2 {
                let idx = (rng.random_range(0..shape.0), rng.random_range(0..shape.1));
                let eval = |delta: f64| {
                    let mut p = params.clone();
                    p.tensors_mut()[ti].1[idx] += delta;
                    masked_lm_loss(&batch, &p, cfg.mask_rate, seed).unwrap().loss
                };
                let fd = (eval(eps) - eval(-eps)) / (2.0 * eps);
                let an = analytic.tensors()[ti].1[idx];
                let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-6);
                assert!(
                    rel < 1e-3 || (an - fd).abs() < 1e-8,
                    "{name}{idx:?}: analytic {an:e} vs numeric {fd:e}"
                );
                checked += 1;
            }
        }
        assert!(checked >= 20);
    }

    #[test]
    fn training_is_deterministic_and_improves() {
        let cfg = tiny();
        let opts = TrainOptions {
            steps: 30,
            learning_rate: 1e-2,
        };
        let a = train_toy(&corpus(), &cfg, &opts).unwrap();
        let b = train_toy(&corpus(), &cfg, &opts).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.losses, b.losses);
        assert!(a.final_loss() < a.initial_loss());
    }

    #[test]
    fn divergence_reports_step() {
        let cfg = tiny();
        let opts = TrainOptions {
            steps: 3,
            learning_rate: f64::INFINITY,
        };
        match train_toy(&corpus(), &cfg, &opts) {
            Err(ModelError::Diverged { step, .. }) => assert!(step <= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
