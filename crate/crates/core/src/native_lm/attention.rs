use super::config::ModelConfig;
use super::params::LayerParams;
use super::ModelError;
use ndarray::{s, Array2, ArrayView2, Axis};

type Mat = Array2<f64>;

/// Index of the clipped offset `i - j` in a table of `2w + 1` rows.
pub fn relative_bucket(i: usize, j: usize, w: usize) -> usize {
    let w = w as i64;
    let offset = (i as i64 - j as i64).clamp(-w, w);
    (offset + w) as usize
}

/// One head's attention over a sequence.
#[derive(Debug, Clone)]
pub struct HeadAttention {
    /// Unscaled scores, `L x L`.
    pub scores: Mat,
    /// Row-stochastic weights, `L x L`.
    pub weights: Mat,
    /// Weighted residue values, `L x head_dim`.
    pub output: Mat,
}

/// Full-width projections of residue states, structure embeddings and the
/// relative-position table for one layer.
#[derive(Debug, Clone)]
pub(crate) struct Projections {
    pub q_r: Mat,
    pub k_r: Mat,
    pub v_r: Mat,
    pub q_s: Mat,
    pub k_s: Mat,
    pub q_p: Mat,
    pub k_p: Mat,
}

impl Projections {
    pub fn new(h: &Mat, s: &Mat, p: &Mat, layer: &LayerParams) -> Self {
        Self {
            q_r: h.dot(&layer.q_r),
            k_r: h.dot(&layer.k_r),
            v_r: h.dot(&layer.v_r),
            q_s: s.dot(&layer.q_s),
            k_s: s.dot(&layer.k_s),
            q_p: p.dot(&layer.q_p),
            k_p: p.dot(&layer.k_p),
        }
    }
}

fn head_cols(m: &Mat, head: usize, d: usize) -> ArrayView2<'_, f64> {
    m.slice(s![.., head * d..(head + 1) * d])
}

fn row_dot(a: ArrayView2<f64>, i: usize, b: ArrayView2<f64>, j: usize) -> f64 {
    a.row(i).dot(&b.row(j))
}

/// Raw scores for one head: the five content/structure/position terms that
/// involve residue content on at least one side.
pub(crate) fn head_scores(pr: &Projections, head: usize, d: usize, w: usize) -> Mat {
    let q_r = head_cols(&pr.q_r, head, d);
    let k_r = head_cols(&pr.k_r, head, d);
    let q_s = head_cols(&pr.q_s, head, d);
    let k_s = head_cols(&pr.k_s, head, d);
    let q_p = head_cols(&pr.q_p, head, d);
    let k_p = head_cols(&pr.k_p, head, d);
    let mut scores = q_r.dot(&k_r.t()) + q_r.dot(&k_s.t()) + q_s.dot(&k_r.t());
    let l = scores.nrows();
    for i in 0..l {
        for j in 0..l {
            scores[[i, j]] +=
                row_dot(q_r, i, k_p, relative_bucket(j, i, w)) + row_dot(q_p, relative_bucket(i, j, w), k_r, j);
        }
    }
    scores
}

pub(crate) fn score_scale(d: usize) -> f64 {
    1.0 / (5.0 * d as f64).sqrt()
}

pub(crate) fn softmax_rows(x: &Mat) -> Mat {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

pub(crate) fn head_forward(pr: &Projections, head: usize, d: usize, w: usize) -> HeadAttention {
    let scores = head_scores(pr, head, d, w);
    let weights = softmax_rows(&(&scores * score_scale(d)));
    let output = weights.dot(&head_cols(&pr.v_r, head, d));
    HeadAttention {
        scores,
        weights,
        output,
    }
}

pub(crate) fn check_inputs(h: &Mat, s: &Mat, p: &Mat, config: &ModelConfig) -> Result<(), ModelError> {
    if h.nrows() != s.nrows() {
        return Err(ModelError::LengthMismatch {
            residues: h.nrows(),
            structure: s.nrows(),
        });
    }
    if p.nrows() != config.rel_buckets() {
        return Err(ModelError::RelativeTable {
            found: p.nrows(),
            expected: config.rel_buckets(),
        });
    }
    let width = config.hidden();
    for (what, m) in [("residue", h), ("structure", s), ("relative", p)] {
        if m.ncols() != width {
            return Err(ModelError::InvalidConfig(format!(
                "{what} states have width {}, expected {width}",
                m.ncols()
            )));
        }
    }
    Ok(())
}

/// Attention of a single head given residue states `h`, structure
/// embeddings `s` and the relative-position table `p`.
pub fn disentangled_attention(
    h: &Mat,
    s: &Mat,
    p: &Mat,
    layer: &LayerParams,
    head: usize,
    config: &ModelConfig,
) -> Result<HeadAttention, ModelError> {
    check_inputs(h, s, p, config)?;
    if head >= config.heads {
        return Err(ModelError::InvalidConfig(format!(
            "head {head} out of range for {} heads",
            config.heads
        )));
    }
    let pr = Projections::new(h, s, p, layer);
    Ok(head_forward(&pr, head, config.head_dim, config.rel_window))
}

/// Gradients of the projected quantities for one layer.
pub(crate) struct ProjectionGrads {
    pub q_r: Mat,
    pub k_r: Mat,
    pub v_r: Mat,
    pub q_s: Mat,
    pub k_s: Mat,
    pub q_p: Mat,
    pub k_p: Mat,
}

impl ProjectionGrads {
    pub fn zeros(l: usize, t: usize, width: usize) -> Self {
        let z = |n| Array2::zeros((n, width));
        Self {
            q_r: z(l),
            k_r: z(l),
            v_r: z(l),
            q_s: z(l),
            k_s: z(l),
            q_p: z(t),
            k_p: z(t),
        }
    }
}

/// Backpropagates `d_out` (gradient of one head's output) into `grads`.
pub(crate) fn head_backward(
    pr: &Projections,
    att: &HeadAttention,
    d_out: ArrayView2<f64>,
    head: usize,
    d: usize,
    w: usize,
    grads: &mut ProjectionGrads,
) {
    let cols = s![.., head * d..(head + 1) * d];
    let v_r = head_cols(&pr.v_r, head, d);
    let a = &att.weights;

    let mut dv = grads.v_r.slice_mut(cols);
    dv += &a.t().dot(&d_out);

    let da = d_out.dot(&v_r.t());
    let inner = (&da * a).sum_axis(Axis(1)).insert_axis(Axis(1));
    let g = (&da - &inner) * a * score_scale(d);

    let q_r = head_cols(&pr.q_r, head, d);
    let k_r = head_cols(&pr.k_r, head, d);
    let q_s = head_cols(&pr.q_s, head, d);
    let k_s = head_cols(&pr.k_s, head, d);
    let q_p = head_cols(&pr.q_p, head, d);
    let k_p = head_cols(&pr.k_p, head, d);

    let mut dq_r = g.dot(&k_r) + g.dot(&k_s);
    let mut dk_r = g.t().dot(&q_r) + g.t().dot(&q_s);
    let dk_s = g.t().dot(&q_r);
    let dq_s = g.dot(&k_r);
    let mut dq_p: Mat = Array2::zeros((q_p.nrows(), d));
    let mut dk_p: Mat = Array2::zeros((k_p.nrows(), d));

    let l = g.nrows();
    for i in 0..l {
        for j in 0..l {
            let gij = g[[i, j]];
            if gij == 0.0 {
                continue;
            }
            let b_ji = relative_bucket(j, i, w);
            let b_ij = relative_bucket(i, j, w);
            dq_r.row_mut(i).scaled_add(gij, &k_p.row(b_ji));
            dk_p.row_mut(b_ji).scaled_add(gij, &q_r.row(i));
            dq_p.row_mut(b_ij).scaled_add(gij, &k_r.row(j));
            dk_r.row_mut(j).scaled_add(gij, &q_p.row(b_ij));
        }
    }

    let add = |target: &mut Mat, src: &Mat| {
        let mut view = target.slice_mut(cols);
        view += src;
    };
    add(&mut grads.q_r, &dq_r);
    add(&mut grads.k_r, &dk_r);
    add(&mut grads.k_s, &dk_s);
    add(&mut grads.q_s, &dq_s);
    add(&mut grads.q_p, &dq_p);
    add(&mut grads.k_p, &dk_p);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::native_lm::ModelParams;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_config(heads: usize, d: usize, w: usize) -> ModelConfig {
        ModelConfig {
            head_dim: d,
            heads,
            layers: 1,
            struct_vocab: 4,
            rel_window: w,
            ffn_dim: 4,
            ..Default::default()
        }
    }

    fn random_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
        Array2::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0))
    }

    fn random_layer(rng: &mut ChaCha8Rng, cfg: &ModelConfig) -> LayerParams {
        let mut p = ModelParams::zeros(cfg);
        for (_, t) in p.layers[0].named_mut() {
            let (r, c) = t.dim();
            *t = random_mat(rng, r, c);
        }
        p.layers.remove(0)
    }

    /// Builds each position's stacked {content, structure, position} query
    /// and key vectors, forms every pairwise block product and keeps the
    /// five retained blocks.
    fn oracle_scores(h: &Mat, s: &Mat, p: &Mat, layer: &LayerParams, head: usize, d: usize, w: usize) -> Mat {
        let proj = |x: &Mat, m: &Mat| x.dot(m).slice(s![.., head * d..(head + 1) * d]).to_owned();
        let (qr, kr) = (proj(h, &layer.q_r), proj(h, &layer.k_r));
        let (qs, ks) = (proj(s, &layer.q_s), proj(s, &layer.k_s));
        let (qp, kp) = (proj(p, &layer.q_p), proj(p, &layer.k_p));
        let l = h.nrows();
        let mut out = Array2::zeros((l, l));
        for i in 0..l {
            for j in 0..l {
                let b_ij = relative_bucket(i, j, w);
                let b_ji = relative_bucket(j, i, w);
                let queries = [qr.row(i), qs.row(i), qp.row(b_ij)];
                let keys = [kr.row(j), ks.row(j), kp.row(b_ji)];
                let mut grid = [[0.0; 3]; 3];
                for (a, q) in queries.iter().enumerate() {
                    for (b, k) in keys.iter().enumerate() {
                        grid[a][b] = q.dot(k);
                    }
                }
                // content row fully, plus structure->content and
                // position->content
                out[[i, j]] = grid[0][0] + grid[0][1] + grid[0][2] + grid[1][0] + grid[2][0];
            }
        }
        out
    }

    #[test]
    fn bucket_examples() {
        assert_eq!(relative_bucket(5, 3, 4), 6);
        assert_eq!(relative_bucket(0, 0, 7), 7);
        assert_eq!(relative_bucket(0, 100, 4), 0);
        assert_eq!(relative_bucket(100, 0, 4), 8);
    }

    #[test]
    fn zero_everything_gives_uniform_attention() {
        let cfg = small_config(2, 3, 2);
        let zeros = ModelParams::zeros(&cfg);
        let h = Array2::zeros((4, 6));
        let att = disentangled_attention(&h, &h, &zeros.emb_relative, &zeros.layers[0], 1, &cfg).unwrap();
        for v in att.weights.iter() {
            assert_abs_diff_eq!(*v, 0.25, epsilon = 1e-12);
        }
        assert!(att.output.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn singleton_returns_own_value() {
        let cfg = small_config(2, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layer = random_layer(&mut rng, &cfg);
        let h = random_mat(&mut rng, 1, 6);
        let s = random_mat(&mut rng, 1, 6);
        let p = random_mat(&mut rng, 5, 6);
        let att = disentangled_attention(&h, &s, &p, &layer, 1, &cfg).unwrap();
        assert_abs_diff_eq!(att.weights[[0, 0]], 1.0, epsilon = 1e-12);
        let v = h.dot(&layer.v_r);
        for c in 0..3 {
            assert_abs_diff_eq!(att.output[[0, c]], v[[0, 3 + c]], epsilon = 1e-12);
        }
    }

    #[test]
    fn five_terms_match_block_oracle_small() {
        let cfg = small_config(1, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let layer = random_layer(&mut rng, &cfg);
        let h = random_mat(&mut rng, 3, 2);
        let s = random_mat(&mut rng, 3, 2);
        let p = random_mat(&mut rng, 3, 2);
        let att = disentangled_attention(&h, &s, &p, &layer, 0, &cfg).unwrap();
        let oracle = oracle_scores(&h, &s, &p, &layer, 0, 2, 1);
        for (a, b) in att.scores.iter().zip(oracle.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-6);
        }
        let scaled = oracle.mapv(|v| v / 10f64.sqrt());
        let expected = softmax_rows(&scaled).dot(&h.dot(&layer.v_r));
        for (a, b) in att.output.iter().zip(expected.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-6);
        }
    }

    #[test]
    fn length_mismatch_and_table_size() {
        let cfg = small_config(1, 2, 1);
        let z = ModelParams::zeros(&cfg);
        let h = Array2::zeros((3, 2));
        let s = Array2::zeros((2, 2));
        assert!(matches!(
            disentangled_attention(&h, &s, &z.emb_relative, &z.layers[0], 0, &cfg),
            Err(ModelError::LengthMismatch {
                residues: 3,
                structure: 2
            })
        ));
        let bad_p = Array2::zeros((5, 2));
        assert!(matches!(
            disentangled_attention(&h, &h, &bad_p, &z.layers[0], 0, &cfg),
            Err(ModelError::RelativeTable { found: 5, expected: 3 })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn five_terms_match_block_oracle(seed in any::<u64>(), l in 1usize..7, heads in 1usize..3, d in 1usize..4, w in 1usize..4) {
            let cfg = small_config(heads, d, w);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let layer = random_layer(&mut rng, &cfg);
            let width = heads * d;
            let h = random_mat(&mut rng, l, width);
            let s = random_mat(&mut rng, l, width);
            let p = random_mat(&mut rng, 2 * w + 1, width);
            for head in 0..heads {
                let att = disentangled_attention(&h, &s, &p, &layer, head, &cfg).unwrap();
                let oracle = oracle_scores(&h, &s, &p, &layer, head, d, w);
                for (a, b) in att.scores.iter().zip(oracle.iter()) {
                    prop_assert!((a - b).abs() < 1e-6);
                }
                for row in att.weights.rows() {
                    prop_assert!((row.sum() - 1.0).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn scaling_queries_and_keys(seed in any::<u64>(), l in 1usize..6, c in 0.2f64..5.0) {
            let cfg = small_config(2, 2, 2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let layer = random_layer(&mut rng, &cfg);
            let h = random_mat(&mut rng, l, 4);
            let s = random_mat(&mut rng, l, 4);
            let p = random_mat(&mut rng, 5, 4);
            let mut scaled = layer.clone();
            for m in [&mut scaled.q_r, &mut scaled.k_r, &mut scaled.q_s, &mut scaled.k_s, &mut scaled.q_p, &mut scaled.k_p] {
                m.mapv_inplace(|v| v * c);
            }
            for head in 0..2 {
                let base = disentangled_attention(&h, &s, &p, &layer, head, &cfg).unwrap();
                let big = disentangled_attention(&h, &s, &p, &scaled, head, &cfg).unwrap();
                let rescaled = big.scores.mapv(|v| v / (c * c) * score_scale(2));
                let weights = softmax_rows(&rescaled);
                for (a, b) in weights.iter().zip(base.weights.iter()) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn bucket_in_range_and_antisymmetric(i in 0usize..200, j in 0usize..200, w in 1usize..40) {
            let b = relative_bucket(i, j, w);
            prop_assert!(b <= 2 * w);
            prop_assert_eq!(b + relative_bucket(j, i, w), 2 * w);
        }
    }
}
