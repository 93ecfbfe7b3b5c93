use super::attention::{check_inputs, head_backward, head_forward, HeadAttention, ProjectionGrads, Projections};
use super::config::InferenceMode;
use super::params::{LayerParams, ModelParams};
use super::ModelError;
use crate::bio_io::ResidueSequence;
use crate::logits::{LogitsMatrix, NativeLogits};
use crate::struct_tok::StructureTokenSequence;
use crate::vocab::{Token, Vocabulary};
use ndarray::{s, Array1, Array2, Axis};
use rayon::prelude::*;

type Mat = Array2<f64>;

const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_K: f64 = 0.044_715;

pub(crate) struct LnCache {
    xhat: Mat,
    inv_std: Array1<f64>,
}

fn layer_norm(x: &Mat, gamma: &Mat, beta: &Mat) -> (Mat, LnCache) {
    let n = x.ncols() as f64;
    let mean = x.sum_axis(Axis(1)) / n;
    let centered = x - &mean.view().insert_axis(Axis(1));
    let var = centered.mapv(|v| v * v).sum_axis(Axis(1)) / n;
    let inv_std = var.mapv(|v| 1.0 / (v + LN_EPS).sqrt());
    let xhat = &centered * &inv_std.view().insert_axis(Axis(1));
    let y = &xhat * gamma + beta;
    (y, LnCache { xhat, inv_std })
}

fn layer_norm_backward(dy: &Mat, cache: &LnCache, gamma: &Mat, d_gamma: &mut Mat, d_beta: &mut Mat) -> Mat {
    *d_gamma += &(dy * &cache.xhat).sum_axis(Axis(0)).insert_axis(Axis(0));
    *d_beta += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
    let n = dy.ncols() as f64;
    let dxhat = dy * gamma;
    let mean_d = dxhat.sum_axis(Axis(1)) / n;
    let mean_dx = (&dxhat * &cache.xhat).sum_axis(Axis(1)) / n;
    let mut dx = dxhat - &mean_d.insert_axis(Axis(1));
    dx -= &(&cache.xhat * &mean_dx.insert_axis(Axis(1)));
    dx * cache.inv_std.view().insert_axis(Axis(1))
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_K * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_K * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_K * x * x)
}

fn log_softmax_rows(x: &Mat) -> Mat {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

fn gather_rows(table: &Mat, idx: impl Iterator<Item = usize>) -> Mat {
    let rows: Vec<_> = idx.collect();
    table.select(Axis(0), &rows)
}

pub(crate) struct LayerCache {
    h_in: Mat,
    proj: Projections,
    heads: Vec<HeadAttention>,
    concat: Mat,
    ln1: LnCache,
    h1: Mat,
    pre_act: Mat,
    act: Mat,
    ln2: LnCache,
}

pub(crate) struct ForwardCache {
    residues: Vec<usize>,
    structure: Vec<usize>,
    s: Mat,
    layers: Vec<LayerCache>,
    h_final: Mat,
    pub logprobs: Mat,
}

fn layer_forward(h: &Mat, s: &Mat, p: &Mat, layer: &LayerParams, params: &ModelParams) -> (Mat, LayerCache) {
    let cfg = &params.config;
    let d = cfg.head_dim;
    let proj = Projections::new(h, s, p, layer);
    let heads: Vec<_> = (0..cfg.heads)
        .map(|hd| head_forward(&proj, hd, d, cfg.rel_window))
        .collect();
    let mut concat = Array2::zeros(h.dim());
    for (hd, att) in heads.iter().enumerate() {
        concat.slice_mut(s![.., hd * d..(hd + 1) * d]).assign(&att.output);
    }
    let x1 = h + &concat.dot(&layer.out);
    let (h1, ln1) = layer_norm(&x1, &layer.ln1_gamma, &layer.ln1_beta);
    let pre_act = h1.dot(&layer.ff_w1) + &layer.ff_b1;
    let act = pre_act.mapv(gelu);
    let x2 = &h1 + &(act.dot(&layer.ff_w2) + &layer.ff_b2);
    let (h2, ln2) = layer_norm(&x2, &layer.ln2_gamma, &layer.ln2_beta);
    let cache = LayerCache {
        h_in: h.clone(),
        proj,
        heads,
        concat,
        ln1,
        h1,
        pre_act,
        act,
        ln2,
    };
    (h2, cache)
}

/// Returns the gradient with respect to the layer input; accumulates into
/// `grad` and the shared structure / relative-table gradients.
#[allow(clippy::too_many_arguments)]
fn layer_backward(
    dh2: &Mat,
    cache: &LayerCache,
    s: &Mat,
    p: &Mat,
    layer: &LayerParams,
    params: &ModelParams,
    grad: &mut LayerParams,
    ds: &mut Mat,
    dp: &mut Mat,
) -> Mat {
    let cfg = &params.config;
    let d = cfg.head_dim;
    let dx2 = layer_norm_backward(
        dh2,
        &cache.ln2,
        &layer.ln2_gamma,
        &mut grad.ln2_gamma,
        &mut grad.ln2_beta,
    );

    grad.ff_w2 += &cache.act.t().dot(&dx2);
    grad.ff_b2 += &dx2.sum_axis(Axis(0)).insert_axis(Axis(0));
    let mut d_pre = dx2.dot(&layer.ff_w2.t());
    d_pre.zip_mut_with(&cache.pre_act, |g, &z| *g *= gelu_grad(z));
    grad.ff_w1 += &cache.h1.t().dot(&d_pre);
    grad.ff_b1 += &d_pre.sum_axis(Axis(0)).insert_axis(Axis(0));
    let dh1 = dx2 + d_pre.dot(&layer.ff_w1.t());

    let dx1 = layer_norm_backward(
        &dh1,
        &cache.ln1,
        &layer.ln1_gamma,
        &mut grad.ln1_gamma,
        &mut grad.ln1_beta,
    );
    grad.out += &cache.concat.t().dot(&dx1);
    let d_concat = dx1.dot(&layer.out.t());

    let l = dh2.nrows();
    let mut pg = ProjectionGrads::zeros(l, p.nrows(), cfg.hidden());
    for (hd, att) in cache.heads.iter().enumerate() {
        head_backward(
            &cache.proj,
            att,
            d_concat.slice(s![.., hd * d..(hd + 1) * d]),
            hd,
            d,
            cfg.rel_window,
            &mut pg,
        );
    }

    let h = &cache.h_in;
    let mut dh = dx1;
    for (dproj, w, gw) in [
        (&pg.q_r, &layer.q_r, &mut grad.q_r),
        (&pg.k_r, &layer.k_r, &mut grad.k_r),
        (&pg.v_r, &layer.v_r, &mut grad.v_r),
    ] {
        *gw += &h.t().dot(dproj);
        dh += &dproj.dot(&w.t());
    }
    for (dproj, w, gw) in [
        (&pg.q_s, &layer.q_s, &mut grad.q_s),
        (&pg.k_s, &layer.k_s, &mut grad.k_s),
    ] {
        *gw += &s.t().dot(dproj);
        *ds += &dproj.dot(&w.t());
    }
    for (dproj, w, gw) in [
        (&pg.q_p, &layer.q_p, &mut grad.q_p),
        (&pg.k_p, &layer.k_p, &mut grad.k_p),
    ] {
        *gw += &p.t().dot(dproj);
        *dp += &dproj.dot(&w.t());
    }
    dh
}

fn check_tokens(params: &ModelParams, residues: &[Token], structure: &[u32]) -> Result<(), ModelError> {
    if residues.len() != structure.len() {
        return Err(ModelError::LengthMismatch {
            residues: residues.len(),
            structure: structure.len(),
        });
    }
    if let Some((position, &t)) = residues
        .iter()
        .enumerate()
        .find(|(_, &t)| t as usize >= params.config.vocab)
    {
        return Err(ModelError::TokenOutOfRange {
            kind: "residue",
            token: t as usize,
            position,
            limit: params.config.vocab,
        });
    }
    let k = params.config.struct_vocab;
    if let Some((position, &t)) = structure.iter().enumerate().find(|(_, &t)| t as usize >= k) {
        return Err(ModelError::TokenOutOfRange {
            kind: "structure",
            token: t as usize,
            position,
            limit: k,
        });
    }
    Ok(())
}

pub(crate) fn forward_cached(
    params: &ModelParams,
    residues: &[Token],
    structure: &[u32],
) -> Result<ForwardCache, ModelError> {
    check_tokens(params, residues, structure)?;
    let residues: Vec<usize> = residues.iter().map(|&t| t as usize).collect();
    let structure: Vec<usize> = structure.iter().map(|&t| t as usize).collect();
    let mut h = gather_rows(&params.emb_residue, residues.iter().copied());
    let s = gather_rows(&params.emb_structure, structure.iter().copied());
    let p = &params.emb_relative;
    check_inputs(&h, &s, p, &params.config)?;
    let mut layers = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let (next, cache) = layer_forward(&h, &s, p, layer, params);
        layers.push(cache);
        h = next;
    }
    let logits = h.dot(&params.head_w) + &params.head_b;
    Ok(ForwardCache {
        residues,
        structure,
        s,
        layers,
        logprobs: log_softmax_rows(&logits),
        h_final: h,
    })
}

/// Accumulates parameter gradients given the gradient of the loss with
/// respect to the pre-softmax head outputs.
pub(crate) fn backward(params: &ModelParams, cache: &ForwardCache, d_logits: &Mat, grads: &mut ModelParams) {
    grads.head_w += &cache.h_final.t().dot(d_logits);
    grads.head_b += &d_logits.sum_axis(Axis(0)).insert_axis(Axis(0));
    let mut dh = d_logits.dot(&params.head_w.t());
    let mut ds = Array2::zeros(cache.s.dim());
    let mut dp = Array2::zeros(params.emb_relative.dim());
    for (i, layer) in params.layers.iter().enumerate().rev() {
        dh = layer_backward(
            &dh,
            &cache.layers[i],
            &cache.s,
            &params.emb_relative,
            layer,
            params,
            &mut grads.layers[i],
            &mut ds,
            &mut dp,
        );
    }
    grads.emb_relative += &dp;
    for (row, &t) in cache.residues.iter().enumerate() {
        let mut target = grads.emb_residue.row_mut(t);
        target += &dh.row(row);
    }
    for (row, &t) in cache.structure.iter().enumerate() {
        let mut target = grads.emb_structure.row_mut(t);
        target += &ds.row(row);
    }
}

fn wrap(logprobs: Mat) -> Result<NativeLogits, ModelError> {
    LogitsMatrix::new(logprobs)
        .map(NativeLogits)
        .map_err(|e| ModelError::Format(format!("model produced invalid log-probabilities: {e}")))
}

/// Unmasked forward pass; rows are log-probabilities over the vocabulary.
pub fn forward(
    seq: &ResidueSequence,
    structure: &StructureTokenSequence,
    params: &ModelParams,
) -> Result<NativeLogits, ModelError> {
    wrap(forward_cached(params, seq.tokens(), &structure.tokens)?.logprobs)
}

/// Native log-probabilities for scoring, in the requested read-out mode.
pub fn native_logits(
    params: &ModelParams,
    seq: &ResidueSequence,
    structure: &StructureTokenSequence,
    mode: InferenceMode,
) -> Result<NativeLogits, ModelError> {
    match mode {
        InferenceMode::WildTypeMarginals => forward(seq, structure, params),
        InferenceMode::MaskedMarginals => {
            check_tokens(params, seq.tokens(), &structure.tokens)?;
            let rows: Result<Vec<_>, _> = (0..seq.len())
                .into_par_iter()
                .map(|i| {
                    let mut tokens = seq.tokens().to_vec();
                    tokens[i] = Vocabulary::MASK;
                    forward_cached(params, &tokens, &structure.tokens).map(|c| c.logprobs.row(i).to_owned())
                })
                .collect();
            let rows = rows?;
            let mut out = Array2::zeros((seq.len(), Vocabulary::SIZE));
            for (i, r) in rows.iter().enumerate() {
                out.row_mut(i).assign(r);
            }
            wrap(out)
        }
    }
}
