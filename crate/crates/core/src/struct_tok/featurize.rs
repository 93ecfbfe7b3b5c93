use super::graph::{dist, GraphParams, LocalStructureGraph};
use super::StructError;
use std::f64::consts::PI;

const DIST_BINS: usize = 16;
const ANGLE_BINS: usize = 16;
const SEP_BUCKETS: usize = 8;
const SELF_FEATURES: usize = 3;

/// Length of the raw feature block before zero padding.
pub const FEATURE_LEN: usize = DIST_BINS + ANGLE_BINS + SEP_BUCKETS + SELF_FEATURES;

const MIN_SEPARATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeaturizerConfig {
    /// Output dimension; raw features are zero-padded up to it.
    pub dim: usize,
    pub graph: GraphParams,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        Self {
            dim: 256,
            graph: GraphParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureDescriptor {
    pub values: Vec<f64>,
}

fn bin(value: f64, upper: f64, bins: usize) -> usize {
    ((value / upper * bins as f64).floor() as usize).min(bins - 1)
}

/// Sequence-separation bucket: 1, 2, 3, 4, 5-8, 9-16, 17-32, >32.
fn separation_bucket(sep: usize) -> usize {
    match sep {
        0..=4 => sep.saturating_sub(1),
        5..=8 => 4,
        9..=16 => 5,
        17..=32 => 6,
        _ => 7,
    }
}

/// Invariant geometric descriptor of a local graph.
///
/// Layout: anchor-neighbor distance histogram (16 bins over `[0, radius)`),
/// neighbor-anchor-neighbor angle histogram (16 bins over `[0, pi]`),
/// sequence-separation histogram (8 buckets), then neighbor count / max,
/// mean distance / radius and distance variance / radius^2. Histograms are
/// normalized to fractions. Only distances and angles enter, so the result
/// is unchanged by rotations and translations.
pub fn featurize(graph: &LocalStructureGraph, config: &FeaturizerConfig) -> Result<StructureDescriptor, StructError> {
    if config.dim < FEATURE_LEN {
        return Err(StructError::DimensionTooSmall(config.dim));
    }
    let members: Vec<usize> = graph.members().collect();
    for x in 0..members.len() {
        for y in x + 1..members.len() {
            if dist(&graph.coords[x], &graph.coords[y]) < MIN_SEPARATION {
                return Err(StructError::DegenerateGeometry {
                    first: members[x].min(members[y]),
                    second: members[x].max(members[y]),
                });
            }
        }
    }

    let radius = config.graph.radius;
    let mut values = vec![0.0; config.dim];
    let (dist_hist, rest) = values.split_at_mut(DIST_BINS);
    let (angle_hist, rest) = rest.split_at_mut(ANGLE_BINS);
    let (sep_hist, self_feats) = rest.split_at_mut(SEP_BUCKETS);

    let anchor = graph.coords[0];
    let offsets: Vec<[f64; 3]> = graph.coords[1..]
        .iter()
        .map(|p| [p[0] - anchor[0], p[1] - anchor[1], p[2] - anchor[2]])
        .collect();
    let dists: Vec<f64> = graph.coords[1..].iter().map(|p| dist(&anchor, p)).collect();
    let n = dists.len();
    if n == 0 {
        return Ok(StructureDescriptor { values });
    }

    let inv_n = 1.0 / n as f64;
    for (&d, &j) in dists.iter().zip(&graph.neighbors) {
        dist_hist[bin(d, radius, DIST_BINS)] += inv_n;
        sep_hist[separation_bucket(j.abs_diff(graph.anchor))] += inv_n;
    }

    let pairs = n * (n - 1) / 2;
    if pairs > 0 {
        let inv_pairs = 1.0 / pairs as f64;
        for a in 0..n {
            for b in a + 1..n {
                let u = offsets[a];
                let v = offsets[b];
                let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
                let cos = (dot / (dists[a] * dists[b])).clamp(-1.0, 1.0);
                angle_hist[bin(cos.acos(), PI, ANGLE_BINS)] += inv_pairs;
            }
        }
    }

    let mean = dists.iter().sum::<f64>() * inv_n;
    let var = dists.iter().map(|d| (d - mean).powi(2)).sum::<f64>() * inv_n;
    self_feats[0] = n as f64 / config.graph.max_neighbors as f64;
    self_feats[1] = mean / radius;
    self_feats[2] = var / (radius * radius);
    Ok(StructureDescriptor { values })
}
