use super::codebook::Codebook;
use super::featurize::StructureDescriptor;
use super::{StructError, StructureTokenSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            k: 64,
            seed: 0,
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub codebook: Codebook,
    /// Assignment of every training point against the stored centroids.
    pub assignments: Vec<u32>,
    /// Within-cluster sum of squares after each assignment step.
    pub inertia_history: Vec<f64>,
    /// Inertia of `assignments` against the stored centroids.
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid by squared distance, lowest index on ties.
fn nearest(point: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign_all(points: &[&[f64]], centroids: &[f64], dim: usize) -> Vec<(usize, f64)> {
    points.par_iter().map(|p| nearest(p, centroids, dim)).collect()
}

fn plus_plus_init(points: &[&[f64]], k: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    chosen[first] = true;
    centroids.extend_from_slice(points[first]);
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, points[first])).collect();

    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total weight")
        } else {
            // every remaining point duplicates a centroid
            (0..n).find(|&i| !chosen[i]).expect("n >= k")
        };
        chosen[pick] = true;
        centroids.extend_from_slice(points[pick]);
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(sq_dist(p, points[pick]));
        }
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Empty clusters are re-seeded with the point farthest from its assigned
/// centroid (lowest index on ties). The assignment step runs in parallel but
/// all reductions happen in point order, so results depend only on `seed`.
pub fn kmeans_fit(descriptors: &[StructureDescriptor], params: &KMeansParams) -> Result<KMeansFit, StructError> {
    let k = params.k;
    if k == 0 {
        return Err(StructError::InvalidCodebook("k must be at least 1".into()));
    }
    if descriptors.len() < k {
        return Err(StructError::TooFewPoints {
            points: descriptors.len(),
            k,
        });
    }
    let dim = descriptors[0].values.len();
    if let Some(bad) = descriptors.iter().find(|d| d.values.len() != dim) {
        return Err(StructError::DimensionMismatch {
            expected: dim,
            found: bad.values.len(),
        });
    }
    let points: Vec<&[f64]> = descriptors.iter().map(|d| d.values.as_slice()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centroids = plus_plus_init(&points, k, dim, &mut rng);

    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iter {
        iterations += 1;
        let assigned = assign_all(&points, &centroids, dim);
        history.push(assigned.iter().map(|a| a.1).sum());

        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (p, &(c, _)) in points.iter().zip(&assigned) {
            counts[c] += 1;
            for (s, x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(p.iter()) {
                *s += x;
            }
        }
        let mut next = sums;
        let mut reseeded = vec![false; points.len()];
        for c in 0..k {
            let slot = &mut next[c * dim..(c + 1) * dim];
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                slot.iter_mut().for_each(|s| *s *= inv);
            } else {
                let far = assigned
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !reseeded[*i])
                    .fold(None::<(usize, f64)>, |best, (i, &(_, d))| match best {
                        Some((_, bd)) if bd >= d => best,
                        _ => Some((i, d)),
                    })
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                reseeded[far] = true;
                slot.copy_from_slice(points[far]);
            }
        }
        let shift = centroids
            .chunks_exact(dim)
            .zip(next.chunks_exact(dim))
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        if shift < params.tol {
            converged = true;
            break;
        }
    }

    let codebook = Codebook::new(k, dim, centroids.iter().map(|&x| x as f32).collect(), params.seed)?;
    let stored = codebook.centroids_f64();
    let final_assign = assign_all(&points, &stored, dim);
    Ok(KMeansFit {
        codebook,
        assignments: final_assign.iter().map(|a| a.0 as u32).collect(),
        inertia: final_assign.iter().map(|a| a.1).sum(),
        inertia_history: history,
        iterations,
        converged,
    })
}

/// Maps each descriptor to its nearest centroid (squared Euclidean, lowest
/// index on ties).
pub fn assign_tokens(
    descriptors: &[StructureDescriptor],
    codebook: &Codebook,
) -> Result<StructureTokenSequence, StructError> {
    if let Some(bad) = descriptors.iter().find(|d| d.values.len() != codebook.dim()) {
        return Err(StructError::DimensionMismatch {
            expected: codebook.dim(),
            found: bad.values.len(),
        });
    }
    let centroids = codebook.centroids_f64();
    let points: Vec<&[f64]> = descriptors.iter().map(|d| d.values.as_slice()).collect();
    let tokens = assign_all(&points, &centroids, codebook.dim())
        .into_iter()
        .map(|(c, _)| c as u32)
        .collect();
    Ok(StructureTokenSequence { tokens })
}
