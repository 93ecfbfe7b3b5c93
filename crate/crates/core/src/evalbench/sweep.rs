use super::aggregate::{aggregate, AssayPredictions, AssayResult, GroupBy};
use super::spearman::spearman;
use super::EvalError;
use crate::bio_io::MutantSpec;
use crate::logits::{EvolutionaryLogits, NativeLogits};
use crate::scoring::{blend_logits, check_alpha, score_batch};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Everything needed to score one assay at any blend ratio.
#[derive(Debug, Clone)]
pub struct SweepAssay {
    pub assay_id: String,
    pub protein_key: String,
    pub native: NativeLogits,
    pub evo: EvolutionaryLogits,
    pub mutants: Vec<MutantSpec>,
    pub truth: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepOptions {
    pub group_by: GroupBy,
    /// Fraction of mutants kept per assay; `None` keeps all.
    pub subsample: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub overall: f64,
    pub assays: usize,
    pub mutants: usize,
}

/// Sorted indices of `round(fraction * n)` mutants (at least 2, at most
/// `n`) drawn without replacement.
pub fn subsample_indices(n: usize, fraction: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let keep = ((fraction * n as f64).round() as usize).max(2).min(n);
    let mut idx = index::sample(rng, n, keep).into_vec();
    idx.sort_unstable();
    idx
}

/// Keeps a seeded fraction of mutants in every assay (one generator, assays
/// visited in order).
pub fn subsample_assays(
    assays: &[AssayPredictions],
    fraction: f64,
    seed: u64,
) -> Result<Vec<AssayPredictions>, EvalError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(EvalError::Subsample(fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(assays
        .iter()
        .map(|a| {
            let keep = subsample_indices(a.truth.len(), fraction, &mut rng);
            AssayPredictions {
                assay_id: a.assay_id.clone(),
                protein_key: a.protein_key.clone(),
                predictions: keep.iter().map(|&i| a.predictions[i]).collect(),
                truth: keep.iter().map(|&i| a.truth[i]).collect(),
            }
        })
        .collect())
}

/// Overall correlation at each blend ratio. With a subsample fraction, one
/// seeded subset per assay is drawn up front and shared by every ratio.
pub fn alpha_sweep(assays: &[SweepAssay], alphas: &[f64], options: &SweepOptions) -> Result<Vec<SweepRow>, EvalError> {
    if assays.is_empty() {
        return Err(EvalError::Empty);
    }
    for &a in alphas {
        check_alpha(a)?;
    }
    if let Some(f) = options.subsample {
        if !(f > 0.0 && f <= 1.0) {
            return Err(EvalError::Subsample(f));
        }
    }
    for a in assays {
        if a.mutants.len() != a.truth.len() {
            return Err(EvalError::LengthMismatch {
                pred: a.mutants.len(),
                truth: a.truth.len(),
            }
            .in_assay(&a.assay_id));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let subsets: Vec<Vec<usize>> = assays
        .iter()
        .map(|a| match options.subsample {
            Some(f) => subsample_indices(a.mutants.len(), f, &mut rng),
            None => (0..a.mutants.len()).collect(),
        })
        .collect();
    let total: usize = subsets.iter().map(Vec::len).sum();

    alphas
        .par_iter()
        .map(|&alpha| {
            let results: Result<Vec<AssayResult>, EvalError> = assays
                .iter()
                .zip(&subsets)
                .map(|(a, keep)| {
                    let blended = blend_logits(&a.native, &a.evo, alpha)?;
                    let mutants: Vec<MutantSpec> = keep.iter().map(|&i| a.mutants[i].clone()).collect();
                    let truth: Vec<f64> = keep.iter().map(|&i| a.truth[i]).collect();
                    let scores = score_batch(&blended, &mutants)?;
                    let pred: Vec<f64> = scores.iter().map(|s| s.value).collect();
                    let s = spearman(&pred, &truth).map_err(|e| e.in_assay(&a.assay_id))?;
                    Ok(AssayResult {
                        assay_id: a.assay_id.clone(),
                        protein_key: a.protein_key.clone(),
                        spearman: s,
                    })
                })
                .collect();
            let report = aggregate(&results?, options.group_by)?;
            Ok(SweepRow {
                alpha,
                overall: report.overall,
                assays: assays.len(),
                mutants: total,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bio_io::{parse_mutant_spec, ResidueSequence};
    use crate::logits::LogitsMatrix;
    use ndarray::Array2;
    use rand::Rng;

    fn random_logits(rng: &mut ChaCha8Rng, l: usize) -> LogitsMatrix {
        let mut m = Array2::from_shape_fn((l, 25), |_| rng.random_range(-3.0..0.0));
        for mut row in m.rows_mut() {
            let lse = row.mapv(f64::exp).sum().ln();
            row -= lse;
        }
        LogitsMatrix::new(m).unwrap()
    }

    fn assay(seed: u64) -> SweepAssay {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let wt = "ACDEFGHIKLMNPQRSTVWY";
        let seq = ResidueSequence::from_letters(wt).unwrap();
        let aas: Vec<char> = wt.chars().collect();
        let mut mutants = Vec::new();
        for pos in 0..wt.len() {
            for &to in aas.iter().filter(|&&c| c != aas[pos]).take(5) {
                mutants.push(parse_mutant_spec(&format!("{}{}{}", aas[pos], pos + 1, to), &seq).unwrap());
            }
        }
        let truth = (0..mutants.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        SweepAssay {
            assay_id: format!("A{seed}"),
            protein_key: format!("P{}", seed % 2),
            native: NativeLogits(random_logits(&mut rng, 20)),
            evo: EvolutionaryLogits(random_logits(&mut rng, 20)),
            mutants,
            truth,
        }
    }

    fn direct(a: &[SweepAssay], alpha: f64) -> f64 {
        let results: Vec<AssayResult> = a
            .iter()
            .map(|x| {
                let b = blend_logits(&x.native, &x.evo, alpha).unwrap();
                let pred: Vec<f64> = score_batch(&b, &x.mutants).unwrap().iter().map(|s| s.value).collect();
                AssayResult {
                    assay_id: x.assay_id.clone(),
                    protein_key: x.protein_key.clone(),
                    spearman: spearman(&pred, &x.truth).unwrap(),
                }
            })
            .collect();
        aggregate(&results, GroupBy::Protein).unwrap().overall
    }

    #[test]
    fn endpoints_and_spot_check() {
        let assays: Vec<_> = (0..3).map(assay).collect();
        let rows = alpha_sweep(&assays, &[0.0, 0.8, 1.0], &SweepOptions::default()).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].overall, direct(&assays, 0.0));
        assert_eq!(rows[1].overall, direct(&assays, 0.8));
        assert_eq!(rows[2].overall, direct(&assays, 1.0));
        assert_eq!(rows[0].mutants, 300);
    }

    #[test]
    fn subsample_is_seeded() {
        let assays: Vec<_> = (0..3).map(assay).collect();
        let alphas: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
        let opts = SweepOptions {
            subsample: Some(0.1),
            seed: 7,
            ..Default::default()
        };
        let a = alpha_sweep(&assays, &alphas, &opts).unwrap();
        assert_eq!(a, alpha_sweep(&assays, &alphas, &opts).unwrap());
        assert_eq!(a.len(), 9);
        assert_eq!(a[0].mutants, 30);
        let other = alpha_sweep(&assays, &alphas, &SweepOptions { seed: 8, ..opts }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn subsampled_assays_are_aligned() {
        let a = AssayPredictions {
            assay_id: "x".into(),
            protein_key: "P".into(),
            predictions: (0..50).map(|i| i as f64).collect(),
            truth: (0..50).map(|i| -(i as f64)).collect(),
        };
        let sub = subsample_assays(std::slice::from_ref(&a), 0.2, 3).unwrap();
        assert_eq!(sub[0].truth.len(), 10);
        assert!(sub[0].predictions.iter().zip(&sub[0].truth).all(|(p, t)| *p == -t));
        assert_eq!(sub, subsample_assays(std::slice::from_ref(&a), 0.2, 3).unwrap());
        assert!(subsample_assays(&[a], 1.5, 3).is_err());
    }

    #[test]
    fn subsample_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(subsample_indices(100, 0.1, &mut rng).len(), 10);
        assert_eq!(subsample_indices(5, 0.1, &mut rng).len(), 2);
        assert_eq!(subsample_indices(1, 0.1, &mut rng).len(), 1);
    }

    #[test]
    fn rejects_bad_options() {
        let assays = vec![assay(0)];
        assert!(matches!(
            alpha_sweep(&assays, &[1.5], &SweepOptions::default()),
            Err(EvalError::Scoring(_))
        ));
        let opts = SweepOptions {
            subsample: Some(0.0),
            ..Default::default()
        };
        assert_eq!(alpha_sweep(&assays, &[0.5], &opts), Err(EvalError::Subsample(0.0)));
        assert_eq!(
            alpha_sweep(&[], &[0.5], &SweepOptions::default()),
            Err(EvalError::Empty)
        );
    }
}
