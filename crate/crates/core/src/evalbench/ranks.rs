use super::EvalError;
use std::collections::{BTreeMap, BTreeSet};

/// Rank -> number of assays at that rank.
pub type RankHistogram = BTreeMap<usize, usize>;

/// Ranks models on every assay by correlation, highest first. Tied models
/// share the better rank and the next rank is skipped.
pub fn rank_summary(
    model_scores: &BTreeMap<String, BTreeMap<String, f64>>,
) -> Result<BTreeMap<String, RankHistogram>, EvalError> {
    let assays: BTreeSet<&String> = model_scores.values().flat_map(|m| m.keys()).collect();
    let mut out: BTreeMap<String, RankHistogram> =
        model_scores.keys().map(|m| (m.clone(), RankHistogram::new())).collect();
    for assay in assays {
        let mut scores = Vec::with_capacity(model_scores.len());
        for (model, per_assay) in model_scores {
            let rho = per_assay.get(assay).ok_or_else(|| EvalError::MissingCell {
                model: model.clone(),
                assay: assay.clone(),
            })?;
            scores.push((model, *rho));
        }
        for (model, rho) in &scores {
            let rank = 1 + scores.iter().filter(|(_, other)| other > rho).count();
            *out.get_mut(*model).expect("model key").entry(rank).or_default() += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[(&str, &[(&str, f64)])]) -> BTreeMap<String, BTreeMap<String, f64>> {
        rows.iter()
            .map(|(m, cells)| (m.to_string(), cells.iter().map(|(a, r)| (a.to_string(), *r)).collect()))
            .collect()
    }

    #[test]
    fn single_model_ranks_first_everywhere() {
        let t = table(&[("m", &[("a", 0.1), ("b", -0.3)])]);
        let h = rank_summary(&t).unwrap();
        assert_eq!(h["m"], RankHistogram::from([(1, 2)]));
    }

    #[test]
    fn dominance_and_ties() {
        let t = table(&[
            ("A", &[("a1", 0.5), ("a2", 0.4), ("a3", 0.3)]),
            ("B", &[("a1", 0.2), ("a2", 0.4), ("a3", 0.1)]),
            ("C", &[("a1", 0.1), ("a2", 0.0), ("a3", 0.2)]),
        ]);
        let h = rank_summary(&t).unwrap();
        assert_eq!(h["A"], RankHistogram::from([(1, 3)]));
        assert_eq!(h["B"], RankHistogram::from([(1, 1), (2, 1), (3, 1)]));
        assert_eq!(h["C"], RankHistogram::from([(2, 1), (3, 2)]));
    }

    #[test]
    fn missing_cell_is_reported() {
        let t = table(&[("A", &[("a1", 0.5), ("a2", 0.1)]), ("B", &[("a1", 0.2)])]);
        assert_eq!(
            rank_summary(&t),
            Err(EvalError::MissingCell {
                model: "B".into(),
                assay: "a2".into()
            })
        );
    }
}
