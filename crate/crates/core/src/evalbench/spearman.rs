use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpearmanResult {
    pub rho: f64,
    pub n: usize,
}

/// 1-based ranks; tied values share the mean of the positions they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    doubled_ranks(values).into_iter().map(|r| r as f64 / 2.0).collect()
}

/// Twice the average rank, which is always an integer.
fn doubled_ranks(values: &[f64]) -> Vec<i64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0i64; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end, doubled mean = start + 1 + end
        let doubled = (start + 1 + end) as i64;
        for &i in &order[start..end] {
            ranks[i] = doubled;
        }
        start = end;
    }
    ranks
}

fn check(values: &[f64]) -> Result<(), EvalError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(EvalError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Pearson correlation of average ranks, computed on integer doubled ranks
/// so the only rounding is the final division.
pub fn spearman(pred: &[f64], truth: &[f64]) -> Result<SpearmanResult, EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    let n = pred.len();
    if n < 2 {
        return Err(EvalError::TooFewPairs(n));
    }
    check(pred)?;
    check(truth)?;
    let centre = n as i64 + 1;
    let a: Vec<i128> = doubled_ranks(pred).into_iter().map(|r| (r - centre) as i128).collect();
    let b: Vec<i128> = doubled_ranks(truth).into_iter().map(|r| (r - centre) as i128).collect();
    let num: i128 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let saa: i128 = a.iter().map(|x| x * x).sum();
    let sbb: i128 = b.iter().map(|y| y * y).sum();
    if saa == 0 {
        return Err(EvalError::Undefined("prediction"));
    }
    if sbb == 0 {
        return Err(EvalError::Undefined("ground-truth"));
    }
    let rho = (num as f64 / ((saa as f64) * (sbb as f64)).sqrt()).clamp(-1.0, 1.0);
    Ok(SpearmanResult { rho, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_cases() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap().rho, 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap().rho, -1.0);
        let r = spearman(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert_eq!(r.rho, 1.0 - 6.0 * 2.0 / (3.0 * 8.0));
        assert_eq!(r.n, 3);
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
        assert_eq!(average_ranks(&[1.0, 1.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn errors() {
        assert_eq!(spearman(&[1.0], &[1.0]), Err(EvalError::TooFewPairs(1)));
        assert!(matches!(
            spearman(&[1.0, 2.0], &[1.0]),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert_eq!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(EvalError::Undefined("prediction"))
        );
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]),
            Err(EvalError::Undefined("ground-truth"))
        );
        assert_eq!(spearman(&[1.0, f64::NAN], &[1.0, 2.0]), Err(EvalError::NonFinite(1)));
    }

    proptest! {
        #[test]
        fn monotone_transform_invariance(
            pairs in proptest::collection::vec((-50i32..50, -50i32..50), 2..30),
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            let base = spearman(&x, &y);
            let tx: Vec<f64> = x.iter().map(|v| (v / 10.0).exp() * 3.0 - 7.0).collect();
            let ty: Vec<f64> = y.iter().map(|v| v.powi(3) + 2.0 * v).collect();
            prop_assert_eq!(base, spearman(&tx, &ty));
        }

        #[test]
        fn bounded_and_symmetric(
            pairs in proptest::collection::vec((-5i32..5, -5i32..5), 2..30),
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            if let Ok(r) = spearman(&x, &y) {
                prop_assert!(r.rho.abs() <= 1.0);
                prop_assert_eq!(r.rho, spearman(&y, &x).unwrap().rho);
            }
        }
    }
}
