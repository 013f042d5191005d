use crate::{Error, Result};

fn check_pair(a: &[f64], b: &[f64], what: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "{what}: {} targets but {} predictions",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Empty(format!("{what} of no samples")));
    }
    Ok(())
}

/// `(TP, FP, TN, FN)` of hard 0/1 predictions.
pub fn confusion(y: &[f64], yhat: &[f64]) -> (usize, usize, usize, usize) {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&t, &p) in y.iter().zip(yhat) {
        match (t == 1.0, p == 1.0) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fn_ += 1,
        }
    }
    (tp, fp, tn, fn_)
}

/// Hard predictions `score ≥ threshold`.
pub fn hard_predictions(scores: &[f64], threshold: f64) -> Vec<f64> {
    scores.iter().map(|&s| f64::from(s >= threshold)).collect()
}

pub fn accuracy(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat, "accuracy")?;
    let hits = y.iter().zip(yhat).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y.len() as f64)
}

/// Harmonic mean of precision and recall; 0 when both are 0 or undefined.
pub fn f1(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat, "F1")?;
    let (tp, fp, _, fn_) = confusion(y, yhat);
    let pr = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let re = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
    Ok(if pr + re > 0.0 { 2.0 * pr * re / (pr + re) } else { 0.0 })
}

pub fn fpr(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat, "FPR")?;
    let (_, fp, tn, _) = confusion(y, yhat);
    if fp + tn == 0 {
        return Err(Error::UndefinedMetric("FPR needs at least one negative".into()));
    }
    Ok(fp as f64 / (fp + tn) as f64)
}

pub fn fnr(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat, "FNR")?;
    let (tp, _, _, fn_) = confusion(y, yhat);
    if tp + fn_ == 0 {
        return Err(Error::UndefinedMetric("FNR needs at least one positive".into()));
    }
    Ok(fn_ as f64 / (tp + fn_) as f64)
}

/// Fraction of (positive, negative) pairs ranked strictly correctly; ties
/// count as misses.
pub fn auroc(y: &[f64], scores: &[f64]) -> Result<f64> {
    check_pair(y, scores, "AUROC")?;
    let mut neg: Vec<f64> = y
        .iter()
        .zip(scores)
        .filter(|(t, _)| **t != 1.0)
        .map(|(_, &s)| s)
        .collect();
    let n_pos = y.len() - neg.len();
    if n_pos == 0 || neg.is_empty() {
        return Err(Error::UndefinedMetric("AUROC needs both classes".into()));
    }
    neg.sort_by(f64::total_cmp);
    let mut wins = 0usize;
    for (_, &s) in y.iter().zip(scores).filter(|(t, _)| **t == 1.0) {
        // negatives strictly below s
        wins += neg.partition_point(|&v| v < s);
    }
    Ok(wins as f64 / (n_pos * neg.len()) as f64)
}

/// Step-wise area under the precision-recall curve with thresholds at every
/// distinct score, highest first, and recall starting at 0.
pub fn auprc(y: &[f64], scores: &[f64]) -> Result<f64> {
    check_pair(y, scores, "AUPRC")?;
    let n_pos = y.iter().filter(|&&t| t == 1.0).count();
    if n_pos == 0 {
        return Err(Error::UndefinedMetric("AUPRC needs at least one positive".into()));
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut area, mut prev_recall) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if y[order[i]] == 1.0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(area)
}

/// `Σ_n (2n − N − 1)·a_[n] / (N·Σa)` with `a` sorted ascending by `key`
/// (ties keep input order).
fn ordered_gini(a: &[f64], key: &[f64]) -> f64 {
    let n = a.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| key[i].total_cmp(&key[j]));
    let total: f64 = a.iter().sum();
    let num: f64 = order
        .iter()
        .enumerate()
        .map(|(r, &i)| (2.0 * (r + 1) as f64 - n as f64 - 1.0) * a[i])
        .sum();
    num / (n as f64 * total)
}

/// Normalized ordered Gini: the Gini of the targets ordered by the scores,
/// divided by the Gini of the targets ordered by themselves.
pub fn gini(y: &[f64], scores: &[f64]) -> Result<f64> {
    check_pair(y, scores, "Gini")?;
    if y.iter().any(|&t| t < 0.0) {
        return Err(Error::Contract("Gini targets must be non-negative".into()));
    }
    let total: f64 = y.iter().sum();
    if total <= 0.0 {
        return Err(Error::UndefinedMetric("Gini needs a positive target sum".into()));
    }
    let best = ordered_gini(y, y);
    if best == 0.0 {
        return Err(Error::UndefinedMetric("Gini of constant targets".into()));
    }
    Ok(ordered_gini(y, scores) / best)
}

/// Signed relative error of the totals, `Σ(ŷ − y) / Σy`.
pub fn pe(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat, "PE")?;
    let total: f64 = y.iter().sum();
    if total == 0.0 {
        return Err(Error::UndefinedMetric("PE needs a non-zero target sum".into()));
    }
    Ok(y.iter().zip(yhat).map(|(t, p)| p - t).sum::<f64>() / total)
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat, "RMSE")?;
    let sq: f64 = y.iter().zip(yhat).map(|(t, p)| (p - t) * (p - t)).sum();
    Ok((sq / y.len() as f64).sqrt())
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat, "MAE")?;
    Ok(y.iter().zip(yhat).map(|(t, p)| (p - t).abs()).sum::<f64>() / y.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn classification_counts() {
        let (y, p) = ([1.0, 0.0, 1.0], [1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(accuracy(&y, &p).unwrap(), 2.0 / 3.0);
        assert_abs_diff_eq!(f1(&y, &p).unwrap(), 2.0 / 3.0);
        let (y, p) = ([0.0, 0.0, 1.0], [1.0, 0.0, 1.0]);
        assert_eq!(fpr(&y, &p).unwrap(), 0.5);
        assert_eq!(fnr(&y, &p).unwrap(), 0.0);
        let y = [1.0, 0.0, 1.0, 0.0];
        assert_eq!(accuracy(&y, &y).unwrap(), 1.0);
        assert_eq!(fpr(&y, &y).unwrap(), 0.0);
        assert_eq!(fnr(&y, &y).unwrap(), 0.0);
        assert_eq!(f1(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(accuracy(&[], &[]), Err(Error::Empty(_))));
        assert!(matches!(fpr(&[1.0], &[1.0]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[1.0, 0.0], &[0.9, 0.1]).unwrap(), 1.0);
        assert_eq!(auroc(&[1.0, 0.0], &[0.1, 0.9]).unwrap(), 0.0);
        assert_eq!(auroc(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), 0.0);
        assert!(matches!(auroc(&[1.0, 1.0], &[0.1, 0.2]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn auprc_examples() {
        assert_eq!(auprc(&[1.0, 0.0], &[0.9, 0.1]).unwrap(), 1.0);
        assert_eq!(auprc(&[0.0, 1.0], &[0.9, 0.1]).unwrap(), 0.5);
        assert_eq!(auprc(&[1.0, 1.0, 1.0], &[0.2, 0.5, 0.1]).unwrap(), 1.0);
        assert!(matches!(auprc(&[0.0, 0.0], &[0.1, 0.2]), Err(Error::UndefinedMetric(_))));
    }

    fn lorenz_gini(a: &[f64], key: &[f64]) -> f64 {
        let n = a.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| key[i].total_cmp(&key[j]));
        let total: f64 = a.iter().sum();
        let mut cum = 0.0;
        let mut lorenz_sum = 0.0;
        for &i in &order {
            cum += a[i] / total;
            lorenz_sum += cum;
        }
        (n as f64 + 1.0) / n as f64 - 2.0 / n as f64 * lorenz_sum
    }

    #[test]
    fn gini_examples() {
        let y = [0.0, 0.0, 10.0];
        let s = [0.1, 0.2, 0.9];
        assert_abs_diff_eq!(gini(&y, &s).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lorenz_gini(&y, &s) / lorenz_gini(&y, &y), 1.0, epsilon = 1e-12);
        let y = [1.0, 3.0, 2.0, 7.0];
        assert_abs_diff_eq!(gini(&y, &y).unwrap(), 1.0, epsilon = 1e-12);
        let rev: Vec<f64> = y.iter().map(|v| -v).collect();
        assert_abs_diff_eq!(gini(&y, &rev).unwrap(), -1.0, epsilon = 1e-12);
        assert!(matches!(gini(&[0.0, 0.0], &[1.0, 2.0]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn regression_examples() {
        assert_abs_diff_eq!(pe(&[50.0, 50.0], &[55.0, 55.0]).unwrap(), 0.10, epsilon = 1e-12);
        let y = [1.5, -2.0];
        assert_eq!(pe(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&y, &y).unwrap(), 0.0);
        assert_eq!(mae(&y, &y).unwrap(), 0.0);
        assert_abs_diff_eq!(rmse(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 2.5f64.sqrt());
        assert_eq!(mae(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 1.5);
        assert!(matches!(pe(&[1.0, -1.0], &[0.0, 0.0]), Err(Error::UndefinedMetric(_))));
    }

    proptest! {
        #[test]
        fn gini_matches_lorenz_form(
            pairs in proptest::collection::vec((0.0f64..10.0, -5.0f64..5.0), 2..40)
        ) {
            let (y, s): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let base = lorenz_gini(&y, &y);
            prop_assume!(y.iter().sum::<f64>() > 0.0 && base.abs() > 1e-9);
            let g = gini(&y, &s).unwrap();
            prop_assert!((g - lorenz_gini(&y, &s) / base).abs() <= 1e-9);
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&g));
        }

        #[test]
        fn auroc_invariant_under_monotone_transform(
            pairs in proptest::collection::vec((0u8..2, -3.0f64..3.0), 2..40)
        ) {
            let y: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
            let s: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            prop_assume!(y.contains(&0.0) && y.contains(&1.0));
            let t: Vec<f64> = s.iter().map(|v| v.exp() * 3.0 + 1.0).collect();
            prop_assert_eq!(auroc(&y, &s).unwrap(), auroc(&y, &t).unwrap());
        }
    }
}
