use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A fairness value together with notes on cells that had to be skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotated {
    pub value: f64,
    pub annotations: Vec<String>,
}

fn group_means(values: &[f64], groups: &[usize], cs: usize, mask: impl Fn(usize) -> bool) -> Vec<Option<f64>> {
    let mut sum = vec![0.0; cs];
    let mut count = vec![0usize; cs];
    for (n, (&v, &g)) in values.iter().zip(groups).enumerate() {
        if mask(n) {
            sum[g] += v;
            count[g] += 1;
        }
    }
    (0..cs)
        .map(|g| (count[g] > 0).then(|| sum[g] / count[g] as f64))
        .collect()
}

/// Largest pairwise gap between defined entries; `None` if no pair is defined.
fn max_pair_gap(means: &[Option<f64>], label: &str, notes: &mut Vec<String>) -> Option<f64> {
    let mut best: Option<f64> = None;
    for j in 0..means.len() {
        for k in j + 1..means.len() {
            match (means[j], means[k]) {
                (Some(a), Some(b)) => {
                    let gap = (a - b).abs();
                    best = Some(best.map_or(gap, |x: f64| x.max(gap)));
                }
                _ => notes.push(format!("{label}: pair ({j}, {k}) skipped, empty group")),
            }
        }
    }
    best
}

fn check_groups(n: usize, groups: &[usize], cs: usize) -> Result<()> {
    if groups.len() != n {
        return Err(Error::Contract("one group per prediction is required".into()));
    }
    if cs < 2 {
        return Err(Error::Contract("at least two sensitive groups are required".into()));
    }
    if groups.iter().any(|&g| g >= cs) {
        return Err(Error::Contract("group index out of range".into()));
    }
    Ok(())
}

/// Largest gap in mean prediction between any two sensitive groups. Pass
/// hard 0/1 predictions for classification (positive rates) and raw values
/// for regression.
pub fn dpd(preds: &[f64], groups: &[usize], cs: usize) -> Result<Annotated> {
    check_groups(preds.len(), groups, cs)?;
    let means = group_means(preds, groups, cs, |_| true);
    let mut notes = Vec::new();
    let value = max_pair_gap(&means, "DPD", &mut notes)
        .ok_or_else(|| Error::UndefinedMetric("DPD: fewer than two non-empty groups".into()))?;
    Ok(Annotated { value, annotations: notes })
}

fn conditional_gap(y: &[f64], hard: &[f64], groups: &[usize], cs: usize, label: f64, name: &str, notes: &mut Vec<String>) -> Option<f64> {
    let means = group_means(hard, groups, cs, |n| y[n] == label);
    max_pair_gap(&means, &format!("{name} (y={label})"), notes)
}

/// Largest true-positive-rate gap between groups.
pub fn eqopp(y: &[f64], hard: &[f64], groups: &[usize], cs: usize) -> Result<Annotated> {
    check_groups(hard.len(), groups, cs)?;
    let mut notes = Vec::new();
    let value = conditional_gap(y, hard, groups, cs, 1.0, "EqOpp", &mut notes)
        .ok_or_else(|| Error::UndefinedMetric("EqOpp: no pair of groups with positives".into()))?;
    Ok(Annotated { value, annotations: notes })
}

/// Largest gap, over both labels, of the conditional positive rate between
/// groups.
pub fn eqodd(y: &[f64], hard: &[f64], groups: &[usize], cs: usize) -> Result<Annotated> {
    check_groups(hard.len(), groups, cs)?;
    let mut notes = Vec::new();
    let neg = conditional_gap(y, hard, groups, cs, 0.0, "EqOdd", &mut notes);
    let pos = conditional_gap(y, hard, groups, cs, 1.0, "EqOdd", &mut notes);
    let value = match (neg, pos) {
        (Some(a), Some(b)) => a.max(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => {
            return Err(Error::UndefinedMetric("EqOdd: no defined group pair".into()))
        }
    };
    Ok(Annotated { value, annotations: notes })
}

/// Wasserstein-1 distance between two equally sized empirical samples: the
/// mean absolute difference of their order statistics.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "wasserstein1 needs equal sample sizes, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Empty("wasserstein1 of empty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// Normalization of the pairwise counterfactual sums, `C^s (C^s − 1)`.
pub fn zeta(cs: usize) -> f64 {
    (cs * (cs - 1)) as f64
}

/// `(1/ζ) Σ_i Σ_{j≠k} dist(i, j, k)` over ordered pairs; a `None` distance
/// skips the term and records why.
pub fn pcm_sum(
    cs: usize,
    name: &str,
    mut dist: impl FnMut(usize, usize, usize) -> Option<f64>,
) -> Result<Annotated> {
    if cs < 2 {
        return Err(Error::Contract("at least two sensitive categories are required".into()));
    }
    let mut total = 0.0;
    let mut used = 0usize;
    let mut notes = Vec::new();
    for i in 0..cs {
        for j in 0..cs {
            for k in 0..cs {
                if j == k {
                    continue;
                }
                match dist(i, j, k) {
                    Some(d) => {
                        total += d;
                        used += 1;
                    }
                    None => notes.push(format!("{name}: term base {i}, ({j}, {k}) skipped")),
                }
            }
        }
    }
    if used == 0 {
        return Err(Error::UndefinedMetric(format!("{name}: every partition is undefined")));
    }
    Ok(Annotated {
        value: total / zeta(cs),
        annotations: notes,
    })
}

/// Average individual fairness. `cells[i * cs + j]` holds the predictions
/// on partition `base i → target j`.
pub fn avgif(cs: usize, cells: &[Vec<f64>]) -> Result<Annotated> {
    if cells.len() != cs * cs {
        return Err(Error::Contract("avgif needs C^s × C^s partitions".into()));
    }
    pcm_sum(cs, "AvgIF", |i, j, k| {
        wasserstein1(&cells[i * cs + j], &cells[i * cs + k]).ok()
    })
}

/// Pairwise counterfactual gap of a per-partition metric.
/// `values[i * cs + j]` is the metric on partition `base i → target j`, or
/// `None` where it is undefined.
pub fn metric_gap(cs: usize, name: &str, values: &[Option<f64>]) -> Result<Annotated> {
    if values.len() != cs * cs {
        return Err(Error::Contract("metric gap needs C^s × C^s partitions".into()));
    }
    pcm_sum(cs, name, |i, j, k| {
        Some((values[i * cs + j]? - values[i * cs + k]?).abs())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dpd_examples() {
        // positive rates 0.8 vs 0.5
        let p = [1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let g = [0, 0, 0, 0, 0, 1, 1, 1, 1];
        assert_abs_diff_eq!(dpd(&p, &g, 2).unwrap().value, 0.3, epsilon = 1e-12);
        assert_eq!(dpd(&[100.0, 50.0], &[0, 1], 2).unwrap().value, 50.0);
        assert_eq!(dpd(&[0.3, 0.3], &[0, 1], 2).unwrap().value, 0.0);
        assert!(matches!(dpd(&p, &[0; 9], 2), Err(Error::UndefinedMetric(_))));
        let skipped = dpd(&[0.2, 0.6], &[0, 2], 3).unwrap();
        assert_abs_diff_eq!(skipped.value, 0.4, epsilon = 1e-12);
        assert_eq!(skipped.annotations.len(), 2);
    }

    #[test]
    fn eq_metrics_examples() {
        // group A: TPR 1.0, group B: TPR 0.3, equal FPR 0
        let mut y = Vec::new();
        let mut h = Vec::new();
        let mut g = Vec::new();
        for n in 0..10 {
            y.push(1.0);
            h.push(1.0);
            g.push(0);
            y.push(1.0);
            h.push(if n < 3 { 1.0 } else { 0.0 });
            g.push(1);
        }
        for grp in 0..2 {
            y.push(0.0);
            h.push(0.0);
            g.push(grp);
        }
        assert_abs_diff_eq!(eqopp(&y, &h, &g, 2).unwrap().value, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(eqodd(&y, &h, &g, 2).unwrap().value, 0.7, epsilon = 1e-12);

        let same = eqodd(&[1.0, 0.0, 1.0, 0.0], &[1.0, 0.0, 1.0, 0.0], &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(same.value, 0.0);

        // no negatives in group 1: y=0 pair skipped with a note
        let r = eqodd(&[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0], &[0, 0, 1], 2).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.annotations.len(), 1);
    }

    #[test]
    fn wasserstein_examples() {
        assert_eq!(wasserstein1(&[0.3, 0.1], &[0.1, 0.3]).unwrap(), 0.0);
        assert_abs_diff_eq!(wasserstein1(&[0.2, 0.4], &[0.3, 0.5]).unwrap(), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(
            wasserstein1(&[1.0, 5.0, -2.0], &[3.5, 7.5, 0.5]).unwrap(),
            2.5,
            epsilon = 1e-12
        );
        assert!(matches!(wasserstein1(&[1.0], &[1.0, 2.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn avgif_binary_expansion() {
        let cells = vec![
            vec![0.1, 0.2],
            vec![0.3, 0.2],
            vec![0.5, 0.9, 0.4],
            vec![0.5, 0.8, 0.4],
        ];
        let w_a = wasserstein1(&cells[0], &cells[1]).unwrap();
        let w_b = wasserstein1(&cells[2], &cells[3]).unwrap();
        // each base contributes both ordered pairs and ζ = 2
        assert_abs_diff_eq!(avgif(2, &cells).unwrap().value, w_a + w_b, epsilon = 1e-15);
        let invariant = vec![vec![0.4, 0.6]; 4];
        assert_eq!(avgif(2, &invariant).unwrap().value, 0.0);
    }

    #[test]
    fn gap_two_partitions() {
        // base 0: F1 0.6 vs 0.4; base 1 invariant
        let values = [Some(0.6), Some(0.4), Some(0.7), Some(0.7)];
        assert_abs_diff_eq!(metric_gap(2, "F1_Gap", &values).unwrap().value, 0.2, epsilon = 1e-12);
        let undefined = [None, Some(0.4), Some(0.7), Some(0.5)];
        let r = metric_gap(2, "AUROC_Gap", &undefined).unwrap();
        assert_abs_diff_eq!(r.value, 0.2, epsilon = 1e-12);
        assert_eq!(r.annotations.len(), 2);
        assert!(matches!(
            metric_gap(2, "x", &[None; 4]),
            Err(Error::UndefinedMetric(_))
        ));
        assert_eq!(metric_gap(3, "x", &[Some(0.5); 9]).unwrap().value, 0.0);
    }
}
