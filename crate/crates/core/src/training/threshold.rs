use crate::metrics::{f1, hard_predictions};
use crate::Result;

/// `{0.01, 0.02, …, 0.99}`.
pub fn threshold_grid() -> Vec<f64> {
    (1..=99).map(|k| k as f64 / 100.0).collect()
}

/// Threshold on the grid maximizing F1 of `score ≥ t`; ties go to the
/// smallest threshold. Returns `(threshold, F1)`.
pub fn select_threshold(y: &[f64], scores: &[f64]) -> Result<(f64, f64)> {
    let mut best = (0.0, f64::NEG_INFINITY);
    for t in threshold_grid() {
        let score = f1(y, &hard_predictions(scores, t))?;
        if score > best.1 {
            best = (t, score);
        }
    }
    Ok(best)
}
