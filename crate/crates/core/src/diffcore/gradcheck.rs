use serde::Serialize;

use super::tensor::ParamSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ParamGradError {
    pub name: String,
    pub max_rel_error: f64,
    /// Flat index of the worst coordinate within this parameter.
    pub worst_index: usize,
}

/// Analytic-versus-numeric gradient comparison for every parameter.
#[derive(Debug, Clone, Serialize)]
pub struct GradReport {
    pub step: f64,
    pub params: Vec<ParamGradError>,
    pub max_rel_error: f64,
    /// `(parameter name, flat index)` of the worst coordinate overall.
    pub worst: Option<(String, usize)>,
}

impl GradReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error <= tolerance
    }
}

/// Compares the gradients returned by `eval` against central differences
/// `(f(θ+h) − f(θ−h)) / 2h`, coordinate by coordinate. The relative error uses
/// `max(|analytic|, |numeric|, 1e-8)` as denominator.
///
/// `eval` must return the loss and its gradient (same layout as `params`), and
/// must be deterministic; two evaluations at `params` are compared bitwise.
pub fn grad_check<F>(params: &ParamSet, step: f64, mut eval: F) -> Result<GradReport>
where
    F: FnMut(&ParamSet) -> Result<(f64, ParamSet)>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Contract(format!("grad_check: step must be positive, got {step}")));
    }
    let (f0, analytic) = eval(params)?;
    let (f1, analytic_again) = eval(params)?;
    if f0.to_bits() != f1.to_bits() || analytic != analytic_again {
        return Err(Error::UnreliableCheck(
            "repeated evaluation at identical parameters differs".into(),
        ));
    }
    if analytic.len() != params.len() {
        return Err(Error::Contract("grad_check: gradient layout differs from parameters".into()));
    }

    let mut probe = params.clone();
    let mut report = GradReport {
        step,
        params: Vec::with_capacity(params.len()),
        max_rel_error: 0.0,
        worst: None,
    };
    for slot in 0..params.len() {
        let mut entry = ParamGradError {
            name: params.entries[slot].name.clone(),
            max_rel_error: 0.0,
            worst_index: 0,
        };
        for k in 0..params.get(slot).len() {
            let original = params.get(slot).data[k];
            probe.get_mut(slot).data[k] = original + step;
            let (plus, _) = eval(&probe)?;
            probe.get_mut(slot).data[k] = original - step;
            let (minus, _) = eval(&probe)?;
            probe.get_mut(slot).data[k] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let exact = analytic.get(slot).data[k];
            let denom = exact.abs().max(numeric.abs()).max(1e-8);
            let rel = (exact - numeric).abs() / denom;
            if rel > entry.max_rel_error || !rel.is_finite() {
                entry.max_rel_error = rel;
                entry.worst_index = k;
            }
        }
        if report.worst.is_none() || !(entry.max_rel_error <= report.max_rel_error) {
            report.max_rel_error = entry.max_rel_error;
            report.worst = Some((entry.name.clone(), entry.worst_index));
        }
        report.params.push(entry);
    }
    Ok(report)
}
