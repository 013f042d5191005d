//! Performance metrics and group / counterfactual fairness metrics.
//!
//! Counterfactual metrics compare a model's outputs across the partitions of
//! a [`PerturbedDataset`](crate::data::PerturbedDataset): for every base
//! category `s_i` and every ordered pair of targets `s_j ≠ s_k`, a distance
//! between the outputs on `D′_{s_i→s_j}` and `D′_{s_i→s_k}` is summed and
//! divided by `ζ = C^s (C^s − 1)`.

mod fairness;
mod performance;
mod report;

pub use fairness::{avgif, dpd, eqodd, eqopp, metric_gap, pcm_sum, wasserstein1, zeta, Annotated};
pub use performance::{
    accuracy, auprc, auroc, confusion, f1, fnr, fpr, gini, hard_predictions, mae, pe, rmse,
};
pub use report::{
    fairness_report, performance_report, ClassificationFairness, ClassificationPerformance,
    FairnessMetrics, FairnessReport, PartitionSummary, PerformanceMetrics, PerformanceReport,
    RegressionFairness, RegressionPerformance, Scorer,
};
