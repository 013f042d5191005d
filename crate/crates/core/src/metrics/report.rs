use serde::Serialize;

use super::fairness::{avgif, dpd, eqodd, eqopp, metric_gap, zeta, Annotated};
use super::performance::{accuracy, auprc, auroc, f1, fnr, fpr, gini, hard_predictions, mae, pe, rmse};
use crate::data::{perturb, Dataset, Schema, Task};
use crate::exec::Exec;
use crate::{Error, Result};

/// Anything that maps raw dataset rows to scores: probabilities for
/// classification, values for regression.
pub trait Scorer: Sync {
    fn schema(&self) -> &Schema;
    fn task(&self) -> Task;
    /// Decision threshold on scores (classification only).
    fn threshold(&self) -> Option<f64>;
    fn scores(&self, ds: &Dataset, exec: Exec) -> Result<Vec<f64>>;
}

/// Turns undefined-metric outcomes into `None` plus a note; other errors pass.
fn defined(name: &str, r: Result<f64>, notes: &mut Vec<String>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (Error::UndefinedMetric(_) | Error::Empty(_))) => {
            notes.push(format!("{name}: {e}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn defined_annotated(name: &str, r: Result<Annotated>, notes: &mut Vec<String>) -> Result<Option<f64>> {
    match r {
        Ok(a) => {
            notes.extend(a.annotations);
            Ok(Some(a.value))
        }
        Err(e @ (Error::UndefinedMetric(_) | Error::Empty(_))) => {
            notes.push(format!("{name}: {e}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationPerformance {
    #[serde(rename = "Accuracy")]
    pub accuracy: Option<f64>,
    #[serde(rename = "F1")]
    pub f1: Option<f64>,
    #[serde(rename = "FPR")]
    pub fpr: Option<f64>,
    #[serde(rename = "FNR")]
    pub fnr: Option<f64>,
    #[serde(rename = "AUROC")]
    pub auroc: Option<f64>,
    #[serde(rename = "AUPRC")]
    pub auprc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionPerformance {
    #[serde(rename = "Gini")]
    pub gini: Option<f64>,
    #[serde(rename = "PE")]
    pub pe: Option<f64>,
    #[serde(rename = "RMSE")]
    pub rmse: Option<f64>,
    #[serde(rename = "MAE")]
    pub mae: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PerformanceMetrics {
    Classification(ClassificationPerformance),
    Regression(RegressionPerformance),
}

/// Task-appropriate performance metrics. Undefined metrics serialize as
/// `null` and are explained in `annotations`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerformanceReport {
    pub task: Task,
    pub rows: usize,
    pub threshold: Option<f64>,
    #[serde(flatten)]
    pub metrics: PerformanceMetrics,
    pub annotations: Vec<String>,
}

impl PerformanceReport {
    pub fn from_scores(task: Task, y: &[f64], scores: &[f64], threshold: Option<f64>) -> Result<Self> {
        let mut notes = Vec::new();
        let metrics = match task {
            Task::Classification => {
                let t = threshold.ok_or_else(|| {
                    Error::Contract("classification report needs a threshold".into())
                })?;
                let hard = hard_predictions(scores, t);
                PerformanceMetrics::Classification(ClassificationPerformance {
                    accuracy: defined("Accuracy", accuracy(y, &hard), &mut notes)?,
                    f1: defined("F1", f1(y, &hard), &mut notes)?,
                    fpr: defined("FPR", fpr(y, &hard), &mut notes)?,
                    fnr: defined("FNR", fnr(y, &hard), &mut notes)?,
                    auroc: defined("AUROC", auroc(y, scores), &mut notes)?,
                    auprc: defined("AUPRC", auprc(y, scores), &mut notes)?,
                })
            }
            Task::Regression => PerformanceMetrics::Regression(RegressionPerformance {
                gini: defined("Gini", gini(y, scores), &mut notes)?,
                pe: defined("PE", pe(y, scores), &mut notes)?,
                rmse: defined("RMSE", rmse(y, scores), &mut notes)?,
                mae: defined("MAE", mae(y, scores), &mut notes)?,
            }),
        };
        Ok(PerformanceReport {
            task,
            rows: y.len(),
            threshold: match task {
                Task::Classification => threshold,
                Task::Regression => None,
            },
            metrics,
            annotations: notes,
        })
    }

    /// Looks a metric up by its report key (`"AUROC"`, `"RMSE"`, ...).
    pub fn get(&self, key: &str) -> Option<f64> {
        match &self.metrics {
            PerformanceMetrics::Classification(c) => match key {
                "Accuracy" => c.accuracy,
                "F1" => c.f1,
                "FPR" => c.fpr,
                "FNR" => c.fnr,
                "AUROC" => c.auroc,
                "AUPRC" => c.auprc,
                _ => None,
            },
            PerformanceMetrics::Regression(r) => match key {
                "Gini" => r.gini,
                "PE" => r.pe,
                "RMSE" => r.rmse,
                "MAE" => r.mae,
                _ => None,
            },
        }
    }
}

pub fn performance_report(scorer: &dyn Scorer, ds: &Dataset, exec: Exec) -> Result<PerformanceReport> {
    let scores = scorer.scores(ds, exec)?;
    PerformanceReport::from_scores(scorer.task(), ds.y(), &scores, scorer.threshold())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationFairness {
    #[serde(rename = "DPD")]
    pub dpd: Option<f64>,
    #[serde(rename = "EqOdd")]
    pub eqodd: Option<f64>,
    #[serde(rename = "EqOpp")]
    pub eqopp: Option<f64>,
    #[serde(rename = "AvgIF")]
    pub avgif: Option<f64>,
    #[serde(rename = "F1_Gap")]
    pub f1_gap: Option<f64>,
    #[serde(rename = "AUROC_Gap")]
    pub auroc_gap: Option<f64>,
    #[serde(rename = "AUPRC_Gap")]
    pub auprc_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFairness {
    #[serde(rename = "DPD")]
    pub dpd: Option<f64>,
    #[serde(rename = "AvgIF")]
    pub avgif: Option<f64>,
    #[serde(rename = "RMSE_Gap")]
    pub rmse_gap: Option<f64>,
    #[serde(rename = "MAE_Gap")]
    pub mae_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum FairnessMetrics {
    Classification(ClassificationFairness),
    Regression(RegressionFairness),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionSummary {
    pub base: String,
    pub target: String,
    pub size: usize,
    pub mean_score: Option<f64>,
}

/// Group and counterfactual fairness of one scorer on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairnessReport {
    pub task: Task,
    pub rows: usize,
    pub sensitive: String,
    pub threshold: Option<f64>,
    /// Normalization of the pairwise counterfactual sums.
    pub zeta: f64,
    #[serde(flatten)]
    pub metrics: FairnessMetrics,
    /// `|D′_{base→target}|`, base-major.
    pub partitions: Vec<PartitionSummary>,
    pub annotations: Vec<String>,
    /// Scores on every partition, base-major, for audit.
    pub partition_scores: Vec<Vec<f64>>,
}

impl FairnessReport {
    pub fn get(&self, key: &str) -> Option<f64> {
        match &self.metrics {
            FairnessMetrics::Classification(c) => match key {
                "DPD" => c.dpd,
                "EqOdd" => c.eqodd,
                "EqOpp" => c.eqopp,
                "AvgIF" => c.avgif,
                "F1_Gap" => c.f1_gap,
                "AUROC_Gap" => c.auroc_gap,
                "AUPRC_Gap" => c.auprc_gap,
                _ => None,
            },
            FairnessMetrics::Regression(r) => match key {
                "DPD" => r.dpd,
                "AvgIF" => r.avgif,
                "RMSE_Gap" => r.rmse_gap,
                "MAE_Gap" => r.mae_gap,
                _ => None,
            },
        }
    }

    /// Metric keys of this report's task, in report order.
    pub fn keys(&self) -> &'static [&'static str] {
        match self.metrics {
            FairnessMetrics::Classification(_) => {
                &["DPD", "EqOdd", "EqOpp", "AvgIF", "F1_Gap", "AUROC_Gap", "AUPRC_Gap"]
            }
            FairnessMetrics::Regression(_) => &["DPD", "AvgIF", "RMSE_Gap", "MAE_Gap"],
        }
    }
}

fn per_partition(
    cs: usize,
    labels: &[Vec<f64>],
    scores: &[Vec<f64>],
    metric: impl Fn(&[f64], &[f64]) -> Result<f64>,
) -> Result<Vec<Option<f64>>> {
    (0..cs * cs)
        .map(|c| match metric(&labels[c], &scores[c]) {
            Ok(v) => Ok(Some(v)),
            Err(Error::UndefinedMetric(_) | Error::Empty(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Builds every counterfactual rewrite of `ds`, scores each partition and
/// evaluates group fairness on `ds` itself and counterfactual fairness across
/// partitions.
pub fn fairness_report(scorer: &dyn Scorer, ds: &Dataset, exec: Exec) -> Result<FairnessReport> {
    let schema = ds.schema();
    let cs = schema.sensitive_cardinality();
    let sigma = schema.sensitive();
    let task = scorer.task();
    let pd = perturb(ds)?;
    let mut notes = Vec::new();

    let mut partition_scores = Vec::with_capacity(cs * cs);
    let mut labels = Vec::with_capacity(cs * cs);
    let mut partitions = Vec::with_capacity(cs * cs);
    for part in pd.partitions() {
        let s = if part.data.is_empty() {
            Vec::new()
        } else {
            scorer.scores(&part.data, exec)?
        };
        partitions.push(PartitionSummary {
            base: schema.category_label(sigma, part.base).unwrap().to_string(),
            target: schema.category_label(sigma, part.target).unwrap().to_string(),
            size: part.rows.len(),
            mean_score: (!s.is_empty()).then(|| s.iter().sum::<f64>() / s.len() as f64),
        });
        partition_scores.push(s);
        labels.push(part.data.y().to_vec());
    }

    let scores = scorer.scores(ds, exec)?;
    let groups = ds.sensitive_groups();
    let y = ds.y();
    let avg = defined_annotated("AvgIF", avgif(cs, &partition_scores), &mut notes)?;

    let metrics = match task {
        Task::Classification => {
            let t = scorer
                .threshold()
                .ok_or_else(|| Error::Contract("classification audit needs a threshold".into()))?;
            let hard = hard_predictions(&scores, t);
            let hard_parts: Vec<Vec<f64>> =
                partition_scores.iter().map(|s| hard_predictions(s, t)).collect();
            let f1s = per_partition(cs, &labels, &hard_parts, f1)?;
            let aurocs = per_partition(cs, &labels, &partition_scores, auroc)?;
            let auprcs = per_partition(cs, &labels, &partition_scores, auprc)?;
            FairnessMetrics::Classification(ClassificationFairness {
                dpd: defined_annotated("DPD", dpd(&hard, &groups, cs), &mut notes)?,
                eqodd: defined_annotated("EqOdd", eqodd(y, &hard, &groups, cs), &mut notes)?,
                eqopp: defined_annotated("EqOpp", eqopp(y, &hard, &groups, cs), &mut notes)?,
                avgif: avg,
                f1_gap: defined_annotated("F1_Gap", metric_gap(cs, "F1_Gap", &f1s), &mut notes)?,
                auroc_gap: defined_annotated(
                    "AUROC_Gap",
                    metric_gap(cs, "AUROC_Gap", &aurocs),
                    &mut notes,
                )?,
                auprc_gap: defined_annotated(
                    "AUPRC_Gap",
                    metric_gap(cs, "AUPRC_Gap", &auprcs),
                    &mut notes,
                )?,
            })
        }
        Task::Regression => {
            let rmses = per_partition(cs, &labels, &partition_scores, rmse)?;
            let maes = per_partition(cs, &labels, &partition_scores, mae)?;
            FairnessMetrics::Regression(RegressionFairness {
                dpd: defined_annotated("DPD", dpd(&scores, &groups, cs), &mut notes)?,
                avgif: avg,
                rmse_gap: defined_annotated(
                    "RMSE_Gap",
                    metric_gap(cs, "RMSE_Gap", &rmses),
                    &mut notes,
                )?,
                mae_gap: defined_annotated("MAE_Gap", metric_gap(cs, "MAE_Gap", &maes), &mut notes)?,
            })
        }
    };

    Ok(FairnessReport {
        task,
        rows: ds.len(),
        sensitive: schema.feature(sigma).name.clone(),
        threshold: scorer.threshold(),
        zeta: zeta(cs),
        metrics,
        partitions,
        annotations: notes,
        partition_scores,
    })
}
