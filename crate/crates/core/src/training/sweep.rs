use std::path::Path;

use serde::Serialize;

use super::fit::train;
use super::{LambdaMode, LossBreakdown, TrainConfig};
use crate::data::Dataset;
use crate::exec::Exec;
use crate::metrics::{fairness_report, performance_report, FairnessReport, PerformanceReport};
use crate::model::ModelConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub fairness: FairnessReport,
    pub performance: PerformanceReport,
    pub final_loss: Option<LossBreakdown>,
}

/// One row per λ, in input order.
#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// CSV with a `lambda` column followed by the fairness metrics of the
    /// task. Undefined metrics are left empty.
    pub fn to_csv(&self) -> Result<String> {
        let keys = self.rows.first().map(|r| r.fairness.keys()).unwrap_or(&[]);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["lambda"];
        header.extend_from_slice(keys);
        w.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![row.lambda.to_string()];
            for k in keys {
                record.push(row.fairness.get(k).map(|v| v.to_string()).unwrap_or_default());
            }
            w.write_record(&record)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Contract(format!("csv buffer: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }
}

/// Trains one model per λ (all sharing `config.seed` and the model's init
/// seed) on `train_ds` and evaluates fairness on `eval_ds`. Runs fan out over
/// `exec`; each run is internally sequential.
pub fn lambda_sweep(
    train_ds: &Dataset,
    eval_ds: &Dataset,
    lambdas: &[f64],
    config: &TrainConfig,
    model_config: &ModelConfig,
    exec: Exec,
) -> Result<SweepTable> {
    if lambdas.len() < 2 {
        return Err(Error::Config("a sweep needs at least two λ values".into()));
    }
    if let Some(bad) = lambdas.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(Error::Config(format!("λ must be finite and non-negative, got {bad}")));
    }
    let rows = exec.map(lambdas, |&lambda| -> Result<SweepRow> {
        let mut cfg = config.clone();
        cfg.lambda = LambdaMode::Fixed(lambda);
        cfg.exec = Exec::Sequential;
        let trained = train(train_ds, &cfg, model_config)?;
        Ok(SweepRow {
            lambda,
            fairness: fairness_report(&trained, eval_ds, Exec::Sequential)?,
            performance: performance_report(&trained, eval_ds, Exec::Sequential)?,
            final_loss: trained.history().last().copied(),
        })
    });
    Ok(SweepTable {
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}
