use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{LossBreakdown, TrainConfig};
use crate::data::{apply_preprocess, Dataset, PreprocessStats, Schema, Task};
use crate::exec::Exec;
use crate::metrics::Scorer;
use crate::model::{check_same_schema, Model, ModelConfig, ModelParams};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// A trained network with everything needed to score raw data.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    model: Model,
    preprocess: PreprocessStats,
    threshold: Option<f64>,
    lambda: f64,
    history: Vec<LossBreakdown>,
    train_config: TrainConfig,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    schema: Schema,
    model_config: ModelConfig,
    train_config: TrainConfig,
    preprocess: PreprocessStats,
    threshold: Option<f64>,
    lambda: f64,
    history: Vec<LossBreakdown>,
    params: ModelParams,
}

impl TrainedModel {
    pub(crate) fn new(
        model: Model,
        preprocess: PreprocessStats,
        threshold: Option<f64>,
        lambda: f64,
        history: Vec<LossBreakdown>,
        train_config: TrainConfig,
    ) -> Result<Self> {
        match (model.task(), threshold) {
            (Task::Classification, Some(t)) if t > 0.0 && t < 1.0 => {}
            (Task::Regression, None) => {}
            (task, t) => {
                return Err(Error::Contract(format!(
                    "threshold {t:?} is invalid for a {task:?} model"
                )))
            }
        }
        if preprocess.features.len() != model.schema().p() {
            return Err(Error::Contract("preprocessing stats do not match the schema".into()));
        }
        Ok(TrainedModel {
            model,
            preprocess,
            threshold,
            lambda,
            history,
            train_config,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn preprocess(&self) -> &PreprocessStats {
        &self.preprocess
    }

    /// λ used for training (0 without CAR).
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn history(&self) -> &[LossBreakdown] {
        &self.history
    }

    pub fn train_config(&self) -> &TrainConfig {
        &self.train_config
    }

    /// Standardizes and imputes a raw dataset with the training statistics.
    pub fn prepare(&self, ds: &Dataset) -> Result<Dataset> {
        check_same_schema(self.model.schema(), ds.schema())?;
        apply_preprocess(ds, &self.preprocess)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format_version: FORMAT_VERSION,
            schema: self.model.schema().clone(),
            model_config: self.model.config().clone(),
            train_config: self.train_config.clone(),
            preprocess: self.preprocess.clone(),
            threshold: self.threshold,
            lambda: self.lambda,
            history: self.history.clone(),
            params: self.model.params().clone(),
        };
        let mut text = serde_json::to_string_pretty(&file)
            .map_err(|e| Error::Contract(format!("model serialization: {e}")))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::Contract(format!("model file: {e}")))?;
        Self::from_file(file)
    }

    fn from_file(file: ModelFile) -> Result<Self> {
        if file.format_version != FORMAT_VERSION {
            return Err(Error::Contract(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        let model = Model::from_params(Arc::new(file.schema), file.model_config, file.params)?;
        Self::new(
            model,
            file.preprocess,
            file.threshold,
            file.lambda,
            file.history,
            file.train_config,
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        Self::from_file(file)
    }
}

impl Scorer for TrainedModel {
    fn schema(&self) -> &Schema {
        self.model.schema()
    }

    fn task(&self) -> Task {
        self.model.task()
    }

    fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    fn scores(&self, ds: &Dataset, exec: Exec) -> Result<Vec<f64>> {
        let prepared = self.prepare(ds)?;
        self.model.score_dataset(&prepared, exec)
    }
}
