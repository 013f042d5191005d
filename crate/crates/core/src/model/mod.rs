//! The projection-free attention encoder over per-feature scalar embeddings.
//!
//! Every feature is embedded to a single scalar, so a row becomes a length-`p`
//! vector `E(x)`. Attention scores are the outer product of the normalized
//! embedding with itself, which makes the pre-SoftMax matrix directly readable
//! as pairwise feature dependency (diagonal: significance).
//!
//! For counterfactual regularization the embedding can be augmented with one
//! extra slot per sensitive category, computed from the sensitive feature's own
//! parameters; see [`Model::forward_augmented`].

mod attention;
mod forward;
pub mod layers;
mod params;

use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Schema, Task};
use crate::diffcore::{sigmoid, ParamSet};
use crate::exec::Exec;
use crate::{Error, Result};

pub use attention::{AttentionSummary, LayerAttention, SignificanceProfile};
pub use forward::{Built, BuiltLayer, ForwardTrace, LayerTrace};
pub use params::{init_params, parameter_count, ModelParams, ParamIndex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub task: Task,
    pub n_encoder_layers: usize,
    pub residual_attention: bool,
    pub head_sizes: Vec<usize>,
    pub init_seed: u64,
    /// Drop the sensitive feature from the input entirely.
    pub removal_baseline: bool,
}

impl ModelConfig {
    pub fn new(task: Task) -> Self {
        ModelConfig {
            task,
            n_encoder_layers: 1,
            residual_attention: false,
            head_sizes: vec![64, 32],
            init_seed: 0,
            removal_baseline: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_encoder_layers == 0 {
            return Err(Error::Config("at least one encoder layer is required".into()));
        }
        if self.head_sizes.contains(&0) {
            return Err(Error::Config("head layer widths must be positive".into()));
        }
        Ok(())
    }
}

/// Whether augmentation may be used. Trained models are handed out in
/// inference phase, where [`Model::forward_augmented`] refuses to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Training,
    Inference,
}

/// Which schema features the model sees, and where they sit in `E(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    /// Schema indices of the embedded features, in schema order.
    pub features: Vec<usize>,
    pub cat_features: Vec<usize>,
    pub con_features: Vec<usize>,
    /// One-hot block boundaries over `cat_features`.
    pub onehot_bounds: Arc<[usize]>,
    /// `E[k] = concat(cat, con)[perm[k]]`.
    pub perm: Arc<[usize]>,
    /// Position of the sensitive feature in `E(x)`; `None` in removal mode.
    pub sigma: Option<usize>,
    /// Ordinal of the sensitive feature among `cat_features`.
    pub sigma_cat: Option<usize>,
    /// Number of sensitive categories.
    pub cs: usize,
}

impl Layout {
    pub fn new(schema: &Schema, removal: bool) -> Result<Self> {
        let features: Vec<usize> = (0..schema.p())
            .filter(|&f| !(removal && f == schema.sensitive()))
            .collect();
        if features.len() < 2 {
            return Err(Error::Config(
                "the attention encoder needs at least two embedded features".into(),
            ));
        }
        let cat_features: Vec<usize> =
            features.iter().copied().filter(|&f| schema.cardinality(f).is_some()).collect();
        let con_features: Vec<usize> =
            features.iter().copied().filter(|&f| schema.cardinality(f).is_none()).collect();
        let mut bounds = vec![0];
        for &f in &cat_features {
            bounds.push(bounds.last().unwrap() + schema.cardinality(f).unwrap());
        }
        let perm: Vec<usize> = features
            .iter()
            .map(|f| match cat_features.iter().position(|c| c == f) {
                Some(c) => c,
                None => cat_features.len() + con_features.iter().position(|c| c == f).unwrap(),
            })
            .collect();
        let sigma = features.iter().position(|&f| f == schema.sensitive());
        let sigma_cat = cat_features.iter().position(|&f| f == schema.sensitive());
        Ok(Layout {
            features,
            cat_features,
            con_features,
            onehot_bounds: bounds.into(),
            perm: perm.into(),
            sigma,
            sigma_cat,
            cs: schema.sensitive_cardinality(),
        })
    }

    /// Embedding width `k` (p, or p−1 in removal mode).
    pub fn width(&self) -> usize {
        self.features.len()
    }

    pub fn p_onehot(&self) -> usize {
        *self.onehot_bounds.last().unwrap()
    }

    /// One-hot slots of the sensitive feature.
    pub fn sigma_block(&self) -> Option<Range<usize>> {
        self.sigma_cat
            .map(|c| self.onehot_bounds[c]..self.onehot_bounds[c + 1])
    }
}

/// Schema, configuration and parameters of one network.
#[derive(Debug, Clone)]
pub struct Model {
    schema: Arc<Schema>,
    config: ModelConfig,
    layout: Layout,
    index: ParamIndex,
    params: ModelParams,
    phase: Phase,
}

impl Model {
    /// Freshly initialized model in training phase.
    pub fn new(schema: Arc<Schema>, config: ModelConfig) -> Result<Self> {
        config.validate()?;
        if config.task != schema.task() {
            return Err(Error::Config(format!(
                "model task {:?} does not match schema task {:?}",
                config.task,
                schema.task()
            )));
        }
        let layout = Layout::new(&schema, config.removal_baseline)?;
        let (index, params) = init_params(&layout, &config);
        Ok(Model {
            schema,
            config,
            layout,
            index,
            params,
            phase: Phase::Training,
        })
    }

    /// Rebuilds a model around existing parameters; names and shapes must
    /// match the layout implied by `schema` and `config`.
    pub fn from_params(schema: Arc<Schema>, config: ModelConfig, params: ModelParams) -> Result<Self> {
        let mut model = Model::new(schema, config)?;
        params::check_compatible(&model.params, &params)?;
        model.params = params;
        model.phase = Phase::Inference;
        Ok(model)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn index(&self) -> &ParamIndex {
        &self.index
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn param_set(&self) -> &ParamSet {
        &self.params.set
    }

    pub fn param_set_mut(&mut self) -> &mut ParamSet {
        &mut self.params.set
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn task(&self) -> Task {
        self.config.task
    }

    /// Score for one preprocessed row: probability for classification, value
    /// for regression.
    pub fn score(&self, row: &[f64]) -> Result<f64> {
        let raw = self.predict_raw(row)?;
        Ok(match self.config.task {
            Task::Classification => sigmoid(raw),
            Task::Regression => raw,
        })
    }

    /// Scores every row, in row order.
    pub fn score_dataset(&self, ds: &Dataset, exec: Exec) -> Result<Vec<f64>> {
        self.check_dataset(ds)?;
        exec.map_range(ds.len(), |n| self.score(ds.row(n)))
            .into_iter()
            .collect()
    }

    pub fn check_dataset(&self, ds: &Dataset) -> Result<()> {
        check_same_schema(&self.schema, ds.schema())?;
        if ds.has_missing() {
            return Err(Error::Contract("dataset must be preprocessed (missing cells remain)".into()));
        }
        Ok(())
    }
}

/// Errors with the first differing feature when two schemas disagree.
pub fn check_same_schema(expected: &Schema, actual: &Schema) -> Result<()> {
    if expected == actual {
        return Ok(());
    }
    for f in 0..expected.p().max(actual.p()) {
        let (a, b) = (expected.features().get(f), actual.features().get(f));
        if a != b {
            let name = a.or(b).map(|s| s.name.clone()).unwrap_or_default();
            return Err(Error::SchemaMismatch {
                feature: name,
                message: match (a, b) {
                    (Some(_), None) => "missing from data schema".into(),
                    (None, Some(_)) => "not present in model schema".into(),
                    _ => "declaration differs between model and data".into(),
                },
            });
        }
    }
    let feature = if expected.sensitive() != actual.sensitive() {
        expected.feature(expected.sensitive()).name.clone()
    } else {
        expected.response().to_string()
    };
    Err(Error::SchemaMismatch {
        feature,
        message: "sensitive flag, response or task differs".into(),
    })
}
