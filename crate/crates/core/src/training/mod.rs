//! Loss assembly, optimization, threshold selection and the λ sweep.
//!
//! The objective is `L = L_perf + λ·L_CAR`, both terms averaged over the
//! mini-batch. `L_CAR` penalizes differences between the sensitive feature's
//! first-layer attention column and its counterfactual columns, either through
//! the augmented embedding ([`CarForm::Augmented`]) or by re-running the model
//! on every counterfactual rewrite of the row ([`CarForm::Cda`]).

mod adam;
mod car;
mod fit;
mod objective;
mod sweep;
mod threshold;
mod trained;

use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::{Error, Result};

pub use adam::Adam;
pub use car::{car_loss_augmented, car_loss_cda, car_node_augmented, car_node_cda};
pub use fit::{lambda_auto, train, train_model};
pub use objective::{batch_gradient, batch_loss, BatchLoss, Objective};
pub use sweep::{lambda_sweep, SweepRow, SweepTable};
pub use threshold::{select_threshold, threshold_grid};
pub use trained::{TrainedModel, FORMAT_VERSION};

/// How the regularization weight is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaMode {
    /// `10^⌊L¹_perf / L¹_CAR⌋` from the first batch, clamped to `[1, cap]`.
    Auto,
    Fixed(f64),
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CarForm {
    Augmented,
    Cda,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub lambda: LambdaMode,
    pub lambda_cap: f64,
    pub car_form: CarForm,
    /// Seeds the batch shuffling stream.
    pub seed: u64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            lambda: LambdaMode::Auto,
            lambda_cap: 1e6,
            car_form: CarForm::Augmented,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("moment coefficients must lie in [0, 1)".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config("optimizer epsilon must be positive".into()));
        }
        if !(self.lambda_cap >= 1.0) {
            return Err(Error::Config("λ cap must be at least 1".into()));
        }
        if let LambdaMode::Fixed(v) = self.lambda {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("λ must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Mean losses of one epoch. Also the epoch-log record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub epoch: usize,
    #[serde(rename = "L_perf")]
    pub l_perf: f64,
    #[serde(rename = "L_CAR")]
    pub l_car: f64,
    pub lambda: f64,
    #[serde(rename = "L_total")]
    pub l_total: f64,
}
