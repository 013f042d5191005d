use rand::seq::SliceRandom;

use super::adam::Adam;
use super::objective::{batch_gradient, batch_loss, Objective};
use super::threshold::select_threshold;
use super::trained::TrainedModel;
use super::{LambdaMode, LossBreakdown, TrainConfig};
use crate::data::{apply_preprocess, fit_preprocess, Dataset, PreprocessStats, Task};
use crate::model::{Model, ModelConfig, Phase};
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

/// `10^⌊l_perf / l_car⌋` clamped to `[1, cap]`. A zero CAR loss, or an
/// exponent at or past `log10(cap)`, gives `cap`.
pub fn lambda_auto(l_perf: f64, l_car: f64, cap: f64) -> f64 {
    if !(l_car > 0.0) {
        return cap;
    }
    let exponent = (l_perf / l_car).floor();
    if !(exponent < cap.log10()) {
        return cap;
    }
    if exponent <= 0.0 {
        return 1.0;
    }
    10f64.powi(exponent as i32).clamp(1.0, cap)
}

/// Fits preprocessing on `train` (raw), then trains on the preprocessed rows.
pub fn train(train: &Dataset, config: &TrainConfig, model_config: &ModelConfig) -> Result<TrainedModel> {
    config.validate()?;
    model_config.validate()?;
    let stats = fit_preprocess(train)?;
    let ds = apply_preprocess(train, &stats)?;
    train_model(&ds, stats, config, model_config)
}

/// Trains on an already preprocessed dataset; `stats` is stored with the
/// result so raw data can be scored later.
pub fn train_model(
    ds: &Dataset,
    stats: PreprocessStats,
    config: &TrainConfig,
    model_config: &ModelConfig,
) -> Result<TrainedModel> {
    config.validate()?;
    if ds.is_empty() {
        return Err(Error::Empty("cannot train on an empty dataset".into()));
    }
    if model_config.task == Task::Classification && ds.y().iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::Contract("classification responses must be 0 or 1".into()));
    }
    let mut model = Model::new(ds.schema_arc().clone(), model_config.clone())?;
    model.check_dataset(ds)?;
    let has_sigma = model.layout().sigma.is_some();
    let form = config.car_form;
    let mut objective = match config.lambda {
        LambdaMode::Off => Some(Objective::plain()),
        LambdaMode::Fixed(v) if v > 0.0 && !has_sigma => {
            return Err(Error::Config(
                "CAR cannot be combined with removing the sensitive feature".into(),
            ))
        }
        LambdaMode::Fixed(_) if !has_sigma => Some(Objective::plain()),
        LambdaMode::Fixed(v) => Some(Objective::car(form, v)),
        LambdaMode::Auto if !has_sigma => {
            return Err(Error::Config(
                "CAR cannot be combined with removing the sensitive feature".into(),
            ))
        }
        LambdaMode::Auto => None,
    };

    let exec = config.exec;
    let mut opt = Adam::new(
        model.param_set(),
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.eps,
    );
    let mut rng = stream_rng(config.seed, Stream::Shuffle);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let (mut perf, mut car) = (0.0, 0.0);
        for (b, rows) in order.chunks(config.batch_size).enumerate() {
            let obj = match objective {
                Some(o) => o,
                None => {
                    let probe = batch_loss(&model, ds, rows, &Objective::car(form, 1.0), exec)?;
                    let lambda = lambda_auto(probe.perf, probe.car, config.lambda_cap);
                    log::info!(
                        "first batch: L_perf {:.6}, L_CAR {:.3e}, λ = {lambda}",
                        probe.perf,
                        probe.car
                    );
                    *objective.insert(Objective::car(form, lambda))
                }
            };
            let loss = batch_gradient(&model, ds, rows, &obj, exec)?;
            let grads = loss.grads.expect("gradient requested");
            if !loss.total.is_finite() || !grads.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b + 1 });
            }
            opt.update(model.param_set_mut(), &grads);
            perf += loss.perf * rows.len() as f64;
            car += loss.car * rows.len() as f64;
        }
        let lambda = objective.map_or(0.0, |o| o.lambda);
        let n = ds.len() as f64;
        let record = LossBreakdown {
            epoch,
            l_perf: perf / n,
            l_car: car / n,
            lambda,
            l_total: perf / n + lambda * car / n,
        };
        log::info!(
            "epoch {epoch}: L_perf {:.6}, L_CAR {:.3e}, L_total {:.6}",
            record.l_perf,
            record.l_car,
            record.l_total
        );
        history.push(record);
    }

    model.set_phase(Phase::Inference);
    let threshold = match model.task() {
        Task::Classification => {
            let scores = model.score_dataset(ds, exec)?;
            Some(select_threshold(ds.y(), &scores)?.0)
        }
        Task::Regression => None,
    };
    let lambda = objective.map_or(0.0, |o| o.lambda);
    TrainedModel::new(model, stats, threshold, lambda, history, config.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_auto_examples() {
        assert_eq!(lambda_auto(1.0, 1.0, 1e6), 10.0);
        assert_eq!(lambda_auto(0.5, 1.0, 1e6), 1.0);
        assert_eq!(lambda_auto(0.693, 1e-6, 1e6), 1e6);
        assert_eq!(lambda_auto(0.693, 0.0, 1e6), 1e6);
        assert_eq!(lambda_auto(2.5, 1.0, 1e6), 100.0);
        assert_eq!(lambda_auto(5.0, 1.0, 1e3), 1e3);
        assert_eq!(lambda_auto(0.0, 1.0, 1e6), 1.0);
    }

    #[test]
    fn lambda_auto_is_monotone() {
        let grid: Vec<f64> = (0..60).map(|i| i as f64 * 0.1).collect();
        for w in grid.windows(2) {
            assert!(lambda_auto(w[0], 1.0, 1e6) <= lambda_auto(w[1], 1.0, 1e6));
            if w[0] > 0.0 {
                assert!(lambda_auto(1.0, w[0], 1e6) >= lambda_auto(1.0, w[1], 1e6));
            }
        }
    }
}
