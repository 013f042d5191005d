use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::schema::Schema;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureStats {
    /// `scale` is the population standard deviation, or 1 when that is 0.
    Continuous { mean: f64, std: f64, scale: f64 },
    Categorical { mode: usize },
}

/// Training-split statistics used to standardize and impute any split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessStats {
    pub features: Vec<FeatureStats>,
}

/// Computes per-feature statistics from the observed (non-missing) cells of
/// `train`. A column with no observed cells gets mean 0 / mode 0.
pub fn fit_preprocess(train: &Dataset) -> Result<PreprocessStats> {
    if train.is_empty() {
        return Err(Error::Empty("cannot fit preprocessing on an empty dataset".into()));
    }
    let schema = train.schema();
    let mut features = Vec::with_capacity(schema.p());
    for f in 0..schema.p() {
        let observed = (0..train.len()).filter(|&n| !train.is_missing(n, f));
        match schema.cardinality(f) {
            Some(card) => {
                let mut counts = vec![0usize; card];
                for n in observed {
                    counts[train.category(n, f)] += 1;
                }
                // first maximum: ties go to the lowest category index
                let mut mode = 0;
                for (k, &c) in counts.iter().enumerate() {
                    if c > counts[mode] {
                        mode = k;
                    }
                }
                features.push(FeatureStats::Categorical { mode });
            }
            None => {
                let xs: Vec<f64> = observed.map(|n| train.value(n, f)).collect();
                let (mean, std) = if xs.is_empty() {
                    (0.0, 0.0)
                } else {
                    let m = xs.iter().sum::<f64>() / xs.len() as f64;
                    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
                    (m, var.sqrt())
                };
                let scale = if std > 0.0 {
                    std
                } else {
                    log::warn!(
                        "feature `{}` has zero variance; scale forced to 1",
                        schema.feature(f).name
                    );
                    1.0
                };
                features.push(FeatureStats::Continuous { mean, std, scale });
            }
        }
    }
    Ok(PreprocessStats { features })
}

/// Standardizes continuous cells, then fills missing cells: continuous with 0
/// (the standardized training mean), categorical with the training mode.
pub fn apply_preprocess(ds: &Dataset, stats: &PreprocessStats) -> Result<Dataset> {
    let schema = ds.schema();
    check_layout(schema, stats)?;
    let p = schema.p();
    let mut values = ds.values().to_vec();
    for n in 0..ds.len() {
        for (f, st) in stats.features.iter().enumerate() {
            let cell = &mut values[n * p + f];
            let missing = ds.is_missing(n, f);
            *cell = match *st {
                FeatureStats::Continuous { mean, scale, .. } => {
                    if missing {
                        0.0
                    } else {
                        (*cell - mean) / scale
                    }
                }
                FeatureStats::Categorical { mode } => {
                    if missing {
                        mode as f64
                    } else {
                        *cell
                    }
                }
            };
        }
    }
    Ok(ds.with_values(values))
}

fn check_layout(schema: &Schema, stats: &PreprocessStats) -> Result<()> {
    if stats.features.len() != schema.p() {
        return Err(Error::Contract(format!(
            "preprocessing covers {} features, schema has {}",
            stats.features.len(),
            schema.p()
        )));
    }
    for (f, st) in stats.features.iter().enumerate() {
        let ok = match st {
            FeatureStats::Continuous { .. } => schema.cardinality(f).is_none(),
            FeatureStats::Categorical { mode } => {
                schema.cardinality(f).is_some_and(|c| *mode < c)
            }
        };
        if !ok {
            return Err(Error::SchemaMismatch {
                feature: schema.feature(f).name.clone(),
                message: "preprocessing statistics do not match feature kind".into(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::{FeatureSpec, Task};
    use proptest::prelude::*;

    fn schema() -> Arc<Schema> {
        Arc::new(
            Schema::new(
                vec![
                    FeatureSpec::categorical("g", &["A", "B"]),
                    FeatureSpec::continuous("x"),
                ],
                0,
                "y",
                Task::Regression,
            )
            .unwrap(),
        )
    }

    fn cells(rows: &[(Option<f64>, Option<f64>)]) -> Dataset {
        let mut c = Vec::new();
        for &(g, x) in rows {
            c.push(g);
            c.push(x);
        }
        Dataset::from_cells(schema(), c, vec![0.0; rows.len()]).unwrap()
    }

    #[test]
    fn mean_maps_to_zero() {
        let train = cells(&[(Some(0.0), Some(1.0)), (Some(0.0), Some(2.0)), (Some(1.0), Some(3.0))]);
        let stats = fit_preprocess(&train).unwrap();
        let probe = cells(&[(Some(1.0), Some(2.0)), (None, None)]);
        let out = apply_preprocess(&probe, &stats).unwrap();
        assert_eq!(out.value(0, 1), 0.0);
        assert_eq!(out.value(1, 1), 0.0);
        // categorical train [A, A, B] -> mode A
        assert_eq!(out.category(1, 0), 0);
        assert!(!out.has_missing());
    }

    #[test]
    fn zero_variance_scale_is_one() {
        let train = cells(&[(Some(0.0), Some(4.0)), (Some(1.0), Some(4.0))]);
        let stats = fit_preprocess(&train).unwrap();
        assert_eq!(
            stats.features[1],
            FeatureStats::Continuous { mean: 4.0, std: 0.0, scale: 1.0 }
        );
        let out = apply_preprocess(&train, &stats).unwrap();
        assert_eq!(out.value(0, 1), 0.0);
    }

    #[test]
    fn mode_tie_takes_first_category() {
        let train = cells(&[(Some(1.0), Some(0.0)), (Some(0.0), Some(1.0))]);
        let stats = fit_preprocess(&train).unwrap();
        assert_eq!(stats.features[0], FeatureStats::Categorical { mode: 0 });
    }

    #[test]
    fn empty_train_is_rejected() {
        let empty = cells(&[]);
        assert!(matches!(fit_preprocess(&empty), Err(Error::Empty(_))));
    }

    proptest! {
        #[test]
        fn standardized_train_has_unit_moments(xs in proptest::collection::vec(-1e3f64..1e3, 2..60)) {
            let rows: Vec<_> = xs.iter().map(|&x| (Some(0.0), Some(x))).collect();
            let train = cells(&rows);
            let stats = fit_preprocess(&train).unwrap();
            let FeatureStats::Continuous { std, .. } = stats.features[1] else { unreachable!() };
            prop_assume!(std > 1e-6);
            let out = apply_preprocess(&train, &stats).unwrap();
            let col: Vec<f64> = (0..out.len()).map(|n| out.value(n, 1)).collect();
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let s = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / col.len() as f64).sqrt();
            prop_assert!(m.abs() <= 1e-9);
            prop_assert!((s - 1.0).abs() <= 1e-9);
        }
    }
}
