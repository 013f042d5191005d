use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::Dataset;
use super::schema::{FeatureSpec, Schema, Task};
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

fn binary(name: &str) -> FeatureSpec {
    FeatureSpec::categorical(name, &["0", "1"])
}

/// Schema of [`generate_synthetic`]: binary `X_1` (sensitive), `X_2`, `X_3`
/// and a binary response `y`.
pub fn synthetic_schema() -> Schema {
    Schema::new(
        vec![binary("X_1"), binary("X_2"), binary("X_3")],
        0,
        "y",
        Task::Classification,
    )
    .expect("static schema is valid")
}

/// Draws `n` rows of the three-feature process:
///
/// ```text
/// X_2 ~ Ber(0.5)    X_3 ~ Ber(0.5)
/// X_1 | X_2 ~ Ber(0.7 if X_2 = 1 else 0.3)
/// y | X_2, X_3 ~ Ber(0.8 if X_2 + X_3 = 2 else 0.2)
/// ```
///
/// `X_1` is sensitive and uninformative given `X_2`.
pub fn generate_synthetic(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Config("synthetic row count must be at least 1".into()));
    }
    let mut rng = stream_rng(seed, Stream::Synth);
    let mut values = Vec::with_capacity(3 * n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let x2 = rng.random_bool(0.5);
        let x3 = rng.random_bool(0.5);
        let x1 = rng.random_bool(if x2 { 0.7 } else { 0.3 });
        let label = rng.random_bool(if x2 && x3 { 0.8 } else { 0.2 });
        values.extend_from_slice(&[f64::from(x1), f64::from(x2), f64::from(x3)]);
        y.push(f64::from(label));
    }
    Dataset::from_rows(Arc::new(synthetic_schema()), values, y)
}

pub fn proxy_schema() -> Schema {
    Schema::new(
        vec![
            binary("X_1"),
            binary("X_2"),
            binary("X_3"),
            FeatureSpec::continuous("X_4"),
        ],
        0,
        "y",
        Task::Regression,
    )
    .expect("static schema is valid")
}

/// Regression variant with a continuous proxy of the sensitive feature:
///
/// ```text
/// X_2, X_3 ~ Ber(0.5)    X_1 | X_2 ~ Ber(0.7 if X_2 = 1 else 0.3)
/// X_4 = X_1 + N(0, 0.5²)
/// y = X_2 + X_3 + 0.5·X_1 + N(0, 0.5²)
/// ```
///
/// Dropping `X_1` leaves its signal recoverable through `X_4`.
pub fn generate_proxy_variant(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Config("synthetic row count must be at least 1".into()));
    }
    let mut rng = stream_rng(seed, Stream::Synth);
    let noise = Normal::new(0.0, 0.5).expect("valid normal");
    let mut values = Vec::with_capacity(4 * n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let x2 = f64::from(rng.random_bool(0.5));
        let x3 = f64::from(rng.random_bool(0.5));
        let x1 = f64::from(rng.random_bool(if x2 == 1.0 { 0.7 } else { 0.3 }));
        let x4 = x1 + noise.sample(&mut rng);
        y.push(x2 + x3 + 0.5 * x1 + noise.sample(&mut rng));
        values.extend_from_slice(&[x1, x2, x3, x4]);
    }
    Dataset::from_rows(Arc::new(proxy_schema()), values, y)
}
