use rand::seq::SliceRandom;

use super::dataset::Dataset;
use super::schema::Task;
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

/// Shuffled train/test partition. Classification splits are stratified by
/// label: each class contributes `round(fraction · count)` rows to train.
/// Row order inside each side follows the original dataset.
pub fn split(ds: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("split fraction must lie in (0, 1), got {fraction}")));
    }
    let mut rng = stream_rng(seed, Stream::Split);
    let strata: Vec<Vec<usize>> = match ds.schema().task() {
        Task::Classification => [0.0, 1.0]
            .iter()
            .map(|&label| (0..ds.len()).filter(|&n| ds.y()[n] == label).collect())
            .collect(),
        Task::Regression => vec![(0..ds.len()).collect()],
    };
    let mut in_train = vec![false; ds.len()];
    for mut stratum in strata {
        stratum.shuffle(&mut rng);
        let k = (fraction * stratum.len() as f64).round() as usize;
        for &n in &stratum[..k] {
            in_train[n] = true;
        }
    }
    let train: Vec<usize> = (0..ds.len()).filter(|&n| in_train[n]).collect();
    let test: Vec<usize> = (0..ds.len()).filter(|&n| !in_train[n]).collect();
    if train.is_empty() || test.is_empty() {
        return Err(Error::Empty(format!(
            "split of {} rows at fraction {fraction} leaves a side empty",
            ds.len()
        )));
    }
    Ok((ds.select(&train), ds.select(&test)))
}
