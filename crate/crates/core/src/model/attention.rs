use serde::{Deserialize, Serialize};

use super::Model;
use crate::data::Dataset;
use crate::exec::Exec;
use crate::{Error, Result};

/// Rows per work item when averaging over a dataset. Fixed so the reduction
/// order does not depend on the thread count.
const CHUNK: usize = 256;

/// Dataset-mean attention matrices of one encoder layer, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerAttention {
    pub side: usize,
    pub pre_softmax: Vec<f64>,
    pub post_softmax: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionSummary {
    pub features: Vec<String>,
    pub rows: usize,
    pub layers: Vec<LayerAttention>,
}

/// Feature significance read off the mean first-layer pre-SoftMax matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceProfile {
    pub features: Vec<String>,
    /// Mean diagonal score per feature.
    pub diagonal: Vec<f64>,
    /// Symmetrized mean scores, `k × k` row-major.
    pub pairwise: Vec<f64>,
    /// Feature positions by decreasing diagonal score.
    pub ranking: Vec<usize>,
}

impl SignificanceProfile {
    pub fn from_matrix(features: Vec<String>, m: &[f64]) -> Self {
        let k = features.len();
        assert_eq!(m.len(), k * k, "matrix side does not match feature count");
        let mut pairwise = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                pairwise[i * k + j] = 0.5 * (m[i * k + j] + m[j * k + i]);
            }
        }
        let diagonal: Vec<f64> = (0..k).map(|i| pairwise[i * k + i]).collect();
        let mut ranking: Vec<usize> = (0..k).collect();
        ranking.sort_by(|&a, &b| diagonal[b].total_cmp(&diagonal[a]).then(a.cmp(&b)));
        SignificanceProfile {
            features,
            diagonal,
            pairwise,
            ranking,
        }
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f == name)
    }

    pub fn pair(&self, i: usize, j: usize) -> f64 {
        self.pairwise[i * self.features.len() + j]
    }
}

impl Model {
    pub fn embedded_feature_names(&self) -> Vec<String> {
        self.layout
            .features
            .iter()
            .map(|&f| self.schema.feature(f).name.clone())
            .collect()
    }

    /// Mean pre- and post-SoftMax matrices of every encoder layer over `ds`,
    /// using the plain forward.
    pub fn attention_summary(&self, ds: &Dataset, exec: Exec) -> Result<AttentionSummary> {
        self.check_dataset(ds)?;
        if ds.is_empty() {
            return Err(Error::Empty("attention summary of an empty dataset".into()));
        }
        let k = self.layout.width();
        let n_layers = self.index.encoders.len();
        let chunks = ds.len().div_ceil(CHUNK);
        let partials = exec.map_range(chunks, |c| -> Result<Vec<f64>> {
            let mut acc = vec![0.0; n_layers * 2 * k * k];
            for n in c * CHUNK..((c + 1) * CHUNK).min(ds.len()) {
                let (_, trace) = self.forward(ds.row(n))?;
                for (l, layer) in trace.layers.iter().enumerate() {
                    let base = l * 2 * k * k;
                    for (a, v) in acc[base..base + k * k].iter_mut().zip(&layer.pre_softmax) {
                        *a += v;
                    }
                    let base = base + k * k;
                    for (a, v) in acc[base..base + k * k].iter_mut().zip(&layer.post_softmax) {
                        *a += v;
                    }
                }
            }
            Ok(acc)
        });
        let mut total = vec![0.0; n_layers * 2 * k * k];
        for part in partials {
            for (t, v) in total.iter_mut().zip(part?) {
                *t += v;
            }
        }
        let inv = 1.0 / ds.len() as f64;
        total.iter_mut().for_each(|t| *t *= inv);
        let layers = total
            .chunks(2 * k * k)
            .map(|c| LayerAttention {
                side: k,
                pre_softmax: c[..k * k].to_vec(),
                post_softmax: c[k * k..].to_vec(),
            })
            .collect();
        Ok(AttentionSummary {
            features: self.embedded_feature_names(),
            rows: ds.len(),
            layers,
        })
    }

    pub fn significance(&self, ds: &Dataset, exec: Exec) -> Result<SignificanceProfile> {
        let summary = self.attention_summary(ds, exec)?;
        Ok(SignificanceProfile::from_matrix(
            summary.features,
            &summary.layers[0].pre_softmax,
        ))
    }
}
