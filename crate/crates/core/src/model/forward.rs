use serde::{Deserialize, Serialize};

use super::layers::{self, NormPlan};
use super::{Model, Phase};
use crate::diffcore::{Graph, Value};
use crate::{Error, Result};

/// Graph handles of one encoder layer.
#[derive(Debug, Clone, Copy)]
pub struct BuiltLayer {
    pub normalized: Value,
    pub scores: Value,
    pub attention: Value,
    pub attention_output: Value,
    pub feedforward: Value,
    pub output: Value,
}

/// Graph handles of one forward pass.
#[derive(Debug, Clone)]
pub struct Built {
    /// `E(x)`, or `E^Sen(x)` (length `k + C^s`) when augmented.
    pub embedding: Value,
    pub layers: Vec<BuiltLayer>,
    /// Scalar logit (classification) or value (regression).
    pub output: Value,
    /// Side of every attention matrix.
    pub side: usize,
}

/// Activations of one encoder layer for a single row. Matrices are row-major
/// `side × side`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerTrace {
    pub side: usize,
    pub normalized: Vec<f64>,
    pub pre_softmax: Vec<f64>,
    pub post_softmax: Vec<f64>,
    pub attention_output: Vec<f64>,
    pub feedforward: Vec<f64>,
    pub output: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardTrace {
    pub embedding: Vec<f64>,
    pub layers: Vec<LayerTrace>,
    pub prediction: f64,
    pub augmented: bool,
}

impl ForwardTrace {
    fn collect(g: &Graph, built: &Built, augmented: bool) -> Self {
        ForwardTrace {
            embedding: g.data(built.embedding).to_vec(),
            layers: built
                .layers
                .iter()
                .map(|l| LayerTrace {
                    side: built.side,
                    normalized: g.data(l.normalized).to_vec(),
                    pre_softmax: g.data(l.scores).to_vec(),
                    post_softmax: g.data(l.attention).to_vec(),
                    attention_output: g.data(l.attention_output).to_vec(),
                    feedforward: g.data(l.feedforward).to_vec(),
                    output: g.data(l.output).to_vec(),
                })
                .collect(),
            prediction: g.scalar(built.output),
            augmented,
        }
    }
}

impl Model {
    /// Binds all parameters as learnable leaves of `g`, in slot order.
    pub fn bind(&self, g: &mut Graph) -> Vec<Value> {
        g.bind(&self.params.set)
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        let schema = &self.schema;
        if row.len() != schema.p() {
            return Err(Error::Contract(format!(
                "row has {} cells, schema declares {}",
                row.len(),
                schema.p()
            )));
        }
        for &f in &self.layout.features {
            let v = row[f];
            let ok = match schema.cardinality(f) {
                Some(card) => v.fract() == 0.0 && v >= 0.0 && (v as usize) < card,
                None => v.is_finite(),
            };
            if !ok {
                return Err(Error::Contract(format!(
                    "cell {v} is invalid for feature `{}`",
                    schema.feature(f).name
                )));
            }
        }
        Ok(())
    }

    fn onehot(&self, row: &[f64]) -> Vec<f64> {
        let mut oh = vec![0.0; self.layout.p_onehot()];
        for (c, &f) in self.layout.cat_features.iter().enumerate() {
            oh[self.layout.onehot_bounds[c] + row[f] as usize] = 1.0;
        }
        oh
    }

    /// Appends the embedding of `row` to `g`: `E(x)` in feature order, plus
    /// the counterfactual sensitive slots when `augmented`.
    pub fn build_embedding(
        &self,
        g: &mut Graph,
        ps: &[Value],
        row: &[f64],
        augmented: bool,
    ) -> Result<Value> {
        self.check_row(row)?;
        let layout = &self.layout;
        let mut parts = Vec::with_capacity(2);
        if let Some(s) = self.index.cat {
            parts.push(layers::embed_categorical(
                g,
                ps,
                s,
                layout.onehot_bounds.clone(),
                self.onehot(row),
            )?);
        }
        if let Some(s) = self.index.con {
            let values = layout.con_features.iter().map(|&f| row[f]).collect();
            parts.push(layers::embed_continuous(g, ps, s, values)?);
        }
        let joined = if parts.len() == 1 { parts[0] } else { g.concat(&parts) };
        let embedding = g.gather(joined, layout.perm.clone())?;
        if !augmented {
            return Ok(embedding);
        }
        let (Some(s), Some(block), Some(ord)) =
            (self.index.cat, layout.sigma_block(), layout.sigma_cat)
        else {
            return Err(Error::Contract(
                "augmentation needs the sensitive feature in the input".into(),
            ));
        };
        let sen = layers::sen_embed(g, ps, s, block, ord)?;
        Ok(g.concat(&[embedding, sen]))
    }

    /// Appends a full forward pass to `g`. Augmented passes carry the
    /// counterfactual slots through every encoder layer and drop them before
    /// the head; scores are always scaled by `√k` with `k` the number of
    /// embedded features.
    pub fn build(&self, g: &mut Graph, ps: &[Value], row: &[f64], augmented: bool) -> Result<Built> {
        let k = self.layout.width();
        let embedding = self.build_embedding(g, ps, row, augmented)?;
        let plan = if augmented {
            NormPlan::augmented(k, self.layout.sigma.expect("checked in embedding"), self.layout.cs)
        } else {
            NormPlan::plain(k)
        };
        let mut x = embedding;
        let mut built_layers = Vec::with_capacity(self.index.encoders.len());
        for &slots in &self.index.encoders {
            let block =
                layers::encoder_block(g, ps, slots, x, &plan, k, self.config.residual_attention)?;
            built_layers.push(BuiltLayer {
                normalized: block.attention.normalized,
                scores: block.attention.scores,
                attention: block.attention.attention,
                attention_output: block.attention.output,
                feedforward: block.feedforward,
                output: block.output,
            });
            x = block.output;
        }
        if augmented {
            x = g.head(x, k)?;
        }
        let (out, hidden) = self.index.head.split_last().expect("head has an output layer");
        for &slots in hidden {
            x = layers::dense(g, ps, slots, x, true)?;
        }
        let output = layers::dense(g, ps, *out, x, false)?;
        Ok(Built {
            embedding,
            layers: built_layers,
            output,
            side: plan.len(),
        })
    }

    /// `E(x)` for one preprocessed row (length `k`).
    pub fn embed(&self, row: &[f64]) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let ps = self.bind(&mut g);
        let e = self.build_embedding(&mut g, &ps, row, false)?;
        Ok(g.data(e).to_vec())
    }

    /// Plain inference forward: logit or value plus the full trace.
    pub fn forward(&self, row: &[f64]) -> Result<(f64, ForwardTrace)> {
        let mut g = Graph::new();
        let ps = self.bind(&mut g);
        let built = self.build(&mut g, &ps, row, false)?;
        Ok((g.scalar(built.output), ForwardTrace::collect(&g, &built, false)))
    }

    /// Training-time forward over the augmented embedding. Refused in
    /// inference phase, where augmentation is suppressed.
    pub fn forward_augmented(&self, row: &[f64]) -> Result<(f64, ForwardTrace)> {
        if self.phase == Phase::Inference {
            return Err(Error::Contract(
                "augmented forward is only available during training".into(),
            ));
        }
        let mut g = Graph::new();
        let ps = self.bind(&mut g);
        let built = self.build(&mut g, &ps, row, true)?;
        Ok((g.scalar(built.output), ForwardTrace::collect(&g, &built, true)))
    }

    /// Logit (classification) or value (regression) of the plain forward.
    pub fn predict_raw(&self, row: &[f64]) -> Result<f64> {
        let mut g = Graph::new();
        let ps = self.bind(&mut g);
        let built = self.build(&mut g, &ps, row, false)?;
        Ok(g.scalar(built.output))
    }
}
