//! Layer-level graph builders. Each takes the bound parameter leaves (`ps`,
//! indexed by slot) and appends its primitives to a [`Graph`].

use std::ops::Range;
use std::sync::Arc;

use super::params::{CatSlots, ConSlots, DenseSlots, EncoderSlots};
use crate::diffcore::{Graph, Value, LAYER_NORM_EPS};
use crate::Result;

/// Where a LayerNorm over a possibly augmented vector takes its statistics
/// and per-slot affine parameters from.
#[derive(Debug, Clone, PartialEq)]
pub struct NormPlan {
    pub stat_len: usize,
    /// Output slot `i` uses affine (and element-wise) parameters `affine[i]`.
    pub affine: Arc<[usize]>,
}

impl NormPlan {
    pub fn plain(k: usize) -> Self {
        NormPlan {
            stat_len: k,
            affine: (0..k).collect(),
        }
    }

    /// First `p` slots normalized over themselves; `cs` trailing slots reuse
    /// the statistics of the first `p` and the parameters of position `sigma`.
    pub fn augmented(p: usize, sigma: usize, cs: usize) -> Self {
        NormPlan {
            stat_len: p,
            affine: (0..p).chain(std::iter::repeat_n(sigma, cs)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.affine.len()
    }

    pub fn is_empty(&self) -> bool {
        self.affine.is_empty()
    }

    fn is_plain(&self) -> bool {
        self.stat_len == self.affine.len()
    }
}

/// `CLinear(GELU(ELinear(onehot)))`: one scalar per categorical feature.
/// `bounds` delimit each feature's block of one-hot slots.
pub fn embed_categorical(
    g: &mut Graph,
    ps: &[Value],
    s: CatSlots,
    bounds: Arc<[usize]>,
    onehot: Vec<f64>,
) -> Result<Value> {
    let oh = g.vector(onehot);
    let z = g.elementwise_linear(oh, ps[s.w1], ps[s.b1])?;
    let h = g.gelu(z);
    let t = g.mul(ps[s.w2], h)?;
    let summed = g.segment_sum(t, bounds)?;
    g.add(summed, ps[s.b2])
}

/// `ELinear2(GELU(ELinear1(v)))`, coordinate-wise.
pub fn embed_continuous(g: &mut Graph, ps: &[Value], s: ConSlots, values: Vec<f64>) -> Result<Value> {
    let v = g.vector(values);
    let z = g.elementwise_linear(v, ps[s.w1], ps[s.b1])?;
    let h = g.gelu(z);
    g.elementwise_linear(h, ps[s.w2], ps[s.b2])
}

/// One embedding per sensitive category, each computed exactly as
/// [`embed_categorical`] would for a row holding that category, using the
/// sensitive feature's own (shared) parameters. `block` is the sensitive
/// feature's one-hot range and `ordinal` its position among categorical
/// features.
pub fn sen_embed(
    g: &mut Graph,
    ps: &[Value],
    s: CatSlots,
    block: Range<usize>,
    ordinal: usize,
) -> Result<Value> {
    let cs = block.len();
    let index: Arc<[usize]> = (0..cs).flat_map(|_| block.clone()).collect();
    let mut onehot = vec![0.0; cs * cs];
    for i in 0..cs {
        onehot[i * cs + i] = 1.0;
    }
    let w1 = g.gather(ps[s.w1], index.clone())?;
    let b1 = g.gather(ps[s.b1], index.clone())?;
    let w2 = g.gather(ps[s.w2], index)?;
    let oh = g.vector(onehot);
    let z = g.elementwise_linear(oh, w1, b1)?;
    let h = g.gelu(z);
    let t = g.mul(w2, h)?;
    let bounds: Arc<[usize]> = (0..=cs).map(|i| i * cs).collect();
    let summed = g.segment_sum(t, bounds)?;
    let b2 = g.gather(ps[s.b2], std::iter::repeat_n(ordinal, cs).collect())?;
    g.add(summed, b2)
}

/// LayerNorm following `plan`; with an augmented plan this is the sensitive
/// LayerNorm (statistics of the original slots, σ's affine parameters for
/// the counterfactual slots).
pub fn sen_layer_norm(g: &mut Graph, v: Value, w: Value, b: Value, plan: &NormPlan) -> Result<Value> {
    g.layer_norm_shared(v, w, b, plan.stat_len, plan.affine.clone(), LAYER_NORM_EPS)
}

/// Element-wise linear whose trailing counterfactual slots reuse σ's weight
/// and bias.
pub fn sen_elementwise_linear(
    g: &mut Graph,
    v: Value,
    w: Value,
    b: Value,
    plan: &NormPlan,
) -> Result<Value> {
    if plan.is_plain() {
        return g.elementwise_linear(v, w, b);
    }
    let wg = g.gather(w, plan.affine.clone())?;
    let bg = g.gather(b, plan.affine.clone())?;
    g.elementwise_linear(v, wg, bg)
}

#[derive(Debug, Clone, Copy)]
pub struct AttentionNodes {
    pub normalized: Value,
    /// Pre-SoftMax scores, `E^LN E^LNᵀ / √scale_dim`.
    pub scores: Value,
    /// Row-wise SoftMax of the scores.
    pub attention: Value,
    pub output: Value,
}

/// Projection-free single-head attention: queries, keys and values are all
/// the normalized input itself.
pub fn attention_layer(
    g: &mut Graph,
    e_in: Value,
    ln_w: Value,
    ln_b: Value,
    plan: &NormPlan,
    scale_dim: usize,
    residual: bool,
) -> Result<AttentionNodes> {
    let normalized = sen_layer_norm(g, e_in, ln_w, ln_b, plan)?;
    let outer = g.outer(normalized, normalized);
    let scores = g.scale(outer, 1.0 / (scale_dim as f64).sqrt());
    let attention = g.softmax_rows(scores);
    let mut output = g.matvec(attention, normalized)?;
    if residual {
        output = g.add(output, e_in)?;
    }
    Ok(AttentionNodes {
        normalized,
        scores,
        attention,
        output,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct BlockNodes {
    pub attention: AttentionNodes,
    pub feedforward: Value,
    pub output: Value,
}

/// `a = attention(E_in)`, then `a + ELinear2(GELU(ELinear1(LayerNorm(a))))`.
pub fn encoder_block(
    g: &mut Graph,
    ps: &[Value],
    s: EncoderSlots,
    e_in: Value,
    plan: &NormPlan,
    scale_dim: usize,
    residual: bool,
) -> Result<BlockNodes> {
    let attention = attention_layer(g, e_in, ps[s.ln1_w], ps[s.ln1_b], plan, scale_dim, residual)?;
    let a = attention.output;
    let n = sen_layer_norm(g, a, ps[s.ln2_w], ps[s.ln2_b], plan)?;
    let z = sen_elementwise_linear(g, n, ps[s.ff1_w], ps[s.ff1_b], plan)?;
    let h = g.gelu(z);
    let feedforward = sen_elementwise_linear(g, h, ps[s.ff2_w], ps[s.ff2_b], plan)?;
    let output = g.add(a, feedforward)?;
    Ok(BlockNodes {
        attention,
        feedforward,
        output,
    })
}

/// `W x + b`, optionally followed by GELU.
pub fn dense(g: &mut Graph, ps: &[Value], s: DenseSlots, x: Value, activate: bool) -> Result<Value> {
    let wx = g.matvec(ps[s.w], x)?;
    let y = g.add(wx, ps[s.b])?;
    Ok(if activate { g.gelu(y) } else { y })
}
