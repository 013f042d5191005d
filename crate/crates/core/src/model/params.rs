use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Layout, ModelConfig};
use crate::diffcore::{ParamSet, Shape, Tensor};
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

/// Every learnable array of one network. The slot layout is fixed by the
/// schema and configuration; see [`ParamIndex`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelParams {
    pub set: ParamSet,
}

/// Stage-1 element-wise linear, then aggregation into one scalar per feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatSlots {
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConSlots {
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderSlots {
    pub ln1_w: usize,
    pub ln1_b: usize,
    pub ln2_w: usize,
    pub ln2_b: usize,
    pub ff1_w: usize,
    pub ff1_b: usize,
    pub ff2_w: usize,
    pub ff2_b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseSlots {
    pub w: usize,
    pub b: usize,
}

/// Slot numbers of each parameter role within [`ModelParams::set`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamIndex {
    pub cat: Option<CatSlots>,
    pub con: Option<ConSlots>,
    pub encoders: Vec<EncoderSlots>,
    /// Hidden layers followed by the scalar output layer.
    pub head: Vec<DenseSlots>,
}

#[derive(Clone, Copy)]
enum Init {
    Zero,
    One,
    Uniform(f64),
}

struct Builder {
    set: ParamSet,
    inits: Vec<Init>,
}

impl Builder {
    fn push(&mut self, name: String, shape: Shape, init: Init) -> usize {
        self.inits.push(init);
        self.set.push(name, Tensor::zeros(shape))
    }

    fn elementwise(&mut self, prefix: &str, n: usize) -> (usize, usize) {
        let w = self.push(format!("{prefix}.w"), Shape::vector(n), Init::Uniform(0.5));
        let b = self.push(format!("{prefix}.b"), Shape::vector(n), Init::Zero);
        (w, b)
    }

    fn norm(&mut self, prefix: &str, n: usize) -> (usize, usize) {
        let w = self.push(format!("{prefix}.w"), Shape::vector(n), Init::One);
        let b = self.push(format!("{prefix}.b"), Shape::vector(n), Init::Zero);
        (w, b)
    }

    fn dense(&mut self, prefix: &str, fan_in: usize, fan_out: usize) -> DenseSlots {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let w = self.push(
            format!("{prefix}.w"),
            Shape::matrix(fan_out, fan_in),
            Init::Uniform(limit),
        );
        let b = self.push(format!("{prefix}.b"), Shape::vector(fan_out), Init::Zero);
        DenseSlots { w, b }
    }
}

fn build(layout: &Layout, config: &ModelConfig) -> (ParamIndex, Builder) {
    let mut b = Builder {
        set: ParamSet::default(),
        inits: Vec::new(),
    };
    let k = layout.width();
    let cat = (!layout.cat_features.is_empty()).then(|| {
        let n = layout.p_onehot();
        let (w1, b1) = b.elementwise("cat.stage1", n);
        let w2 = b.push("cat.stage2.w".into(), Shape::vector(n), Init::Uniform(0.5));
        let b2 = b.push(
            "cat.stage2.b".into(),
            Shape::vector(layout.cat_features.len()),
            Init::Zero,
        );
        CatSlots { w1, b1, w2, b2 }
    });
    let con = (!layout.con_features.is_empty()).then(|| {
        let n = layout.con_features.len();
        let (w1, b1) = b.elementwise("con.stage1", n);
        let (w2, b2) = b.elementwise("con.stage2", n);
        ConSlots { w1, b1, w2, b2 }
    });
    let encoders = (0..config.n_encoder_layers)
        .map(|l| {
            let (ln1_w, ln1_b) = b.norm(&format!("enc{l}.norm_attn"), k);
            let (ln2_w, ln2_b) = b.norm(&format!("enc{l}.norm_ff"), k);
            let (ff1_w, ff1_b) = b.elementwise(&format!("enc{l}.ff1"), k);
            let (ff2_w, ff2_b) = b.elementwise(&format!("enc{l}.ff2"), k);
            EncoderSlots {
                ln1_w,
                ln1_b,
                ln2_w,
                ln2_b,
                ff1_w,
                ff1_b,
                ff2_w,
                ff2_b,
            }
        })
        .collect();
    let mut head = Vec::with_capacity(config.head_sizes.len() + 1);
    let mut fan_in = k;
    for (h, &width) in config.head_sizes.iter().enumerate() {
        head.push(b.dense(&format!("head{h}"), fan_in, width));
        fan_in = width;
    }
    head.push(b.dense("out", fan_in, 1));
    (
        ParamIndex {
            cat,
            con,
            encoders,
            head,
        },
        b,
    )
}

/// Element-wise stages ~ U(−0.5, 0.5), head weights ~ U(±√(6/(fan_in+fan_out))),
/// LayerNorm weights 1, all biases 0. Draws come from the init substream of
/// `config.init_seed`, in slot order.
pub fn init_params(layout: &Layout, config: &ModelConfig) -> (ParamIndex, ModelParams) {
    let (index, mut b) = build(layout, config);
    let mut rng = stream_rng(config.init_seed, Stream::Init);
    for (slot, init) in b.inits.iter().enumerate() {
        let data = &mut b.set.get_mut(slot).data;
        match *init {
            Init::Zero => {}
            Init::One => data.iter_mut().for_each(|x| *x = 1.0),
            Init::Uniform(limit) => data
                .iter_mut()
                .for_each(|x| *x = rng.random_range(-limit..limit)),
        }
    }
    (index, ModelParams { set: b.set })
}

/// Number of scalar parameters implied by a layout and configuration.
pub fn parameter_count(layout: &Layout, config: &ModelConfig) -> usize {
    build(layout, config).1.set.count()
}

pub(crate) fn check_compatible(expected: &ModelParams, actual: &ModelParams) -> Result<()> {
    if expected.set.len() != actual.set.len() {
        return Err(Error::Contract(format!(
            "parameter file has {} arrays, model layout expects {}",
            actual.set.len(),
            expected.set.len()
        )));
    }
    for (e, a) in expected.set.entries.iter().zip(&actual.set.entries) {
        if e.name != a.name || e.tensor.shape != a.tensor.shape || a.tensor.data.len() != a.tensor.shape.len()
        {
            return Err(Error::Contract(format!(
                "parameter `{}` does not match expected `{}` {}x{}",
                a.name, e.name, e.tensor.shape.rows, e.tensor.shape.cols
            )));
        }
    }
    if !actual.set.is_finite() {
        return Err(Error::Contract("parameter file contains non-finite values".into()));
    }
    Ok(())
}
