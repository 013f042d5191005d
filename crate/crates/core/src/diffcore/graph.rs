use std::sync::Arc;

use super::special::{gelu, gelu_derivative};
use super::tensor::{ParamSet, Shape, Tensor};
use crate::{Error, Result};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Value(usize);

impl Value {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf {
        slot: Option<usize>,
    },
    Add(Value, Value),
    Sub(Value, Value),
    Mul(Value, Value),
    Scale(Value, f64),
    Gelu(Value),
    LayerNorm {
        input: Value,
        weight: Value,
        bias: Value,
        stat_len: usize,
        affine: Arc<[usize]>,
        mean: f64,
        inv_std: f64,
    },
    Gather {
        input: Value,
        index: Arc<[usize]>,
    },
    SegmentSum {
        input: Value,
        bounds: Arc<[usize]>,
    },
    Concat(Vec<Value>),
    Outer(Value, Value),
    SoftmaxRows(Value),
    MatVec(Value, Value),
    Sum(Value),
    BceWithLogits {
        logits: Value,
        labels: Vec<f64>,
    },
    Mse {
        pred: Value,
        target: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
struct Node {
    shape: Shape,
    data: Vec<f64>,
    grad: Vec<f64>,
    op: Op,
}

/// Records primitives for one forward pass and replays them backwards.
#[derive(Debug, Default, Clone)]
pub struct Graph {
    nodes: Vec<Node>,
}

fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Shape, data: Vec<f64>, op: Op) -> Value {
        debug_assert_eq!(shape.len(), data.len());
        let grad = vec![0.0; data.len()];
        self.nodes.push(Node {
            shape,
            data,
            grad,
            op,
        });
        Value(self.nodes.len() - 1)
    }

    pub fn data(&self, v: Value) -> &[f64] {
        &self.nodes[v.0].data
    }

    pub fn grad(&self, v: Value) -> &[f64] {
        &self.nodes[v.0].grad
    }

    pub fn shape(&self, v: Value) -> Shape {
        self.nodes[v.0].shape
    }

    pub fn scalar(&self, v: Value) -> f64 {
        self.nodes[v.0].data[0]
    }

    pub fn tensor(&self, v: Value) -> Tensor {
        Tensor::new(self.shape(v), self.data(v).to_vec())
    }

    /// Non-learnable leaf.
    pub fn constant(&mut self, t: Tensor) -> Value {
        self.push(t.shape, t.data, Op::Leaf { slot: None })
    }

    pub fn vector(&mut self, data: Vec<f64>) -> Value {
        self.constant(Tensor::vector(data))
    }

    /// Learnable leaf bound to `slot` of a parameter set.
    pub fn param(&mut self, t: &Tensor, slot: usize) -> Value {
        self.push(t.shape, t.data.clone(), Op::Leaf { slot: Some(slot) })
    }

    /// Binds every entry of `params` as a learnable leaf, in slot order.
    pub fn bind(&mut self, params: &ParamSet) -> Vec<Value> {
        params
            .entries
            .iter()
            .enumerate()
            .map(|(slot, e)| self.param(&e.tensor, slot))
            .collect()
    }

    fn same_shape(&self, a: Value, b: Value, what: &str) -> Result<Shape> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(contract(format!(
                "{what}: shapes {}x{} and {}x{} differ",
                sa.rows, sa.cols, sb.rows, sb.cols
            )));
        }
        Ok(sa)
    }

    fn zip_with(&mut self, a: Value, b: Value, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.data(a)
            .iter()
            .zip(self.data(b))
            .map(|(&x, &y)| f(x, y))
            .collect()
    }

    pub fn add(&mut self, a: Value, b: Value) -> Result<Value> {
        let shape = self.same_shape(a, b, "add")?;
        let data = self.zip_with(a, b, |x, y| x + y);
        Ok(self.push(shape, data, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Value, b: Value) -> Result<Value> {
        let shape = self.same_shape(a, b, "sub")?;
        let data = self.zip_with(a, b, |x, y| x - y);
        Ok(self.push(shape, data, Op::Sub(a, b)))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Value, b: Value) -> Result<Value> {
        let shape = self.same_shape(a, b, "mul")?;
        let data = self.zip_with(a, b, |x, y| x * y);
        Ok(self.push(shape, data, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: Value, factor: f64) -> Value {
        let data = self.data(a).iter().map(|x| x * factor).collect();
        self.push(self.shape(a), data, Op::Scale(a, factor))
    }

    pub fn gelu(&mut self, a: Value) -> Value {
        let data = self.data(a).iter().map(|&z| gelu(z)).collect();
        self.push(self.shape(a), data, Op::Gelu(a))
    }

    /// `w ⊙ v + b`; no mixing across coordinates.
    pub fn elementwise_linear(&mut self, v: Value, w: Value, b: Value) -> Result<Value> {
        let wv = self.mul(w, v)?;
        self.add(wv, b)
    }

    /// LayerNorm with population variance over the whole vector.
    pub fn layer_norm(&mut self, v: Value, w: Value, b: Value, eps: f64) -> Result<Value> {
        let k = self.shape(v).len();
        let affine: Arc<[usize]> = (0..k).collect();
        self.layer_norm_shared(v, w, b, k, affine, eps)
    }

    /// LayerNorm whose statistics come from the first `stat_len` entries only
    /// and whose affine parameters are looked up through `affine`: output `i`
    /// uses `w[affine[i]]` and `b[affine[i]]`. With `stat_len == len` and the
    /// identity map this is the ordinary LayerNorm.
    pub fn layer_norm_shared(
        &mut self,
        v: Value,
        w: Value,
        b: Value,
        stat_len: usize,
        affine: Arc<[usize]>,
        eps: f64,
    ) -> Result<Value> {
        let k = self.shape(v).len();
        let p = self.shape(w).len();
        if self.shape(b).len() != p {
            return Err(contract("layer_norm: weight and bias lengths differ"));
        }
        if stat_len < 2 || stat_len > k {
            return Err(contract(format!(
                "layer_norm: statistics length {stat_len} invalid for input of length {k}"
            )));
        }
        if affine.len() != k || affine.iter().any(|&a| a >= p) {
            return Err(contract("layer_norm: affine index map does not fit"));
        }
        let x = self.data(v);
        let n = stat_len as f64;
        let mean = x[..stat_len].iter().sum::<f64>() / n;
        let var = x[..stat_len].iter().map(|xi| (xi - mean).powi(2)).sum::<f64>() / n;
        let inv_std = 1.0 / (var + eps).sqrt();
        let (wd, bd) = (self.data(w), self.data(b));
        let data = x
            .iter()
            .zip(affine.iter())
            .map(|(&xi, &a)| (xi - mean) * inv_std * wd[a] + bd[a])
            .collect();
        Ok(self.push(
            Shape::vector(k),
            data,
            Op::LayerNorm {
                input: v,
                weight: w,
                bias: b,
                stat_len,
                affine,
                mean,
                inv_std,
            },
        ))
    }

    /// `out[i] = input[index[i]]` over the flattened input. Gradients
    /// scatter-add back, so repeated indices share (and accumulate into) one
    /// source entry.
    pub fn gather(&mut self, input: Value, index: Arc<[usize]>) -> Result<Value> {
        let src = self.data(input);
        if let Some(&bad) = index.iter().find(|&&i| i >= src.len()) {
            return Err(contract(format!(
                "gather: index {bad} out of range for length {}",
                src.len()
            )));
        }
        let data = index.iter().map(|&i| src[i]).collect();
        Ok(self.push(Shape::vector(index.len()), data, Op::Gather { input, index }))
    }

    /// Sums contiguous segments `[bounds[s], bounds[s+1])`.
    pub fn segment_sum(&mut self, input: Value, bounds: Arc<[usize]>) -> Result<Value> {
        let src = self.data(input);
        let ok = bounds.first() == Some(&0)
            && bounds.last() == Some(&src.len())
            && bounds.windows(2).all(|w| w[0] <= w[1]);
        if !ok {
            return Err(contract("segment_sum: bounds do not partition the input"));
        }
        let data = bounds
            .windows(2)
            .map(|w| src[w[0]..w[1]].iter().sum())
            .collect();
        Ok(self.push(
            Shape::vector(bounds.len() - 1),
            data,
            Op::SegmentSum { input, bounds },
        ))
    }

    pub fn concat(&mut self, parts: &[Value]) -> Value {
        let data: Vec<f64> = parts.iter().flat_map(|&p| self.data(p).iter().copied()).collect();
        self.push(Shape::vector(data.len()), data, Op::Concat(parts.to_vec()))
    }

    /// First `n` entries of a vector.
    pub fn head(&mut self, v: Value, n: usize) -> Result<Value> {
        self.gather(v, (0..n).collect())
    }

    /// `a bᵀ` for vectors `a` (m) and `b` (n).
    pub fn outer(&mut self, a: Value, b: Value) -> Value {
        let (xa, xb) = (self.data(a), self.data(b));
        let (m, n) = (xa.len(), xb.len());
        let mut data = Vec::with_capacity(m * n);
        for &ai in xa {
            data.extend(xb.iter().map(|&bj| ai * bj));
        }
        self.push(Shape::matrix(m, n), data, Op::Outer(a, b))
    }

    /// Row-wise SoftMax with row-max subtraction.
    pub fn softmax_rows(&mut self, m: Value) -> Value {
        let shape = self.shape(m);
        let src = self.data(m);
        let mut data = vec![0.0; src.len()];
        for (row_in, row_out) in src.chunks(shape.cols).zip(data.chunks_mut(shape.cols)) {
            let max = row_in.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for (o, &x) in row_out.iter_mut().zip(row_in) {
                *o = (x - max).exp();
                total += *o;
            }
            row_out.iter_mut().for_each(|o| *o /= total);
        }
        self.push(shape, data, Op::SoftmaxRows(m))
    }

    /// Matrix-vector product `M v`.
    pub fn matvec(&mut self, m: Value, v: Value) -> Result<Value> {
        let shape = self.shape(m);
        let x = self.data(v);
        if x.len() != shape.cols {
            return Err(contract(format!(
                "matvec: {}x{} matrix with vector of length {}",
                shape.rows,
                shape.cols,
                x.len()
            )));
        }
        let data = self
            .data(m)
            .chunks(shape.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect();
        Ok(self.push(Shape::vector(shape.rows), data, Op::MatVec(m, v)))
    }

    pub fn sum(&mut self, a: Value) -> Value {
        let s = self.data(a).iter().sum();
        self.push(Shape::scalar(), vec![s], Op::Sum(a))
    }

    /// Mean binary cross-entropy on logits, in the stable
    /// `softplus(-x) + (1 - y) x` form.
    pub fn bce_with_logits(&mut self, logits: Value, labels: &[f64]) -> Result<Value> {
        let x = self.data(logits);
        if x.len() != labels.len() || x.is_empty() {
            return Err(contract("bce_with_logits: logits and labels must be equal, non-empty"));
        }
        if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(contract("bce_with_logits: labels must be 0 or 1"));
        }
        let total: f64 = x
            .iter()
            .zip(labels)
            .map(|(&xi, &yi)| softplus(-xi) + (1.0 - yi) * xi)
            .sum();
        let loss = total / x.len() as f64;
        Ok(self.push(
            Shape::scalar(),
            vec![loss],
            Op::BceWithLogits {
                logits,
                labels: labels.to_vec(),
            },
        ))
    }

    pub fn mse(&mut self, pred: Value, target: &[f64]) -> Result<Value> {
        let x = self.data(pred);
        if x.is_empty() || x.len() != target.len() {
            return Err(contract("mse: prediction and target must be equal, non-empty"));
        }
        let loss = x.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / x.len() as f64;
        Ok(self.push(
            Shape::scalar(),
            vec![loss],
            Op::Mse {
                pred,
                target: target.to_vec(),
            },
        ))
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Propagates ∂root/∂node into every node's gradient buffer. Gradients are
    /// added to whatever the buffers already hold.
    pub fn backward(&mut self, root: Value) -> Result<()> {
        if !self.shape(root).is_scalar() {
            return Err(contract("backward: root must be a scalar"));
        }
        let mut adj: Vec<Vec<f64>> = Vec::with_capacity(root.0 + 1);
        adj.extend(self.nodes[..=root.0].iter().map(|n| vec![0.0; n.data.len()]));
        adj[root.0][0] = 1.0;

        for i in (0..=root.0).rev() {
            let g = std::mem::take(&mut adj[i]);
            if g.iter().all(|&x| x == 0.0) {
                adj[i] = g;
                continue;
            }
            self.propagate(i, &g, &mut adj);
            adj[i] = g;
        }

        for (node, a) in self.nodes.iter_mut().zip(&adj) {
            for (dst, src) in node.grad.iter_mut().zip(a) {
                *dst += src;
            }
        }
        Ok(())
    }

    fn propagate(&self, i: usize, g: &[f64], adj: &mut [Vec<f64>]) {
        let node = &self.nodes[i];
        match &node.op {
            Op::Leaf { .. } => {}
            Op::Add(a, b) => {
                axpy(&mut adj[a.0], 1.0, g);
                axpy(&mut adj[b.0], 1.0, g);
            }
            Op::Sub(a, b) => {
                axpy(&mut adj[a.0], 1.0, g);
                axpy(&mut adj[b.0], -1.0, g);
            }
            Op::Mul(a, b) => {
                let (xa, xb) = (&self.nodes[a.0].data, &self.nodes[b.0].data);
                for (k, &gk) in g.iter().enumerate() {
                    adj[a.0][k] += gk * xb[k];
                    adj[b.0][k] += gk * xa[k];
                }
            }
            Op::Scale(a, c) => axpy(&mut adj[a.0], *c, g),
            Op::Gelu(a) => {
                let x = &self.nodes[a.0].data;
                for (k, &gk) in g.iter().enumerate() {
                    adj[a.0][k] += gk * gelu_derivative(x[k]);
                }
            }
            Op::LayerNorm {
                input,
                weight,
                bias,
                stat_len,
                affine,
                mean,
                inv_std,
            } => {
                let x = &self.nodes[input.0].data;
                let w = &self.nodes[weight.0].data;
                let n = *stat_len as f64;
                let mut d_mean = 0.0;
                let mut d_std_scaled = 0.0; // Σ dz·z
                for (k, &gk) in g.iter().enumerate() {
                    let a = affine[k];
                    let z = (x[k] - mean) * inv_std;
                    adj[weight.0][a] += gk * z;
                    adj[bias.0][a] += gk;
                    let dz = gk * w[a];
                    adj[input.0][k] += dz * inv_std;
                    d_mean -= dz * inv_std;
                    d_std_scaled += dz * z;
                }
                // s = sqrt(var + eps); ∂s/∂x_j = z_j / (n s) over the statistics window.
                let d_s = -d_std_scaled * inv_std;
                for j in 0..*stat_len {
                    let z = (x[j] - mean) * inv_std;
                    adj[input.0][j] += d_mean / n + d_s * z / n;
                }
            }
            Op::Gather { input, index } => {
                for (&src, &gk) in index.iter().zip(g) {
                    adj[input.0][src] += gk;
                }
            }
            Op::SegmentSum { input, bounds } => {
                for (s, w) in bounds.windows(2).enumerate() {
                    for k in w[0]..w[1] {
                        adj[input.0][k] += g[s];
                    }
                }
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let len = self.nodes[p.0].data.len();
                    axpy(&mut adj[p.0], 1.0, &g[offset..offset + len]);
                    offset += len;
                }
            }
            Op::Outer(a, b) => {
                let (xa, xb) = (&self.nodes[a.0].data, &self.nodes[b.0].data);
                let n = xb.len();
                let mut ga = vec![0.0; xa.len()];
                let mut gb = vec![0.0; n];
                for (r, row) in g.chunks(n).enumerate() {
                    for (c, &gk) in row.iter().enumerate() {
                        ga[r] += gk * xb[c];
                        gb[c] += gk * xa[r];
                    }
                }
                axpy(&mut adj[a.0], 1.0, &ga);
                axpy(&mut adj[b.0], 1.0, &gb);
            }
            Op::SoftmaxRows(m) => {
                let cols = node.shape.cols;
                let y = &node.data;
                for (r, (gr, yr)) in g.chunks(cols).zip(y.chunks(cols)).enumerate() {
                    let dot: f64 = gr.iter().zip(yr).map(|(a, b)| a * b).sum();
                    for c in 0..cols {
                        adj[m.0][r * cols + c] += yr[c] * (gr[c] - dot);
                    }
                }
            }
            Op::MatVec(m, v) => {
                let cols = self.nodes[m.0].shape.cols;
                let (xm, xv) = (&self.nodes[m.0].data, &self.nodes[v.0].data);
                let mut gv = vec![0.0; cols];
                for (r, &gr) in g.iter().enumerate() {
                    let row = &xm[r * cols..(r + 1) * cols];
                    for c in 0..cols {
                        adj[m.0][r * cols + c] += gr * xv[c];
                        gv[c] += gr * row[c];
                    }
                }
                axpy(&mut adj[v.0], 1.0, &gv);
            }
            Op::Sum(a) => adj[a.0].iter_mut().for_each(|x| *x += g[0]),
            Op::BceWithLogits { logits, labels } => {
                let x = &self.nodes[logits.0].data;
                let n = x.len() as f64;
                for (k, (&xk, &yk)) in x.iter().zip(labels).enumerate() {
                    adj[logits.0][k] += g[0] * (sigmoid(xk) - yk) / n;
                }
            }
            Op::Mse { pred, target } => {
                let x = &self.nodes[pred.0].data;
                let n = x.len() as f64;
                for (k, (&xk, &tk)) in x.iter().zip(target).enumerate() {
                    adj[pred.0][k] += g[0] * 2.0 * (xk - tk) / n;
                }
            }
        }
    }

    /// Adds the gradients of all bound parameter leaves into `grads`, which
    /// must share the layout of the bound parameter set.
    pub fn accumulate_param_grads(&self, grads: &mut ParamSet) {
        for node in &self.nodes {
            if let Op::Leaf { slot: Some(slot) } = node.op {
                axpy(&mut grads.get_mut(slot).data, 1.0, &node.grad);
            }
        }
    }
}

fn axpy(dst: &mut [f64], alpha: f64, src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += alpha * s;
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic function, evaluated without overflow for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_leaf(g: &mut Graph, xs: &[f64], slot: usize) -> Value {
        g.param(&Tensor::vector(xs.to_vec()), slot)
    }

    #[test]
    fn layer_norm_examples() {
        let mut g = Graph::new();
        let v = g.vector(vec![1.0, 2.0, 3.0]);
        let w = g.vector(vec![1.0; 3]);
        let b = g.vector(vec![0.0; 3]);
        let out = g.layer_norm(v, w, b, 0.0).unwrap();
        // (x - 2)/sqrt(2/3)
        let s = (2.0f64 / 3.0).sqrt();
        let expected = [-1.0 / s, 0.0, 1.0 / s];
        for (a, e) in g.data(out).iter().zip(expected) {
            assert!((a - e).abs() < 1e-12);
            assert!((a.abs() - e.abs()).abs() < 1e-5);
        }
        assert!((g.data(out)[2] - 1.224_745).abs() < 1e-5);

        let w2 = g.vector(vec![2.0; 3]);
        let b2 = g.vector(vec![1.0; 3]);
        let out2 = g.layer_norm(v, w2, b2, 0.0).unwrap();
        let expected2 = [-1.449_490, 1.0, 3.449_490];
        for (a, e) in g.data(out2).iter().zip(expected2) {
            assert!((a - e).abs() < 1e-5);
        }

        let c = g.vector(vec![5.0; 3]);
        let out3 = g.layer_norm(c, w, b, 1e-5).unwrap();
        assert_eq!(g.data(out3), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn softmax_examples() {
        let mut g = Graph::new();
        let m = g.constant(Tensor::new(Shape::matrix(1, 2), vec![0.0, 0.0]));
        let s = g.softmax_rows(m);
        assert_eq!(g.data(s), &[0.5, 0.5]);

        let m = g.constant(Tensor::new(Shape::matrix(1, 2), vec![2f64.ln(), 0.0]));
        let s = g.softmax_rows(m);
        assert!((g.data(s)[0] - 2.0 / 3.0).abs() < 1e-9);
        assert!((g.data(s)[1] - 1.0 / 3.0).abs() < 1e-9);

        let raw = [0.3, -1.2, 2.5, 0.0];
        let shifted: Vec<f64> = raw.iter().map(|x| x + 17.0).collect();
        let a = g.constant(Tensor::new(Shape::matrix(1, 4), raw.to_vec()));
        let b = g.constant(Tensor::new(Shape::matrix(1, 4), shifted));
        let (sa, sb) = (g.softmax_rows(a), g.softmax_rows(b));
        for (x, y) in g.data(sa).iter().zip(g.data(sb)) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn elementwise_linear_examples() {
        let mut g = Graph::new();
        let v = g.vector(vec![1.0, 2.0]);
        let w = g.vector(vec![3.0, 4.0]);
        let b = g.vector(vec![0.0, 1.0]);
        let out = g.elementwise_linear(v, w, b).unwrap();
        assert_eq!(g.data(out), &[3.0, 9.0]);

        let short = g.vector(vec![1.0]);
        assert!(matches!(
            g.elementwise_linear(v, short, b),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn loss_examples() {
        let mut g = Graph::new();
        let z = g.vector(vec![0.0]);
        let l = g.bce_with_logits(z, &[1.0]).unwrap();
        assert!((g.scalar(l) - 2f64.ln()).abs() < 1e-12);

        let big = g.vector(vec![800.0]);
        let l = g.bce_with_logits(big, &[1.0]).unwrap();
        assert!(g.scalar(l).abs() < 1e-300);

        let x = g.vector(vec![0.5, -0.5]);
        let l = g.bce_with_logits(x, &[1.0, 0.0]).unwrap();
        // scalar oracle: -ln σ(0.5) for both samples
        let oracle = -(1.0 / (1.0 + (-0.5f64).exp())).ln();
        assert!((g.scalar(l) - oracle).abs() < 1e-12);
        assert!((g.scalar(l) - 0.474_077).abs() < 1e-5);

        let p = g.vector(vec![1.0, 2.0]);
        let l = g.mse(p, &[0.0, 0.0]).unwrap();
        assert_eq!(g.scalar(l), 2.5);
        let p = g.vector(vec![3.0]);
        let l = g.mse(p, &[1.0]).unwrap();
        assert_eq!(g.scalar(l), 4.0);
        let l = g.mse(p, &[3.0]).unwrap();
        assert_eq!(g.scalar(l), 0.0);
        let e = g.vector(vec![]);
        assert!(g.mse(e, &[]).is_err());
    }

    #[test]
    fn backward_examples() {
        let mut g = Graph::new();
        let w = vec_leaf(&mut g, &[2.0], 0);
        let x = g.vector(vec![3.0]);
        let y = g.mul(w, x).unwrap();
        let root = g.sum(y);
        g.backward(root).unwrap();
        assert_eq!(g.grad(w), &[3.0]);
        g.backward(root).unwrap();
        assert_eq!(g.grad(w), &[6.0]);
        g.zero_grad();
        assert_eq!(g.grad(w), &[0.0]);

        let mut g = Graph::new();
        let w = vec_leaf(&mut g, &[1.0], 0);
        let a = g.gelu(w);
        let root = g.sum(a);
        g.backward(root).unwrap();
        // Φ(1) + φ(1)
        let expected = crate::diffcore::normal_cdf(1.0) + crate::diffcore::normal_pdf(1.0);
        assert_eq!(g.grad(w)[0], expected);
        assert!((g.grad(w)[0] - 1.083_316).abs() < 1e-6);

        assert!(matches!(g.backward(a), Ok(())));
        let v = g.vector(vec![1.0, 2.0]);
        assert!(matches!(g.backward(v), Err(Error::Contract(_))));
    }

    #[test]
    fn gather_accumulates_shared_source() {
        let mut g = Graph::new();
        let w = vec_leaf(&mut g, &[1.0, 2.0], 0);
        let picked = g.gather(w, Arc::from(vec![1usize, 1, 0])).unwrap();
        assert_eq!(g.data(picked), &[2.0, 2.0, 1.0]);
        let root = g.sum(picked);
        g.backward(root).unwrap();
        assert_eq!(g.grad(w), &[1.0, 2.0]);
    }
}
