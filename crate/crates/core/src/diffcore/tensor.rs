use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub fn vector(n: usize) -> Self {
        Shape { rows: n, cols: 1 }
    }

    pub fn matrix(rows: usize, cols: usize) -> Self {
        Shape { rows, cols }
    }

    pub fn scalar() -> Self {
        Shape { rows: 1, cols: 1 }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_scalar(&self) -> bool {
        self.rows == 1 && self.cols == 1
    }
}

/// Row-major dense array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Shape,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Shape, data: Vec<f64>) -> Self {
        assert_eq!(shape.len(), data.len(), "tensor data does not match shape");
        Tensor { shape, data }
    }

    pub fn zeros(shape: Shape) -> Self {
        Tensor {
            shape,
            data: vec![0.0; shape.len()],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: Shape::vector(data.len()),
            data,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub tensor: Tensor,
}

/// Ordered, named collection of learnable arrays. The same layout doubles as
/// the container for gradients and optimizer moments.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub entries: Vec<ParamEntry>,
}

impl ParamSet {
    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor) -> usize {
        self.entries.push(ParamEntry {
            name: name.into(),
            tensor,
        });
        self.entries.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn count(&self) -> usize {
        self.entries.iter().map(|e| e.tensor.len()).sum()
    }

    pub fn get(&self, slot: usize) -> &Tensor {
        &self.entries[slot].tensor
    }

    pub fn get_mut(&mut self, slot: usize) -> &mut Tensor {
        &mut self.entries[slot].tensor
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn zeros_like(&self) -> ParamSet {
        ParamSet {
            entries: self
                .entries
                .iter()
                .map(|e| ParamEntry {
                    name: e.name.clone(),
                    tensor: Tensor::zeros(e.tensor.shape),
                })
                .collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        for e in &mut self.entries {
            e.tensor.data.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    /// `self += other`, entry by entry. Layouts must match.
    pub fn add_assign(&mut self, other: &ParamSet) {
        assert_eq!(self.len(), other.len(), "param layouts differ");
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            for (x, y) in a.tensor.data.iter_mut().zip(&b.tensor.data) {
                *x += *y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for e in &mut self.entries {
            e.tensor.data.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.tensor.data.iter().all(|x| x.is_finite()))
    }
}
