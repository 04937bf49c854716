use rand::Rng;

use crate::error::{Error, Result};

/// Dense row-major tensor of doubles. Matrices are `[rows, cols]`, vectors
/// `[len]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!("{} values for shape {:?}", data.len(), shape)));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Uniform(−s, s) entries drawn at single precision, so the tensor
    /// converts to `f32` without loss.
    pub fn uniform(shape: &[usize], s: f64, rng: &mut impl Rng) -> Self {
        let s = s as f32;
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-s..=s) as f64).collect();
        Self {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    pub fn cols(&self) -> usize {
        if self.shape.len() < 2 {
            1
        } else {
            self.shape[1..].iter().product()
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn round_to_f32(&mut self) {
        self.data.iter_mut().for_each(|x| *x = *x as f32 as f64);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// `out += M x`.
pub fn matvec_add(m: &Tensor, x: &[f64], out: &mut [f64]) {
    let c = m.cols();
    debug_assert_eq!(c, x.len());
    debug_assert_eq!(m.rows(), out.len());
    for (o, row) in out.iter_mut().zip(m.data.chunks_exact(c)) {
        *o += dot(row, x);
    }
}

/// `out += Mᵀ y`.
pub fn matvec_t_add(m: &Tensor, y: &[f64], out: &mut [f64]) {
    let c = m.cols();
    debug_assert_eq!(c, out.len());
    for (&yi, row) in y.iter().zip(m.data.chunks_exact(c)) {
        if yi != 0.0 {
            axpy(yi, row, out);
        }
    }
}

/// `M += y xᵀ`.
pub fn outer_add(m: &mut Tensor, y: &[f64], x: &[f64]) {
    let c = m.cols();
    debug_assert_eq!(c, x.len());
    for (&yi, row) in y.iter().zip(m.data.chunks_exact_mut(c)) {
        if yi != 0.0 {
            axpy(yi, x, row);
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += a x`.
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Glorot-style bound `√(6 / (fan_in + fan_out))`.
pub fn init_scale(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

pub(crate) fn check_len(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Shape(format!("{what}: expected length {expected}, got {got}")));
    }
    Ok(())
}

/// A fixed collection of named tensors.
pub trait Parameters: Clone {
    fn tensors(&self) -> Vec<&Tensor>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor>;
    fn names(&self) -> Vec<String>;

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
        z
    }

    fn round_to_f32(&mut self) {
        self.tensors_mut().into_iter().for_each(Tensor::round_to_f32);
    }

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}
