use rand::Rng;

use super::tensor::{check_len, init_scale, matvec_add, matvec_t_add, outer_add, sigmoid, Parameters, Tensor};
use crate::error::{Error, Result};

/// Affine layer `M x + b` with `M` of shape `out × in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub w: Tensor,
    pub b: Tensor,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            w: Tensor::zeros(&[output, input]),
            b: Tensor::zeros(&[output]),
        }
    }

    pub fn init(input: usize, output: usize, rng: &mut impl Rng) -> Self {
        Self {
            w: Tensor::uniform(&[output, input], init_scale(input, output), rng),
            b: Tensor::zeros(&[output]),
        }
    }

    pub fn input_size(&self) -> usize {
        self.w.cols()
    }

    pub fn output_size(&self) -> usize {
        self.w.rows()
    }

    pub fn linear(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.b.data().to_vec();
        matvec_add(&self.w, x, &mut y);
        y
    }

    /// `ReLU(M x + b)`.
    pub fn relu(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.linear(x);
        y.iter_mut().for_each(|v| *v = v.max(0.0));
        y
    }

    /// Backward through `relu` given its input, its output and the output
    /// gradient. Returns the input gradient.
    pub fn relu_backward(&self, x: &[f64], y: &[f64], dy: &[f64], grads: &mut Dense) -> Vec<f64> {
        let d_pre: Vec<f64> = dy.iter().zip(y).map(|(&d, &v)| if v > 0.0 { d } else { 0.0 }).collect();
        self.linear_backward(x, &d_pre, grads)
    }

    pub fn linear_backward(&self, x: &[f64], d_pre: &[f64], grads: &mut Dense) -> Vec<f64> {
        outer_add(&mut grads.w, d_pre, x);
        grads.b.data_mut().iter_mut().zip(d_pre).for_each(|(a, b)| *a += b);
        let mut dx = vec![0.0; x.len()];
        matvec_t_add(&self.w, d_pre, &mut dx);
        dx
    }
}

impl Parameters for Dense {
    fn tensors(&self) -> Vec<&Tensor> {
        vec![&self.w, &self.b]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w, &mut self.b]
    }

    fn names(&self) -> Vec<String> {
        vec!["w".into(), "b".into()]
    }
}

/// ReLU hidden layers followed by a scalar sigmoid output.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub hidden: Vec<Dense>,
    pub output: Dense,
}

/// Layer activations of one forward pass.
#[derive(Clone, Debug)]
pub struct MlpTrace {
    activations: Vec<Vec<f64>>,
    pub output: f64,
}

impl Mlp {
    pub fn zeros(input: usize, hidden: &[usize]) -> Self {
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        Self {
            hidden: dims.windows(2).map(|d| Dense::zeros(d[0], d[1])).collect(),
            output: Dense::zeros(*dims.last().unwrap(), 1),
        }
    }

    pub fn init(input: usize, hidden: &[usize], rng: &mut impl Rng) -> Self {
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        Self {
            hidden: dims.windows(2).map(|d| Dense::init(d[0], d[1], rng)).collect(),
            output: Dense::init(*dims.last().unwrap(), 1, rng),
        }
    }

    pub fn input_size(&self) -> usize {
        self.hidden.first().unwrap_or(&self.output).input_size()
    }

    pub fn layout(&self) -> Vec<usize> {
        self.hidden.iter().map(Dense::output_size).collect()
    }

    /// Checks that layer dimensions chain and end in a scalar.
    pub fn validate(&self) -> Result<()> {
        let mut width = self.input_size();
        for layer in self.hidden.iter().chain(std::iter::once(&self.output)) {
            if layer.input_size() != width || layer.b.len() != layer.output_size() {
                return Err(Error::Shape("predictor layers do not chain".into()));
            }
            width = layer.output_size();
        }
        if width != 1 {
            return Err(Error::Shape("predictor output must be scalar".into()));
        }
        Ok(())
    }

    pub fn forward_traced(&self, x: &[f64]) -> MlpTrace {
        let mut activations = vec![x.to_vec()];
        for layer in &self.hidden {
            let next = layer.relu(activations.last().unwrap());
            activations.push(next);
        }
        let output = sigmoid(self.output.linear(activations.last().unwrap())[0]);
        MlpTrace { activations, output }
    }

    /// Backward from `d_output` (gradient w.r.t. the sigmoid output).
    /// Returns the gradient w.r.t. the input.
    pub fn backward(&self, trace: &MlpTrace, d_output: f64, grads: &mut Mlp) -> Vec<f64> {
        let y = trace.output;
        let d_pre = [d_output * y * (1.0 - y)];
        let last = trace.activations.last().unwrap();
        let mut d = self.output.linear_backward(last, &d_pre, &mut grads.output);
        for (k, layer) in self.hidden.iter().enumerate().rev() {
            d = layer.relu_backward(
                &trace.activations[k],
                &trace.activations[k + 1],
                &d,
                &mut grads.hidden[k],
            );
        }
        d
    }
}

impl Parameters for Mlp {
    fn tensors(&self) -> Vec<&Tensor> {
        self.hidden
            .iter()
            .chain(std::iter::once(&self.output))
            .flat_map(|l| [&l.w, &l.b])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.hidden
            .iter_mut()
            .chain(std::iter::once(&mut self.output))
            .flat_map(|l| [&mut l.w, &mut l.b])
            .collect()
    }

    fn names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for k in 0..self.hidden.len() {
            names.push(format!("hidden{k}.w"));
            names.push(format!("hidden{k}.b"));
        }
        names.push("output.w".into());
        names.push("output.b".into());
        names
    }
}

/// ReLU hidden layers, then a sigmoid scalar.
pub fn mlp_forward(p: &Mlp, x: &[f64]) -> Result<f64> {
    p.validate()?;
    check_len("predictor input", p.input_size(), x.len())?;
    Ok(p.forward_traced(x).output)
}

/// Mean squared error.
pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("mse of an empty batch".into()));
    }
    check_len("targets", predictions.len(), targets.len())?;
    let sum: f64 = predictions.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / predictions.len() as f64)
}
