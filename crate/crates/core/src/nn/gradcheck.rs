use super::tensor::Parameters;

pub const GRADCHECK_STEP: f64 = 1e-5;
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
/// Magnitudes below this are compared absolutely: central differences
/// carry roughly `1e-16 / step` of rounding noise.
pub const GRADCHECK_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct TensorCheck {
    pub name: String,
    pub entries: usize,
    pub max_relative_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.tensors.iter().map(|t| t.max_relative_error).fold(0.0, f64::max)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error() < tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRADCHECK_FLOOR)
}

/// Compares `analytic` against central finite differences of `loss` at
/// every entry of every tensor of `params`.
pub fn gradient_check<P: Parameters>(params: &P, analytic: &P, step: f64, loss: impl Fn(&P) -> f64) -> GradCheckReport {
    let mut probe = params.clone();
    let names = params.names();
    let grads = analytic.tensors();
    let mut tensors = Vec::new();
    for (k, name) in names.into_iter().enumerate() {
        let n = grads[k].len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let original = probe.tensors()[k].data()[i];
            probe.tensors_mut()[k].data_mut()[i] = original + step;
            let plus = loss(&probe);
            probe.tensors_mut()[k].data_mut()[i] = original - step;
            let minus = loss(&probe);
            probe.tensors_mut()[k].data_mut()[i] = original;
            let numeric = (plus - minus) / (2.0 * step);
            worst = worst.max(relative_error(grads[k].data()[i], numeric));
        }
        tensors.push(TensorCheck {
            name,
            entries: n,
            max_relative_error: worst,
        });
    }
    GradCheckReport { tensors }
}
