use super::tensor::{Parameters, Tensor};
use crate::error::{Error, Result};

pub const ADAGRAD_EPSILON: f64 = 1e-8;

/// Squared-gradient accumulators mirroring a parameter set.
#[derive(Clone, Debug)]
pub struct AdagradState<P> {
    pub accumulators: P,
    pub learning_rate: f64,
    pub epsilon: f64,
}

impl<P: Parameters> AdagradState<P> {
    pub fn new(params: &P, learning_rate: f64) -> Self {
        Self {
            accumulators: params.zeros_like(),
            learning_rate,
            epsilon: ADAGRAD_EPSILON,
        }
    }

    pub fn step(&mut self, params: &mut P, grads: &P) -> Result<()> {
        self.step_sparse(params, grads, &[])
    }

    /// Like [`step`](Self::step), but tensors listed in `sparse` (by index
    /// into [`Parameters::tensors`]) are only updated on the given rows.
    /// Rows with zero gradient are unchanged by the rule anyway, so this is
    /// exact.
    pub fn step_sparse(&mut self, params: &mut P, grads: &P, sparse: &[(usize, &[u32])]) -> Result<()> {
        let names = params.names();
        let grads = grads.tensors();
        for (k, g) in grads.iter().enumerate() {
            let rows = sparse.iter().find(|(i, _)| *i == k).map(|(_, r)| *r);
            let bad = match rows {
                Some(rows) => rows.iter().any(|&r| g.row(r as usize).iter().any(|x| !x.is_finite())),
                None => !g.is_finite(),
            };
            if bad {
                return Err(Error::NonFinite(format!("gradient of `{}`", names[k])));
            }
        }
        let (lr, eps) = (self.learning_rate, self.epsilon);
        for (k, ((p, g), acc)) in params
            .tensors_mut()
            .into_iter()
            .zip(grads)
            .zip(self.accumulators.tensors_mut())
            .enumerate()
        {
            match sparse.iter().find(|(i, _)| *i == k) {
                Some((_, rows)) => {
                    for &r in rows.iter() {
                        let r = r as usize;
                        update(p.row_mut(r), g.row(r), acc.row_mut(r), lr, eps);
                    }
                }
                None => update(p.data_mut(), g.data(), acc.data_mut(), lr, eps),
            }
        }
        Ok(())
    }
}

fn update(p: &mut [f64], g: &[f64], acc: &mut [f64], lr: f64, eps: f64) {
    for ((p, &g), a) in p.iter_mut().zip(g).zip(acc) {
        *a += g * g;
        *p -= lr * g / (a.sqrt() + eps);
    }
}

/// One entrywise Adagrad update on a single tensor.
pub fn adagrad_update(param: &mut Tensor, grad: &Tensor, acc: &mut Tensor, learning_rate: f64) -> Result<()> {
    if !grad.is_finite() {
        return Err(Error::NonFinite("gradient".into()));
    }
    update(
        param.data_mut(),
        grad.data(),
        acc.data_mut(),
        learning_rate,
        ADAGRAD_EPSILON,
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Dense;

    fn scalar(v: f64) -> Tensor {
        Tensor::filled(&[1], v)
    }

    #[test]
    fn closed_form_update() {
        let (mut p, mut acc) = (scalar(1.0), scalar(0.0));
        adagrad_update(&mut p, &scalar(1.0), &mut acc, 0.01).unwrap();
        assert_eq!(acc.data()[0], 1.0);
        assert!((p.data()[0] - (1.0 - 0.01 / (1.0 + 1e-8))).abs() < 1e-15);
        let before = p.clone();
        adagrad_update(&mut p, &scalar(0.0), &mut acc, 0.01).unwrap();
        assert_eq!((p, acc.data()[0]), (before, 1.0));
    }

    #[test]
    fn steps_shrink() {
        let (mut p, mut acc) = (scalar(0.0), scalar(0.0));
        adagrad_update(&mut p, &scalar(1.0), &mut acc, 0.1).unwrap();
        let first = p.data()[0].abs();
        adagrad_update(&mut p, &scalar(1.0), &mut acc, 0.1).unwrap();
        assert!(p.data()[0].abs() - first < first);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut layer = Dense::zeros(2, 2);
        let mut state = AdagradState::new(&layer, 0.1);
        let mut g = layer.zeros_like();
        g.b.data_mut()[0] = f64::NAN;
        let err = state.step(&mut layer, &g).unwrap_err();
        assert!(err.to_string().contains("`b`"));
    }

    #[test]
    fn sparse_rows_match_dense() {
        let mut dense = Dense::zeros(3, 4);
        dense
            .w
            .data_mut()
            .iter_mut()
            .enumerate()
            .for_each(|(i, x)| *x = i as f64 * 0.1);
        let mut sparse = dense.clone();
        let mut g = dense.zeros_like();
        g.w.row_mut(2).copy_from_slice(&[0.5, -1.0, 2.0]);
        g.b.data_mut()[1] = 0.3;
        let mut s1 = AdagradState::new(&dense, 0.05);
        let mut s2 = s1.clone();
        for _ in 0..3 {
            s1.step(&mut dense, &g).unwrap();
            s2.step_sparse(&mut sparse, &g, &[(0, &[2])]).unwrap();
        }
        assert_eq!(dense, sparse);
        assert_eq!(s1.accumulators, s2.accumulators);
    }

    proptest::proptest! {
        #[test]
        fn accumulators_never_decrease(gs in proptest::collection::vec(-5.0f64..5.0, 1..20)) {
            let (mut p, mut acc) = (scalar(0.0), scalar(0.0));
            let mut last = 0.0;
            for g in gs {
                adagrad_update(&mut p, &scalar(g), &mut acc, 0.1).unwrap();
                proptest::prop_assert!(acc.data()[0] >= last);
                last = acc.data()[0];
            }
        }
    }
}
