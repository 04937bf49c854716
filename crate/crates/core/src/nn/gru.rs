use rand::Rng;

use super::tensor::{check_len, init_scale, matvec_add, matvec_t_add, outer_add, sigmoid, Parameters, Tensor};
use crate::error::{Error, Result};

/// GRU cell weights. Input matrices are `H × I`, recurrent ones `H × H`.
#[derive(Clone, Debug, PartialEq)]
pub struct GruParams {
    pub w_z: Tensor,
    pub w_r: Tensor,
    pub w_h: Tensor,
    pub u_z: Tensor,
    pub u_r: Tensor,
    pub u_h: Tensor,
    pub b_z: Tensor,
    pub b_r: Tensor,
    pub b_h: Tensor,
}

impl GruParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let w = Tensor::zeros(&[hidden, input]);
        let u = Tensor::zeros(&[hidden, hidden]);
        let b = Tensor::zeros(&[hidden]);
        Self {
            w_z: w.clone(),
            w_r: w.clone(),
            w_h: w,
            u_z: u.clone(),
            u_r: u.clone(),
            u_h: u,
            b_z: b.clone(),
            b_r: b.clone(),
            b_h: b,
        }
    }

    pub fn init(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let sw = init_scale(input, hidden);
        let su = init_scale(hidden, hidden);
        let mut p = Self::zeros(input, hidden);
        for w in [&mut p.w_z, &mut p.w_r, &mut p.w_h] {
            *w = Tensor::uniform(&[hidden, input], sw, rng);
        }
        for u in [&mut p.u_z, &mut p.u_r, &mut p.u_h] {
            *u = Tensor::uniform(&[hidden, hidden], su, rng);
        }
        p
    }

    pub fn input_size(&self) -> usize {
        self.w_z.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.w_z.rows()
    }
}

impl Parameters for GruParams {
    fn tensors(&self) -> Vec<&Tensor> {
        vec![
            &self.w_z, &self.w_r, &self.w_h, &self.u_z, &self.u_r, &self.u_h, &self.b_z, &self.b_r, &self.b_h,
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]
    }

    fn names(&self) -> Vec<String> {
        ["w_z", "w_r", "w_h", "u_z", "u_r", "u_h", "b_z", "b_r", "b_h"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }
}

/// Intermediate values of one step, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct GruStep {
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    candidate: Vec<f64>,
}

fn step_cached(p: &GruParams, x: &[f64], h: &[f64]) -> (Vec<f64>, GruStep) {
    let n = p.hidden_size();
    let mut z = p.b_z.data().to_vec();
    matvec_add(&p.w_z, x, &mut z);
    matvec_add(&p.u_z, h, &mut z);
    let mut r = p.b_r.data().to_vec();
    matvec_add(&p.w_r, x, &mut r);
    matvec_add(&p.u_r, h, &mut r);
    z.iter_mut().for_each(|v| *v = sigmoid(*v));
    r.iter_mut().for_each(|v| *v = sigmoid(*v));
    let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
    let mut cand = p.b_h.data().to_vec();
    matvec_add(&p.w_h, x, &mut cand);
    matvec_add(&p.u_h, &rh, &mut cand);
    cand.iter_mut().for_each(|v| *v = v.tanh());
    let out = (0..n).map(|i| (1.0 - z[i]) * h[i] + z[i] * cand[i]).collect();
    (
        out,
        GruStep {
            h_prev: h.to_vec(),
            z,
            r,
            candidate: cand,
        },
    )
}

/// One GRU step with the reset gate applied inside the candidate:
/// `h' = (1 − z)∘h + z∘tanh(W_h x + U_h (r∘h) + b_h)`.
pub fn gru_step(p: &GruParams, x: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    check_len("gru input", p.input_size(), x.len())?;
    check_len("gru hidden state", p.hidden_size(), h.len())?;
    Ok(step_cached(p, x, h).0)
}

pub(crate) fn check_ids(ids: &[u32], vocab: usize) -> Result<()> {
    match ids.iter().find(|&&id| id as usize >= vocab) {
        Some(&id) => Err(Error::TokenOutOfRange {
            id: id as usize,
            size: vocab,
        }),
        None => Ok(()),
    }
}

/// Final hidden state after folding the embedded tokens from `h_0 = 0`. The
/// empty sequence encodes to the zero vector.
pub fn encode_sequence(p: &GruParams, embedding: &Tensor, ids: &[u32]) -> Result<Vec<f64>> {
    check_ids(ids, embedding.rows())?;
    check_len("embedding width", p.input_size(), embedding.cols())?;
    Ok(encode_traced(p, embedding, ids).0)
}

pub(crate) fn encode_traced(p: &GruParams, embedding: &Tensor, ids: &[u32]) -> (Vec<f64>, Vec<GruStep>) {
    let mut h = vec![0.0; p.hidden_size()];
    let mut trace = Vec::with_capacity(ids.len());
    for &id in ids {
        let (next, step) = step_cached(p, embedding.row(id as usize), &h);
        trace.push(step);
        h = next;
    }
    (h, trace)
}

/// Backpropagates `dh` (gradient at the final state) through the sequence,
/// accumulating into `grads` and the embedding gradient. Touched embedding
/// rows are appended to `touched`.
pub(crate) fn backward_sequence(
    p: &GruParams,
    embedding: &Tensor,
    ids: &[u32],
    trace: &[GruStep],
    dh: &[f64],
    grads: &mut GruParams,
    d_embedding: &mut Tensor,
    touched: &mut Vec<u32>,
) {
    let n = p.hidden_size();
    let mut dh = dh.to_vec();
    let mut d_pre_z = vec![0.0; n];
    let mut d_pre_r = vec![0.0; n];
    let mut d_pre_h = vec![0.0; n];
    for (t, step) in trace.iter().enumerate().rev() {
        let id = ids[t];
        let x = embedding.row(id as usize);
        let h = &step.h_prev;
        let mut dh_prev = vec![0.0; n];
        for i in 0..n {
            let (z, c) = (step.z[i], step.candidate[i]);
            d_pre_h[i] = dh[i] * z * (1.0 - c * c);
            d_pre_z[i] = dh[i] * (c - h[i]) * z * (1.0 - z);
            dh_prev[i] = dh[i] * (1.0 - z);
        }
        let rh: Vec<f64> = step.r.iter().zip(h).map(|(a, b)| a * b).collect();
        let mut d_rh = vec![0.0; n];
        matvec_t_add(&p.u_h, &d_pre_h, &mut d_rh);
        for i in 0..n {
            let r = step.r[i];
            d_pre_r[i] = d_rh[i] * h[i] * r * (1.0 - r);
            dh_prev[i] += d_rh[i] * r;
        }
        matvec_t_add(&p.u_z, &d_pre_z, &mut dh_prev);
        matvec_t_add(&p.u_r, &d_pre_r, &mut dh_prev);

        outer_add(&mut grads.w_z, &d_pre_z, x);
        outer_add(&mut grads.w_r, &d_pre_r, x);
        outer_add(&mut grads.w_h, &d_pre_h, x);
        outer_add(&mut grads.u_z, &d_pre_z, h);
        outer_add(&mut grads.u_r, &d_pre_r, h);
        outer_add(&mut grads.u_h, &d_pre_h, &rh);
        for (g, d) in [
            (&mut grads.b_z, &d_pre_z),
            (&mut grads.b_r, &d_pre_r),
            (&mut grads.b_h, &d_pre_h),
        ] {
            g.data_mut().iter_mut().zip(d.iter()).for_each(|(a, b)| *a += b);
        }

        let dx = d_embedding.row_mut(id as usize);
        matvec_t_add(&p.w_z, &d_pre_z, dx);
        matvec_t_add(&p.w_r, &d_pre_r, dx);
        matvec_t_add(&p.w_h, &d_pre_h, dx);
        touched.push(id);
        dh = dh_prev;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(weights: f64, bias: f64) -> GruParams {
        let mut p = GruParams::zeros(1, 1);
        for (i, t) in p.tensors_mut().into_iter().enumerate() {
            t.fill(if i < 6 { weights } else { bias });
        }
        p
    }

    #[test]
    fn zero_params_are_a_fixed_point() {
        let p = GruParams::zeros(3, 4);
        assert_eq!(gru_step(&p, &[1.0, -2.0, 3.0], &[0.0; 4]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn scalar_trace() {
        // Weights 1, biases 0: z = r = σ(1), candidate = tanh(1).
        let h = gru_step(&scalar(1.0, 0.0), &[1.0], &[0.0]).unwrap()[0];
        let s1 = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((h - s1 * 1.0f64.tanh()).abs() < 1e-15);
        assert!((h - 0.5568).abs() < 5e-5);
        // All ones including biases: z = σ(2), candidate = tanh(2).
        let h = gru_step(&scalar(1.0, 1.0), &[1.0], &[0.0]).unwrap()[0];
        assert!((h - 0.849_112_675_620_868_5).abs() < 1e-12);
    }

    #[test]
    fn shapes_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = GruParams::init(8, 128, &mut rng);
        assert_eq!(gru_step(&p, &[0.1; 8], &[0.0; 128]).unwrap().len(), 128);
        assert!(matches!(gru_step(&p, &[0.1; 7], &[0.0; 128]), Err(Error::Shape(_))));
        let emb = Tensor::uniform(&[5, 8], 0.5, &mut rng);
        assert_eq!(encode_sequence(&p, &emb, &[]).unwrap(), vec![0.0; 128]);
        assert!(matches!(
            encode_sequence(&p, &emb, &[5]),
            Err(Error::TokenOutOfRange { id: 5, size: 5 })
        ));
    }

    #[test]
    fn encoding_unfolds_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = GruParams::init(4, 6, &mut rng);
        let emb = Tensor::uniform(&[3, 4], 0.5, &mut rng);
        let h1 = gru_step(&p, emb.row(2), &[0.0; 6]).unwrap();
        assert_eq!(encode_sequence(&p, &emb, &[2]).unwrap(), h1);
        let h2 = gru_step(&p, emb.row(1), &h1).unwrap();
        assert_eq!(encode_sequence(&p, &emb, &[2, 1]).unwrap(), h2);
    }

    proptest::proptest! {
        #[test]
        fn state_stays_in_open_unit_interval(
            seed in 0u64..1000,
            x in proptest::collection::vec(-5.0f64..5.0, 3),
            h in proptest::collection::vec(-0.999f64..0.999, 4),
        ) {
            let p = GruParams::init(3, 4, &mut ChaCha8Rng::seed_from_u64(seed));
            for v in gru_step(&p, &x, &h).unwrap() {
                proptest::prop_assert!(v > -1.0 && v < 1.0);
            }
        }
    }
}
