use rand::Rng;

use super::gru::check_ids;
use super::tensor::{check_len, init_scale, matvec_add, matvec_t_add, outer_add, sigmoid, Parameters, Tensor};
use crate::error::Result;

/// LSTM cell weights for the input, forget, output and candidate gates.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub w: [Tensor; 4],
    pub u: [Tensor; 4],
    pub b: [Tensor; 4],
}

const GATES: [&str; 4] = ["i", "f", "o", "g"];

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w: std::array::from_fn(|_| Tensor::zeros(&[hidden, input])),
            u: std::array::from_fn(|_| Tensor::zeros(&[hidden, hidden])),
            b: std::array::from_fn(|_| Tensor::zeros(&[hidden])),
        }
    }

    pub fn init(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let sw = init_scale(input, hidden);
        let su = init_scale(hidden, hidden);
        let w = std::array::from_fn(|_| Tensor::uniform(&[hidden, input], sw, rng));
        let u = std::array::from_fn(|_| Tensor::uniform(&[hidden, hidden], su, rng));
        Self {
            w,
            u,
            b: std::array::from_fn(|_| Tensor::zeros(&[hidden])),
        }
    }

    pub fn input_size(&self) -> usize {
        self.w[0].cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.w[0].rows()
    }
}

impl Parameters for LstmParams {
    fn tensors(&self) -> Vec<&Tensor> {
        self.w.iter().chain(&self.u).chain(&self.b).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.w
            .iter_mut()
            .chain(self.u.iter_mut())
            .chain(self.b.iter_mut())
            .collect()
    }

    fn names(&self) -> Vec<String> {
        ["w", "u", "b"]
            .iter()
            .flat_map(|k| GATES.iter().map(move |g| format!("{k}_{g}")))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct LstmStep {
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    gates: [Vec<f64>; 4],
    c: Vec<f64>,
}

fn step_cached(p: &LstmParams, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>, LstmStep) {
    let gates: [Vec<f64>; 4] = std::array::from_fn(|k| {
        let mut a = p.b[k].data().to_vec();
        matvec_add(&p.w[k], x, &mut a);
        matvec_add(&p.u[k], h, &mut a);
        if k == 3 {
            a.iter_mut().for_each(|v| *v = v.tanh());
        } else {
            a.iter_mut().for_each(|v| *v = sigmoid(*v));
        }
        a
    });
    let [i, f, o, g] = &gates;
    let c_new: Vec<f64> = (0..c.len()).map(|j| f[j] * c[j] + i[j] * g[j]).collect();
    let h_new = (0..c.len()).map(|j| o[j] * c_new[j].tanh()).collect();
    let step = LstmStep {
        h_prev: h.to_vec(),
        c_prev: c.to_vec(),
        gates: gates.clone(),
        c: c_new.clone(),
    };
    (h_new, c_new, step)
}

/// One LSTM step: `c' = f∘c + i∘g`, `h' = o∘tanh(c')`. Returns `(h', c')`.
pub fn lstm_step(p: &LstmParams, x: &[f64], h: &[f64], c: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len("lstm input", p.input_size(), x.len())?;
    check_len("lstm hidden state", p.hidden_size(), h.len())?;
    check_len("lstm cell state", p.hidden_size(), c.len())?;
    let (h, c, _) = step_cached(p, x, h, c);
    Ok((h, c))
}

/// Final hidden state of the sequence; the empty sequence gives zeros.
pub fn lstm_encode(p: &LstmParams, embedding: &Tensor, ids: &[u32]) -> Result<Vec<f64>> {
    check_ids(ids, embedding.rows())?;
    check_len("embedding width", p.input_size(), embedding.cols())?;
    Ok(encode_traced(p, embedding, ids).0)
}

pub(crate) fn encode_traced(p: &LstmParams, embedding: &Tensor, ids: &[u32]) -> (Vec<f64>, Vec<LstmStep>) {
    let n = p.hidden_size();
    let (mut h, mut c) = (vec![0.0; n], vec![0.0; n]);
    let mut trace = Vec::with_capacity(ids.len());
    for &id in ids {
        let (h2, c2, step) = step_cached(p, embedding.row(id as usize), &h, &c);
        trace.push(step);
        h = h2;
        c = c2;
    }
    (h, trace)
}

pub(crate) fn backward_sequence(
    p: &LstmParams,
    embedding: &Tensor,
    ids: &[u32],
    trace: &[LstmStep],
    dh: &[f64],
    grads: &mut LstmParams,
    d_embedding: &mut Tensor,
    touched: &mut Vec<u32>,
) {
    let n = p.hidden_size();
    let mut dh = dh.to_vec();
    let mut dc = vec![0.0; n];
    for (t, step) in trace.iter().enumerate().rev() {
        let id = ids[t];
        let x = embedding.row(id as usize);
        let [i, f, o, g] = &step.gates;
        let mut d_pre: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; n]);
        let mut dc_prev = vec![0.0; n];
        for j in 0..n {
            let tc = step.c[j].tanh();
            let dcj = dc[j] + dh[j] * o[j] * (1.0 - tc * tc);
            d_pre[0][j] = dcj * g[j] * i[j] * (1.0 - i[j]);
            d_pre[1][j] = dcj * step.c_prev[j] * f[j] * (1.0 - f[j]);
            d_pre[2][j] = dh[j] * tc * o[j] * (1.0 - o[j]);
            d_pre[3][j] = dcj * i[j] * (1.0 - g[j] * g[j]);
            dc_prev[j] = dcj * f[j];
        }
        let mut dh_prev = vec![0.0; n];
        let dx = d_embedding.row_mut(id as usize);
        for k in 0..4 {
            outer_add(&mut grads.w[k], &d_pre[k], x);
            outer_add(&mut grads.u[k], &d_pre[k], &step.h_prev);
            grads.b[k]
                .data_mut()
                .iter_mut()
                .zip(&d_pre[k])
                .for_each(|(a, b)| *a += b);
            matvec_t_add(&p.u[k], &d_pre[k], &mut dh_prev);
            matvec_t_add(&p.w[k], &d_pre[k], dx);
        }
        touched.push(id);
        dh = dh_prev;
        dc = dc_prev;
    }
}
