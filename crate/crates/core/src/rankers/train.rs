use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{AdagradState, Parameters};

/// Optimization settings shared by the recurrent rankers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Dropout probability on encoder outputs during training.
    pub dropout: f64,
    pub max_epochs: usize,
    /// Epochs without dev-loss improvement before stopping.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 8,
            dropout: 0.4,
            max_epochs: 20,
            patience: 3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::InvalidArgument("batch size and epochs must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(
                "learning rate must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean squared error over the epoch's training batches, with dropout.
    pub train_loss: f64,
    /// Dev-set MSE of the epoch's single-precision snapshot.
    pub dev_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_dev_loss: f64,
}

/// Mixes a base seed with stream coordinates (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, coords: &[u64]) -> u64 {
    let mut h = seed;
    for &c in coords {
        h = h.wrapping_add(c).wrapping_add(0x9e37_79b9_7f4a_7c15);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

/// Inverted-dropout mask: entries are 0 or `1 / (1 − p)`.
pub fn dropout_mask(len: usize, p: f64, rng: &mut impl Rng) -> Vec<f64> {
    let keep = 1.0 / (1.0 - p);
    (0..len)
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
        .collect()
}

/// A model trainable by [`fit`]: MSE regression of a scalar in (0, 1) with
/// Adagrad, where one tensor (the embedding table) receives sparse updates.
pub(crate) trait Network: Clone {
    type Example;
    type Params: Parameters;

    fn params(&self) -> &Self::Params;
    fn params_mut(&mut self) -> &mut Self::Params;
    /// Index of the embedding table in `Parameters::tensors`.
    fn embedding_index(&self) -> usize;
    /// Width of the dropout mask (the encoder output).
    fn dropout_width(&self) -> usize;
    fn predict(&self, example: &Self::Example) -> f64;
    /// Forward and backward pass with output gradient `scale · (y − target)`,
    /// adding into `grads`. Returns the prediction `y`.
    fn accumulate(
        &self,
        example: &Self::Example,
        target: f64,
        scale: f64,
        mask: Option<&[f64]>,
        grads: &mut Self::Params,
        touched: &mut Vec<u32>,
    ) -> f64;
}

pub(crate) fn mean_loss<N: Network>(net: &N, data: &[(N::Example, f64)]) -> f64 {
    let sum: f64 = data
        .iter()
        .map(|(x, t)| {
            let y = net.predict(x);
            (y - t) * (y - t)
        })
        .sum();
    sum / data.len() as f64
}

fn zero_grads<P: Parameters>(grads: &mut P, embedding: usize, touched: &[u32]) {
    for (k, t) in grads.tensors_mut().into_iter().enumerate() {
        if k == embedding {
            for &r in touched {
                t.row_mut(r as usize).fill(0.0);
            }
        } else {
            t.fill(0.0);
        }
    }
}

/// Mini-batch Adagrad on batch-mean MSE with per-epoch shuffling and early
/// stopping on dev loss. Each epoch ends by evaluating a copy rounded to
/// single precision; the best such copy is returned, so the reported dev
/// loss is exactly that of the returned model.
pub(crate) fn fit<N: Network>(
    mut net: N,
    train: &[(N::Example, f64)],
    dev: &[(N::Example, f64)],
    config: &TrainConfig,
    seed: u64,
) -> Result<(N, TrainingReport)> {
    config.validate()?;
    if train.is_empty() || dev.is_empty() {
        return Err(Error::InvalidArgument(
            "training needs non-empty train and dev splits".into(),
        ));
    }
    let emb = net.embedding_index();
    let mut state = AdagradState::new(net.params(), config.learning_rate);
    let mut grads = net.params().zeros_like();
    let mut touched: Vec<u32> = Vec::new();
    let mut epochs = Vec::new();
    let mut best: Option<(N, usize, f64)> = None;
    let mut since_best = 0;

    for epoch in 1..=config.max_epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, &[epoch as u64])));
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            zero_grads(&mut grads, emb, &touched);
            touched.clear();
            let scale = 2.0 / batch.len() as f64;
            for &i in batch {
                let (x, t) = &train[i];
                let mask = (config.dropout > 0.0).then(|| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[epoch as u64, i as u64, 1]));
                    dropout_mask(net.dropout_width(), config.dropout, &mut rng)
                });
                let y = net.accumulate(x, *t, scale, mask.as_deref(), &mut grads, &mut touched);
                loss_sum += (y - t) * (y - t);
            }
            touched.sort_unstable();
            touched.dedup();
            state
                .step_sparse(net.params_mut(), &grads, &[(emb, &touched)])
                .map_err(|e| Error::NonFinite(format!("epoch {epoch}: {e}")))?;
        }
        let train_loss = loss_sum / train.len() as f64;
        let mut snapshot = net.clone();
        snapshot.params_mut().round_to_f32();
        let dev_loss = mean_loss(&snapshot, dev);
        if !train_loss.is_finite() || !dev_loss.is_finite() {
            return Err(Error::NonFinite(format!(
                "loss at epoch {epoch} (train {train_loss}, dev {dev_loss})"
            )));
        }
        epochs.push(EpochStats {
            epoch,
            train_loss,
            dev_loss,
        });
        if best.as_ref().is_none_or(|(_, _, b)| dev_loss < *b) {
            best = Some((snapshot, epoch, dev_loss));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }
    let (model, best_epoch, best_dev_loss) = best.expect("at least one epoch ran");
    Ok((
        model,
        TrainingReport {
            epochs,
            best_epoch,
            best_dev_loss,
        },
    ))
}
