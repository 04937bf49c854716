use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::train::{fit, Network, TrainConfig, TrainingReport};
use super::{Ranker, RankerKind};
use crate::corpus::{Candidate, Dataset, RankingContext, TrainingInstance};
use crate::error::{Error, Result};
use crate::nn::{
    check_ids, init_scale, lstm_backward, lstm_traced, Checkpoint, LstmParams, LstmStep, Mlp, MlpTrace, Parameters,
    Tensor,
};
use crate::text::{words, Vocabulary, MAX_UTTERANCE_TOKENS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DualConfig {
    pub embedding: usize,
    pub hidden: usize,
    /// Predictor hidden ReLU layers.
    pub layout: Vec<usize>,
    pub vocab_size: usize,
    pub train: TrainConfig,
}

impl Default for DualConfig {
    fn default() -> Self {
        Self {
            embedding: 128,
            hidden: 256,
            layout: vec![128],
            vocab_size: 20_000,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualParams {
    pub embedding: Tensor,
    pub context_encoder: LstmParams,
    pub response_encoder: LstmParams,
    pub predictor: Mlp,
}

impl Parameters for DualParams {
    fn tensors(&self) -> Vec<&Tensor> {
        let mut v = vec![&self.embedding];
        v.extend(self.context_encoder.tensors());
        v.extend(self.response_encoder.tensors());
        v.extend(self.predictor.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = vec![&mut self.embedding];
        v.extend(self.context_encoder.tensors_mut());
        v.extend(self.response_encoder.tensors_mut());
        v.extend(self.predictor.tensors_mut());
        v
    }

    fn names(&self) -> Vec<String> {
        let mut v = vec!["embedding".to_string()];
        v.extend(self.context_encoder.names().into_iter().map(|n| format!("context.{n}")));
        v.extend(
            self.response_encoder
                .names()
                .into_iter()
                .map(|n| format!("response.{n}")),
        );
        v.extend(self.predictor.names().into_iter().map(|n| format!("predictor.{n}")));
        v
    }
}

impl DualParams {
    fn zeros(vocab: usize, config: &DualConfig) -> Self {
        Self {
            embedding: Tensor::zeros(&[vocab, config.embedding]),
            context_encoder: LstmParams::zeros(config.embedding, config.hidden),
            response_encoder: LstmParams::zeros(config.embedding, config.hidden),
            predictor: Mlp::zeros(2 * config.hidden, &config.layout),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualExample {
    pub context: Vec<u32>,
    pub response: Vec<u32>,
}

/// Separate LSTM encoders over the last user turn and the response, joined
/// by a predictor MLP. Plain words only: no speaker tags, entities or side
/// features.
#[derive(Clone, Debug, PartialEq)]
pub struct DualEncoderRanker {
    pub config: DualConfig,
    pub vocabulary: Vocabulary,
    pub params: DualParams,
}

struct Forward {
    context: Vec<LstmStep>,
    response: Vec<LstmStep>,
    trace: MlpTrace,
}

fn plain_tokens(text: &str) -> Vec<String> {
    let mut w = words(text);
    w.truncate(MAX_UTTERANCE_TOKENS);
    w
}

impl DualEncoderRanker {
    pub fn new(config: DualConfig, vocabulary: Vocabulary, seed: u64) -> Result<Self> {
        if config.embedding == 0 || config.hidden == 0 || config.layout.contains(&0) {
            return Err(Error::InvalidArgument("dual-encoder sizes must be positive".into()));
        }
        config.train.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = DualParams {
            embedding: Tensor::uniform(
                &[vocabulary.len(), config.embedding],
                init_scale(1, config.embedding),
                &mut rng,
            ),
            context_encoder: LstmParams::init(config.embedding, config.hidden, &mut rng),
            response_encoder: LstmParams::init(config.embedding, config.hidden, &mut rng),
            predictor: Mlp::init(2 * config.hidden, &config.layout, &mut rng),
        };
        Ok(Self {
            config,
            vocabulary,
            params,
        })
    }

    /// Word sequences of the last user turn and the candidate.
    pub fn token_sequences(context: &RankingContext, candidate: &Candidate) -> (Vec<String>, Vec<String>) {
        let user = context
            .turns
            .iter()
            .rev()
            .find(|t| t.is_user())
            .map(|t| plain_tokens(&t.text))
            .unwrap_or_default();
        (user, plain_tokens(&candidate.text))
    }

    pub fn example(&self, context: &RankingContext, candidate: &Candidate) -> DualExample {
        let (c, r) = Self::token_sequences(context, candidate);
        DualExample {
            context: self.vocabulary.encode(&c),
            response: self.vocabulary.encode(&r),
        }
    }

    pub fn examples(&self, instances: &[TrainingInstance]) -> Vec<(DualExample, f64)> {
        instances
            .iter()
            .map(|i| (self.example(&i.context, &i.response), i.target))
            .collect()
    }

    fn forward(&self, x: &DualExample, mask: Option<&[f64]>) -> Forward {
        let p = &self.params;
        let (hc, context) = lstm_traced(&p.context_encoder, &p.embedding, &x.context);
        let (hr, response) = lstm_traced(&p.response_encoder, &p.embedding, &x.response);
        let mut enc = hc;
        enc.extend(hr);
        if let Some(mask) = mask {
            enc.iter_mut().zip(mask).for_each(|(a, m)| *a *= m);
        }
        Forward {
            context,
            response,
            trace: p.predictor.forward_traced(&enc),
        }
    }

    pub fn score_example(&self, x: &DualExample) -> Result<f64> {
        check_ids(&x.context, self.params.embedding.rows())?;
        check_ids(&x.response, self.params.embedding.rows())?;
        Ok(self.forward(x, None).trace.output)
    }

    pub fn batch_loss(&self, batch: &[(DualExample, f64)], masks: Option<&[Vec<f64>]>) -> f64 {
        let sum: f64 = batch
            .iter()
            .enumerate()
            .map(|(i, (x, t))| {
                let y = self.forward(x, masks.map(|m| m[i].as_slice())).trace.output;
                (y - t) * (y - t)
            })
            .sum();
        sum / batch.len() as f64
    }

    pub fn batch_gradients(&self, batch: &[(DualExample, f64)], masks: Option<&[Vec<f64>]>) -> DualParams {
        let mut grads = self.params.zeros_like();
        let mut touched = Vec::new();
        let scale = 2.0 / batch.len() as f64;
        for (i, (x, t)) in batch.iter().enumerate() {
            self.accumulate(x, *t, scale, masks.map(|m| m[i].as_slice()), &mut grads, &mut touched);
        }
        grads
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let mut c = Checkpoint::new(&DualMeta {
            kind: RankerKind::DualEncoder,
            config: self.config.clone(),
            vocabulary: self.vocabulary.clone(),
        })?;
        c.push_params("dual", &self.params);
        Ok(c)
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        let meta: DualMeta = c.meta()?;
        let mut params = DualParams::zeros(meta.vocabulary.len(), &meta.config);
        c.load_params("dual", &mut params)?;
        Ok(Self {
            config: meta.config,
            vocabulary: meta.vocabulary,
            params,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct DualMeta {
    kind: RankerKind,
    config: DualConfig,
    vocabulary: Vocabulary,
}

impl Network for DualEncoderRanker {
    type Example = DualExample;
    type Params = DualParams;

    fn params(&self) -> &DualParams {
        &self.params
    }

    fn params_mut(&mut self) -> &mut DualParams {
        &mut self.params
    }

    fn embedding_index(&self) -> usize {
        0
    }

    fn dropout_width(&self) -> usize {
        2 * self.params.context_encoder.hidden_size()
    }

    fn predict(&self, x: &DualExample) -> f64 {
        self.forward(x, None).trace.output
    }

    fn accumulate(
        &self,
        x: &DualExample,
        target: f64,
        scale: f64,
        mask: Option<&[f64]>,
        grads: &mut DualParams,
        touched: &mut Vec<u32>,
    ) -> f64 {
        let p = &self.params;
        let fwd = self.forward(x, mask);
        let y = fwd.trace.output;
        let mut d_enc = p
            .predictor
            .backward(&fwd.trace, scale * (y - target), &mut grads.predictor);
        if let Some(mask) = mask {
            d_enc.iter_mut().zip(mask).for_each(|(a, m)| *a *= m);
        }
        let h = p.context_encoder.hidden_size();
        lstm_backward(
            &p.context_encoder,
            &p.embedding,
            &x.context,
            &fwd.context,
            &d_enc[..h],
            &mut grads.context_encoder,
            &mut grads.embedding,
            touched,
        );
        lstm_backward(
            &p.response_encoder,
            &p.embedding,
            &x.response,
            &fwd.response,
            &d_enc[h..],
            &mut grads.response_encoder,
            &mut grads.embedding,
            touched,
        );
        y
    }
}

impl Ranker for DualEncoderRanker {
    fn kind(&self) -> RankerKind {
        RankerKind::DualEncoder
    }

    fn score(&self, context: &RankingContext, candidate: &Candidate) -> Result<f64> {
        self.score_example(&self.example(context, candidate))
    }
}

/// Trains the dual encoder on the dataset's train split (early stopping on
/// dev), with a plain-word vocabulary from the training split.
pub fn train_dual_encoder(
    dataset: &Dataset,
    config: &DualConfig,
    seed: u64,
) -> Result<(DualEncoderRanker, TrainingReport)> {
    let mut seqs = Vec::new();
    for inst in &dataset.train {
        let (c, r) = DualEncoderRanker::token_sequences(&inst.context, &inst.response);
        seqs.push(c);
        seqs.push(r);
    }
    let vocabulary = Vocabulary::build(&seqs, config.vocab_size)?;
    let model = DualEncoderRanker::new(config.clone(), vocabulary, seed)?;
    let train = model.examples(&dataset.train);
    let dev = model.examples(&dataset.dev);
    fit(model, &train, &dev, &config.train, seed)
}
