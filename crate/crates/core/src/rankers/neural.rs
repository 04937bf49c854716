use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::train::{fit, mean_loss, Network, TrainConfig, TrainingReport};
use super::{Ranker, RankerKind};
use crate::corpus::{Candidate, Dataset, RankingContext, TrainingInstance};
use crate::error::{Error, Result};
use crate::features::{side_features, Roster};
use crate::nn::{
    check_ids, gru_backward, gru_traced, init_scale, Checkpoint, Dense, GruParams, Mlp, Parameters, Tensor,
};
use crate::text::{tokenize_turn, SentimentLexicon, Vocabulary, MAX_UTTERANCE_TOKENS};

/// Hyperparameters of the neural ranker.
///
/// `layout[0]` is the width of the Sem layer; the remaining entries are the
/// predictor's hidden ReLU layers before the sigmoid output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeuralConfig {
    pub embedding: usize,
    pub hidden: usize,
    pub layout: Vec<usize>,
    pub vocab_size: usize,
    pub train: TrainConfig,
}

impl Default for NeuralConfig {
    fn default() -> Self {
        Self {
            embedding: 256,
            hidden: 128,
            layout: vec![128],
            vocab_size: 20_000,
            train: TrainConfig::default(),
        }
    }
}

impl NeuralConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embedding == 0 || self.hidden == 0 || self.layout.is_empty() || self.layout.contains(&0) {
            return Err(Error::InvalidArgument(
                "neural sizes must be positive and layout non-empty".into(),
            ));
        }
        self.train.validate()
    }
}

/// GRU sizes of the configuration grid.
pub const GRID_HIDDEN: [usize; 3] = [64, 128, 256];

/// Sem/predictor layouts of the configuration grid.
pub fn grid_layouts() -> Vec<Vec<usize>> {
    vec![vec![128], vec![128, 64], vec![128, 32, 32]]
}

/// Embedding table, shared GRU encoder, Sem layer and predictor.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuralParams {
    pub embedding: Tensor,
    pub encoder: GruParams,
    pub sem: Dense,
    pub predictor: Mlp,
}

impl NeuralParams {
    pub fn init(vocab: usize, config: &NeuralConfig, side_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let embedding = Tensor::uniform(&[vocab, config.embedding], init_scale(1, config.embedding), rng);
        let encoder = GruParams::init(config.embedding, config.hidden, rng);
        let sem = Dense::init(2 * config.hidden, config.layout[0], rng);
        let predictor = Mlp::init(config.layout[0] + side_dim, &config.layout[1..], rng);
        Self {
            embedding,
            encoder,
            sem,
            predictor,
        }
    }

    pub fn side_dim(&self) -> usize {
        self.predictor.input_size() - self.sem.output_size()
    }
}

impl Parameters for NeuralParams {
    fn tensors(&self) -> Vec<&Tensor> {
        let mut v = vec![&self.embedding];
        v.extend(self.encoder.tensors());
        v.extend(self.sem.tensors());
        v.extend(self.predictor.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = vec![&mut self.embedding];
        v.extend(self.encoder.tensors_mut());
        v.extend(self.sem.tensors_mut());
        v.extend(self.predictor.tensors_mut());
        v
    }

    fn names(&self) -> Vec<String> {
        let mut v = vec!["embedding".to_string()];
        v.extend(self.encoder.names().into_iter().map(|n| format!("encoder.{n}")));
        v.extend(self.sem.names().into_iter().map(|n| format!("sem.{n}")));
        v.extend(self.predictor.names().into_iter().map(|n| format!("predictor.{n}")));
        v
    }
}

/// Model inputs in id form. Context turns are kept in a canonical order so
/// that summing their encodings is independent of the original turn order.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuralExample {
    pub context: Vec<Vec<u32>>,
    pub response: Vec<u32>,
    pub side: Vec<f64>,
}

/// Scores `σ(L(Sem(Enc(C, r)) ⊕ f(C, r)))` with
/// `Enc(C, r) = Σ_i GRU(C_i) ⊕ GRU(r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuralRanker {
    pub config: NeuralConfig,
    pub vocabulary: Vocabulary,
    pub roster: Roster,
    pub lexicon: SentimentLexicon,
    pub params: NeuralParams,
}

struct Forward {
    context: Vec<(Vec<u32>, Vec<crate::nn::GruStep>)>,
    response: Vec<crate::nn::GruStep>,
    enc: Vec<f64>,
    sem: Vec<f64>,
    trace: crate::nn::MlpTrace,
}

impl NeuralRanker {
    pub fn new(
        config: NeuralConfig,
        vocabulary: Vocabulary,
        roster: Roster,
        lexicon: SentimentLexicon,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = NeuralParams::init(vocabulary.len(), &config, roster.side_dim(), &mut rng);
        Ok(Self {
            config,
            vocabulary,
            roster,
            lexicon,
            params,
        })
    }

    pub fn hidden(&self) -> usize {
        self.params.encoder.hidden_size()
    }

    /// Word-agent token sequence of each context turn and of the response.
    pub fn token_sequences(context: &RankingContext, candidate: &Candidate) -> (Vec<Vec<String>>, Vec<String>) {
        let ctx = context
            .turns
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let ents = context.entities.get(i).map(Vec::as_slice).unwrap_or(&[]);
                tokenize_turn(&t.agent, &t.text, ents, MAX_UTTERANCE_TOKENS)
            })
            .collect();
        let resp = tokenize_turn(
            &candidate.bot,
            &candidate.text,
            &candidate.entities,
            MAX_UTTERANCE_TOKENS,
        );
        (ctx, resp)
    }

    pub fn example(&self, context: &RankingContext, candidate: &Candidate) -> Result<NeuralExample> {
        let (ctx, resp) = Self::token_sequences(context, candidate);
        let mut ids: Vec<Vec<u32>> = ctx.iter().map(|s| self.vocabulary.encode(s)).collect();
        ids.sort();
        let side = side_features(context, candidate, &self.roster, &self.lexicon)?.to_vec();
        Ok(NeuralExample {
            context: ids,
            response: self.vocabulary.encode(&resp),
            side,
        })
    }

    pub fn examples(&self, instances: &[TrainingInstance]) -> Result<Vec<(NeuralExample, f64)>> {
        instances
            .iter()
            .map(|i| Ok((self.example(&i.context, &i.response)?, i.target)))
            .collect()
    }

    fn check(&self, example: &NeuralExample) -> Result<()> {
        if example.side.len() != self.params.side_dim() {
            return Err(Error::Shape(format!(
                "side features have {} entries, model expects {}",
                example.side.len(),
                self.params.side_dim()
            )));
        }
        let v = self.params.embedding.rows();
        for seq in example.context.iter().chain(std::iter::once(&example.response)) {
            check_ids(seq, v)?;
        }
        Ok(())
    }

    fn forward(&self, example: &NeuralExample, mask: Option<&[f64]>) -> Forward {
        let p = &self.params;
        let h = p.encoder.hidden_size();
        let mut enc = vec![0.0; 2 * h];
        let mut context = Vec::with_capacity(example.context.len());
        for seq in &example.context {
            let (state, trace) = gru_traced(&p.encoder, &p.embedding, seq);
            enc[..h].iter_mut().zip(&state).for_each(|(a, b)| *a += b);
            context.push((seq.clone(), trace));
        }
        let (r, response) = gru_traced(&p.encoder, &p.embedding, &example.response);
        enc[h..].copy_from_slice(&r);
        if let Some(mask) = mask {
            enc.iter_mut().zip(mask).for_each(|(a, m)| *a *= m);
        }
        let sem = p.sem.relu(&enc);
        let mut x = sem.clone();
        x.extend_from_slice(&example.side);
        let trace = p.predictor.forward_traced(&x);
        Forward {
            context,
            response,
            enc,
            sem,
            trace,
        }
    }

    /// Score of a prepared example.
    pub fn score_example(&self, example: &NeuralExample) -> Result<f64> {
        self.check(example)?;
        Ok(self.forward(example, None).trace.output)
    }

    fn backward(
        &self,
        example: &NeuralExample,
        fwd: &Forward,
        d_output: f64,
        mask: Option<&[f64]>,
        grads: &mut NeuralParams,
        touched: &mut Vec<u32>,
    ) {
        let p = &self.params;
        let h = p.encoder.hidden_size();
        let dx = p.predictor.backward(&fwd.trace, d_output, &mut grads.predictor);
        let d_sem = &dx[..fwd.sem.len()];
        let mut d_enc = p.sem.relu_backward(&fwd.enc, &fwd.sem, d_sem, &mut grads.sem);
        if let Some(mask) = mask {
            d_enc.iter_mut().zip(mask).for_each(|(a, m)| *a *= m);
        }
        for (seq, trace) in &fwd.context {
            gru_backward(
                &p.encoder,
                &p.embedding,
                seq,
                trace,
                &d_enc[..h],
                &mut grads.encoder,
                &mut grads.embedding,
                touched,
            );
        }
        gru_backward(
            &p.encoder,
            &p.embedding,
            &example.response,
            &fwd.response,
            &d_enc[h..],
            &mut grads.encoder,
            &mut grads.embedding,
            touched,
        );
    }

    /// Batch-mean MSE over `(example, target)` pairs, with an optional
    /// dropout mask per example.
    pub fn batch_loss(&self, batch: &[(NeuralExample, f64)], masks: Option<&[Vec<f64>]>) -> f64 {
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

    /// Analytic gradient of [`batch_loss`](Self::batch_loss).
    pub fn batch_gradients(&self, batch: &[(NeuralExample, f64)], masks: Option<&[Vec<f64>]>) -> NeuralParams {
        let mut grads = self.params.zeros_like();
        let mut touched = Vec::new();
        let scale = 2.0 / batch.len() as f64;
        for (i, (x, t)) in batch.iter().enumerate() {
            self.accumulate(x, *t, scale, masks.map(|m| m[i].as_slice()), &mut grads, &mut touched);
        }
        grads
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let mut c = Checkpoint::new(&NeuralMeta {
            kind: RankerKind::Neural,
            config: self.config.clone(),
            vocabulary: self.vocabulary.clone(),
            roster: self.roster.clone(),
            lexicon: self.lexicon.clone(),
        })?;
        c.push_params("neural", &self.params);
        Ok(c)
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        let meta: NeuralMeta = c.meta()?;
        let mut params = NeuralParams {
            embedding: Tensor::zeros(&[meta.vocabulary.len(), meta.config.embedding]),
            encoder: GruParams::zeros(meta.config.embedding, meta.config.hidden),
            sem: Dense::zeros(2 * meta.config.hidden, meta.config.layout[0]),
            predictor: Mlp::zeros(meta.config.layout[0] + meta.roster.side_dim(), &meta.config.layout[1..]),
        };
        c.load_params("neural", &mut params)?;
        Ok(Self {
            config: meta.config,
            vocabulary: meta.vocabulary,
            roster: meta.roster,
            lexicon: meta.lexicon,
            params,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct NeuralMeta {
    kind: RankerKind,
    config: NeuralConfig,
    vocabulary: Vocabulary,
    roster: Roster,
    lexicon: SentimentLexicon,
}

impl Network for NeuralRanker {
    type Example = NeuralExample;
    type Params = NeuralParams;

    fn params(&self) -> &NeuralParams {
        &self.params
    }

    fn params_mut(&mut self) -> &mut NeuralParams {
        &mut self.params
    }

    fn embedding_index(&self) -> usize {
        0
    }

    fn dropout_width(&self) -> usize {
        2 * self.hidden()
    }

    fn predict(&self, example: &NeuralExample) -> f64 {
        self.forward(example, None).trace.output
    }

    fn accumulate(
        &self,
        example: &NeuralExample,
        target: f64,
        scale: f64,
        mask: Option<&[f64]>,
        grads: &mut NeuralParams,
        touched: &mut Vec<u32>,
    ) -> f64 {
        let fwd = self.forward(example, mask);
        let y = fwd.trace.output;
        self.backward(example, &fwd, scale * (y - target), mask, grads, touched);
        y
    }
}

impl Ranker for NeuralRanker {
    fn kind(&self) -> RankerKind {
        RankerKind::Neural
    }

    fn score(&self, context: &RankingContext, candidate: &Candidate) -> Result<f64> {
        self.score_example(&self.example(context, candidate)?)
    }
}

/// Bots appearing in a dataset (responses and context turns), sorted.
pub fn dataset_roster(dataset: &Dataset) -> Result<Roster> {
    let mut bots = std::collections::BTreeSet::new();
    for (_, inst) in dataset.iter() {
        bots.insert(inst.response.bot.clone());
        bots.extend(
            inst.context
                .turns
                .iter()
                .filter(|t| !t.is_user())
                .map(|t| t.agent.clone()),
        );
    }
    Roster::new(bots.into_iter().collect())
}

/// Builds the word-agent vocabulary from the training split.
pub fn neural_vocabulary(train: &[TrainingInstance], max_size: usize) -> Result<Vocabulary> {
    let mut seqs = Vec::new();
    for inst in train {
        let (ctx, resp) = NeuralRanker::token_sequences(&inst.context, &inst.response);
        seqs.extend(ctx);
        seqs.push(resp);
    }
    Vocabulary::build(&seqs, max_size)
}

/// Trains a neural ranker on the dataset's train split with early stopping
/// on its dev split.
pub fn train_neural(
    dataset: &Dataset,
    roster: &Roster,
    lexicon: &SentimentLexicon,
    config: &NeuralConfig,
    seed: u64,
) -> Result<(NeuralRanker, TrainingReport)> {
    let vocabulary = neural_vocabulary(&dataset.train, config.vocab_size)?;
    let model = NeuralRanker::new(config.clone(), vocabulary, roster.clone(), lexicon.clone(), seed)?;
    let train = model.examples(&dataset.train)?;
    let dev = model.examples(&dataset.dev)?;
    fit(model, &train, &dev, &config.train, seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRun {
    pub hidden: usize,
    pub layout: Vec<usize>,
    pub report: TrainingReport,
}

/// Outcome of a configuration grid search.
#[derive(Clone, Debug)]
pub struct GridSearch {
    pub runs: Vec<GridRun>,
    /// Index into `runs` of the configuration with the lowest dev loss.
    pub best: usize,
    pub model: NeuralRanker,
}

/// Trains every `hidden × layout` configuration and keeps the one with the
/// lowest dev loss (first wins ties).
pub fn grid_search(
    dataset: &Dataset,
    roster: &Roster,
    lexicon: &SentimentLexicon,
    base: &NeuralConfig,
    hidden: &[usize],
    layouts: &[Vec<usize>],
    seed: u64,
) -> Result<GridSearch> {
    let mut runs = Vec::new();
    let mut best: Option<(usize, f64, NeuralRanker)> = None;
    for &h in hidden {
        for layout in layouts {
            let config = NeuralConfig {
                hidden: h,
                layout: layout.clone(),
                ..base.clone()
            };
            let (model, report) = train_neural(dataset, roster, lexicon, &config, seed)?;
            let loss = report.best_dev_loss;
            let better = best.as_ref().is_none_or(|(_, b, _)| loss < *b);
            runs.push(GridRun {
                hidden: h,
                layout: layout.clone(),
                report,
            });
            if better {
                best = Some((runs.len() - 1, loss, model));
            }
        }
    }
    let (best, _, model) = best.ok_or_else(|| Error::InvalidArgument("empty configuration grid".into()))?;
    Ok(GridSearch { runs, best, model })
}

/// Dev-split MSE of a model (used to compare configurations).
pub fn dev_loss(model: &NeuralRanker, dataset: &Dataset) -> Result<f64> {
    let dev = model.examples(&dataset.dev)?;
    if dev.is_empty() {
        return Err(Error::InvalidArgument("empty dev split".into()));
    }
    Ok(mean_loss(model, &dev))
}
