use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{flow_meta, load_flow, push_flow, utterance_documents, FlowMeta, Ranker, RankerKind};
use crate::corpus::{Candidate, Dataset, RankingContext};
use crate::error::{Error, Result};
use crate::features::{FlowScorer, IdfTable};
use crate::nn::{Checkpoint, Tensor};
use crate::text::{words, TextResources};

/// Groups of hashed features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureTemplate {
    /// Word 1- to 3-grams of each context turn.
    ContextNgrams,
    /// Word 1- to 3-grams of the response.
    ResponseNgrams,
    /// Unigrams tagged with their position, for the first five words of the
    /// most recent context turn and of the response.
    PositionUnigrams,
    /// Coherence, information flow and dullness as real values.
    Flow,
    /// Indicator of the responding bot.
    Bot,
    /// Last-user-turn unigram × response unigram pairs.
    ContextResponsePairs,
    /// Responding bot × response unigram and bigram pairs.
    BotResponse,
}

impl FeatureTemplate {
    pub const ALL: [FeatureTemplate; 7] = [
        FeatureTemplate::ContextNgrams,
        FeatureTemplate::ResponseNgrams,
        FeatureTemplate::PositionUnigrams,
        FeatureTemplate::Flow,
        FeatureTemplate::Bot,
        FeatureTemplate::ContextResponsePairs,
        FeatureTemplate::BotResponse,
    ];
}

const MAX_NGRAM: usize = 3;
const POSITIONS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearConfig {
    pub hash_bits: u32,
    pub learning_rate: f64,
    pub passes: usize,
    /// Shuffle instances (by seed) before each pass; off keeps data order.
    pub shuffle: bool,
    pub templates: Vec<FeatureTemplate>,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self {
            hash_bits: 18,
            learning_rate: 0.1,
            passes: 1,
            shuffle: false,
            templates: FeatureTemplate::ALL.to_vec(),
        }
    }
}

/// 64-bit FNV-1a over the parts of a feature name, with a unit separator
/// between parts.
pub fn feature_hash(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            h ^= 0x1f;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        for &b in part.as_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Hashed linear regression over sparse n-gram and interaction features:
/// `clamp(w·x + bias, 0, 1)`. Feature vectors are scaled to unit L2 norm
/// before hashing; each feature lands at `hash mod 2^b` with a sign taken
/// from the hash's top bit.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRanker {
    pub config: LinearConfig,
    pub weights: Vec<f64>,
    pub bias: f64,
    flow: FlowScorer,
}

impl LinearRanker {
    pub fn new(config: LinearConfig, flow: FlowScorer) -> Result<Self> {
        if !(1..=30).contains(&config.hash_bits) {
            return Err(Error::InvalidArgument(format!(
                "hash bits {} outside 1..=30",
                config.hash_bits
            )));
        }
        Ok(Self {
            weights: vec![0.0; 1 << config.hash_bits],
            bias: 0.0,
            config,
            flow,
        })
    }

    pub fn flow(&self) -> &FlowScorer {
        &self.flow
    }

    /// Named features as `(hash, value)`, merged by hash and normalized.
    pub fn features(&self, context: &RankingContext, candidate: &Candidate) -> Vec<(u64, f64)> {
        let mut raw: Vec<(u64, f64)> = Vec::new();
        let resp = words(&candidate.text);
        let last_user: Vec<String> = context
            .turns
            .iter()
            .rev()
            .find(|t| t.is_user())
            .map(|t| words(&t.text))
            .unwrap_or_default();
        for template in &self.config.templates {
            match template {
                FeatureTemplate::ContextNgrams => {
                    for turn in &context.turns {
                        ngrams(&words(&turn.text), "c", &mut raw);
                    }
                }
                FeatureTemplate::ResponseNgrams => ngrams(&resp, "r", &mut raw),
                FeatureTemplate::PositionUnigrams => {
                    if let Some(last) = context.turns.last() {
                        for (i, w) in words(&last.text).iter().take(POSITIONS).enumerate() {
                            raw.push((feature_hash(&["cp", &i.to_string(), w]), 1.0));
                        }
                    }
                    for (i, w) in resp.iter().take(POSITIONS).enumerate() {
                        raw.push((feature_hash(&["rp", &i.to_string(), w]), 1.0));
                    }
                }
                FeatureTemplate::Flow => {
                    let f = self.flow.flow_features(context, &candidate.text);
                    raw.push((feature_hash(&["flow", "coherence"]), f.coherence));
                    raw.push((feature_hash(&["flow", "information_flow"]), f.information_flow));
                    raw.push((feature_hash(&["flow", "dullness"]), f.dullness));
                }
                FeatureTemplate::Bot => raw.push((feature_hash(&["bot", &candidate.bot]), 1.0)),
                FeatureTemplate::ContextResponsePairs => {
                    for a in &last_user {
                        for b in &resp {
                            raw.push((feature_hash(&["x", a, b]), 1.0));
                        }
                    }
                }
                FeatureTemplate::BotResponse => {
                    for w in &resp {
                        raw.push((feature_hash(&["br1", &candidate.bot, w]), 1.0));
                    }
                    for w in resp.windows(2) {
                        raw.push((feature_hash(&["br2", &candidate.bot, &w[0], &w[1]]), 1.0));
                    }
                }
            }
        }
        raw.sort_by_key(|&(h, _)| h);
        let mut merged: Vec<(u64, f64)> = Vec::with_capacity(raw.len());
        for (h, v) in raw {
            match merged.last_mut() {
                Some((last, acc)) if *last == h => *acc += v,
                _ => merged.push((h, v)),
            }
        }
        let norm = merged.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            merged.iter_mut().for_each(|(_, v)| *v /= norm);
        }
        merged
    }

    /// Features as `(weight index, signed value)`.
    pub fn hashed(&self, context: &RankingContext, candidate: &Candidate) -> Vec<(usize, f64)> {
        let mask = (1u64 << self.config.hash_bits) - 1;
        self.features(context, candidate)
            .into_iter()
            .map(|(h, v)| ((h & mask) as usize, if h >> 63 == 1 { -v } else { v }))
            .collect()
    }

    /// Unclamped `w·x + bias`.
    pub fn raw_score(&self, x: &[(usize, f64)]) -> f64 {
        self.bias + x.iter().map(|&(i, v)| self.weights[i] * v).sum::<f64>()
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let mut c = Checkpoint::new(&LinearMeta {
            kind: RankerKind::Linear,
            config: self.config.clone(),
            flow: flow_meta(&self.flow),
        })?;
        c.push(
            "linear.weights",
            &Tensor::from_vec(&[self.weights.len()], self.weights.clone())?,
        );
        c.push("linear.bias", &Tensor::filled(&[1], self.bias));
        push_flow(&mut c, &self.flow);
        Ok(c)
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        let meta: LinearMeta = c.meta()?;
        let mut model = Self::new(meta.config, load_flow(c, meta.flow)?)?;
        let w = c.tensor("linear.weights")?;
        if w.len() != model.weights.len() {
            return Err(Error::Checkpoint("weight vector does not match hash size".into()));
        }
        model.weights = w.data().to_vec();
        model.bias = c.tensor("linear.bias")?.data().first().copied().unwrap_or(0.0);
        Ok(model)
    }
}

fn ngrams(tokens: &[String], prefix: &str, out: &mut Vec<(u64, f64)>) {
    for n in 1..=MAX_NGRAM {
        let tag = format!("{prefix}{n}");
        for gram in tokens.windows(n) {
            let mut parts: Vec<&str> = vec![&tag];
            parts.extend(gram.iter().map(String::as_str));
            out.push((feature_hash(&parts), 1.0));
        }
    }
}

#[derive(Serialize, Deserialize)]
struct LinearMeta {
    kind: RankerKind,
    config: LinearConfig,
    flow: FlowMeta,
}

impl Ranker for LinearRanker {
    fn kind(&self) -> RankerKind {
        RankerKind::Linear
    }

    fn score(&self, context: &RankingContext, candidate: &Candidate) -> Result<f64> {
        Ok(self.raw_score(&self.hashed(context, candidate)).clamp(0.0, 1.0))
    }
}

/// SGD on squared loss of the unclamped output: for each instance,
/// `w ← w − η (w·x + b − t) x` and `b ← b − η (w·x + b − t)`. Instances are
/// visited in dataset order unless `shuffle` is set.
pub fn train_linear(
    dataset: &Dataset,
    resources: &TextResources,
    config: &LinearConfig,
    seed: u64,
) -> Result<LinearRanker> {
    let flow = FlowScorer::new(
        IdfTable::fit(utterance_documents(&dataset.train)),
        &resources.dull_phrases,
    );
    let mut model = LinearRanker::new(config.clone(), flow)?;
    let lr = config.learning_rate;
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    for pass in 0..config.passes {
        if config.shuffle {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(super::derive_seed(seed, &[pass as u64])));
        }
        for &i in &order {
            let inst = &dataset.train[i];
            let x = model.hashed(&inst.context, &inst.response);
            let err = model.raw_score(&x) - inst.target;
            if !err.is_finite() {
                return Err(Error::NonFinite(format!("linear training residual at pass {pass}")));
            }
            for &(j, v) in &x {
                model.weights[j] -= lr * err * v;
            }
            model.bias -= lr * err;
        }
    }
    model.weights.iter_mut().for_each(|w| *w = *w as f32 as f64);
    model.bias = model.bias as f32 as f64;
    Ok(model)
}
