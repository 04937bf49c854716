use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{flow_meta, load_flow, push_flow, utterance_documents, FlowMeta, Ranker, RankerKind};
use crate::corpus::{Candidate, RankingContext, TrainingInstance};
use crate::error::{Error, Result};
use crate::features::{
    fit_topics, handcrafted_feature_vector, FlowScorer, IdfTable, LdaConfig, TopicModel, HANDCRAFTED_FEATURES,
};
use crate::nn::{sigmoid, Checkpoint, Tensor};
use crate::text::{words, TextResources};

/// Coherence, information flow, dullness, entity overlap, topic divergence,
/// response sentiment.
pub const DEFAULT_COEFFICIENTS: [f64; HANDCRAFTED_FEATURES] = [1.0, 0.5, -1.5, 1.0, -0.5, 0.5];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HandcraftedConfig {
    pub coefficients: [f64; HANDCRAFTED_FEATURES],
    pub lda: LdaConfig,
    /// Dialogues sampled as topic-model documents.
    pub max_topic_documents: usize,
}

impl Default for HandcraftedConfig {
    fn default() -> Self {
        Self {
            coefficients: DEFAULT_COEFFICIENTS,
            lda: LdaConfig::default(),
            max_topic_documents: 2000,
        }
    }
}

/// `σ(c·f)` over the handcrafted feature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct HandcraftedRanker {
    pub coefficients: [f64; HANDCRAFTED_FEATURES],
    pub flow: FlowScorer,
    pub topics: TopicModel,
    pub stopwords: BTreeSet<String>,
}

impl HandcraftedRanker {
    pub fn features(&self, context: &RankingContext, candidate: &Candidate) -> Result<[f64; HANDCRAFTED_FEATURES]> {
        handcrafted_feature_vector(context, candidate, &self.flow, &self.topics, &self.stopwords)
    }

    pub fn score_features(&self, f: &[f64; HANDCRAFTED_FEATURES]) -> f64 {
        sigmoid(self.coefficients.iter().zip(f).map(|(c, x)| c * x).sum())
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let lda = LdaConfig {
            topics: self.topics.topics(),
            alpha: Some(self.topics.alpha()),
            beta: self.topics.beta(),
            iterations: 0,
            inference_sweeps: self.topics.inference_sweeps(),
        };
        let mut c = Checkpoint::new(&HandcraftedMeta {
            kind: RankerKind::Handcrafted,
            coefficients: self.coefficients,
            flow: flow_meta(&self.flow),
            stopwords: self.stopwords.clone(),
            lda,
            topic_words: self.topics.words().to_vec(),
        })?;
        push_flow(&mut c, &self.flow);
        let counts: Vec<f64> = self.topics.counts().iter().map(|&n| n as f64).collect();
        if counts.iter().any(|&n| n > (1u64 << f32::MANTISSA_DIGITS) as f64) {
            return Err(Error::Checkpoint("topic counts exceed single-precision range".into()));
        }
        let v = self.topics.words().len();
        c.push("topics.counts", &Tensor::from_vec(&[self.topics.topics(), v], counts)?);
        Ok(c)
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        let meta: HandcraftedMeta = c.meta()?;
        let counts = c.tensor("topics.counts")?.data().iter().map(|&n| n as u32).collect();
        let topics = TopicModel::from_counts(&meta.lda, meta.topic_words, counts)?;
        Ok(Self {
            coefficients: meta.coefficients,
            flow: load_flow(c, meta.flow)?,
            topics,
            stopwords: meta.stopwords,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct HandcraftedMeta {
    kind: RankerKind,
    coefficients: [f64; HANDCRAFTED_FEATURES],
    flow: FlowMeta,
    stopwords: BTreeSet<String>,
    lda: LdaConfig,
    topic_words: Vec<String>,
}

impl Ranker for HandcraftedRanker {
    fn kind(&self) -> RankerKind {
        RankerKind::Handcrafted
    }

    fn score(&self, context: &RankingContext, candidate: &Candidate) -> Result<f64> {
        Ok(self.score_features(&self.features(context, candidate)?))
    }
}

/// Fits the idf table and topic model behind the handcrafted features on
/// the training instances. Coefficients are taken from the configuration,
/// not learned. Topic documents are the distinct utterances of each source
/// dialogue, joined, with stopwords removed; at most
/// `max_topic_documents` dialogues are sampled.
pub fn fit_handcrafted(
    train: &[TrainingInstance],
    resources: &TextResources,
    config: &HandcraftedConfig,
    seed: u64,
) -> Result<HandcraftedRanker> {
    let flow = FlowScorer::new(IdfTable::fit(utterance_documents(train)), &resources.dull_phrases);
    let mut by_dialogue: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for inst in train {
        let texts = by_dialogue.entry(&inst.source_dialogue).or_default();
        texts.extend(inst.context.turns.iter().map(|t| t.text.as_str()));
        texts.insert(&inst.response.text);
    }
    let mut docs: Vec<Vec<String>> = by_dialogue
        .values()
        .map(|texts| {
            texts
                .iter()
                .flat_map(|t| words(t))
                .filter(|w| !resources.stopwords.contains(w))
                .collect()
        })
        .collect();
    if docs.len() > config.max_topic_documents {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keep = sample(&mut rng, docs.len(), config.max_topic_documents).into_vec();
        keep.sort_unstable();
        docs = keep.into_iter().map(|i| std::mem::take(&mut docs[i])).collect();
    }
    let topics = fit_topics(&docs, &config.lda, seed)?;
    Ok(HandcraftedRanker {
        coefficients: config.coefficients,
        flow,
        topics,
        stopwords: resources.stopwords.clone(),
    })
}
