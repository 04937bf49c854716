//! The four response rankers behind one scoring interface, their trainers,
//! and checkpoint dispatch by ranker kind.

mod dual;
mod handcrafted;
mod linear;
mod neural;
mod train;

pub use dual::{train_dual_encoder, DualConfig, DualEncoderRanker, DualExample, DualParams};
pub use handcrafted::{fit_handcrafted, HandcraftedConfig, HandcraftedRanker, DEFAULT_COEFFICIENTS};
pub use linear::{feature_hash, train_linear, FeatureTemplate, LinearConfig, LinearRanker};
pub use neural::{
    dataset_roster, dev_loss, grid_layouts, grid_search, neural_vocabulary, train_neural, GridRun, GridSearch,
    NeuralConfig, NeuralExample, NeuralParams, NeuralRanker, GRID_HIDDEN,
};
pub use train::{derive_seed, dropout_mask, EpochStats, TrainConfig, TrainingReport};

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Candidate, Dataset, RankingContext, TrainingInstance};
use crate::error::{Error, Result};
use crate::features::{FlowScorer, IdfTable};
use crate::nn::{Checkpoint, Tensor};
use crate::text::TextResources;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankerKind {
    Neural,
    Linear,
    Handcrafted,
    DualEncoder,
}

impl RankerKind {
    pub const ALL: [RankerKind; 4] = [
        RankerKind::Neural,
        RankerKind::Linear,
        RankerKind::Handcrafted,
        RankerKind::DualEncoder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RankerKind::Neural => "neural",
            RankerKind::Linear => "linear",
            RankerKind::Handcrafted => "handcrafted",
            RankerKind::DualEncoder => "dual_encoder",
        }
    }
}

impl std::fmt::Display for RankerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RankerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RankerKind::ALL
            .into_iter()
            .find(|k| k.name() == s || (s == "dual-encoder" && *k == RankerKind::DualEncoder))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown ranker `{s}`")))
    }
}

/// Scores a candidate response in its context. Scores lie in [0, 1] and are
/// deterministic.
pub trait Ranker {
    fn kind(&self) -> RankerKind;
    fn score(&self, context: &RankingContext, candidate: &Candidate) -> Result<f64>;
}

impl<R: Ranker + ?Sized> Ranker for &R {
    fn kind(&self) -> RankerKind {
        (**self).kind()
    }

    fn score(&self, context: &RankingContext, candidate: &Candidate) -> Result<f64> {
        (**self).score(context, candidate)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ranked {
    /// Position of the candidate in the input list.
    pub index: usize,
    pub candidate: Candidate,
    pub score: f64,
}

/// Candidates by descending score; equal scores keep their input order.
pub fn rank<R: Ranker + ?Sized>(ranker: &R, context: &RankingContext, candidates: &[Candidate]) -> Result<Vec<Ranked>> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates to rank".into()));
    }
    let mut ranked = candidates
        .iter()
        .enumerate()
        .map(|(index, c)| {
            Ok(Ranked {
                index,
                candidate: c.clone(),
                score: ranker.score(context, c)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(ranked)
}

/// Any trained ranker, as stored in a checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyRanker {
    Neural(NeuralRanker),
    Linear(LinearRanker),
    Handcrafted(HandcraftedRanker),
    DualEncoder(DualEncoderRanker),
}

#[derive(Deserialize)]
struct KindOnly {
    kind: RankerKind,
}

impl AnyRanker {
    pub fn as_ranker(&self) -> &dyn Ranker {
        match self {
            AnyRanker::Neural(r) => r,
            AnyRanker::Linear(r) => r,
            AnyRanker::Handcrafted(r) => r,
            AnyRanker::DualEncoder(r) => r,
        }
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        match self {
            AnyRanker::Neural(r) => r.to_checkpoint(),
            AnyRanker::Linear(r) => r.to_checkpoint(),
            AnyRanker::Handcrafted(r) => r.to_checkpoint(),
            AnyRanker::DualEncoder(r) => r.to_checkpoint(),
        }
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        let KindOnly { kind } = c.meta()?;
        Ok(match kind {
            RankerKind::Neural => AnyRanker::Neural(NeuralRanker::from_checkpoint(c)?),
            RankerKind::Linear => AnyRanker::Linear(LinearRanker::from_checkpoint(c)?),
            RankerKind::Handcrafted => AnyRanker::Handcrafted(HandcraftedRanker::from_checkpoint(c)?),
            RankerKind::DualEncoder => AnyRanker::DualEncoder(DualEncoderRanker::from_checkpoint(c)?),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint()?.save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

impl Ranker for AnyRanker {
    fn kind(&self) -> RankerKind {
        self.as_ranker().kind()
    }

    fn score(&self, context: &RankingContext, candidate: &Candidate) -> Result<f64> {
        self.as_ranker().score(context, candidate)
    }
}

/// Per-kind training configuration, as read from a configuration file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankerConfigs {
    pub neural: NeuralConfig,
    pub linear: LinearConfig,
    pub handcrafted: HandcraftedConfig,
    pub dual_encoder: DualConfig,
}

/// Trains (or, for the handcrafted ranker, fits the feature models of) a
/// ranker of the given kind. Recurrent rankers also return their report.
pub fn train_ranker(
    kind: RankerKind,
    dataset: &Dataset,
    resources: &TextResources,
    configs: &RankerConfigs,
    seed: u64,
) -> Result<(AnyRanker, Option<TrainingReport>)> {
    Ok(match kind {
        RankerKind::Neural => {
            let roster = dataset_roster(dataset)?;
            let (m, r) = train_neural(dataset, &roster, &resources.lexicon, &configs.neural, seed)?;
            (AnyRanker::Neural(m), Some(r))
        }
        RankerKind::Linear => (
            AnyRanker::Linear(train_linear(dataset, resources, &configs.linear, seed)?),
            None,
        ),
        RankerKind::Handcrafted => (
            AnyRanker::Handcrafted(fit_handcrafted(&dataset.train, resources, &configs.handcrafted, seed)?),
            None,
        ),
        RankerKind::DualEncoder => {
            let (m, r) = train_dual_encoder(dataset, &configs.dual_encoder, seed)?;
            (AnyRanker::DualEncoder(m), Some(r))
        }
    })
}

/// Serializable part of a [`FlowScorer`]; idf values travel as an array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct FlowMeta {
    n_docs: usize,
    words: Vec<String>,
    dull_phrases: Vec<String>,
}

pub(crate) fn flow_meta(flow: &FlowScorer) -> FlowMeta {
    FlowMeta {
        n_docs: flow.idf().n_docs(),
        words: flow.idf().words().to_vec(),
        dull_phrases: flow.dull_phrases().to_vec(),
    }
}

pub(crate) fn push_flow(c: &mut Checkpoint, flow: &FlowScorer) {
    let values = flow.idf().values().to_vec();
    c.push(
        "flow.idf",
        &Tensor::from_vec(&[values.len()], values).expect("vector shape"),
    );
}

pub(crate) fn load_flow(c: &Checkpoint, meta: FlowMeta) -> Result<FlowScorer> {
    let values = c.tensor("flow.idf")?.data().to_vec();
    if values.len() != meta.words.len() {
        return Err(Error::Checkpoint("idf array does not match its word list".into()));
    }
    let idf = IdfTable::from_parts(meta.n_docs, meta.words, values);
    Ok(FlowScorer::new(idf, &meta.dull_phrases))
}

/// Distinct utterances (context turns and responses) of the instances, the
/// documents for idf statistics.
pub fn utterance_documents(instances: &[TrainingInstance]) -> Vec<String> {
    let mut docs: BTreeSet<&str> = BTreeSet::new();
    for inst in instances {
        docs.extend(inst.context.turns.iter().map(|t| t.text.as_str()));
        docs.insert(&inst.response.text);
    }
    docs.into_iter().map(str::to_string).collect()
}

#[cfg(test)]
mod tests;
