//! Handcrafted dialogue-quality features, the side-feature vector used by
//! the neural ranker, and a small LDA topic model for topic divergence.

mod flow;
mod side;
mod topics;

pub use flow::{cosine, entity_overlap, jaccard, FlowFeatures, FlowScorer, IdfTable, SparseVector};
pub use side::{side_features, Roster, SideFeatureVector, TURN_INDEX_SCALE};
pub use topics::{fit_topics, jensen_shannon, topic_divergence, LdaConfig, TopicModel};

use std::collections::BTreeSet;

use crate::corpus::{Candidate, RankingContext};
use crate::error::Result;
use crate::text::words;

/// Number of entries in [`handcrafted_feature_vector`].
pub const HANDCRAFTED_FEATURES: usize = 6;

/// Names of the handcrafted features, in vector order.
pub const HANDCRAFTED_FEATURE_NAMES: [&str; HANDCRAFTED_FEATURES] = [
    "coherence",
    "information_flow",
    "dullness",
    "entity_overlap",
    "topic_divergence",
    "response_sentiment",
];

/// `[coherence, information_flow, dullness, entity_overlap,
/// topic_divergence, response_sentiment]`.
pub fn handcrafted_feature_vector(
    context: &RankingContext,
    response: &Candidate,
    flow: &FlowScorer,
    topics: &TopicModel,
    stopwords: &BTreeSet<String>,
) -> Result<[f64; HANDCRAFTED_FEATURES]> {
    let f = flow.flow_features(context, &response.text);
    let overlap = entity_overlap(context, response, stopwords);
    let context_words: Vec<String> = context.turns.iter().flat_map(|t| words(&t.text)).collect();
    let divergence = topic_divergence(topics, &context_words, &words(&response.text))?;
    Ok([
        f.coherence,
        f.information_flow,
        f.dullness,
        overlap,
        divergence,
        response.sentiment,
    ])
}
