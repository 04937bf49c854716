//! Text processing: word-agent tokenization, the unified vocabulary,
//! heuristic named-entity extraction, and lexicon-based sentiment.

mod entities;
mod resources;
mod sentiment;
mod tokenize;
mod vocab;

pub use entities::{extract_entities, noun_phrases};
pub use resources::{FeedbackLists, TextResources};
pub use sentiment::{SentimentLexicon, SENTIMENT_ALPHA};
pub use tokenize::{entity_token, normalize_phrase, tokenize_turn, words, ENTITY_TAG, MAX_UTTERANCE_TOKENS};
pub use vocab::{Vocabulary, PAD_ID, UNK_ID};

use crate::corpus::Turn;

/// Bundles the resources needed to annotate raw turns with entities and
/// sentiment, and to tokenize them.
#[derive(Clone, Debug)]
pub struct TextAnalyzer {
    resources: TextResources,
}

impl Default for TextAnalyzer {
    fn default() -> Self {
        Self::new(TextResources::default())
    }
}

impl TextAnalyzer {
    pub fn new(resources: TextResources) -> Self {
        Self { resources }
    }

    pub fn resources(&self) -> &TextResources {
        &self.resources
    }

    pub fn entities(&self, text: &str) -> Vec<String> {
        extract_entities(text, &self.resources.gazetteer, &self.resources.stopwords)
    }

    pub fn sentiment(&self, text: &str) -> f64 {
        self.resources.lexicon.score(text)
    }

    /// Word-agent tokens followed by the turn's entity tokens.
    pub fn tokenize(&self, turn: &Turn) -> Vec<String> {
        let entities = self.entities(&turn.text);
        tokenize_turn(&turn.agent, &turn.text, &entities, MAX_UTTERANCE_TOKENS)
    }
}
