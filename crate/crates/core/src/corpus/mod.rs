//! Dialogue data model, transcript I/O, corpus filtering, target
//! normalization, supervised dataset construction and extraction of the
//! explicit-feedback evaluation set.

mod dataset;
mod feedback;
mod filter;
mod io;

pub use dataset::{
    build_dataset, normalize_targets, read_dataset, write_dataset, Dataset, Polarity, Signal, Split, TrainingInstance,
    NEGATIVE_THRESHOLD, POSITIVE_THRESHOLD,
};
pub use feedback::{extract_feedback_set, read_tuples, write_tuples, FeedbackDetector, FeedbackSet, FeedbackTuple};
pub use filter::{filter_corpus, nearest_rank_percentile, FilterConfig, FilterReport, LengthCutoff};
pub use io::{ingest_transcripts, parse_transcripts, serialize_transcripts, write_transcripts, FORMAT_VERSION};

use serde::{Deserialize, Serialize};

use crate::text::TextAnalyzer;

/// Agent identifier of the human side of a conversation.
pub const USER: &str = "user";

/// Most recent turns of each side kept in a ranking context.
pub const CONTEXT_TURNS_PER_SIDE: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub agent: String,
    pub text: String,
    pub timestamp: f64,
}

impl Turn {
    pub fn new(agent: impl Into<String>, text: impl Into<String>, timestamp: f64) -> Self {
        Self {
            agent: agent.into(),
            text: text.into(),
            timestamp,
        }
    }

    pub fn is_user(&self) -> bool {
        self.agent == USER
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dialogue {
    pub id: String,
    pub turns: Vec<Turn>,
    pub rating: Option<u8>,
}

impl Dialogue {
    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// Indices of system (non-user) turns.
    pub fn system_turns(&self) -> impl Iterator<Item = usize> + '_ {
        self.turns
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.is_user())
            .map(|(i, _)| i)
    }
}

/// A collection of dialogues. `cutoff` records the outlier-length cutoff
/// once the corpus has been filtered, which keeps re-filtering a no-op.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub dialogues: Vec<Dialogue>,
    pub cutoff: Option<LengthCutoff>,
}

impl Corpus {
    pub fn new(dialogues: Vec<Dialogue>) -> Self {
        Self {
            dialogues,
            cutoff: None,
        }
    }

    pub fn len(&self) -> usize {
        self.dialogues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dialogues.is_empty()
    }

    /// Sorted set of system agents that occur in the corpus.
    pub fn roster(&self) -> Vec<String> {
        let bots: std::collections::BTreeSet<&str> = self
            .dialogues
            .iter()
            .flat_map(|d| d.turns.iter())
            .filter(|t| !t.is_user())
            .map(|t| t.agent.as_str())
            .collect();
        bots.into_iter().map(str::to_string).collect()
    }
}

/// The conversation window a candidate response is scored against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingContext {
    /// Up to three system and three user turns, in dialogue order.
    pub turns: Vec<Turn>,
    /// Named entities of each turn, aligned with `turns`.
    pub entities: Vec<Vec<String>>,
    /// Index the response occupies in its dialogue.
    pub position: usize,
    /// Time at which the response is uttered (seconds since epoch).
    pub time: f64,
}

impl RankingContext {
    /// Context for a response placed at `index` of `turns`.
    pub fn from_turns(turns: &[Turn], index: usize, analyzer: &TextAnalyzer) -> Self {
        let mut picked = Vec::new();
        let (mut users, mut systems) = (0, 0);
        for i in (0..index.min(turns.len())).rev() {
            let quota = if turns[i].is_user() { &mut users } else { &mut systems };
            if *quota < CONTEXT_TURNS_PER_SIDE {
                *quota += 1;
                picked.push(i);
            }
            if users == CONTEXT_TURNS_PER_SIDE && systems == CONTEXT_TURNS_PER_SIDE {
                break;
            }
        }
        picked.reverse();
        let context_turns: Vec<Turn> = picked.iter().map(|&i| turns[i].clone()).collect();
        let entities = context_turns.iter().map(|t| analyzer.entities(&t.text)).collect();
        let time = turns
            .get(index)
            .or_else(|| context_turns.last())
            .map_or(0.0, |t| t.timestamp);
        Self {
            turns: context_turns,
            entities,
            position: index,
            time,
        }
    }

    /// Builds a context from explicit turns, annotating entities.
    pub fn annotate(turns: Vec<Turn>, position: usize, time: f64, analyzer: &TextAnalyzer) -> Self {
        let entities = turns.iter().map(|t| analyzer.entities(&t.text)).collect();
        Self {
            turns,
            entities,
            position,
            time,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// Context with the given turn order; entities follow their turns.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            turns: order.iter().map(|&i| self.turns[i].clone()).collect(),
            entities: order.iter().map(|&i| self.entities[i].clone()).collect(),
            position: self.position,
            time: self.time,
        }
    }
}

/// A candidate system response.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub bot: String,
    pub text: String,
    pub entities: Vec<String>,
    pub sentiment: f64,
}

impl Candidate {
    pub fn new(bot: impl Into<String>, text: impl Into<String>, analyzer: &TextAnalyzer) -> Self {
        let text = text.into();
        Self {
            bot: bot.into(),
            entities: analyzer.entities(&text),
            sentiment: analyzer.sentiment(&text),
            text,
        }
    }

    pub fn from_turn(turn: &Turn, analyzer: &TextAnalyzer) -> Self {
        Self::new(turn.agent.clone(), turn.text.clone(), analyzer)
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    /// Dialogue alternating user/system turns, system turns spoken by `bot`.
    pub fn dialogue(id: &str, len: usize, rating: Option<u8>) -> Dialogue {
        let turns = (0..len)
            .map(|i| {
                if i % 2 == 0 {
                    Turn::new(USER, format!("user says {i}"), i as f64)
                } else {
                    Turn::new("newsbot", format!("bot says {i}"), i as f64)
                }
            })
            .collect();
        Dialogue {
            id: id.to_string(),
            turns,
            rating,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::dialogue;
    use super::*;

    #[test]
    fn context_keeps_three_turns_per_side_in_order() {
        let d = dialogue("d", 12, None);
        let ctx = RankingContext::from_turns(&d.turns, 11, &TextAnalyzer::default());
        let positions: Vec<f64> = ctx.turns.iter().map(|t| t.timestamp).collect();
        assert_eq!(positions, vec![5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
        assert_eq!(ctx.position, 11);
        assert_eq!(ctx.time, 11.0);
    }

    #[test]
    fn context_is_shorter_at_dialogue_start() {
        let d = dialogue("d", 4, None);
        let analyzer = TextAnalyzer::default();
        assert!(RankingContext::from_turns(&d.turns, 0, &analyzer).is_empty());
        assert_eq!(RankingContext::from_turns(&d.turns, 3, &analyzer).turns.len(), 3);
    }

    #[test]
    fn skewed_sides_fill_each_quota_separately() {
        let mut turns: Vec<Turn> = (0..5).map(|i| Turn::new(USER, "u", i as f64)).collect();
        turns.push(Turn::new("newsbot", "b", 5.0));
        turns.extend((6..9).map(|i| Turn::new(USER, "u", i as f64)));
        let ctx = RankingContext::from_turns(&turns, 9, &TextAnalyzer::default());
        let stamps: Vec<f64> = ctx.turns.iter().map(|t| t.timestamp).collect();
        assert_eq!(stamps, vec![5.0, 6.0, 7.0, 8.0]);
    }

    #[test]
    fn roster_lists_system_agents() {
        let mut d = dialogue("a", 4, None);
        d.turns[1].agent = "quizbot".into();
        let corpus = Corpus::new(vec![d]);
        assert_eq!(corpus.roster(), vec!["newsbot", "quizbot"]);
    }
}
