use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::io::FORMAT_VERSION;
use super::{Candidate, Corpus, RankingContext, Turn};
use crate::error::{Error, Result};
use crate::text::{normalize_phrase, SentimentLexicon, TextAnalyzer, TextResources};

/// Flags user turns that carry explicit feedback, using phrase whitelists,
/// a blacklist of look-alike utterances and the sentiment lexicon.
#[derive(Clone, Debug)]
pub struct FeedbackDetector {
    positive: Vec<Vec<String>>,
    negative: Vec<Vec<String>>,
    blacklist: Vec<String>,
    lexicon: SentimentLexicon,
    /// Sentiment magnitude that flags a short utterance without a phrase hit.
    pub sentiment_threshold: f64,
    /// Longest utterance (in words) flagged on sentiment alone.
    pub max_sentiment_words: usize,
}

impl Default for FeedbackDetector {
    fn default() -> Self {
        Self::new(&TextResources::default())
    }
}

impl FeedbackDetector {
    pub fn new(resources: &TextResources) -> Self {
        let split = |phrases: &[String]| -> Vec<Vec<String>> {
            phrases
                .iter()
                .map(|p| normalize_phrase(p).split(' ').map(str::to_string).collect())
                .filter(|p: &Vec<String>| !p.is_empty() && !p[0].is_empty())
                .collect()
        };
        Self {
            positive: split(&resources.feedback.positive),
            negative: split(&resources.feedback.negative),
            blacklist: resources
                .feedback
                .blacklist
                .iter()
                .map(|p| normalize_phrase(p))
                .collect(),
            lexicon: resources.lexicon.clone(),
            sentiment_threshold: 0.4,
            max_sentiment_words: 8,
        }
    }

    pub fn is_positive(&self, turn: &Turn) -> bool {
        self.detect(turn, &self.positive, 1.0)
    }

    pub fn is_negative(&self, turn: &Turn) -> bool {
        self.detect(turn, &self.negative, -1.0)
    }

    fn detect(&self, turn: &Turn, phrases: &[Vec<String>], sign: f64) -> bool {
        if !turn.is_user() {
            return false;
        }
        let normalized = normalize_phrase(&turn.text);
        if normalized.is_empty() || self.blacklist.contains(&normalized) {
            return false;
        }
        let words: Vec<&str> = normalized.split(' ').collect();
        let sentiment = sign * self.lexicon.score(&turn.text);
        let phrase_hit = phrases
            .iter()
            .any(|p| p.len() <= words.len() && words.windows(p.len()).any(|w| w.iter().zip(p).all(|(a, b)| a == b)));
        (phrase_hit && sentiment >= 0.0)
            || (sentiment >= self.sentiment_threshold && words.len() <= self.max_sentiment_words)
    }
}

/// A context with a response that drew explicit positive feedback and a
/// response sampled from another dialogue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackTuple {
    pub context: RankingContext,
    pub good_response: Candidate,
    pub bad_response: Candidate,
    pub source_dialogue: String,
    pub bad_source: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackSet {
    pub tuples: Vec<FeedbackTuple>,
    /// Flagged turns without an immediately preceding system turn.
    pub skipped: usize,
}

/// Builds evaluation tuples from every user turn flagged as positive
/// feedback. The good response is the system turn right before it; the bad
/// response is drawn uniformly from system turns of other dialogues.
pub fn extract_feedback_set(
    corpus: &Corpus,
    detector: &FeedbackDetector,
    seed: u64,
    analyzer: &TextAnalyzer,
) -> Result<FeedbackSet> {
    // System turns, grouped contiguously by dialogue.
    let mut pool: Vec<(usize, usize)> = Vec::new();
    let mut ranges = Vec::with_capacity(corpus.len());
    for (d, dialogue) in corpus.dialogues.iter().enumerate() {
        let start = pool.len();
        pool.extend(dialogue.system_turns().map(|t| (d, t)));
        ranges.push(start..pool.len());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tuples = Vec::new();
    let mut skipped = 0;
    for (d, dialogue) in corpus.dialogues.iter().enumerate() {
        for (i, turn) in dialogue.turns.iter().enumerate() {
            if !detector.is_positive(turn) {
                continue;
            }
            if i == 0 || dialogue.turns[i - 1].is_user() {
                skipped += 1;
                continue;
            }
            let own = &ranges[d];
            let others = pool.len() - own.len();
            if others == 0 {
                return Err(Error::InvalidArgument(
                    "no system turns outside the feedback dialogue to sample from".into(),
                ));
            }
            let good = Candidate::from_turn(&dialogue.turns[i - 1], analyzer);
            let mut bad = None;
            for _ in 0..32 {
                let r = rng.gen_range(0..others);
                let k = if r < own.start { r } else { r + own.len() };
                let (bd, bt) = pool[k];
                let candidate = Candidate::from_turn(&corpus.dialogues[bd].turns[bt], analyzer);
                if candidate != good {
                    bad = Some((bd, candidate));
                    break;
                }
            }
            let Some((bd, bad_response)) = bad else {
                skipped += 1;
                continue;
            };
            tuples.push(FeedbackTuple {
                context: RankingContext::from_turns(&dialogue.turns, i - 1, analyzer),
                good_response: good,
                bad_response,
                source_dialogue: dialogue.id.clone(),
                bad_source: corpus.dialogues[bd].id.clone(),
            });
        }
    }
    Ok(FeedbackSet { tuples, skipped })
}

#[derive(Serialize, Deserialize)]
struct TupleHeader {
    format_version: u32,
    n_tuples: usize,
}

pub fn write_tuples(tuples: &[FeedbackTuple], path: &Path) -> Result<()> {
    let mut out = serde_json::to_string(&TupleHeader {
        format_version: FORMAT_VERSION,
        n_tuples: tuples.len(),
    })?;
    out.push('\n');
    for t in tuples {
        out.push_str(&serde_json::to_string(t)?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_tuples(path: &Path) -> Result<Vec<FeedbackTuple>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut tuples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |e: serde_json::Error| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        };
        if i == 0 && line.contains("\"format_version\"") {
            let header: TupleHeader = serde_json::from_str(line).map_err(err)?;
            if header.format_version != FORMAT_VERSION {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("unsupported format_version {}", header.format_version),
                });
            }
            continue;
        }
        tuples.push(serde_json::from_str(line).map_err(err)?);
    }
    Ok(tuples)
}
