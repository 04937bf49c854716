use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::tokenize::words;
use crate::error::{Error, Result};

/// Normalization constant of the `x / sqrt(x^2 + alpha)` squashing.
pub const SENTIMENT_ALPHA: f64 = 15.0;

/// Tokens after a negator that have their valence flipped.
const NEGATION_SCOPE: usize = 3;

/// Valence lexicon with negation and booster rules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentimentLexicon {
    pub valences: BTreeMap<String, f64>,
    pub negations: BTreeSet<String>,
    /// Relative scaling applied to the next token's valence (`+0.25` boosts,
    /// `-0.25` dampens).
    pub boosters: BTreeMap<String, f64>,
}

impl SentimentLexicon {
    pub fn new(
        valences: BTreeMap<String, f64>,
        negations: BTreeSet<String>,
        boosters: BTreeMap<String, f64>,
    ) -> Result<Self> {
        if let Some((term, v)) = valences.iter().find(|(_, v)| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "valence {v} of `{term}` outside [-1, 1]"
            )));
        }
        Ok(Self {
            valences,
            negations,
            boosters,
        })
    }

    /// Sentiment of `text` in [-1, 1].
    ///
    /// Each lexicon hit contributes its valence, scaled by a booster in the
    /// preceding position and flipped once per negator among the preceding
    /// three tokens. The sum `x` is squashed with `x / sqrt(x^2 + 15)`.
    pub fn score(&self, text: &str) -> f64 {
        let tokens = words(text);
        let mut sum = 0.0;
        for (i, token) in tokens.iter().enumerate() {
            let Some(&valence) = self.valences.get(token) else {
                continue;
            };
            let mut v = valence;
            if i > 0 {
                if let Some(&b) = self.boosters.get(&tokens[i - 1]) {
                    v *= 1.0 + b;
                }
            }
            let negators = tokens[i.saturating_sub(NEGATION_SCOPE)..i]
                .iter()
                .filter(|t| self.negations.contains(*t))
                .count();
            if negators % 2 == 1 {
                v = -v;
            }
            sum += v;
        }
        squash(sum)
    }
}

fn squash(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        (x / (x * x + SENTIMENT_ALPHA).sqrt()).clamp(-1.0, 1.0)
    }
}
