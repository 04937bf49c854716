use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::corpus::{Candidate, RankingContext, CONTEXT_TURNS_PER_SIDE};
use crate::error::{Error, Result};
use crate::text::SentimentLexicon;

/// Turn positions at or beyond this value normalize to 1.
pub const TURN_INDEX_SCALE: usize = 50;

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Ordered list of ensemble bots. Index order fixes the layout of the
/// one-hot and bag-of-bots blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Roster(Vec<String>);

impl Roster {
    pub fn new(bots: Vec<String>) -> Result<Self> {
        let mut sorted = bots.clone();
        sorted.sort();
        sorted.dedup();
        if bots.is_empty() || sorted.len() != bots.len() {
            return Err(Error::InvalidArgument(
                "roster must be non-empty without duplicates".into(),
            ));
        }
        Ok(Self(bots))
    }

    pub fn bots(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index(&self, bot: &str) -> Option<usize> {
        self.0.iter().position(|b| b == bot)
    }

    /// Length of the side-feature vector for this roster.
    pub fn side_dim(&self) -> usize {
        SideFeatureVector::SCALARS + 2 * self.len()
    }
}

/// Non-textual predictor inputs: sentiment, wall-clock time, position and
/// bot identities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideFeatureVector {
    pub context_sentiment: f64,
    pub response_sentiment: f64,
    pub time_sin: f64,
    pub time_cos: f64,
    pub turn_index_norm: f64,
    pub context_size_norm: f64,
    pub bot_onehot: Vec<f64>,
    pub context_bot_bag: Vec<f64>,
}

impl SideFeatureVector {
    pub const SCALARS: usize = 6;

    pub fn len(&self) -> usize {
        Self::SCALARS + self.bot_onehot.len() + self.context_bot_bag.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![
            self.context_sentiment,
            self.response_sentiment,
            self.time_sin,
            self.time_cos,
            self.turn_index_norm,
            self.context_size_norm,
        ];
        v.extend(&self.bot_onehot);
        v.extend(&self.context_bot_bag);
        v
    }
}

/// Builds f(C, r). Context sentiment is the mean lexicon score of the
/// context turns; it depends on word order (negation and booster scope),
/// everything else only on the turns' agents, the timestamp and position.
/// Context bots outside the roster are ignored in the bag.
pub fn side_features(
    context: &RankingContext,
    response: &Candidate,
    roster: &Roster,
    lexicon: &SentimentLexicon,
) -> Result<SideFeatureVector> {
    let bot = roster
        .index(&response.bot)
        .ok_or_else(|| Error::UnknownBot(response.bot.clone()))?;
    let mut bot_onehot = vec![0.0; roster.len()];
    bot_onehot[bot] = 1.0;

    let mut scores: Vec<f64> = context.turns.iter().map(|t| lexicon.score(&t.text)).collect();
    scores.sort_by(f64::total_cmp);
    let context_sentiment = if scores.is_empty() {
        0.0
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    };

    let mut context_bot_bag = vec![0.0; roster.len()];
    let mut n_bots = 0usize;
    for turn in &context.turns {
        if let Some(i) = roster.index(&turn.agent) {
            context_bot_bag[i] += 1.0;
            n_bots += 1;
        }
    }
    if n_bots > 0 {
        context_bot_bag.iter_mut().for_each(|x| *x /= n_bots as f64);
    }

    let phase = 2.0 * PI * context.time.rem_euclid(SECONDS_PER_DAY) / SECONDS_PER_DAY;
    Ok(SideFeatureVector {
        context_sentiment,
        response_sentiment: response.sentiment,
        time_sin: phase.sin(),
        time_cos: phase.cos(),
        turn_index_norm: context.position.min(TURN_INDEX_SCALE) as f64 / TURN_INDEX_SCALE as f64,
        context_size_norm: context.turns.len() as f64 / (2 * CONTEXT_TURNS_PER_SIDE) as f64,
        bot_onehot,
        context_bot_bag,
    })
}
