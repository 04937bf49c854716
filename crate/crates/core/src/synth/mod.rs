//! Synthetic transcripts with planted structure.
//!
//! Every dialogue draws a latent quality `q`. System turns are on-topic and
//! entity-continuous with probability rising in `q`, and dull otherwise.
//! Good turns sometimes draw explicit positive feedback, dull ones sometimes
//! draw complaints. Length grows with `q`, while ratings are present for
//! about half of the dialogues and only weakly reflect `q`.

mod inventory;
mod split;

pub use inventory::{Inventory, Topic};
pub use split::plant_eval_split;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Dialogue, Turn, USER};
use crate::error::{Error, Result};
use crate::rankers::derive_seed;
use crate::text::TextResources;

const START_TIME: f64 = 1.5e9;
const YEAR_SECONDS: f64 = 365.0 * 86_400.0;
/// Probability that a good turn moves on to another entity of its topic.
const ENTITY_SHIFT: f64 = 0.3;
/// Probability that a good turn is spoken by the bot owning its topic.
const TOPIC_OWNER: f64 = 0.8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_dialogues: usize,
    pub bots: Vec<String>,
    /// Game bot whose turns the default filter blacklists.
    pub quiz_bot: String,
    pub topics: usize,
    pub words_per_topic: usize,
    pub entities_per_topic: usize,
    pub dull_phrases: Vec<String>,
    pub positive_feedback: Vec<String>,
    pub negative_feedback: Vec<String>,
    /// Probability of a good system turn at `q = 0` and at `q = 1`.
    pub good_probability: [f64; 2],
    /// Chance that a good turn is followed by positive feedback.
    pub feedback_probability: f64,
    /// Chance that a dull turn is followed by a complaint.
    pub negative_feedback_probability: f64,
    pub quiz_probability: f64,
    pub topic_switch_probability: f64,
    /// Dialogue length in turns is `base + round(gain * q) + noise`.
    pub length_base: f64,
    pub length_gain: f64,
    /// Standard deviation of the length noise, in turns.
    pub length_noise: f64,
    pub rating_probability: f64,
    /// Standard deviation of the noise added to `q` before it is mapped to
    /// a 1..5 rating.
    pub rating_noise: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let res = TextResources::default();
        Self {
            n_dialogues: 50_000,
            bots: ["chatbot", "factbot", "moviebot", "newsbot", "wikibot"]
                .map(String::from)
                .to_vec(),
            quiz_bot: "quizbot".into(),
            topics: 20,
            words_per_topic: 80,
            entities_per_topic: 10,
            dull_phrases: res.dull_phrases,
            positive_feedback: res.feedback.positive,
            negative_feedback: res.feedback.negative,
            good_probability: [0.05, 0.6],
            feedback_probability: 0.6,
            negative_feedback_probability: 0.25,
            quiz_probability: 0.03,
            topic_switch_probability: 0.1,
            length_base: 4.0,
            length_gain: 22.0,
            length_noise: 1.5,
            rating_probability: 0.5,
            rating_noise: 1.2,
            seed: 7,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_dialogues < 10 {
            return bad(format!("n_dialogues must be at least 10, got {}", self.n_dialogues));
        }
        let probabilities = [
            ("good_probability[0]", self.good_probability[0]),
            ("good_probability[1]", self.good_probability[1]),
            ("feedback_probability", self.feedback_probability),
            ("negative_feedback_probability", self.negative_feedback_probability),
            ("quiz_probability", self.quiz_probability),
            ("topic_switch_probability", self.topic_switch_probability),
            ("rating_probability", self.rating_probability),
        ];
        for (name, p) in probabilities {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        for (name, list) in [
            ("bots", &self.bots),
            ("dull_phrases", &self.dull_phrases),
            ("positive_feedback", &self.positive_feedback),
            ("negative_feedback", &self.negative_feedback),
        ] {
            if list.is_empty() || list.iter().any(|s| s.trim().is_empty()) {
                return bad(format!("{name} must be non-empty without blank entries"));
            }
        }
        if self.bots.iter().any(|b| b == USER || *b == self.quiz_bot) || self.quiz_bot == USER {
            return bad("bot names must differ from the user and the quiz bot".into());
        }
        if self.topics < 2 || self.words_per_topic < 4 || self.entities_per_topic < 2 {
            return bad("need at least 2 topics, 4 words and 2 entities per topic".into());
        }
        for (name, v) in [
            ("length_base", self.length_base),
            ("length_gain", self.length_gain),
            ("length_noise", self.length_noise),
            ("rating_noise", self.rating_noise),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if self.length_noise < 0.0 || self.rating_noise < 0.0 {
            return bad("noise levels must be non-negative".into());
        }
        let shortest = self
            .length_base
            .round()
            .min((self.length_base + self.length_gain).round());
        if shortest < 3.0 {
            return bad(format!(
                "length model yields dialogues of {shortest} turns; at least 3 are required"
            ));
        }
        Ok(())
    }
}

/// Generates `n_dialogues` dialogues; dialogue `i` uses its own random
/// stream derived from the seed and `i`.
pub fn generate_corpus(config: &GeneratorConfig) -> Result<Corpus> {
    config.validate()?;
    let inventory = Inventory::generate(
        config.topics,
        config.words_per_topic,
        config.entities_per_topic,
        &TextResources::default(),
    );
    let dialogues = (0..config.n_dialogues)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[i as u64]));
            generate_dialogue(config, &inventory, format!("synth-{i:06}"), &mut rng)
        })
        .collect();
    Ok(Corpus::new(dialogues))
}

#[derive(Clone, Copy, PartialEq)]
enum Last {
    Good,
    Dull,
    Quiz,
}

struct State<'a> {
    inventory: &'a Inventory,
    topic: usize,
    entity: usize,
}

impl State<'_> {
    fn entity(&self) -> &str {
        &self.inventory.topics[self.topic].entities[self.entity]
    }

    fn word(&self, rng: &mut ChaCha8Rng) -> &str {
        self.inventory.topics[self.topic].words.choose(rng).expect("validated")
    }

    fn switch_topic(&mut self, rng: &mut ChaCha8Rng) {
        self.topic = rng.gen_range(0..self.inventory.topics.len());
        self.entity = rng.gen_range(0..self.inventory.topics[self.topic].entities.len());
    }

    fn good_turn(&self, rng: &mut ChaCha8Rng) -> String {
        let e = self.entity();
        let (a, b, c) = (self.word(rng), self.word(rng), self.word(rng));
        match rng.gen_range(0..5) {
            0 => format!("{e} is the {a} of the {b}"),
            1 => format!("did you know that {e} has a {a} and a {b}"),
            2 => format!("{e} was in the {a} with the {b}"),
            3 => format!("the {a} of {e} is from the {b} of {c}"),
            _ => format!("some say that {e} is a {a} by the {b}"),
        }
    }

    fn user_turn(&self, rng: &mut ChaCha8Rng) -> String {
        let e = self.entity();
        let (a, b) = (self.word(rng), self.word(rng));
        match rng.gen_range(0..4) {
            0 => format!("what about the {a} of {e}"),
            1 => format!("tell me more about {e}"),
            2 => format!("is that a {a} or a {b}"),
            _ => format!("and what is the {a}"),
        }
    }
}

fn generate_dialogue(config: &GeneratorConfig, inventory: &Inventory, id: String, rng: &mut ChaCha8Rng) -> Dialogue {
    let q = rng.gen::<f64>().powi(2);
    let noise: f64 = StandardNormal.sample(rng);
    let length = (config.length_base + (config.length_gain * q).round() + config.length_noise * noise)
        .round()
        .max(3.0) as usize;
    let [lo, hi] = config.good_probability;
    let p_good = lo + (hi - lo) * q;

    let mut state = State {
        inventory,
        topic: 0,
        entity: 0,
    };
    state.switch_topic(rng);
    let mut time = START_TIME + (rng.gen::<f64>() * YEAR_SECONDS).floor();
    let mut turns = vec![Turn::new(USER, format!("let's talk about {}", state.entity()), time)];
    let mut last = Last::Dull;
    for i in 1..length {
        time += rng.gen_range(2..15) as f64;
        let turn = if i % 2 == 1 {
            if rng.gen_bool(config.quiz_probability) {
                last = Last::Quiz;
                let (a, b) = (state.word(rng), state.word(rng));
                Turn::new(&config.quiz_bot, format!("question for you which {a} is the {b}"), time)
            } else if rng.gen_bool(p_good) {
                last = Last::Good;
                if rng.gen_bool(ENTITY_SHIFT) {
                    state.entity = rng.gen_range(0..inventory.topics[state.topic].entities.len());
                }
                let bot = if rng.gen_bool(TOPIC_OWNER) {
                    &config.bots[state.topic % config.bots.len()]
                } else {
                    config.bots.choose(rng).expect("validated")
                };
                Turn::new(bot, state.good_turn(rng), time)
            } else {
                last = Last::Dull;
                let bot = config.bots.choose(rng).expect("validated");
                Turn::new(bot, config.dull_phrases.choose(rng).expect("validated"), time)
            }
        } else {
            let text = match last {
                Last::Good if rng.gen_bool(config.feedback_probability) => {
                    config.positive_feedback.choose(rng).expect("validated").clone()
                }
                Last::Dull if rng.gen_bool(config.negative_feedback_probability) => {
                    config.negative_feedback.choose(rng).expect("validated").clone()
                }
                Last::Quiz => format!("the {}", state.word(rng)),
                _ if rng.gen_bool(config.topic_switch_probability) => {
                    state.switch_topic(rng);
                    format!("let's talk about {}", state.entity())
                }
                _ => state.user_turn(rng),
            };
            Turn::new(USER, text, time)
        };
        turns.push(turn);
    }

    let rating = rng.gen_bool(config.rating_probability).then(|| {
        let noise: f64 = StandardNormal.sample(rng);
        (1.0 + 4.0 * (q + config.rating_noise * noise)).round().clamp(1.0, 5.0) as u8
    });
    Dialogue { id, turns, rating }
}

#[cfg(test)]
mod tests;
