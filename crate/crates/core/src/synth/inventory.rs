use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::text::{words, TextResources};

const ONSETS: [&str; 18] = [
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "dr", "kl", "st",
];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
const CODAS: [&str; 6] = ["", "", "n", "r", "l", "s"];
const INVENTORY_SEED: u64 = 0x5eed_1eaf;

/// Pseudo-word vocabulary grouped by topic. Each topic owns a set of
/// lowercase content words and a set of two-word capitalized entity names.
#[derive(Clone, Debug, PartialEq)]
pub struct Inventory {
    pub topics: Vec<Topic>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Topic {
    pub words: Vec<String>,
    pub entities: Vec<String>,
}

impl Inventory {
    /// Builds an inventory that is identical for identical sizes. Words
    /// never collide with each other or with any word of `reserved`.
    pub fn generate(
        topics: usize,
        words_per_topic: usize,
        entities_per_topic: usize,
        reserved: &TextResources,
    ) -> Self {
        let mut taken: BTreeSet<String> = reserved_words(reserved);
        let mut rng = ChaCha8Rng::seed_from_u64(INVENTORY_SEED);
        let mut fresh = |rng: &mut ChaCha8Rng| loop {
            let syllables = rng.gen_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS[rng.gen_range(0..ONSETS.len())]);
                w.push_str(VOWELS[rng.gen_range(0..VOWELS.len())]);
            }
            w.push_str(CODAS[rng.gen_range(0..CODAS.len())]);
            if taken.insert(w.clone()) {
                return w;
            }
        };
        let topics = (0..topics)
            .map(|_| Topic {
                words: (0..words_per_topic).map(|_| fresh(&mut rng)).collect(),
                entities: (0..entities_per_topic)
                    .map(|_| format!("{} {}", capitalize(&fresh(&mut rng)), capitalize(&fresh(&mut rng))))
                    .collect(),
            })
            .collect();
        Self { topics }
    }

    pub fn word_count(&self) -> usize {
        self.topics.iter().map(|t| t.words.len() + 2 * t.entities.len()).sum()
    }
}

fn reserved_words(resources: &TextResources) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = resources.stopwords.iter().cloned().collect();
    out.extend(resources.lexicon.valences.keys().cloned());
    out.extend(resources.lexicon.negations.iter().cloned());
    out.extend(resources.lexicon.boosters.keys().cloned());
    let lists = [
        &resources.gazetteer,
        &resources.dull_phrases,
        &resources.feedback.positive,
        &resources.feedback.negative,
        &resources.feedback.blacklist,
    ];
    for list in lists {
        out.extend(list.iter().flat_map(|p| words(p)));
    }
    out
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}
