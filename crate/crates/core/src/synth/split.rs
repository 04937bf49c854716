use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    extract_feedback_set, normalize_targets, Corpus, FeedbackDetector, FeedbackTuple, Polarity, Signal,
};
use crate::error::{Error, Result};
use crate::text::TextAnalyzer;

/// Reserves `fraction` of the dialogues for evaluation and extracts their
/// feedback tuples. Bad responses are drawn from reserved dialogues only, so
/// nothing in the returned training corpus appears in a tuple.
pub fn plant_eval_split(
    corpus: &Corpus,
    fraction: f64,
    seed: u64,
    detector: &FeedbackDetector,
    analyzer: &TextAnalyzer,
) -> Result<(Corpus, Vec<FeedbackTuple>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("fraction {fraction} outside (0, 1)")));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_reserved = (corpus.len() as f64 * fraction).round() as usize;
    let reserved: BTreeSet<usize> = order[..n_reserved].iter().copied().collect();

    let pick = |keep: bool| Corpus {
        dialogues: corpus
            .dialogues
            .iter()
            .enumerate()
            .filter(|(i, _)| reserved.contains(i) == keep)
            .map(|(_, d)| d.clone())
            .collect(),
        cutoff: corpus.cutoff,
    };
    let (heldout, train) = (pick(true), pick(false));

    if !has_both_polarities(&train) {
        return Err(Error::InsufficientData {
            requested: 2,
            achievable: 0,
        });
    }
    let tuples = extract_feedback_set(&heldout, detector, seed, analyzer)?.tuples;
    if tuples.is_empty() {
        return Err(Error::DegenerateCorpus(format!(
            "no feedback tuples in {} reserved dialogues",
            heldout.len()
        )));
    }
    Ok((train, tuples))
}

/// Whether a length-signal dataset of at least one positive and one
/// negative instance can be built.
fn has_both_polarities(corpus: &Corpus) -> bool {
    let Ok(targets) = normalize_targets(corpus, Signal::Length) else {
        return false;
    };
    let mut seen = [false; 2];
    for d in &corpus.dialogues {
        if d.system_turns().next().is_none() {
            continue;
        }
        if let Some(p) = Polarity::of_target(targets[&d.id]) {
            seen[p as usize] = true;
        }
    }
    seen == [true, true]
}
