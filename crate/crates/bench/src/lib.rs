//! Shared fixtures for the benchmarks.

use convrank::corpus::{build_dataset, filter_corpus, Dataset, FeedbackDetector, FeedbackTuple, FilterConfig, Signal};
use convrank::synth::{generate_corpus, plant_eval_split, GeneratorConfig};
use convrank::text::TextAnalyzer;

/// A filtered synthetic corpus split into a length dataset and held-out tuples.
pub fn fixture(dialogues: usize, size: usize) -> (Dataset, Vec<FeedbackTuple>) {
    let analyzer = TextAnalyzer::default();
    let corpus = generate_corpus(&GeneratorConfig {
        n_dialogues: dialogues,
        ..GeneratorConfig::default()
    })
    .expect("valid generator config");
    let (corpus, _) = filter_corpus(&corpus, &FilterConfig::default()).expect("non-empty corpus");
    let (train, tuples) =
        plant_eval_split(&corpus, 0.1, 7, &FeedbackDetector::default(), &analyzer).expect("reserve has feedback");
    let dataset = build_dataset(&train, Signal::Length, size, 7, &analyzer).expect("corpus large enough");
    (dataset, tuples)
}
