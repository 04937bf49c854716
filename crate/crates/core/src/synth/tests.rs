use super::*;
use crate::corpus::{
    filter_corpus, parse_transcripts, serialize_transcripts, Candidate, FeedbackDetector, FilterConfig, RankingContext,
};
use crate::eval::correlation_study;
use crate::features::entity_overlap;
use crate::text::TextAnalyzer;

fn small(n: usize, seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        n_dialogues: n,
        seed,
        ..GeneratorConfig::default()
    }
}

#[test]
fn deterministic_under_seed() {
    let a = generate_corpus(&small(200, 3)).unwrap();
    let b = generate_corpus(&small(200, 3)).unwrap();
    let c = generate_corpus(&small(200, 4)).unwrap();
    assert_eq!(serialize_transcripts(&a), serialize_transcripts(&b));
    assert_ne!(serialize_transcripts(&a), serialize_transcripts(&c));
}

#[test]
fn prefix_of_larger_corpus_is_identical() {
    let a = generate_corpus(&small(50, 3)).unwrap();
    let b = generate_corpus(&small(120, 3)).unwrap();
    assert_eq!(a.dialogues[..], b.dialogues[..50]);
}

#[test]
fn ten_dialogues_of_at_least_three_turns() {
    let corpus = generate_corpus(&small(10, 1)).unwrap();
    assert_eq!(corpus.len(), 10);
    assert!(corpus.dialogues.iter().all(|d| d.len() >= 3));
}

#[test]
fn round_trips_through_transcript_format() {
    let corpus = generate_corpus(&small(100, 2)).unwrap();
    assert_eq!(parse_transcripts(&serialize_transcripts(&corpus)).unwrap(), corpus);
}

#[test]
fn invalid_configs_rejected() {
    let cases = [
        small(9, 1),
        GeneratorConfig {
            feedback_probability: 1.5,
            ..small(10, 1)
        },
        GeneratorConfig {
            good_probability: [-0.1, 0.5],
            ..small(10, 1)
        },
        GeneratorConfig {
            length_base: 2.0,
            length_gain: 10.0,
            ..small(10, 1)
        },
        GeneratorConfig {
            length_base: 10.0,
            length_gain: -8.0,
            ..small(10, 1)
        },
        GeneratorConfig {
            bots: vec![],
            ..small(10, 1)
        },
        GeneratorConfig {
            rating_noise: -1.0,
            ..small(10, 1)
        },
    ];
    for config in cases {
        assert!(
            matches!(generate_corpus(&config), Err(Error::InvalidConfig(_))),
            "{config:?}"
        );
    }
}

#[test]
fn inventory_is_disjoint_from_reserved_words() {
    let res = TextResources::default();
    let inv = Inventory::generate(20, 80, 10, &res);
    assert_eq!(inv.word_count(), 2000);
    let mut all: Vec<String> = inv
        .topics
        .iter()
        .flat_map(|t| {
            t.words
                .iter()
                .cloned()
                .chain(t.entities.iter().flat_map(|e| crate::text::words(e)))
        })
        .collect();
    assert!(all
        .iter()
        .all(|w| !res.stopwords.contains(w) && !res.lexicon.valences.contains_key(w)));
    all.sort();
    all.dedup();
    assert_eq!(all.len(), 2000);
    assert_eq!(inv, Inventory::generate(20, 80, 10, &res));
}

#[test]
fn default_corpus_correlation_pattern() {
    let corpus = generate_corpus(&GeneratorConfig::default()).unwrap();
    assert_eq!(corpus.len(), 50_000);
    let report = correlation_study(&corpus, &FeedbackDetector::default()).unwrap();
    eprintln!("{}", report.to_tsv());
    assert!(report.length_positive_feedback.unwrap() >= 0.5);
    assert!(report.rating_length.unwrap().abs() <= 0.3);
    let rated = report.n_rated as f64 / report.n_dialogues as f64;
    assert!((0.45..0.55).contains(&rated), "{rated}");
}

#[test]
fn noiseless_rating_tracks_length() {
    let config = GeneratorConfig {
        rating_noise: 0.0,
        length_noise: 0.0,
        ..small(2000, 7)
    };
    let report = correlation_study(&generate_corpus(&config).unwrap(), &FeedbackDetector::default()).unwrap();
    assert!(report.rating_length.unwrap() >= 0.95, "{:?}", report.rating_length);
}

#[test]
fn default_filter_removes_under_ten_percent() {
    let corpus = generate_corpus(&small(5000, 7)).unwrap();
    let (_, report) = filter_corpus(&corpus, &FilterConfig::default()).unwrap();
    eprintln!("{report:?}");
    assert!(report.removed_fraction() < 0.10, "{}", report.removed_fraction());
}

#[test]
fn good_turns_overlap_their_context_more_than_dull_ones() {
    let config = small(2000, 7);
    let corpus = generate_corpus(&config).unwrap();
    let analyzer = TextAnalyzer::default();
    let stop = &analyzer.resources().stopwords;
    let (mut good, mut dull) = (Vec::new(), Vec::new());
    for d in &corpus.dialogues {
        for t in d.system_turns() {
            let turn = &d.turns[t];
            if turn.agent == config.quiz_bot {
                continue;
            }
            let ctx = RankingContext::from_turns(&d.turns, t, &analyzer);
            let overlap = entity_overlap(&ctx, &Candidate::from_turn(turn, &analyzer), stop);
            if config.dull_phrases.contains(&turn.text) {
                dull.push(overlap);
            } else {
                good.push(overlap);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    eprintln!(
        "good {} ({}), dull {} ({})",
        mean(&good),
        good.len(),
        mean(&dull),
        dull.len()
    );
    assert!(mean(&good) - mean(&dull) >= 0.1);
}

#[test]
fn eval_split_is_disjoint() {
    let corpus = generate_corpus(&small(2000, 7)).unwrap();
    let analyzer = TextAnalyzer::default();
    let detector = FeedbackDetector::default();
    let (train, tuples) = plant_eval_split(&corpus, 0.1, 5, &detector, &analyzer).unwrap();
    assert_eq!(train.len(), 1800);
    let train_ids: std::collections::BTreeSet<&str> = train.dialogues.iter().map(|d| d.id.as_str()).collect();
    assert!(!tuples.is_empty());
    for t in &tuples {
        assert!(!train_ids.contains(t.source_dialogue.as_str()));
        assert!(!train_ids.contains(t.bad_source.as_str()));
    }
    let again = plant_eval_split(&corpus, 0.1, 5, &detector, &analyzer).unwrap();
    assert_eq!(again.1, tuples);
}

#[test]
fn degenerate_eval_splits_rejected() {
    let corpus = generate_corpus(&small(100, 7)).unwrap();
    let analyzer = TextAnalyzer::default();
    let detector = FeedbackDetector::default();
    assert!(plant_eval_split(&corpus, 0.999, 5, &detector, &analyzer).is_err());
    assert!(plant_eval_split(&corpus, 0.0, 5, &detector, &analyzer).is_err());
    assert!(plant_eval_split(&corpus, 1.0, 5, &detector, &analyzer).is_err());
    let no_feedback = GeneratorConfig {
        feedback_probability: 0.0,
        ..small(100, 7)
    };
    let corpus = generate_corpus(&no_feedback).unwrap();
    assert!(plant_eval_split(&corpus, 0.2, 5, &detector, &analyzer).is_err());
}
