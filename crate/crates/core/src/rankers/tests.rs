use proptest::prelude::*;

use super::*;
use crate::corpus::{Dataset, Polarity, Signal, TrainingInstance, Turn, USER};
use crate::features::Roster;
use crate::nn::{gradient_check, Parameters, GRADCHECK_STEP, GRADCHECK_TOLERANCE};
use crate::text::{TextAnalyzer, TextResources};

const TOPICS: [&str; 5] = ["jedi", "galaxy", "league", "striker", "planet"];

fn instance(i: usize, positive: bool, analyzer: &TextAnalyzer) -> TrainingInstance {
    let topic = TOPICS[i % TOPICS.len()];
    let context = RankingContext::annotate(
        vec![
            Turn::new(USER, format!("tell me about the {topic}"), 0.0),
            Turn::new("newsbot", format!("the {topic} is famous"), 1.0),
            Turn::new(USER, format!("more about {topic} please"), 2.0),
        ],
        3,
        3.0 + i as f64,
        analyzer,
    );
    let response = if positive {
        Candidate::new(
            "newsbot",
            format!("the {topic} story continues with new {topic} facts"),
            analyzer,
        )
    } else {
        Candidate::new("persona", "i don't know", analyzer)
    };
    TrainingInstance {
        context,
        response,
        target: if positive { 1.0 } else { 0.0 },
        polarity: if positive {
            Polarity::Positive
        } else {
            Polarity::Negative
        },
        source_dialogue: format!("d{i:04}"),
        turn_index: 3,
    }
}

fn toy_dataset(n: usize) -> Dataset {
    let analyzer = TextAnalyzer::default();
    let all: Vec<TrainingInstance> = (0..n).map(|i| instance(i, i % 2 == 0, &analyzer)).collect();
    let (train, rest) = all.split_at(n * 8 / 10);
    let (dev, test) = rest.split_at(rest.len() / 2);
    Dataset {
        signal: Signal::Length,
        train: train.to_vec(),
        dev: dev.to_vec(),
        test: test.to_vec(),
    }
}

fn small_neural() -> NeuralConfig {
    NeuralConfig {
        embedding: 8,
        hidden: 8,
        layout: vec![8],
        train: TrainConfig {
            learning_rate: 0.05,
            max_epochs: 10,
            ..TrainConfig::default()
        },
        ..NeuralConfig::default()
    }
}

fn small_dual() -> DualConfig {
    DualConfig {
        embedding: 6,
        hidden: 6,
        layout: vec![6],
        train: TrainConfig {
            learning_rate: 0.05,
            max_epochs: 3,
            ..TrainConfig::default()
        },
        ..DualConfig::default()
    }
}

fn trained_neural(data: &Dataset) -> (NeuralRanker, TrainingReport) {
    let roster = dataset_roster(data).unwrap();
    train_neural(data, &roster, &TextResources::default().lexicon, &small_neural(), 5).unwrap()
}

fn all_rankers(data: &Dataset) -> Vec<AnyRanker> {
    let res = TextResources::default();
    let hc = HandcraftedConfig {
        lda: crate::features::LdaConfig {
            topics: 4,
            iterations: 20,
            ..Default::default()
        },
        ..Default::default()
    };
    vec![
        AnyRanker::Neural(trained_neural(data).0),
        AnyRanker::Linear(train_linear(data, &res, &LinearConfig::default(), 1).unwrap()),
        AnyRanker::Handcrafted(fit_handcrafted(&data.train, &res, &hc, 1).unwrap()),
        AnyRanker::DualEncoder(train_dual_encoder(data, &small_dual(), 1).unwrap().0),
    ]
}

#[test]
fn neural_fits_separable_toy_set() {
    let data = toy_dataset(200);
    let (model, report) = trained_neural(&data);
    let train = model.examples(&data.train).unwrap();
    let loss = train::mean_loss(&model, &train);
    assert!(loss < 0.05, "train loss {loss}");
    let first = report.epochs[0].dev_loss;
    assert!(report.best_dev_loss <= first);
    assert_eq!(report.best_dev_loss, dev_loss(&model, &data).unwrap());
}

#[test]
fn same_seed_same_checkpoint() {
    let data = toy_dataset(60);
    let a = AnyRanker::Neural(trained_neural(&data).0)
        .to_checkpoint()
        .unwrap()
        .to_bytes()
        .unwrap();
    let b = AnyRanker::Neural(trained_neural(&data).0)
        .to_checkpoint()
        .unwrap()
        .to_bytes()
        .unwrap();
    assert_eq!(a, b);
}

#[test]
fn grid_search_picks_lowest_dev_loss() {
    let data = toy_dataset(40);
    let roster = dataset_roster(&data).unwrap();
    let mut base = small_neural();
    base.train.max_epochs = 2;
    let layouts = vec![vec![4], vec![4, 3]];
    let grid = grid_search(
        &data,
        &roster,
        &TextResources::default().lexicon,
        &base,
        &[3, 5],
        &layouts,
        2,
    )
    .unwrap();
    assert_eq!(grid.runs.len(), 4);
    let best = grid.runs[grid.best].report.best_dev_loss;
    assert!(grid.runs.iter().all(|r| r.report.best_dev_loss >= best));
    assert_eq!(grid.model.config.hidden, grid.runs[grid.best].hidden);
    assert_eq!(GRID_HIDDEN.len() * grid_layouts().len(), 9);
}

#[test]
fn checkpoints_round_trip_bit_exactly() {
    let data = toy_dataset(60);
    let dir = tempfile::tempdir().unwrap();
    for ranker in all_rankers(&data) {
        let path = dir.path().join(format!("{}.ckpt", ranker.kind()));
        ranker.save(&path).unwrap();
        let loaded = AnyRanker::load(&path).unwrap();
        assert_eq!(loaded.kind(), ranker.kind());
        for inst in data.test.iter().chain(&data.train) {
            let a = ranker.score(&inst.context, &inst.response).unwrap();
            let b = loaded.score(&inst.context, &inst.response).unwrap();
            assert_eq!(a.to_bits(), b.to_bits(), "{}", ranker.kind());
        }
    }
}

#[test]
fn rank_is_a_stable_descending_permutation() {
    struct Fixed;
    impl Ranker for Fixed {
        fn kind(&self) -> RankerKind {
            RankerKind::Handcrafted
        }
        fn score(&self, _: &RankingContext, c: &Candidate) -> Result<f64> {
            Ok(c.sentiment)
        }
    }
    let ctx = RankingContext {
        turns: vec![],
        entities: vec![],
        position: 0,
        time: 0.0,
    };
    let cand = |s: f64, t: &str| Candidate {
        bot: "b".into(),
        text: t.into(),
        entities: vec![],
        sentiment: s,
    };
    assert!(rank(&Fixed, &ctx, &[]).is_err());
    let one = rank(&Fixed, &ctx, &[cand(0.3, "a")]).unwrap();
    assert_eq!(one[0].candidate.text, "a");
    let r = rank(&Fixed, &ctx, &[cand(0.1, "low"), cand(0.9, "high")]).unwrap();
    assert_eq!((r[0].candidate.text.as_str(), r[0].score), ("high", 0.9));
    let r = rank(&Fixed, &ctx, &[cand(0.5, "x"), cand(0.7, "y"), cand(0.5, "z")]).unwrap();
    let order: Vec<usize> = r.iter().map(|c| c.index).collect();
    assert_eq!(order, vec![1, 0, 2]);
}

#[test]
fn linear_basics() {
    let res = TextResources::default();
    let data = toy_dataset(40);
    let flow = crate::features::FlowScorer::new(crate::features::IdfTable::default(), &res.dull_phrases);
    let mut zero = LinearRanker::new(LinearConfig::default(), flow.clone()).unwrap();
    zero.bias = 0.3;
    let inst = &data.test[0];
    assert_eq!(zero.score(&inst.context, &inst.response).unwrap(), 0.3);
    zero.bias = 1.7;
    assert_eq!(zero.score(&inst.context, &inst.response).unwrap(), 1.0);

    let unseen = Candidate::new("nobot", "zxq qqv wwrt never seen before", &TextAnalyzer::default());
    for (i, _) in zero.hashed(&inst.context, &unseen) {
        assert!(i < 1 << 18);
    }

    let frozen = LinearConfig {
        learning_rate: 0.0,
        ..LinearConfig::default()
    };
    let m = train_linear(&data, &res, &frozen, 0).unwrap();
    assert!(m.weights.iter().all(|&w| w == 0.0) && m.bias == 0.0);
}

#[test]
fn linear_dot_product_oracle() {
    let res = TextResources::default();
    let config = LinearConfig {
        templates: vec![FeatureTemplate::Bot, FeatureTemplate::ResponseNgrams],
        ..LinearConfig::default()
    };
    let flow = crate::features::FlowScorer::new(crate::features::IdfTable::default(), &res.dull_phrases);
    let mut m = LinearRanker::new(config, flow).unwrap();
    let ctx = RankingContext {
        turns: vec![],
        entities: vec![],
        position: 0,
        time: 0.0,
    };
    let cand = Candidate {
        bot: "newsbot".into(),
        text: "big news".into(),
        entities: vec![],
        sentiment: 0.0,
    };
    // Bot indicator, two unigrams, one bigram: 4 unit features, norm 2.
    let named: [(&[&str], f64); 5] = [
        (&["bot", "newsbot"], 0.4),
        (&["r1", "big"], 0.2),
        (&["r1", "news"], -0.1),
        (&["r2", "big", "news"], 0.3),
        (&["bot", "persona"], 5.0),
    ];
    let mask = (1u64 << 18) - 1;
    let sign = |h: u64| if h >> 63 == 1 { -1.0 } else { 1.0 };
    for (parts, w) in named {
        let h = feature_hash(parts);
        m.weights[(h & mask) as usize] = w * sign(h);
    }
    m.bias = 0.05;
    let expected = 0.05 + (0.4 + 0.2 - 0.1 + 0.3) / 2.0;
    assert!((m.score(&ctx, &cand).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn linear_learns_separable_toy_set() {
    let data = toy_dataset(200);
    let m = train_linear(&data, &TextResources::default(), &LinearConfig::default(), 0).unwrap();
    let analyzer = TextAnalyzer::default();
    let mut correct = 0;
    for i in 0..100 {
        let good = instance(i * 2, true, &analyzer);
        let bad = instance(i * 2, false, &analyzer);
        if m.score(&good.context, &good.response).unwrap() > m.score(&bad.context, &bad.response).unwrap() {
            correct += 1;
        }
    }
    assert!(correct > 95, "{correct}/100");
}

#[test]
fn linear_duplicates_equal_extra_passes() {
    let res = TextResources::default();
    let base = toy_dataset(20);
    let one = Dataset {
        train: vec![base.train[0].clone()],
        ..base.clone()
    };
    let two = Dataset {
        train: vec![base.train[0].clone(), base.train[0].clone()],
        ..base.clone()
    };
    let twice = LinearConfig {
        passes: 2,
        ..LinearConfig::default()
    };
    let a = train_linear(&two, &res, &LinearConfig::default(), 0).unwrap();
    let b = train_linear(&one, &res, &twice, 0).unwrap();
    assert_eq!(a.weights, b.weights);
    assert_eq!(a.bias, b.bias);
}

fn handcrafted() -> HandcraftedRanker {
    let data = toy_dataset(60);
    let config = HandcraftedConfig {
        lda: crate::features::LdaConfig {
            topics: 4,
            iterations: 30,
            ..Default::default()
        },
        ..Default::default()
    };
    fit_handcrafted(&data.train, &TextResources::default(), &config, 3).unwrap()
}

#[test]
fn handcrafted_prefers_overlap_to_dullness() {
    let m = handcrafted();
    let analyzer = TextAnalyzer::default();
    let ctx = RankingContext::annotate(
        vec![
            Turn::new(USER, "what do you think of Star Wars", 0.0),
            Turn::new("newsbot", "Star Wars has a new jedi film", 1.0),
            Turn::new(USER, "tell me about the jedi", 2.0),
        ],
        3,
        3.0,
        &analyzer,
    );
    let dull = Candidate::new("persona", "i don't know", &analyzer);
    let overlap = Candidate::new("newsbot", "the jedi return in Star Wars", &analyzer);
    let (fd, fo) = (m.features(&ctx, &dull).unwrap(), m.features(&ctx, &overlap).unwrap());
    assert!(fd[2] > fo[2] && fd[3] < fo[3]);
    assert!(m.score(&ctx, &overlap).unwrap() > m.score(&ctx, &dull).unwrap());

    let mut zero = m.clone();
    zero.coefficients = [0.0; 6];
    assert_eq!(zero.score(&ctx, &dull).unwrap(), 0.5);

    let mut f = fo;
    let s0 = m.score_features(&f);
    f[2] += 0.3;
    assert!(m.score_features(&f) < s0);
}

#[test]
fn dual_encoder_reads_only_last_user_turn() {
    let data = toy_dataset(40);
    let (m, _) = train_dual_encoder(&data, &small_dual(), 4).unwrap();
    let inst = &data.test[0];
    let base = m.score(&inst.context, &inst.response).unwrap();
    let mut changed = inst.context.clone();
    changed.turns[0].text = "completely different words".into();
    changed.turns[1].text = "and the system said this".into();
    changed.turns[1].agent = "persona".into();
    assert_eq!(base.to_bits(), m.score(&changed, &inst.response).unwrap().to_bits());
    changed.turns[2].text = "tell me about the league".into();
    assert_ne!(base, m.score(&changed, &inst.response).unwrap());

    let mut zero = m.clone();
    zero.params = zero.params.zeros_like();
    assert_eq!(zero.score(&inst.context, &inst.response).unwrap(), 0.5);
}

#[test]
fn dual_encoder_gradients_match_finite_differences() {
    let data = toy_dataset(20);
    let config = DualConfig {
        embedding: 3,
        hidden: 4,
        layout: vec![5, 3],
        ..small_dual()
    };
    let mut seqs = Vec::new();
    for inst in &data.train {
        let (c, r) = DualEncoderRanker::token_sequences(&inst.context, &inst.response);
        seqs.push(c);
        seqs.push(r);
    }
    let vocab = crate::text::Vocabulary::build(&seqs, 50).unwrap();
    let m = DualEncoderRanker::new(config, vocab, 8).unwrap();
    let batch: Vec<_> = m.examples(&data.train[..3]);
    let analytic = m.batch_gradients(&batch, None);
    let report = gradient_check(&m.params, &analytic, GRADCHECK_STEP, |p| {
        DualEncoderRanker {
            params: p.clone(),
            ..m.clone()
        }
        .batch_loss(&batch, None)
    });
    assert!(report.passes(GRADCHECK_TOLERANCE), "{report:?}");
}

#[test]
fn ranker_kind_names() {
    for k in RankerKind::ALL {
        assert_eq!(k.name().parse::<RankerKind>().unwrap(), k);
    }
    assert!("svm".parse::<RankerKind>().is_err());
    let roster = Roster::new(vec!["newsbot".into(), "persona".into()]).unwrap();
    assert_eq!(dataset_roster(&toy_dataset(20)).unwrap(), roster);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn every_ranker_scores_in_unit_interval(
        user in "[a-zA-Z ]{0,40}",
        system in "[a-zA-Z ]{0,40}",
        response in "[a-zA-Z' ]{0,40}",
        bot in prop::sample::select(vec!["newsbot", "persona"]),
        time in 0.0f64..1e9,
    ) {
        use std::sync::OnceLock;
        static RANKERS: OnceLock<Vec<AnyRanker>> = OnceLock::new();
        let rankers = RANKERS.get_or_init(|| all_rankers(&toy_dataset(40)));
        let analyzer = TextAnalyzer::default();
        let ctx = RankingContext::annotate(
            vec![Turn::new(USER, user, 0.0), Turn::new("newsbot", system, 1.0)],
            2,
            time,
            &analyzer,
        );
        let cand = Candidate::new(bot, response, &analyzer);
        for r in rankers {
            let s = r.score(&ctx, &cand).unwrap();
            prop_assert!((0.0..=1.0).contains(&s), "{} gave {}", r.kind(), s);
        }
    }
}
