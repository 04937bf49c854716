use serde::{Deserialize, Serialize};

use super::pairwise_eval;
use crate::corpus::{build_dataset, Corpus, FeedbackTuple, Signal};
use crate::error::{Error, Result};
use crate::rankers::{train_ranker, RankerConfigs, RankerKind};
use crate::text::TextAnalyzer;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub ranker: RankerKind,
    pub size: usize,
    pub p_at_1: f64,
}

/// Pairwise precision@1 per ranker and training-set size.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
}

impl LearningCurve {
    /// `(size, p_at_1)` series of one ranker, by increasing size.
    pub fn series(&self, ranker: RankerKind) -> Vec<(usize, f64)> {
        self.points
            .iter()
            .filter(|p| p.ranker == ranker)
            .map(|p| (p.size, p.p_at_1))
            .collect()
    }

    /// Columns `ranker, size, p_at_1`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("ranker\tsize\tp_at_1\n");
        for p in &self.points {
            out.push_str(&format!("{}\t{}\t{:.6}\n", p.ranker, p.size, p.p_at_1));
        }
        out
    }
}

/// For each size, builds a length-signal dataset of that size, trains each
/// ranker on it and evaluates on the fixed held-out feedback tuples.
pub fn learning_curve(
    corpus: &Corpus,
    kinds: &[RankerKind],
    sizes: &[usize],
    heldout: &[FeedbackTuple],
    configs: &RankerConfigs,
    analyzer: &TextAnalyzer,
    seed: u64,
) -> Result<LearningCurve> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "sizes must be non-empty and strictly increasing".into(),
        ));
    }
    let mut curve = LearningCurve::default();
    for &size in sizes {
        let dataset = build_dataset(corpus, Signal::Length, size, seed, analyzer)?;
        for &kind in kinds {
            let (ranker, _) = train_ranker(kind, &dataset, analyzer.resources(), configs, seed)?;
            let report = pairwise_eval(&ranker, heldout)?;
            curve.points.push(CurvePoint {
                ranker: kind,
                size,
                p_at_1: report.p_at_1,
            });
        }
    }
    Ok(curve)
}
