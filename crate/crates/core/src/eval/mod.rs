//! Evaluation: precision@k, pairwise precision@1 on feedback tuples, test
//! loss, Pearson correlations between dialogue aspects and learning curves.

mod correlation;
mod curve;

pub use correlation::{correlation_study, dialogue_aspects, pearson, CorrelationReport, DialogueAspects};
pub use curve::{learning_curve, CurvePoint, LearningCurve};

use serde::{Deserialize, Serialize};

use crate::corpus::{Candidate, FeedbackTuple, RankingContext, TrainingInstance};
use crate::error::{Error, Result};
use crate::rankers::{Ranker, RankerKind};

/// Fraction of the first `k` ranked items that are relevant.
pub fn precision_at_k<T>(ranked: &[T], relevant: impl Fn(&T) -> bool, k: usize) -> Result<f64> {
    if k == 0 || k > ranked.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 1..={} candidates",
            ranked.len()
        )));
    }
    Ok(ranked[..k].iter().filter(|x| relevant(x)).count() as f64 / k as f64)
}

/// Pairwise evaluation on feedback tuples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Fraction of tuples where the good response scores strictly higher.
    pub p_at_1: f64,
    pub n_tuples: usize,
    pub mean_margin: f64,
    /// `score(good) − score(bad)` per tuple.
    pub margins: Vec<f64>,
    /// MSE on a test split, when one was supplied.
    pub test_loss: Option<f64>,
}

impl EvalReport {
    /// Half-width of the normal-approximation 95% interval of `p_at_1`.
    pub fn confidence_95(&self) -> f64 {
        let p = self.p_at_1;
        1.96 * (p * (1.0 - p) / self.n_tuples as f64).sqrt()
    }
}

/// Report from `(good, bad)` score pairs. Ties count as incorrect.
pub fn pairwise_from_scores(pairs: &[(f64, f64)]) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no feedback tuples to evaluate".into()));
    }
    let margins: Vec<f64> = pairs.iter().map(|(g, b)| g - b).collect();
    let correct = pairs.iter().filter(|(g, b)| g > b).count();
    let n = pairs.len();
    Ok(EvalReport {
        p_at_1: correct as f64 / n as f64,
        n_tuples: n,
        mean_margin: margins.iter().sum::<f64>() / n as f64,
        margins,
        test_loss: None,
    })
}

/// Scores each tuple's good and bad response in its context.
pub fn pairwise_eval<R: Ranker + ?Sized>(ranker: &R, tuples: &[FeedbackTuple]) -> Result<EvalReport> {
    let pairs = tuples
        .iter()
        .map(|t| {
            Ok((
                ranker.score(&t.context, &t.good_response)?,
                ranker.score(&t.context, &t.bad_response)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    pairwise_from_scores(&pairs)
}

/// Mean squared error of the ranker's scores against instance targets.
pub fn testset_loss<R: Ranker + ?Sized>(ranker: &R, instances: &[TrainingInstance]) -> Result<f64> {
    if instances.is_empty() {
        return Err(Error::InvalidArgument("empty test split".into()));
    }
    let mut sum = 0.0;
    for inst in instances {
        let d = ranker.score(&inst.context, &inst.response)? - inst.target;
        sum += d * d;
    }
    Ok(sum / instances.len() as f64)
}

/// Baseline that scores each (context, candidate) pair with a uniform
/// pseudo-random number derived from the seed and the pair's text.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomScorer {
    pub seed: u64,
}

impl Ranker for RandomScorer {
    fn kind(&self) -> RankerKind {
        RankerKind::Handcrafted
    }

    fn score(&self, context: &RankingContext, candidate: &Candidate) -> Result<f64> {
        let mut parts: Vec<&str> = context.turns.iter().map(|t| t.text.as_str()).collect();
        parts.push(&candidate.bot);
        parts.push(&candidate.text);
        let h = crate::rankers::derive_seed(self.seed, &[crate::rankers::feature_hash(&parts)]);
        Ok((h >> 11) as f64 / (1u64 << 53) as f64)
    }
}
