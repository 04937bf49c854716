use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, FeedbackDetector};
use crate::error::{Error, Result};

/// Pearson product-moment correlation, computed in two passes.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need two equal-length series of at least 2 values, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Per-dialogue quantities compared in the correlation study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DialogueAspects {
    pub rating: Option<u8>,
    pub length: usize,
    pub positive_feedback: usize,
    pub negative_feedback: usize,
}

pub fn dialogue_aspects(corpus: &Corpus, detector: &FeedbackDetector) -> Vec<DialogueAspects> {
    corpus
        .dialogues
        .iter()
        .map(|d| DialogueAspects {
            rating: d.rating,
            length: d.len(),
            positive_feedback: d.turns.iter().filter(|t| detector.is_positive(t)).count(),
            negative_feedback: d.turns.iter().filter(|t| detector.is_negative(t)).count(),
        })
        .collect()
}

/// Pearson coefficients between dialogue aspects. `None` marks a
/// coefficient that is undefined on this corpus (too few rated dialogues or
/// zero variance).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub rating_length: Option<f64>,
    pub rating_positive_feedback: Option<f64>,
    pub rating_negative_feedback: Option<f64>,
    pub length_positive_feedback: Option<f64>,
    pub length_negative_feedback: Option<f64>,
    pub n_dialogues: usize,
    pub n_rated: usize,
}

impl CorrelationReport {
    /// `(aspect pair, coefficient, dialogues used)` in table order.
    pub fn rows(&self) -> [(&'static str, Option<f64>, usize); 5] {
        [
            ("rating/length", self.rating_length, self.n_rated),
            ("rating/positive_feedback", self.rating_positive_feedback, self.n_rated),
            ("rating/negative_feedback", self.rating_negative_feedback, self.n_rated),
            (
                "length/positive_feedback",
                self.length_positive_feedback,
                self.n_dialogues,
            ),
            (
                "length/negative_feedback",
                self.length_negative_feedback,
                self.n_dialogues,
            ),
        ]
    }

    /// Tab-separated table with a header; undefined values print as `NA`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("pair\tpearson\tn\n");
        for (name, value, n) in self.rows() {
            let v = value.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"));
            out.push_str(&format!("{name}\t{v}\t{n}\n"));
        }
        out
    }
}

pub fn correlation_study(corpus: &Corpus, detector: &FeedbackDetector) -> Result<CorrelationReport> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let aspects = dialogue_aspects(corpus, detector);
    let col = |f: &dyn Fn(&DialogueAspects) -> f64, rated: bool| -> Vec<f64> {
        aspects.iter().filter(|a| !rated || a.rating.is_some()).map(f).collect()
    };
    let rating = col(&|a| a.rating.map_or(0.0, f64::from), true);
    let corr = |x: &[f64], y: &[f64]| pearson(x, y).ok();
    let length = |a: &DialogueAspects| a.length as f64;
    let pos = |a: &DialogueAspects| a.positive_feedback as f64;
    let neg = |a: &DialogueAspects| a.negative_feedback as f64;
    Ok(CorrelationReport {
        rating_length: corr(&rating, &col(&length, true)),
        rating_positive_feedback: corr(&rating, &col(&pos, true)),
        rating_negative_feedback: corr(&rating, &col(&neg, true)),
        length_positive_feedback: corr(&col(&length, false), &col(&pos, false)),
        length_negative_feedback: corr(&col(&length, false), &col(&neg, false)),
        n_dialogues: aspects.len(),
        n_rated: rating.len(),
    })
}
