use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::error::{Error, Result};

/// Outlier-length cutoff applied by [`filter_corpus`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthCutoff {
    /// Nearest-rank percentile of dialogue lengths.
    pub p95: usize,
    /// `true` removes lengths `>= p95`; `false` removes only `> p95`.
    pub strict: bool,
}

impl LengthCutoff {
    pub fn is_outlier(&self, len: usize) -> bool {
        if self.strict {
            len >= self.p95
        } else {
            len > self.p95
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Percentile (in percent) above which dialogues count as too long.
    pub percentile: u32,
    /// Apply the percentile rule as `>=` instead of `>`.
    pub percentile_strict: bool,
    /// Dialogues shorter than this are removed.
    pub min_length: usize,
    /// Bots whose turns are not natural social interaction (games and the like).
    pub blacklist: Vec<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            percentile: 95,
            percentile_strict: false,
            min_length: 3,
            blacklist: vec!["quizbot".to_string()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input_dialogues: usize,
    pub kept_dialogues: usize,
    pub cutoff: LengthCutoff,
    /// System turns dropped by the blacklist.
    pub blacklisted_turns: usize,
    /// Dialogues left without system turns by the blacklist.
    pub blacklist_dropped: usize,
    pub too_short: usize,
    pub too_long: usize,
}

impl FilterReport {
    /// Fraction of dialogues removed by the length rules alone.
    pub fn outlier_fraction(&self) -> f64 {
        (self.too_short + self.too_long) as f64 / self.input_dialogues as f64
    }

    /// Fraction of dialogues removed for any reason.
    pub fn removed_fraction(&self) -> f64 {
        (self.input_dialogues - self.kept_dialogues) as f64 / self.input_dialogues as f64
    }
}

/// Nearest-rank percentile: the smallest value with at least `percent`% of
/// the data at or below it.
pub fn nearest_rank_percentile(values: &[usize], percent: u32) -> Option<usize> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let rank = (percent as usize * n).div_ceil(100).clamp(1, n);
    Some(sorted[rank - 1])
}

/// Drops blacklisted system turns, then removes dialogues shorter than
/// `min_length` or longer than the length percentile. A corpus that already
/// carries a cutoff keeps it, so filtering is idempotent.
pub fn filter_corpus(corpus: &Corpus, config: &FilterConfig) -> Result<(Corpus, FilterReport)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut blacklisted_turns = 0;
    let mut blacklist_dropped = 0;
    let mut cleaned = Vec::with_capacity(corpus.len());
    for dialogue in &corpus.dialogues {
        let mut d = dialogue.clone();
        let before = d.turns.len();
        let had_system = d.system_turns().next().is_some();
        d.turns.retain(|t| t.is_user() || !config.blacklist.contains(&t.agent));
        let removed = before - d.turns.len();
        blacklisted_turns += removed;
        if removed > 0 && (d.turns.is_empty() || (had_system && d.system_turns().next().is_none())) {
            blacklist_dropped += 1;
            continue;
        }
        cleaned.push(d);
    }

    let cutoff = match corpus.cutoff {
        Some(c) => c,
        None => {
            let lengths: Vec<usize> = cleaned.iter().map(|d| d.len()).collect();
            LengthCutoff {
                p95: nearest_rank_percentile(&lengths, config.percentile).unwrap_or(0),
                strict: config.percentile_strict,
            }
        }
    };

    let (mut too_short, mut too_long) = (0, 0);
    cleaned.retain(|d| {
        if d.len() < config.min_length {
            too_short += 1;
            false
        } else if cutoff.is_outlier(d.len()) {
            too_long += 1;
            false
        } else {
            true
        }
    });

    let report = FilterReport {
        input_dialogues: corpus.len(),
        kept_dialogues: cleaned.len(),
        cutoff,
        blacklisted_turns,
        blacklist_dropped,
        too_short,
        too_long,
    };
    Ok((
        Corpus {
            dialogues: cleaned,
            cutoff: Some(cutoff),
        },
        report,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::testutil::dialogue;
    use crate::corpus::{Dialogue, Turn};
    use proptest::prelude::*;

    /// Smallest value v with |{x <= v}| >= ceil(p * n / 100), found by scanning.
    fn percentile_oracle(values: &[usize], p: usize) -> usize {
        let needed = (p * values.len()).div_ceil(100);
        let mut candidates = values.to_vec();
        candidates.sort_unstable();
        *candidates
            .iter()
            .find(|&&v| values.iter().filter(|&&x| x <= v).count() >= needed)
            .unwrap()
    }

    fn corpus_of_lengths(lengths: impl IntoIterator<Item = usize>) -> Corpus {
        Corpus::new(
            lengths
                .into_iter()
                .enumerate()
                .map(|(i, len)| dialogue(&format!("d{i}"), len, None))
                .collect(),
        )
    }

    #[test]
    fn lengths_one_to_hundred_strict() {
        let lengths: Vec<usize> = (1..=100).collect();
        assert_eq!(percentile_oracle(&lengths, 95), 95);
        assert_eq!(nearest_rank_percentile(&lengths, 95), Some(95));
        let config = FilterConfig {
            percentile_strict: true,
            ..FilterConfig::default()
        };
        let (kept, report) = filter_corpus(&corpus_of_lengths(1..=100), &config).unwrap();
        let kept_lengths: Vec<usize> = kept.dialogues.iter().map(Dialogue::len).collect();
        assert_eq!(kept_lengths, (3..=94).collect::<Vec<_>>());
        assert_eq!(report.kept_dialogues, 92);
        assert_eq!(report.too_short, 2);
        assert_eq!(report.too_long, 6);
    }

    #[test]
    fn lengths_one_to_hundred_default_keeps_p95() {
        let (kept, _) = filter_corpus(&corpus_of_lengths(1..=100), &FilterConfig::default()).unwrap();
        assert_eq!(kept.len(), 93);
    }

    #[test]
    fn constant_lengths() {
        let corpus = corpus_of_lengths([5; 20]);
        let strict = FilterConfig {
            percentile_strict: true,
            ..FilterConfig::default()
        };
        assert_eq!(filter_corpus(&corpus, &strict).unwrap().0.len(), 0);
        assert_eq!(filter_corpus(&corpus, &FilterConfig::default()).unwrap().0.len(), 20);
    }

    #[test]
    fn short_dialogue_is_removed() {
        let (kept, report) = filter_corpus(&corpus_of_lengths([2, 5, 6]), &FilterConfig::default()).unwrap();
        assert!(kept.dialogues.iter().all(|d| d.len() >= 3));
        assert_eq!(report.too_short, 1);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(
            filter_corpus(&Corpus::default(), &FilterConfig::default()),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn blacklist_removes_turns_and_counts_emptied_dialogues() {
        let mut quiz_only = dialogue("q", 4, None);
        for t in &mut quiz_only.turns {
            if !t.is_user() {
                t.agent = "quizbot".into();
            }
        }
        let mut mixed = dialogue("m", 6, None);
        mixed.turns[1].agent = "quizbot".into();
        let mut corpus = corpus_of_lengths([5, 5, 5]);
        corpus.dialogues.push(quiz_only);
        corpus.dialogues.push(mixed);
        let (kept, report) = filter_corpus(&corpus, &FilterConfig::default()).unwrap();
        assert_eq!(report.blacklist_dropped, 1);
        assert_eq!(report.blacklisted_turns, 3);
        let m = kept.dialogues.iter().find(|d| d.id == "m").unwrap();
        assert_eq!(m.len(), 5);
        assert!(m.turns.iter().all(|t: &Turn| t.agent != "quizbot"));
    }

    proptest! {
        #[test]
        fn percentile_matches_oracle(values in proptest::collection::vec(1usize..60, 1..80), p in 1u32..=100) {
            prop_assert_eq!(nearest_rank_percentile(&values, p).unwrap(), percentile_oracle(&values, p as usize));
        }

        #[test]
        fn filtering_is_idempotent(lengths in proptest::collection::vec(1usize..40, 1..60), strict: bool) {
            let config = FilterConfig { percentile_strict: strict, ..FilterConfig::default() };
            let (once, _) = filter_corpus(&corpus_of_lengths(lengths), &config).unwrap();
            prop_assume!(!once.is_empty());
            let (twice, report) = filter_corpus(&once, &config).unwrap();
            prop_assert_eq!(&twice, &once);
            prop_assert_eq!(report.kept_dialogues, once.len());
        }
    }
}
