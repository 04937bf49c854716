use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Candidate, RankingContext};
use crate::text::{noun_phrases, words};

pub type SparseVector = BTreeMap<String, f64>;

/// Inverse document frequencies, `ln((1 + N) / (1 + df)) + 1`, stored at
/// single precision so they survive checkpointing unchanged.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IdfTable {
    n_docs: usize,
    words: Vec<String>,
    values: Vec<f64>,
    index: HashMap<String, usize>,
}

impl IdfTable {
    pub fn fit<I, S>(documents: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut n_docs = 0;
        for doc in documents {
            n_docs += 1;
            let unique: BTreeSet<String> = words(doc.as_ref()).into_iter().collect();
            for w in unique {
                *df.entry(w).or_default() += 1;
            }
        }
        let (words, values) = df.into_iter().map(|(w, d)| (w, idf(n_docs, d))).unzip();
        Self::from_parts(n_docs, words, values)
    }

    pub fn from_parts(n_docs: usize, words: Vec<String>, values: Vec<f64>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Self {
            n_docs,
            words,
            values,
            index,
        }
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// IDF of `word`; unseen words get the maximum (df = 0). An empty table
    /// weighs every word 1.
    pub fn idf(&self, word: &str) -> f64 {
        if self.n_docs == 0 {
            return 1.0;
        }
        match self.index.get(word) {
            Some(&i) => self.values[i],
            None => idf(self.n_docs, 0),
        }
    }

    pub fn vector(&self, text: &str) -> SparseVector {
        let mut v = SparseVector::new();
        for w in words(text) {
            *v.entry(w).or_default() += 1.0;
        }
        for (w, x) in v.iter_mut() {
            *x *= self.idf(w);
        }
        v
    }
}

fn idf(n_docs: usize, df: usize) -> f64 {
    let v = ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0;
    v as f32 as f64
}

pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small.iter().filter_map(|(k, x)| large.get(k).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

/// Dialogue-flow features, each in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowFeatures {
    pub coherence: f64,
    pub information_flow: f64,
    pub dullness: f64,
}

/// Computes flow features from tf-idf cosine similarities.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowScorer {
    idf: IdfTable,
    dull_phrases: Vec<String>,
    dull: Vec<SparseVector>,
}

impl FlowScorer {
    pub fn new(idf: IdfTable, dull_phrases: &[String]) -> Self {
        let dull = dull_phrases.iter().map(|p| idf.vector(p)).collect();
        Self {
            idf,
            dull_phrases: dull_phrases.to_vec(),
            dull,
        }
    }

    pub fn idf(&self) -> &IdfTable {
        &self.idf
    }

    pub fn dull_phrases(&self) -> &[String] {
        &self.dull_phrases
    }

    /// - dullness: max cosine between the response and any dull phrase;
    /// - coherence: cosine between the averaged context turns and the response;
    /// - information flow: one minus the cosine between the last system turn
    ///   and the response (1 when the context has no system turn).
    pub fn flow_features(&self, context: &RankingContext, response: &str) -> FlowFeatures {
        let r = self.idf.vector(response);
        if r.is_empty() {
            return FlowFeatures {
                coherence: 0.0,
                information_flow: 1.0,
                dullness: 0.0,
            };
        }
        let dullness = self.dull.iter().map(|d| cosine(&r, d)).fold(0.0, f64::max);

        let coherence = if context.turns.is_empty() {
            0.0
        } else {
            let mut avg = SparseVector::new();
            for turn in &context.turns {
                for (w, x) in self.idf.vector(&turn.text) {
                    *avg.entry(w).or_default() += x;
                }
            }
            let n = context.turns.len() as f64;
            avg.values_mut().for_each(|x| *x /= n);
            cosine(&avg, &r)
        };

        let information_flow = match context.turns.iter().rev().find(|t| !t.is_user()) {
            Some(last) => 1.0 - cosine(&self.idf.vector(&last.text), &r),
            None => 1.0,
        };

        FlowFeatures {
            coherence,
            information_flow: information_flow.clamp(0.0, 1.0),
            dullness,
        }
    }
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        0.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

/// Jaccard overlap of entities and noun phrases between the context turns
/// and the response.
pub fn entity_overlap(context: &RankingContext, response: &Candidate, stopwords: &BTreeSet<String>) -> f64 {
    let mut ctx: BTreeSet<String> = context.entities.iter().flatten().cloned().collect();
    for turn in &context.turns {
        ctx.extend(noun_phrases(&turn.text, stopwords));
    }
    let mut resp: BTreeSet<String> = response.entities.iter().cloned().collect();
    resp.extend(noun_phrases(&response.text, stopwords));
    jaccard(&ctx, &resp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Turn, USER};
    use crate::text::TextResources;
    use proptest::prelude::*;

    fn scorer() -> FlowScorer {
        let idf = IdfTable::fit(["i don't know", "the jedi fight", "the sith lord", "what a day"]);
        FlowScorer::new(idf, &TextResources::default().dull_phrases)
    }

    fn ctx(turns: &[(&str, &str)]) -> RankingContext {
        RankingContext {
            turns: turns.iter().map(|(a, t)| Turn::new(*a, *t, 0.0)).collect(),
            entities: vec![vec![]; turns.len()],
            position: turns.len(),
            time: 0.0,
        }
    }

    fn cand(text: &str, entities: &[&str]) -> Candidate {
        Candidate {
            bot: "newsbot".into(),
            text: text.into(),
            entities: entities.iter().map(|e| e.to_string()).collect(),
            sentiment: 0.0,
        }
    }

    #[test]
    fn dull_phrase_is_fully_dull() {
        let f = scorer().flow_features(&ctx(&[(USER, "hi")]), "I don't know");
        assert!((f.dullness - 1.0).abs() < 1e-12);
    }

    #[test]
    fn response_equal_to_context_is_coherent() {
        let c = ctx(&[(USER, "the jedi fight the sith lord")]);
        let f = scorer().flow_features(&c, "the jedi fight the sith lord");
        assert!((f.coherence - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repeating_last_system_turn_has_no_information_flow() {
        let c = ctx(&[(USER, "hi"), ("newsbot", "the sith lord returns"), (USER, "really")]);
        let f = scorer().flow_features(&c, "the sith lord returns");
        assert!(f.information_flow.abs() < 1e-12);
        let novel = scorer().flow_features(&c, "what a day");
        assert_eq!(novel.information_flow, 1.0);
    }

    #[test]
    fn empty_response() {
        let f = scorer().flow_features(&ctx(&[(USER, "hi")]), "");
        assert_eq!((f.dullness, f.coherence, f.information_flow), (0.0, 0.0, 1.0));
    }

    #[test]
    fn idf_values_survive_single_precision() {
        let idf = IdfTable::fit(["a b", "b c", "c d e"]);
        for &v in idf.values() {
            assert_eq!(v, v as f32 as f64);
        }
        assert!(idf.idf("zzz") > idf.idf("b"));
        assert_eq!(IdfTable::default().idf("anything"), 1.0);
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn jaccard_cases() {
        assert_eq!(jaccard(&set(&["a", "b"]), &set(&["a", "b"])), 1.0);
        assert_eq!(jaccard(&set(&["a"]), &set(&["b"])), 0.0);
        assert_eq!(jaccard(&set(&[]), &set(&[])), 0.0);
        assert_eq!(
            jaccard(&set(&["darth_vader", "star_wars"]), &set(&["star_wars", "jedi"])),
            1.0 / 3.0
        );
    }

    #[test]
    fn entity_overlap_by_hand() {
        let mut c = ctx(&[(USER, "he"), ("newsbot", "yes")]);
        c.entities = vec![vec!["darth_vader".into()], vec!["star_wars".into()]];
        let stop = TextResources::default().stopwords;
        assert_eq!(
            entity_overlap(&c, &cand("it", &["star_wars", "jedi"]), &stop),
            1.0 / 3.0
        );
        assert_eq!(
            entity_overlap(&c, &cand("it", &["star_wars", "jedi", "yoda"]), &stop),
            0.25
        );
        assert_eq!(
            entity_overlap(&c, &cand("it", &["star_wars", "darth_vader"]), &stop),
            1.0
        );
        assert_eq!(entity_overlap(&ctx(&[]), &cand("", &[]), &stop), 0.0);
    }

    proptest! {
        #[test]
        fn features_stay_in_unit_interval(
            turns in proptest::collection::vec(("(user|newsbot)", "[a-z' ]{0,30}"), 0..6),
            response in "[a-z' ]{0,30}",
        ) {
            let turns: Vec<(&str, &str)> = turns.iter().map(|(a, t)| (a.as_str(), t.as_str())).collect();
            let c = ctx(&turns);
            let f = scorer().flow_features(&c, &response);
            for v in [f.coherence, f.information_flow, f.dullness] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            let o = entity_overlap(&c, &cand(&response, &[]), &TextResources::default().stopwords);
            prop_assert!((0.0..=1.0).contains(&o));
        }
    }
}
