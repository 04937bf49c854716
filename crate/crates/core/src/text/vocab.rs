use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
const PAD: &str = "<pad>";
const UNK: &str = "<unk>";

/// Unified token vocabulary shared by word-agent and entity tokens.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Keeps the `max_size - 2` most frequent tokens, breaking count ties by
    /// lexicographic order, after the padding and unknown entries.
    pub fn build<I, S>(sequences: I, max_size: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[String]>,
    {
        if max_size < 3 {
            return Err(Error::InvalidArgument(format!("vocabulary size {max_size} < 3")));
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let sequences: Vec<S> = sequences.into_iter().collect();
        for seq in &sequences {
            for token in seq.as_ref() {
                *counts.entry(token.as_str()).or_default() += 1;
            }
        }
        counts.remove(PAD);
        counts.remove(UNK);
        if counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_size - 2);
        let tokens = [PAD, UNK]
            .into_iter()
            .chain(ranked.into_iter().map(|(t, _)| t))
            .map(str::to_string)
            .collect();
        Ok(Self::from_tokens(tokens))
    }

    fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn decode(&self, ids: &[u32]) -> Vec<&str> {
        ids.iter().map(|&id| self.token(id).unwrap_or(UNK)).collect()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

impl Serialize for Vocabulary {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.tokens.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let tokens = Vec::<String>::deserialize(d)?;
        if tokens.len() < 2 || tokens[0] != PAD || tokens[1] != UNK {
            return Err(serde::de::Error::custom("vocabulary must start with <pad>, <unk>"));
        }
        Ok(Self::from_tokens(tokens))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(tokens: &[&str]) -> Vec<String> {
        tokens.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn all_tokens_fit() {
        let corpus = vec![seq(&["a", "b", "c", "d", "e"]), seq(&["f", "g", "h", "i", "j", "a"])];
        let vocab = Vocabulary::build(&corpus, 60_000).unwrap();
        assert_eq!(vocab.len(), 12);
        assert_eq!(vocab.id("<pad>"), PAD_ID);
        assert_eq!(vocab.id("a"), 2);
    }

    #[test]
    fn ties_at_cutoff_keep_lexicographically_smaller() {
        let corpus = vec![seq(&["zeta", "alpha", "common", "common"])];
        let vocab = Vocabulary::build(&corpus, 4).unwrap();
        assert_eq!(vocab.tokens(), &["<pad>", "<unk>", "common", "alpha"]);
    }

    #[test]
    fn unknown_tokens_map_to_unk() {
        let vocab = Vocabulary::build(vec![seq(&["x"])], 10).unwrap();
        assert_eq!(vocab.encode(&seq(&["x", "never-seen"])), vec![2, UNK_ID]);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let empty: Vec<Vec<String>> = vec![vec![]];
        assert!(matches!(Vocabulary::build(empty, 10), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn serde_round_trip() {
        let vocab = Vocabulary::build(vec![seq(&["user|hi", "ENT|x"])], 10).unwrap();
        let json = serde_json::to_string(&vocab).unwrap();
        assert_eq!(serde_json::from_str::<Vocabulary>(&json).unwrap(), vocab);
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(tokens in proptest::collection::vec("[a-e]{1,3}", 1..40)) {
            let vocab = Vocabulary::build(vec![tokens.clone()], 1000).unwrap();
            let ids = vocab.encode(&tokens);
            prop_assert_eq!(vocab.decode(&ids), tokens.iter().map(String::as_str).collect::<Vec<_>>());
            prop_assert!(ids.iter().all(|&id| (id as usize) < vocab.len()));
        }
    }
}
