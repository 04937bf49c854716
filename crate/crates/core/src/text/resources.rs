use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sentiment::SentimentLexicon;
use crate::error::{Error, Result};

const LEXICON: &str = include_str!("../../data/lexicon.tsv");
const BOOSTERS: &str = include_str!("../../data/boosters.tsv");
const NEGATIONS: &str = include_str!("../../data/negations.txt");
const STOPWORDS: &str = include_str!("../../data/stopwords.txt");
const GAZETTEER: &str = include_str!("../../data/gazetteer.txt");
const DULL_PHRASES: &str = include_str!("../../data/dull_phrases.txt");
const FEEDBACK_POSITIVE: &str = include_str!("../../data/feedback_positive.txt");
const FEEDBACK_NEGATIVE: &str = include_str!("../../data/feedback_negative.txt");
const FEEDBACK_BLACKLIST: &str = include_str!("../../data/feedback_blacklist.txt");

/// Hand-picked phrase lists used to detect explicit user feedback.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackLists {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
    pub blacklist: Vec<String>,
}

/// Word lists and lexica shared by the analyzers. Serializable so that
/// checkpoints can carry the exact resources a model was trained with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextResources {
    pub lexicon: SentimentLexicon,
    pub gazetteer: Vec<String>,
    pub stopwords: BTreeSet<String>,
    pub dull_phrases: Vec<String>,
    pub feedback: FeedbackLists,
}

impl Default for TextResources {
    fn default() -> Self {
        let lexicon = SentimentLexicon::new(
            parse_tsv(LEXICON).expect("bundled lexicon"),
            lines(NEGATIONS).into_iter().collect(),
            parse_tsv(BOOSTERS).expect("bundled boosters"),
        )
        .expect("bundled lexicon valences are in range");
        Self {
            lexicon,
            gazetteer: lines(GAZETTEER),
            stopwords: lines(STOPWORDS).into_iter().collect(),
            dull_phrases: lines(DULL_PHRASES),
            feedback: FeedbackLists {
                positive: lines(FEEDBACK_POSITIVE),
                negative: lines(FEEDBACK_NEGATIVE),
                blacklist: lines(FEEDBACK_BLACKLIST),
            },
        }
    }
}

impl TextResources {
    /// Replaces the bundled sentiment lexicon with a `term<TAB>valence` file.
    pub fn load_lexicon(&mut self, path: &Path) -> Result<()> {
        let text = read(path)?;
        let valences = parse_tsv(&text)?;
        self.lexicon = SentimentLexicon::new(valences, self.lexicon.negations.clone(), self.lexicon.boosters.clone())?;
        Ok(())
    }

    /// Replaces the gazetteer with a one-entity-per-line file.
    pub fn load_gazetteer(&mut self, path: &Path) -> Result<()> {
        self.gazetteer = lines(&read(path)?);
        Ok(())
    }

    pub fn load_stopwords(&mut self, path: &Path) -> Result<()> {
        self.stopwords = lines(&read(path)?).into_iter().collect();
        Ok(())
    }

    pub fn load_dull_phrases(&mut self, path: &Path) -> Result<()> {
        self.dull_phrases = lines(&read(path)?);
        Ok(())
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

fn parse_tsv(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (term, value) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: "expected `term<TAB>value`".into(),
        })?;
        let value: f64 = value.trim().parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("invalid number `{value}`"),
        })?;
        out.insert(term.trim().to_lowercase(), value);
    }
    Ok(out)
}
