use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::io::FORMAT_VERSION;
use super::{Candidate, Corpus, RankingContext};
use crate::error::{Error, Result};
use crate::text::TextAnalyzer;

/// Normalized targets above this value are positive instances.
pub const POSITIVE_THRESHOLD: f64 = 0.7;
/// Normalized targets below this value are negative instances.
pub const NEGATIVE_THRESHOLD: f64 = 0.3;

const SPLIT_FRACTIONS: [f64; 3] = [0.8, 0.1, 0.1];

/// Supervision signal a dataset is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signal {
    Length,
    Rating,
}

impl std::str::FromStr for Signal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "length" => Ok(Signal::Length),
            "rating" => Ok(Signal::Rating),
            other => Err(Error::InvalidArgument(format!("unknown signal `{other}`"))),
        }
    }
}

impl std::fmt::Display for Signal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Signal::Length => "length",
            Signal::Rating => "rating",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    /// Polarity implied by a normalized target, `None` inside the excluded band.
    pub fn of_target(target: f64) -> Option<Self> {
        if target > POSITIVE_THRESHOLD {
            Some(Polarity::Positive)
        } else if target < NEGATIVE_THRESHOLD {
            Some(Polarity::Negative)
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

const SPLITS: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

/// A context-response pair labelled with its dialogue's normalized target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingInstance {
    pub context: RankingContext,
    pub response: Candidate,
    pub target: f64,
    pub polarity: Polarity,
    pub source_dialogue: String,
    pub turn_index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub signal: Signal,
    pub train: Vec<TrainingInstance>,
    pub dev: Vec<TrainingInstance>,
    pub test: Vec<TrainingInstance>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[TrainingInstance] {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (Split, &TrainingInstance)> {
        SPLITS
            .into_iter()
            .flat_map(move |s| self.split(s).iter().map(move |i| (s, i)))
    }
}

/// Maps dialogue ids to targets in [0, 1].
///
/// Ratings map as `(r - 1) / 4` and only rated dialogues are included.
/// Lengths are min-max scaled over the (already filtered) corpus.
pub fn normalize_targets(corpus: &Corpus, signal: Signal) -> Result<BTreeMap<String, f64>> {
    match signal {
        Signal::Rating => Ok(corpus
            .dialogues
            .iter()
            .filter_map(|d| d.rating.map(|r| (d.id.clone(), (f64::from(r) - 1.0) / 4.0)))
            .collect()),
        Signal::Length => {
            let min = corpus
                .dialogues
                .iter()
                .map(|d| d.len())
                .min()
                .ok_or(Error::EmptyCorpus)?;
            let max = corpus.dialogues.iter().map(|d| d.len()).max().unwrap_or(min);
            if max == min {
                return Err(Error::DegenerateCorpus(format!("every dialogue has length {min}")));
            }
            let span = (max - min) as f64;
            Ok(corpus
                .dialogues
                .iter()
                .map(|d| (d.id.clone(), (d.len() - min) as f64 / span))
                .collect())
        }
    }
}

/// Instance counts per split for a dataset of `size`.
fn split_sizes(size: usize) -> [usize; 3] {
    let train = (size as f64 * SPLIT_FRACTIONS[0]).round() as usize;
    let dev = (size as f64 * SPLIT_FRACTIONS[1]).round() as usize;
    [train, dev, size - train - dev]
}

/// Positive and negative quotas per split; odd splits alternate the extra
/// instance between polarities so the totals stay balanced.
fn quotas(size: usize) -> [[usize; 3]; 2] {
    let mut q = [[0; 3]; 2];
    let mut extra_to_positive = true;
    for (s, n) in split_sizes(size).into_iter().enumerate() {
        q[0][s] = n / 2;
        q[1][s] = n / 2;
        if n % 2 == 1 {
            q[if extra_to_positive { 0 } else { 1 }][s] += 1;
            extra_to_positive = !extra_to_positive;
        }
    }
    q
}

fn feasible(size: usize, capacity: &[[usize; 3]; 2]) -> bool {
    let q = quotas(size);
    (0..2).all(|p| (0..3).all(|s| q[p][s] <= capacity[p][s]))
}

/// Builds a balanced dataset of `size` instances split 8:1:1 by dialogue.
///
/// Every system turn of a dialogue whose target is above 0.7 (below 0.3)
/// yields a positive (negative) candidate instance. Dialogues are shuffled
/// and assigned to splits in proportion to their instance capacity; each
/// split then samples its quota without replacement.
pub fn build_dataset(
    corpus: &Corpus,
    signal: Signal,
    size: usize,
    seed: u64,
    analyzer: &TextAnalyzer,
) -> Result<Dataset> {
    if size == 0 || size % 2 == 1 {
        return Err(Error::InvalidArgument(format!(
            "dataset size must be a positive even number, got {size}"
        )));
    }
    let targets = normalize_targets(corpus, signal)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // [polarity] -> shuffled (dialogue index, capacity)
    let mut pools: [Vec<(usize, usize)>; 2] = [Vec::new(), Vec::new()];
    for (i, d) in corpus.dialogues.iter().enumerate() {
        let Some(&target) = targets.get(&d.id) else { continue };
        let Some(polarity) = Polarity::of_target(target) else {
            continue;
        };
        let capacity = d.system_turns().count();
        if capacity > 0 {
            pools[polarity as usize].push((i, capacity));
        }
    }

    // [polarity][split] -> dialogue indices, and capacities
    let mut assigned: [[Vec<usize>; 3]; 2] = Default::default();
    let mut capacity = [[0usize; 3]; 2];
    for (p, pool) in pools.iter_mut().enumerate() {
        pool.shuffle(&mut rng);
        let total: usize = pool.iter().map(|&(_, c)| c).sum();
        let mut cumulative = 0;
        for &(dialogue, cap) in pool.iter() {
            let fraction = cumulative as f64 / total as f64;
            let s = if fraction < SPLIT_FRACTIONS[0] {
                0
            } else if fraction < SPLIT_FRACTIONS[0] + SPLIT_FRACTIONS[1] {
                1
            } else {
                2
            };
            assigned[p][s].push(dialogue);
            capacity[p][s] += cap;
            cumulative += cap;
        }
    }

    if !feasible(size, &capacity) {
        let achievable = (1..size / 2)
            .rev()
            .map(|half| 2 * half)
            .find(|&s| feasible(s, &capacity))
            .unwrap_or(0);
        return Err(Error::InsufficientData {
            requested: size,
            achievable,
        });
    }

    let q = quotas(size);
    let mut splits: [Vec<TrainingInstance>; 3] = Default::default();
    for (p, by_split) in assigned.iter_mut().enumerate() {
        for (s, dialogues) in by_split.iter_mut().enumerate() {
            dialogues.sort_unstable();
            let pairs: Vec<(usize, usize)> = dialogues
                .iter()
                .flat_map(|&d| corpus.dialogues[d].system_turns().map(move |t| (d, t)))
                .collect();
            let chosen = rand::seq::index::sample(&mut rng, pairs.len(), q[p][s]);
            for k in chosen {
                let (d, t) = pairs[k];
                let dialogue = &corpus.dialogues[d];
                let target = targets[&dialogue.id];
                splits[s].push(TrainingInstance {
                    context: RankingContext::from_turns(&dialogue.turns, t, analyzer),
                    response: Candidate::from_turn(&dialogue.turns[t], analyzer),
                    target,
                    polarity: Polarity::of_target(target).expect("eligible dialogue"),
                    source_dialogue: dialogue.id.clone(),
                    turn_index: t,
                });
            }
        }
    }
    for split in &mut splits {
        split.sort_by(|a, b| {
            a.source_dialogue
                .cmp(&b.source_dialogue)
                .then(a.turn_index.cmp(&b.turn_index))
        });
    }
    let [train, dev, test] = splits;
    Ok(Dataset {
        signal,
        train,
        dev,
        test,
    })
}

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    format_version: u32,
    signal: Signal,
}

#[derive(Serialize)]
struct RecordRef<'a> {
    split: Split,
    #[serde(flatten)]
    instance: &'a TrainingInstance,
}

#[derive(Deserialize)]
struct Record {
    split: Split,
    context: RankingContext,
    response: Candidate,
    target: f64,
    polarity: Polarity,
    source_dialogue: String,
    turn_index: usize,
}

/// Writes a dataset as line-oriented JSON with a header line.
pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = serde_json::to_string(&DatasetHeader {
        format_version: FORMAT_VERSION,
        signal: dataset.signal,
    })?;
    out.push('\n');
    for (split, instance) in dataset.iter() {
        out.push_str(&serde_json::to_string(&RecordRef { split, instance })?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing dataset header".into(),
    })?;
    let header: DatasetHeader = serde_json::from_str(header).map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Parse {
            line: 1,
            message: format!("unsupported format_version {}", header.format_version),
        });
    }
    let mut dataset = Dataset {
        signal: header.signal,
        train: Vec::new(),
        dev: Vec::new(),
        test: Vec::new(),
    };
    for (i, line) in lines {
        let err = |message: String| Error::Parse { line: i + 1, message };
        let r: Record = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if Polarity::of_target(r.target) != Some(r.polarity) {
            return Err(err(format!("polarity does not match target {}", r.target)));
        }
        let instance = TrainingInstance {
            context: r.context,
            response: r.response,
            target: r.target,
            polarity: r.polarity,
            source_dialogue: r.source_dialogue,
            turn_index: r.turn_index,
        };
        match r.split {
            Split::Train => dataset.train.push(instance),
            Split::Dev => dataset.dev.push(instance),
            Split::Test => dataset.test.push(instance),
        }
    }
    Ok(dataset)
}
