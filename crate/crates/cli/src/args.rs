use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use convrank::corpus::Signal;
use convrank::rankers::RankerKind;

#[derive(Debug, Parser)]
#[command(
    name = "convrank",
    version,
    about = "Train and evaluate response rankers for ensemble dialogue systems"
)]
pub struct Cli {
    /// Random seed for every stochastic step.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// TOML file with `[generator]`, `[filter]`, `[rankers.*]` and `[resources]` sections.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a transcript file and write it back in canonical form.
    Ingest {
        /// Line-oriented JSON transcripts.
        input: PathBuf,
        /// Canonical corpus file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus with planted signal.
    Synth {
        /// Number of dialogues (overrides the config file).
        #[arg(long)]
        n: Option<usize>,
        /// Corpus file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Remove blacklisted bot turns and length outliers.
    Filter {
        input: PathBuf,
        /// Filtered corpus file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build balanced training datasets from a corpus.
    BuildDatasets(BuildArgs),
    /// Train a ranker on a dataset.
    Train(TrainArgs),
    /// Pairwise precision@1 of a ranker on feedback tuples.
    Evaluate(EvaluateArgs),
    /// Correlations between rating, length and explicit feedback.
    Correlate {
        input: PathBuf,
        /// Write the TSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Precision@1 as a function of training-set size.
    LearningCurve(CurveArgs),
    /// Score and sort candidate responses for a context.
    Rank {
        /// Ranker checkpoint.
        #[arg(long)]
        model: PathBuf,
        /// JSON records, one per line; `-` or absent reads standard input.
        input: Option<PathBuf>,
        /// Write the TSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SignalArg {
    Length,
    Rating,
    Both,
}

impl SignalArg {
    pub fn signals(self) -> Vec<Signal> {
        match self {
            SignalArg::Length => vec![Signal::Length],
            SignalArg::Rating => vec![Signal::Rating],
            SignalArg::Both => vec![Signal::Length, Signal::Rating],
        }
    }
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = SignalArg::Both)]
    pub signal: SignalArg,
    /// Instances per dataset (even).
    #[arg(long)]
    pub size: usize,
    /// Reserve this fraction of dialogues and write their feedback tuples to `eval.jsonl`.
    #[arg(long)]
    pub eval_fraction: Option<f64>,
    /// Output directory; datasets are written as `<signal>.jsonl`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_parser = parse_signal)]
    pub signal: Signal,
    #[arg(long, value_parser = parse_kind)]
    pub ranker: RankerKind,
    /// Directory written by `build-datasets`.
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint file; the epoch log goes to `<out>.log.tsv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Search hidden sizes {64, 128, 256} x layouts {[128], [128,64], [128,32,32]} by dev loss (neural only).
    #[arg(long)]
    pub grid: bool,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Hyperparameter overrides applied on top of the config file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Maximum training epochs (recurrent rankers).
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Embedding width (recurrent rankers).
    #[arg(long)]
    pub embedding: Option<usize>,
    /// Recurrent hidden size.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Comma-separated dense layer widths, e.g. `128,64`.
    #[arg(long, value_delimiter = ',')]
    pub layout: Option<Vec<usize>>,
    /// Maximum vocabulary size (recurrent rankers).
    #[arg(long)]
    pub vocab_size: Option<usize>,
    /// Learning rate.
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Ranker checkpoint.
    #[arg(long, required_unless_present = "random", conflicts_with = "random")]
    pub model: Option<PathBuf>,
    /// Evaluate the seeded uniform-random baseline instead of a model.
    #[arg(long)]
    pub random: bool,
    /// Feedback tuples (`eval.jsonl` from `build-datasets`).
    #[arg(long)]
    pub tuples: PathBuf,
    /// Dataset whose test split is used to report test loss.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Write the full JSON report (with per-tuple margins) here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    pub input: PathBuf,
    /// Comma-separated rankers.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind, default_value = "neural")]
    pub rankers: Vec<RankerKind>,
    /// Comma-separated, strictly increasing dataset sizes.
    #[arg(long, value_delimiter = ',', default_value = "10000,20000,40000")]
    pub sizes: Vec<usize>,
    /// Fraction of dialogues reserved for the held-out feedback tuples.
    #[arg(long, default_value_t = 0.1)]
    pub eval_fraction: f64,
    /// Write the TSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

fn parse_signal(s: &str) -> Result<Signal, String> {
    s.parse().map_err(|e: convrank::Error| e.to_string())
}

fn parse_kind(s: &str) -> Result<RankerKind, String> {
    s.parse().map_err(|e: convrank::Error| e.to_string())
}
