use std::io::{Read, Write};
use std::path::Path;

use convrank::corpus::{
    build_dataset, filter_corpus, ingest_transcripts, read_dataset, read_tuples, write_dataset, write_transcripts,
    write_tuples, Candidate, Dataset, FeedbackDetector, RankingContext, Turn,
};
use convrank::eval::{correlation_study, learning_curve, pairwise_eval, testset_loss, EvalReport, RandomScorer};
use convrank::rankers::{
    dataset_roster, grid_layouts, grid_search, rank, train_ranker, AnyRanker, Ranker, RankerConfigs, RankerKind,
    TrainingReport, GRID_HIDDEN,
};
use convrank::synth::{generate_corpus, plant_eval_split};
use convrank::text::TextAnalyzer;
use convrank::Error;
use serde::{Deserialize, Serialize};

use crate::args::{BuildArgs, Cli, Command, CurveArgs, EvaluateArgs, Overrides, TrainArgs};
use crate::config::FileConfig;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    let config = FileConfig::load(cli.config.as_deref())?;
    let analyzer = TextAnalyzer::new(config.resources()?);
    let seed = cli.seed;
    match cli.command {
        Command::Ingest { input, out } => {
            let corpus = ingest_transcripts(&input)?;
            write_transcripts(&corpus, &out)?;
            let turns: usize = corpus.dialogues.iter().map(|d| d.len()).sum();
            let rated = corpus.dialogues.iter().filter(|d| d.rating.is_some()).count();
            println!("dialogues\t{}\nturns\t{turns}\trated\t{rated}", corpus.len());
        }
        Command::Synth { n, out } => {
            let mut generator = config.generator.clone();
            generator.seed = seed;
            if let Some(n) = n {
                generator.n_dialogues = n;
            }
            let corpus = generate_corpus(&generator)?;
            write_transcripts(&corpus, &out)?;
            println!("dialogues\t{}", corpus.len());
        }
        Command::Filter { input, out } => {
            let corpus = ingest_transcripts(&input)?;
            let (kept, report) = filter_corpus(&corpus, &config.filter)?;
            write_transcripts(&kept, &out)?;
            println!("{}", serde_json::to_string(&report).map_err(Error::from)?);
        }
        Command::BuildDatasets(args) => build_datasets(&args, &analyzer, seed)?,
        Command::Train(args) => train(&args, &config, &analyzer, seed)?,
        Command::Evaluate(args) => evaluate(&args, seed)?,
        Command::Correlate { input, out } => {
            let corpus = ingest_transcripts(&input)?;
            let report = correlation_study(&corpus, &FeedbackDetector::new(analyzer.resources()))?;
            emit(out.as_deref(), &report.to_tsv())?;
        }
        Command::LearningCurve(args) => curve(&args, &config, &analyzer, seed)?,
        Command::Rank { model, input, out } => rank_command(&model, input.as_deref(), out.as_deref(), &analyzer)?,
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn build_datasets(args: &BuildArgs, analyzer: &TextAnalyzer, seed: u64) -> Result<()> {
    let mut corpus = ingest_transcripts(&args.input)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    if let Some(fraction) = args.eval_fraction {
        let detector = FeedbackDetector::new(analyzer.resources());
        let (train, tuples) = plant_eval_split(&corpus, fraction, seed, &detector, analyzer)?;
        write_tuples(&tuples, &args.out.join("eval.jsonl"))?;
        println!("eval\t{}", tuples.len());
        corpus = train;
    }
    for signal in args.signal.signals() {
        let dataset = build_dataset(&corpus, signal, args.size, seed, analyzer)?;
        write_dataset(&dataset, &args.out.join(format!("{signal}.jsonl")))?;
        println!(
            "{signal}\ttrain\t{}\tdev\t{}\ttest\t{}",
            dataset.train.len(),
            dataset.dev.len(),
            dataset.test.len()
        );
    }
    Ok(())
}

fn apply(overrides: &Overrides, configs: &mut RankerConfigs) {
    let (n, d) = (&mut configs.neural, &mut configs.dual_encoder);
    if let Some(e) = overrides.epochs {
        n.train.max_epochs = e;
        d.train.max_epochs = e;
    }
    if let Some(e) = overrides.embedding {
        n.embedding = e;
        d.embedding = e;
    }
    if let Some(h) = overrides.hidden {
        n.hidden = h;
        d.hidden = h;
    }
    if let Some(l) = &overrides.layout {
        n.layout = l.clone();
        d.layout = l.clone();
    }
    if let Some(v) = overrides.vocab_size {
        n.vocab_size = v;
        d.vocab_size = v;
    }
    if let Some(lr) = overrides.learning_rate {
        n.train.learning_rate = lr;
        d.train.learning_rate = lr;
        configs.linear.learning_rate = lr;
    }
}

fn epoch_log(report: &TrainingReport) -> String {
    let mut log = String::from("epoch\ttrain_loss\tdev_loss\n");
    for e in &report.epochs {
        log.push_str(&format!("{}\t{:.6}\t{:.6}\n", e.epoch, e.train_loss, e.dev_loss));
    }
    log
}

fn train(args: &TrainArgs, config: &FileConfig, analyzer: &TextAnalyzer, seed: u64) -> Result<()> {
    if args.grid && args.ranker != RankerKind::Neural {
        return Err(CliError::Usage("--grid is only available for the neural ranker".into()));
    }
    let dataset = read_dataset(&args.data.join(format!("{}.jsonl", args.signal)))?;
    if dataset.signal != args.signal {
        return Err(Error::InvalidArgument(format!(
            "dataset was built from the {} signal, not {}",
            dataset.signal, args.signal
        ))
        .into());
    }
    let mut configs = config.rankers.clone();
    apply(&args.overrides, &mut configs);

    let (model, report) = if args.grid {
        let roster = dataset_roster(&dataset)?;
        let search = grid_search(
            &dataset,
            &roster,
            &analyzer.resources().lexicon,
            &configs.neural,
            &GRID_HIDDEN,
            &grid_layouts(),
            seed,
        )?;
        let mut table = String::from("hidden\tlayout\tbest_epoch\tdev_loss\n");
        for run in &search.runs {
            let layout: Vec<String> = run.layout.iter().map(usize::to_string).collect();
            table.push_str(&format!(
                "{}\t{}\t{}\t{:.6}\n",
                run.hidden,
                layout.join(","),
                run.report.best_epoch,
                run.report.best_dev_loss
            ));
        }
        write_text(&args.out.with_extension("grid.tsv"), &table)?;
        print!("{table}");
        let report = search.runs[search.best].report.clone();
        (AnyRanker::Neural(search.model), Some(report))
    } else {
        train_ranker(args.ranker, &dataset, analyzer.resources(), &configs, seed)?
    };
    model.save(&args.out)?;
    if let Some(report) = report {
        let log = epoch_log(&report);
        write_text(&log_path(&args.out), &log)?;
        print!("{log}");
    }
    Ok(())
}

fn log_path(out: &Path) -> std::path::PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".log.tsv");
    name.into()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

#[derive(Serialize)]
struct Summary<'a> {
    ranker: &'a str,
    p_at_1: f64,
    ci95: f64,
    n_tuples: usize,
    mean_margin: f64,
    test_loss: Option<f64>,
}

fn evaluate(args: &EvaluateArgs, seed: u64) -> Result<()> {
    let tuples = read_tuples(&args.tuples)?;
    let model = args.model.as_deref().map(AnyRanker::load).transpose()?;
    let random = RandomScorer { seed };
    let (ranker, name): (&dyn Ranker, String) = match &model {
        Some(m) => (m.as_ranker(), m.as_ranker().kind().to_string()),
        None => (&random, "random".to_string()),
    };
    let mut report: EvalReport = pairwise_eval(ranker, &tuples)?;
    if let Some(path) = &args.dataset {
        let dataset: Dataset = read_dataset(path)?;
        report.test_loss = Some(testset_loss(ranker, &dataset.test)?);
    }
    let summary = Summary {
        ranker: &name,
        p_at_1: report.p_at_1,
        ci95: report.confidence_95(),
        n_tuples: report.n_tuples,
        mean_margin: report.mean_margin,
        test_loss: report.test_loss,
    };
    println!("{}", serde_json::to_string(&summary).map_err(Error::from)?);
    if let Some(out) = &args.out {
        write_text(out, &(serde_json::to_string(&report).map_err(Error::from)? + "\n"))?;
    }
    Ok(())
}

fn curve(args: &CurveArgs, config: &FileConfig, analyzer: &TextAnalyzer, seed: u64) -> Result<()> {
    let corpus = ingest_transcripts(&args.input)?;
    let detector = FeedbackDetector::new(analyzer.resources());
    let (train, tuples) = plant_eval_split(&corpus, args.eval_fraction, seed, &detector, analyzer)?;
    let mut configs = config.rankers.clone();
    apply(&args.overrides, &mut configs);
    let curve = learning_curve(&train, &args.rankers, &args.sizes, &tuples, &configs, analyzer, seed)?;
    emit(args.out.as_deref(), &curve.to_tsv())
}

/// One `rank` request: context turns and candidate responses.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RankRecord {
    context: Vec<RecordTurn>,
    candidates: Vec<RecordCandidate>,
    /// Dialogue position of the response; defaults to the number of context turns.
    #[serde(default)]
    position: Option<usize>,
    /// Time of the response; defaults to the last context timestamp.
    #[serde(default)]
    time: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordTurn {
    agent: String,
    text: String,
    #[serde(default)]
    timestamp: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordCandidate {
    bot: String,
    text: String,
}

fn rank_command(model: &Path, input: Option<&Path>, out: Option<&Path>, analyzer: &TextAnalyzer) -> Result<()> {
    let model = AnyRanker::load(model)?;
    let text = match input {
        Some(p) if p != Path::new("-") => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        _ => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Error::io("<stdin>", e))?;
            s
        }
    };
    let mut output = String::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let record: RankRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let turns: Vec<Turn> = record
            .context
            .into_iter()
            .map(|t| Turn::new(t.agent, t.text, t.timestamp))
            .collect();
        let position = record.position.unwrap_or(turns.len());
        let time = record.time.unwrap_or_else(|| turns.last().map_or(0.0, |t| t.timestamp));
        let context = RankingContext::annotate(turns, position, time, analyzer);
        let candidates: Vec<Candidate> = record
            .candidates
            .into_iter()
            .map(|c| Candidate::new(c.bot, c.text, analyzer))
            .collect();
        if !output.is_empty() {
            output.push('\n');
        }
        output.push_str("rank\tscore\tbot\ttext\n");
        for (r, ranked) in rank(model.as_ranker(), &context, &candidates)?.iter().enumerate() {
            output.push_str(&format!(
                "{}\t{:.6}\t{}\t{}\n",
                r + 1,
                ranked.score,
                ranked.candidate.bot,
                ranked.candidate.text
            ));
        }
    }
    match out {
        Some(path) => write_text(path, &output),
        None => {
            std::io::stdout()
                .write_all(output.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))?;
            Ok(())
        }
    }
}
