//! Command-line entry points.
//!
//! Exit codes: 0 on success, 1 for usage errors and bad input (unparseable
//! files, invalid values, missing files), 2 for internal failures such as a
//! diverging training run.

mod report;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use report::{eval_csv, parse_eval_csv, parse_report_csv, render_report, ReportFormat};

use crate::corpus::{self, GoldRecord};
use crate::ensemble::{ensemble_runs, EnsembleConfig, PriorityStrategy, TypeStrategy};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_all, evaluate_per_event, EvalOptions, MetricReport, DEFAULT_NDCG_K, EVAL_CSV_HEADER};
use crate::model::checkpoint;
use crate::ontology::{default_ontology, Ontology};
use crate::training::{grid_csv, grid_search, train, ExperimentConfig, DEFAULT_BS_GRID, DEFAULT_LR_GRID};

#[derive(Debug, Parser)]
#[command(name = "tweet-triage", version, about = "Multi-task crisis tweet classifier and evaluation toolkit")]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Predict a run file from a checkpoint.
    Predict(PredictArgs),
    /// Merge two or more run files.
    Ensemble(EnsembleArgs),
    /// Score a run against gold labels.
    Eval(EvalArgs),
    /// Train once per learning rate and batch size and rank by dev HarM.
    Gridsearch(GridArgs),
    /// Tabulate eval outputs side by side.
    Report(ReportArgs),
}

/// Config values that override the config file.
#[derive(Debug, Args, Default)]
struct Overrides {
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    warmup_ratio: Option<String>,
    #[arg(long)]
    eval_every_steps: Option<String>,
    #[arg(long)]
    d_model: Option<String>,
    #[arg(long)]
    n_layers: Option<String>,
    #[arg(long)]
    n_heads: Option<String>,
    #[arg(long)]
    d_ff: Option<String>,
    #[arg(long)]
    vocab_size: Option<String>,
    #[arg(long)]
    max_len: Option<String>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        let pairs = [
            ("lambda", &self.lambda),
            ("lr", &self.lr),
            ("batch_size", &self.batch_size),
            ("epochs", &self.epochs),
            ("warmup_ratio", &self.warmup_ratio),
            ("eval_every_steps", &self.eval_every_steps),
            ("d_model", &self.d_model),
            ("n_layers", &self.n_layers),
            ("n_heads", &self.n_heads),
            ("d_ff", &self.d_ff),
            ("vocab_size", &self.vocab_size),
            ("max_len", &self.max_len),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(())
    }
}

/// Training data shared by `train` and `gridsearch`.
#[derive(Debug, Args)]
struct DataArgs {
    /// Training gold file.
    #[arg(long)]
    gold: PathBuf,
    /// Dev gold file used for model selection.
    #[arg(long, conflicts_with = "dev_ratio")]
    dev: Option<PathBuf>,
    /// Hold out this fraction of --gold as the dev set.
    #[arg(long)]
    dev_ratio: Option<f64>,
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for initialisation, shuffling and the dev split.
    #[arg(long)]
    seed: Option<u64>,
    /// Label file replacing the default ontology.
    #[arg(long)]
    ontology: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
    /// Write the training history CSV here.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Gold or text-only JSON Lines input.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    /// union or intersection.
    #[arg(long, default_value = "union")]
    types: String,
    /// highest, average or lowest.
    #[arg(long, default_value = "highest")]
    priority: String,
    #[arg(long)]
    ontology: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Member run files.
    #[arg(required = true, num_args = 2..)]
    runs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Single-row metrics CSV.
    #[arg(long)]
    out: PathBuf,
    /// NDCG cutoff.
    #[arg(long, default_value_t = DEFAULT_NDCG_K)]
    k: usize,
    /// Score gold tweets missing from the run as empty predictions.
    #[arg(long)]
    lenient: bool,
    /// Per-event breakdown CSV.
    #[arg(long)]
    per_event: Option<PathBuf>,
    /// Markdown table of the result.
    #[arg(long)]
    markdown: Option<PathBuf>,
    #[arg(long)]
    ontology: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated learning rates.
    #[arg(long, value_delimiter = ',')]
    lrs: Vec<f64>,
    /// Comma-separated batch sizes.
    #[arg(long, value_delimiter = ',')]
    batch_sizes: Vec<usize>,
    /// Results CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// csv or markdown.
    #[arg(long, default_value = "markdown")]
    format: String,
    #[arg(long)]
    out: PathBuf,
    /// Eval CSVs as NAME=PATH.
    #[arg(required = true)]
    inputs: Vec<String>,
}

/// Parses `argv` (including the program name), runs the command, and returns
/// the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = if cli.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_user_error() {
                1
            } else {
                2
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => train_command(a),
        Command::Predict(a) => predict_command(&a.checkpoint, &a.gold, &a.out),
        Command::Ensemble(a) => ensemble_command(a),
        Command::Eval(a) => eval_command(a),
        Command::Gridsearch(a) => grid_command(a),
        Command::Report(a) => report_command(a),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn load_ontology(path: &Option<PathBuf>) -> Result<Ontology> {
    match path {
        Some(p) => Ontology::load(p),
        None => Ok(default_ontology().clone()),
    }
}

struct Prepared {
    config: ExperimentConfig,
    ontology: Ontology,
    train: Vec<GoldRecord>,
    dev: Vec<GoldRecord>,
}

fn prepare(data: &DataArgs) -> Result<Prepared> {
    let mut config = match &data.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    data.overrides.apply(&mut config)?;
    if let Some(seed) = data.seed {
        config.train.seed = seed;
    }
    let ontology = load_ontology(&data.ontology)?;
    let gold = corpus::load_gold(&data.gold, &ontology)?;
    let (train, dev) = match (&data.dev, data.dev_ratio) {
        (Some(p), _) => (gold, corpus::load_gold(p, &ontology)?),
        (None, Some(ratio)) => {
            let split = corpus::split_train_dev(&gold, ratio, config.train.seed)?;
            (split.train, split.dev)
        }
        (None, None) => (gold, Vec::new()),
    };
    Ok(Prepared {
        config,
        ontology,
        train,
        dev,
    })
}

fn train_command(a: TrainArgs) -> Result<()> {
    let p = prepare(&a.data)?;
    let outcome = train(&p.config.model, &p.config.train, &p.train, &p.dev, &p.ontology)?;
    checkpoint::save(&outcome.model, &a.out)?;
    if let Some(h) = &a.history {
        write_text(h, &outcome.history.to_csv())?;
    }
    if let Some(best) = outcome.history.best_entry() {
        log::info!("selected checkpoint at step {}", best.step);
    }
    Ok(())
}

/// Loads a checkpoint, predicts every input tweet, and writes the run file.
pub fn predict_command(checkpoint_path: &Path, input: &Path, out: &Path) -> Result<()> {
    let model = checkpoint::load(checkpoint_path)?;
    let tweets = corpus::load_tweets(input)?;
    let run = model.predict_run(&tweets)?;
    corpus::write_run(&run, out)
}

fn ensemble_command(a: EnsembleArgs) -> Result<()> {
    let config = EnsembleConfig {
        types: a.types.parse::<TypeStrategy>()?,
        priority: a.priority.parse::<PriorityStrategy>()?,
    };
    let ontology = load_ontology(&a.ontology)?;
    let members = a
        .runs
        .iter()
        .map(|p| corpus::load_run(p, &ontology))
        .collect::<Result<Vec<_>>>()?;
    let merged = ensemble_runs(&members, config)?;
    corpus::write_run(&merged, &a.out)
}

fn eval_command(a: EvalArgs) -> Result<()> {
    let ontology = load_ontology(&a.ontology)?;
    let gold = corpus::load_gold(&a.gold, &ontology)?;
    let run = corpus::load_run(&a.run, &ontology)?;
    let opts = EvalOptions {
        k: a.k,
        lenient: a.lenient,
        ..EvalOptions::default()
    };
    let report = evaluate_all(&run, &gold, &ontology, &opts)?;
    write_text(&a.out, &eval_csv(&report))?;
    if let Some(p) = &a.per_event {
        let mut text = format!("event_id,{EVAL_CSV_HEADER}\n");
        for (event, r) in evaluate_per_event(&run, &gold, &ontology, &opts)? {
            text.push_str(&format!("{event},{}\n", r.to_csv_row()));
        }
        write_text(p, &text)?;
    }
    if let Some(p) = &a.markdown {
        let name = a.run.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
        write_text(p, &render_report(&[(name, report)], ReportFormat::Markdown))?;
    }
    Ok(())
}

fn grid_command(a: GridArgs) -> Result<()> {
    let p = prepare(&a.data)?;
    let lrs = if a.lrs.is_empty() { DEFAULT_LR_GRID.to_vec() } else { a.lrs };
    let bss = if a.batch_sizes.is_empty() {
        DEFAULT_BS_GRID.to_vec()
    } else {
        a.batch_sizes
    };
    let results = grid_search(&p.config.model, &p.config.train, &p.train, &p.dev, &p.ontology, &lrs, &bss)?;
    write_text(&a.out, &grid_csv(&results))
}

fn report_command(a: ReportArgs) -> Result<()> {
    let format: ReportFormat = a.format.parse()?;
    let mut reports: Vec<(String, MetricReport)> = Vec::with_capacity(a.inputs.len());
    for input in &a.inputs {
        let (name, path) = match input.split_once('=') {
            Some((n, p)) => (n.to_string(), PathBuf::from(p)),
            None => {
                let path = PathBuf::from(input);
                let name = path.file_stem().map_or(input.clone(), |s| s.to_string_lossy().into_owned());
                (name, path)
            }
        };
        let report = parse_eval_csv(&read_text(&path)?, &path)?;
        reports.push((name, report));
    }
    write_text(&a.out, &render_report(&reports, format))
}
