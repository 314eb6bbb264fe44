//! Command-line interface: batch subcommands over the pipeline.
//!
//! Results go to stdout or files; diagnostics go to stderr via the logger.
//! The exit code is zero exactly when no error was reported.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sarc_core::augment::augment_corpus;
use sarc_core::corpus::{label_stats, CategoryLabel, Source};
use sarc_core::encoder::Registry;
use sarc_core::metrics::{evaluate_task_a, evaluate_task_b, evaluate_task_c_indices};
use sarc_core::preprocess::Preprocessor;

use crate::config::{self, AugmentSection, SeedPolicy};
use crate::io;
use crate::runner;
use crate::stats::render_label_stats;

#[derive(Debug, Parser)]
#[command(
    name = "sarc",
    about = "Experiment pipeline for intended-sarcasm detection in tweets",
    version
)]
pub struct Cli {
    /// Log level: off, error, warn, info, debug, trace.
    #[arg(long, global = true, default_value = "info")]
    pub log_level: String,
    /// Experiment or preprocessing configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed override applied to every seeded component.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory override for `run`.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print label-combination statistics of a corpus.
    Stats(StatsArgs),
    /// Normalize texts line by line.
    Preprocess(PreprocessArgs),
    /// Generate synthetic variants of a corpus.
    Augment(AugmentArgs),
    /// Run a configured experiment end to end.
    Run,
    /// Score predictions against gold labels.
    Evaluate(EvaluateArgs),
    /// Convert any supported source into the interchange format.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Corpus file (official delimited format or interchange JSONL).
    pub input: PathBuf,
    /// auto | isarcasm | jsonl
    #[arg(long, default_value = "auto")]
    pub format: String,
    /// Warn about and drop invalid rows instead of failing.
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Input file, one text per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Output file, line-aligned with the input.
    #[arg(long)]
    pub output: PathBuf,
    /// Stopword list file overriding the bundled list.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Corpus to augment (auto-detected format, see `stats`).
    #[arg(long)]
    pub input: PathBuf,
    /// Where to write the synthetic instances (interchange JSONL).
    #[arg(long)]
    pub output: PathBuf,
    /// Only augment instances flagged with this category.
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub variants: Option<usize>,
    #[arg(long)]
    pub replace_fraction: Option<f64>,
    #[arg(long)]
    pub masker: Option<String>,
    #[arg(long, default_value = "auto")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// A, B, or C.
    #[arg(long)]
    pub task: String,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// isarcasm | binary | jsonl
    #[arg(long, default_value = "isarcasm")]
    pub format: String,
    /// Source tag for binary inputs (e.g. SEMEVAL18_TRAIN, MUSTARD).
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub text_column: Option<String>,
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub true_values: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub false_values: Option<Vec<String>>,
    /// Field delimiter: a single character or "tab".
    #[arg(long)]
    pub delimiter: Option<String>,
    #[arg(long)]
    pub permissive: bool,
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Stats(args) => cmd_stats(args),
        Command::Preprocess(args) => cmd_preprocess(cli, args),
        Command::Augment(args) => cmd_augment(cli, args),
        Command::Run => cmd_run(cli),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Export(args) => cmd_export(args),
    }
}

fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let corpus = io::load_corpus_auto(&args.input, &args.format, args.permissive)?;
    print!("{}", render_label_stats(&label_stats(&corpus)));
    Ok(())
}

fn cmd_preprocess(cli: &Cli, args: &PreprocessArgs) -> Result<()> {
    let mut section = match &cli.config {
        Some(path) => config::load_preprocess_section(path)?,
        None => Default::default(),
    };
    if let Some(path) = &args.stopwords {
        section.stopwords = Some(path.to_string_lossy().into_owned());
    }
    let preprocessor = Preprocessor::new(section.resolve()?)?;

    let lines = io::read_lines(&args.input)?;
    let processed: Vec<String> = lines.iter().map(|line| preprocessor.run(line)).collect();
    io::write_lines(&args.output, &processed)?;
    log::info!(
        "preprocessed {} line(s) into {}",
        processed.len(),
        args.output.display()
    );
    Ok(())
}

fn cmd_augment(cli: &Cli, args: &AugmentArgs) -> Result<()> {
    let corpus = io::load_corpus_auto(&args.input, &args.format, false)?;
    let label = match &args.label {
        Some(raw) => Some(
            CategoryLabel::parse(raw).with_context(|| format!("unknown category label {raw:?}"))?,
        ),
        None => None,
    };
    let section = AugmentSection {
        variants_per_input: args.variants,
        replace_fraction: args.replace_fraction,
        masker_id: args.masker.clone(),
        seed: None,
    };
    let augment_config = section.resolve(&SeedPolicy {
        cli: cli.seed,
        file: None,
    });
    let masker = Registry::default().masker(&augment_config.masker_id)?;
    let synthetic = augment_corpus(&corpus, label, &augment_config, masker.as_ref())?;
    io::write_corpus_jsonl(&args.output, &synthetic)?;
    log::info!(
        "augmented {} instance(s) into {} variant(s)",
        corpus.len(),
        synthetic.len()
    );
    Ok(())
}

fn cmd_run(cli: &Cli) -> Result<()> {
    let config_path = cli
        .config
        .as_ref()
        .context("run requires --config pointing to an experiment file")?;
    let experiment = config::load_config(config_path)?;
    let seeds = SeedPolicy {
        cli: cli.seed,
        file: experiment.seed,
    };
    let output_dir = runner::resolve_output_dir(&experiment, cli.output_dir.as_deref());
    runner::run_experiment(&experiment, &seeds, &output_dir)?;
    println!("run complete: outputs in {}", output_dir.display());
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let report = match args.task.to_uppercase().as_str() {
        "A" => {
            let gold = io::read_binary_lines(&args.gold)?;
            let pred = io::read_binary_lines(&args.pred)?;
            if gold.len() != pred.len() {
                bail!("row count mismatch: gold has {} rows, predictions have {}", gold.len(), pred.len());
            }
            let gold: Vec<bool> = gold.iter().map(|&v| v == 1).collect();
            let pred: Vec<bool> = pred.iter().map(|&v| v == 1).collect();
            evaluate_task_a(&gold, &pred)?
        }
        "B" => {
            let gold = io::read_flags_csv(&args.gold)?;
            let pred = io::read_flags_csv(&args.pred)?;
            if gold.len() != pred.len() {
                bail!("row count mismatch: gold has {} rows, predictions have {}", gold.len(), pred.len());
            }
            evaluate_task_b(&gold, &pred)?
        }
        "C" => {
            let gold = io::read_binary_lines(&args.gold)?;
            let pred = io::read_binary_lines(&args.pred)?;
            if gold.len() != pred.len() {
                bail!("row count mismatch: gold has {} rows, predictions have {}", gold.len(), pred.len());
            }
            evaluate_task_c_indices(&gold, &pred)?
        }
        other => bail!("unknown task {other:?} (expected A, B, or C)"),
    };
    print!("{}", report.to_kv_text());
    Ok(())
}

fn cmd_export(args: &ExportArgs) -> Result<()> {
    let corpus = match args.format.as_str() {
        "isarcasm" | "jsonl" => io::load_corpus_auto(&args.input, &args.format, args.permissive)?,
        "binary" => {
            use sarc_core::corpus::adapter::{BinaryMapping, LabelAdapter};
            let source_tag = args
                .source
                .as_ref()
                .context("binary export requires --source")?;
            let source = Source::parse(source_tag)
                .with_context(|| format!("unknown source tag {source_tag:?}"))?;
            let mut labels = LabelAdapter::default();
            if let Some(values) = &args.true_values {
                labels.true_values = values.clone();
            }
            if let Some(values) = &args.false_values {
                labels.false_values = values.clone();
            }
            let mapping = BinaryMapping {
                text: args.text_column.clone().context("binary export requires --text-column")?,
                label: args
                    .label_column
                    .clone()
                    .context("binary export requires --label-column")?,
                labels,
            };
            let delimiter = match args.delimiter.as_deref() {
                None => b',',
                Some("tab") | Some("\\t") => b'\t',
                Some(s) if s.len() == 1 && s.is_ascii() => s.as_bytes()[0],
                Some(other) => bail!("delimiter {other:?} must be a single ASCII character or \"tab\""),
            };
            io::load_binary_source(&args.input, source, &mapping, delimiter, args.permissive)?
        }
        other => bail!("unknown export format {other:?}"),
    };
    io::write_corpus_jsonl(&args.output, &corpus)?;
    log::info!("exported {} instance(s) to {}", corpus.len(), args.output.display());
    Ok(())
}
