//! `xmi`: run the difficulty pipeline stage by stage or end to end.
//!
//! Exit status is 0 on success, 1 for invalid arguments, configuration or
//! input files, and 2 for any other failure.

mod args;

use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{ArgAction, Args, Parser, Subcommand};
use xmi_core::corpus::tokenize_13a;
use xmi_core::metrics::{reports_to_tsv, MetricReport};
use xmi_core::report::{run_pipeline, Pipeline, Stage};
use xmi_core::subword::{bpe_train, word_frequencies, BpeModel, DEFAULT_MERGES};

use args::RunArgs;

#[derive(Debug, Parser)]
#[command(
    name = "xmi",
    version,
    about = "Cross-mutual information and BLEU for comparing translation directions"
)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    /// Only print errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every stage in order.
    Run(RunArgs),
    /// Read, intersect on the pivot, split and length-filter the corpora.
    Prepare(RunArgs),
    /// Learn the joint BPE model of every pair, or learn/apply one directly.
    Bpe(BpeCommand),
    /// Score the test split with the built-in scorers, or check score files.
    Score(RunArgs),
    /// Cross-entropies, XMI and BLEU per direction.
    Metrics(RunArgs),
    /// Correlate XMI with corpus and typology features.
    Correlate(RunArgs),
    /// Percentile confidence intervals by resampling.
    Bootstrap(RunArgs),
    /// Write the figures.
    Report(RunArgs),
    /// Print the effective configuration as TOML.
    Config(RunArgs),
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true)]
struct BpeCommand {
    #[command(subcommand)]
    action: Option<BpeAction>,

    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Subcommand)]
enum BpeAction {
    /// Learn merges from tokenized text files.
    Learn {
        #[arg(long, default_value_t = DEFAULT_MERGES)]
        merges: usize,
        /// Where to write the model.
        #[arg(short, long)]
        output: PathBuf,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Segment text (one sentence per line) with a learned model.
    Apply {
        #[arg(short, long)]
        model: PathBuf,
        /// Input file; standard input when absent.
        input: Option<PathBuf>,
    },
}

fn print_reports(rows: &[MetricReport]) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(reports_to_tsv(rows, &[]).as_bytes())?;
    Ok(())
}

fn stage(args: &RunArgs, stage: Stage) -> anyhow::Result<()> {
    let p = Pipeline::new(args.to_config()?)?;
    if stage == Stage::Metrics {
        let rows = p.metrics().map_err(|e| e.in_stage(stage.name()))?;
        print_reports(&rows)?;
    } else {
        p.run_stage(stage)?;
    }
    log::info!("{} done, outputs under {}", stage.name(), p.output_dir().display());
    Ok(())
}

fn bpe_learn(merges: usize, output: &Path, inputs: &[PathBuf]) -> anyhow::Result<()> {
    let mut sentences = Vec::new();
    for path in inputs {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        sentences.extend(text.lines().map(tokenize_13a));
    }
    let model = bpe_train(&word_frequencies(sentences.iter().map(Vec::as_slice)), merges)?;
    model.save(output)?;
    log::info!("{} merges written to {}", model.merges().len(), output.display());
    Ok(())
}

fn bpe_apply(model: &Path, input: Option<&Path>) -> anyhow::Result<()> {
    let model = BpeModel::load(model)?;
    let reader: Box<dyn BufRead> = match input {
        Some(path) => Box::new(io::BufReader::new(
            fs::File::open(path).with_context(|| format!("opening {}", path.display()))?,
        )),
        None => Box::new(io::stdin().lock()),
    };
    let mut out = BufWriter::new(io::stdout().lock());
    for line in reader.lines() {
        let units = model.encode(&tokenize_13a(&line?));
        writeln!(out, "{}", units.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(args) => {
            let out = run_pipeline(args.to_config()?)?;
            print_reports(&out.reports)?;
        }
        Command::Prepare(args) => stage(&args, Stage::Prepare)?,
        Command::Bpe(BpeCommand { action: None, run }) => stage(&run, Stage::Bpe)?,
        Command::Bpe(BpeCommand {
            action: Some(BpeAction::Learn { merges, output, inputs }),
            ..
        }) => bpe_learn(merges, &output, &inputs)?,
        Command::Bpe(BpeCommand {
            action: Some(BpeAction::Apply { model, input }),
            ..
        }) => bpe_apply(&model, input.as_deref())?,
        Command::Score(args) => stage(&args, Stage::Score)?,
        Command::Metrics(args) => stage(&args, Stage::Metrics)?,
        Command::Correlate(args) => stage(&args, Stage::Correlate)?,
        Command::Bootstrap(args) => stage(&args, Stage::Bootstrap)?,
        Command::Report(args) => stage(&args, Stage::Report)?,
        Command::Config(args) => {
            let mut config = args.to_config()?;
            config.apply_env();
            print!("{}", config.to_toml()?);
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<xmi_core::Error>() {
        Some(e) if e.is_validation() => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "error",
        (_, 0) => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_target(false)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
