//! `cswitch` — command-line pipeline for code-switched corpus enrichment:
//! ingest, statistics, gateway annotation, cross-tabulated reports and
//! review scoring.

mod commands;
mod config;

use anyhow::Result;
use clap::{Parser, Subcommand};
use config::{
    AggregationConfig, AnnotateConfig, AnnotateOverrides, FileConfig, GatewayMode, KindArg,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cswitch",
    version,
    about = "Code-switched corpus statistics, annotation and analysis"
)]
struct Cli {
    /// Flat key = value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate an interchange file; write the normalized corpus.
    Ingest {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep only sentences with two or more distinct core languages.
        #[arg(long)]
        filter_intrasentential: bool,
    },
    /// Report sentence/token counts, language proportions and switch density.
    Stats {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        input: PathBuf,
        /// Also write stats.txt and stats.csv under this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Annotate every sentence through the selected gateway.
    Annotate {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        mode: GatewayMode,
        /// Cassette file (required for record and replay modes).
        #[arg(long)]
        cassette: Option<PathBuf>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        temperature: Option<f64>,
        #[arg(long)]
        max_tokens: Option<u32>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        max_concurrency: Option<usize>,
        #[arg(long)]
        max_retries: Option<u32>,
        /// Chat-completions endpoint URL (overrides CSW_GATEWAY_URL).
        #[arg(long)]
        gateway_url: Option<String>,
    },
    /// Cross-tabulate records into tables and charts.
    Analyze {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep this many genre rows before folding the rest into Others.
        #[arg(long)]
        genre_top_n: Option<usize>,
        /// Fold topic rows with totals at or below this into Others.
        #[arg(long)]
        topic_min_total: Option<u64>,
    },
    /// Draw a seeded review sample and write the verdict sheet.
    ReviewSample {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a completed review sheet.
    ReviewScore {
        #[arg(long)]
        sheet: PathBuf,
    },
    /// Run stats and analyze end to end.
    Report {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        genre_top_n: Option<usize>,
        #[arg(long)]
        topic_min_total: Option<u64>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let file_config = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest {
            kind,
            input,
            out,
            filter_intrasentential,
        } => commands::cmd_ingest(kind.into(), &input, &out, filter_intrasentential),
        Command::Stats { kind, input, out } => {
            commands::cmd_stats(kind.into(), &input, out.as_deref())
        }
        Command::Annotate {
            kind,
            input,
            out,
            mode,
            cassette,
            model,
            temperature,
            max_tokens,
            batch_size,
            max_concurrency,
            max_retries,
            gateway_url,
        } => {
            let config = AnnotateConfig::resolve(
                AnnotateOverrides {
                    mode,
                    cassette,
                    model,
                    temperature,
                    max_tokens,
                    batch_size,
                    max_concurrency,
                    max_retries,
                    gateway_url,
                },
                &file_config,
            )?;
            commands::cmd_annotate(kind.into(), &input, &out, &config)
        }
        Command::Analyze {
            kind,
            corpus,
            records,
            out,
            genre_top_n,
            topic_min_total,
        } => {
            let aggregation =
                AggregationConfig::resolve(genre_top_n, topic_min_total, &file_config)?;
            commands::cmd_analyze(kind.into(), &corpus, &records, &out, &aggregation)
        }
        Command::ReviewSample {
            kind,
            corpus,
            records,
            n,
            seed,
            out,
        } => commands::cmd_review_sample(kind.into(), &corpus, &records, n, seed, &out),
        Command::ReviewScore { sheet } => commands::cmd_review_score(&sheet),
        Command::Report {
            kind,
            corpus,
            records,
            out,
            genre_top_n,
            topic_min_total,
        } => {
            let aggregation =
                AggregationConfig::resolve(genre_top_n, topic_min_total, &file_config)?;
            commands::cmd_report(kind.into(), &corpus, &records, &out, &aggregation)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}
