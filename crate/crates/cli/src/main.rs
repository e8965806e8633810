//! `manifest-ig`: extract manifest features from labeled APK corpora, rank
//! them by information gain and compare category means across corpora.

mod commands;
mod error;
mod scan;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use manifest_ig::{Category, Format};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "manifest-ig", version, about, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract permissions and intents from every file under both corpus
    /// directories into the feature cache. Files already cached (by sha256)
    /// are not extracted again.
    Extract(ExtractArgs),
    /// Sample, rank features by information gain, write the report and print
    /// the top-N table.
    Analyze(AnalyzeArgs),
    /// Render the category-mean grid for one or more reports.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Directory of malware samples; every file below it is labeled malware.
    #[arg(long)]
    pub malware_dir: Option<PathBuf>,
    /// Directory of benign samples; every file below it is labeled benign.
    #[arg(long)]
    pub benign_dir: Option<PathBuf>,
    /// Feature cache file (JSON lines).
    #[arg(long, env = "MANIFEST_IG_CACHE")]
    pub cache: Option<PathBuf>,
    /// Worker threads; 0 uses one per CPU.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSize {
    All,
    PerClass(usize),
}

fn parse_sample_size(s: &str) -> Result<SampleSize, String> {
    if s == "all" {
        return Ok(SampleSize::All);
    }
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(SampleSize::PerClass(n)),
        Err(_) => Err(format!("expected a positive integer or `all`, got `{s}`")),
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CategoryArg {
    Permissions,
    Intents,
}

impl From<CategoryArg> for Category {
    fn from(c: CategoryArg) -> Self {
        match c {
            CategoryArg::Permissions => Category::Permission,
            CategoryArg::Intents => Category::Intent,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Plain,
    Markdown,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Plain => Format::Plain,
            FormatArg::Markdown => Format::Markdown,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Samples drawn per class, or `all` to use both pools whole.
    #[arg(long, default_value = "all", value_parser = parse_sample_size)]
    pub n_per_class: SampleSize,
    /// Seed for the per-class sample draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rows in the printed table.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub top: u64,
    #[arg(long, value_enum, default_value = "plain")]
    pub format: FormatArg,
    /// Drop features declared by fewer than this many sampled apps.
    #[arg(long, default_value_t = 0)]
    pub min_support: usize,
    /// Rank only this feature category.
    #[arg(long, value_enum)]
    pub category: Option<CategoryArg>,
    /// Prefix feature names with `permission:` / `intent:` instead of
    /// rejecting a name that occurs in both categories.
    #[arg(long)]
    pub namespace_categories: bool,
    /// Write the full report (JSON) here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Corpus name recorded in the report.
    #[arg(long, default_value = "corpus")]
    pub name: String,
    /// Free-form collection date range recorded in the report.
    #[arg(long, default_value = "")]
    pub date_range: String,
    /// Use only records already in the cache, with their stored labels;
    /// no directories are scanned.
    #[arg(long)]
    pub features_from_cache_only: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Report files, one grid row each, in the given order.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "plain")]
    pub format: FormatArg,
    /// Also write a gnuplot data file of the grid here.
    #[arg(long)]
    pub gnuplot: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Extract(args) => commands::extract(&args),
        Command::Analyze(args) => commands::analyze(&args),
        Command::Compare(args) => commands::compare(&args),
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(hint) = e.hint() {
                eprintln!("hint: {hint}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
