mod commands;
mod config;
mod workspace;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use featforge::context::Level;
use featforge::dataset::TableFormat;
use featforge::learn::ClassifierKind;
use featforge::metrics::MetricSet;

/// Feature-oriented defect prediction for preprocessor-based C projects.
#[derive(Debug, Parser)]
#[command(name = "featforge", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Project configuration (JSON).
    #[arg(short = 'c', long = "config", global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Cache directory; overrides the config.
    #[arg(long, env = "FEATFORGE_CACHE", global = true)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LevelArg {
    Release,
    Commit,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Level {
        match l {
            LevelArg::Release => Level::Release,
            LevelArg::Commit => Level::Commit,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Arff,
}

impl From<FormatArg> for TableFormat {
    fn from(f: FormatArg) -> TableFormat {
        match f {
            FormatArg::Csv => TableFormat::Csv,
            FormatArg::Arff => TableFormat::Arff,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioName {
    Rq1,
    Rq2,
    Rq3,
    Rq4,
    Rq5,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_parser = parse_classifier)]
    pub classifier: Option<ClassifierKind>,
    /// Hyperparameter assignment such as `forest.trees=50`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub settings: Vec<String>,
}

fn parse_classifier(s: &str) -> Result<ClassifierKind, String> {
    s.parse()
}

fn parse_metric_set(s: &str) -> Result<MetricSet, String> {
    s.parse()
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine commits and releases into the cache.
    Mine {
        /// Restrict to these projects.
        #[arg(long = "project")]
        projects: Vec<String>,
    },
    /// Find corrective commits and trace them to bug-introducing commits.
    Label {
        #[arg(long = "project")]
        projects: Vec<String>,
    },
    /// Assemble a labelled dataset and export it.
    Dataset {
        #[arg(long, value_enum, default_value = "release")]
        level: LevelArg,
        #[arg(long = "metric-set", value_parser = parse_metric_set, default_value = "procstructmet")]
        metric_set: MetricSet,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Also write chronological train and test splits.
        #[arg(long)]
        split: bool,
        /// Balance the training split with SMOTE (implies --split).
        #[arg(long)]
        smote: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Train a classifier on an exported table and save the model.
    Train {
        /// CSV or ARFF table.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Evaluate a saved model on an exported table.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Directory for report.json and roc.csv.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run one of the experiment scenarios.
    Scenario {
        #[arg(value_enum)]
        name: ScenarioName,
        #[arg(long, value_enum)]
        level: Option<LevelArg>,
        /// Feature metric set for rq3 to rq5.
        #[arg(long = "metric-set", value_parser = parse_metric_set)]
        metric_set: Option<MetricSet>,
        #[command(flatten)]
        model: ModelArgs,
        /// Output directory; defaults to ./out/<scenario>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print scenario summaries as aligned tables.
    Report {
        /// Scenario output directories or summary.csv files.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // usage errors exit 2, help and version 0
        Err(e) => e.exit(),
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
