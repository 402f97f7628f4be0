//! Command-line front end for the workbench.
//!
//! Every flag has a default. A TOML file given with `--config` supplies
//! per-subcommand tables (`[simulate]`, `[train]`, ...) whose keys are the
//! long flag names; flags given on the command line win over the file.

pub mod commands;
pub mod manifest;

use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dipt_core::sim::batch::BatchSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("no input: {0}")]
    EmptyInput(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config file: {0}")]
    Config(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            CliError::FileNotFound(path.to_path_buf())
        } else {
            CliError::Io { path: path.to_path_buf(), source }
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dipt", version, about = "Simulate UAV search missions, infer behavior states and score perception")]
pub struct Cli {
    /// TOML file with one table per subcommand; keys are the long flag names.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a batch of runs and write a manifest.
    Simulate(SimulateArgs),
    /// Align, featurize and label the runs of a manifest into a dataset file.
    Prepare(PrepareArgs),
    /// Train a state population or a search-end classifier.
    Train(TrainArgs),
    /// Write inferred state timelines for every run of a manifest.
    Infer(InferArgs),
    /// Score inferences and perception estimates against truth.
    Evaluate(EvaluateArgs),
    /// Serve stored runs over HTTP and WebSocket.
    Serve(ServeArgs),
    /// Print a summary of an evaluation report.
    Report(ReportArgs),
    /// Write the default fuzzy system, optionally aggregated from expert tables.
    Fls(FlsArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct PrepFlags {
    /// Merge tick rate in Hz [default: 0.5].
    #[arg(long)]
    pub tick_hz: Option<f64>,
    /// Frames in the derivative window [default: 3].
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// Number of runs [default: 10].
    #[arg(long)]
    pub count: Option<u64>,
    /// First seed; run k uses seed + k [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: runs].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scenario ranges; config file only (`[simulate.batch]`).
    #[arg(skip)]
    pub batch: Option<BatchSpec>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct PrepareArgs {
    /// Run manifest [default: runs/manifest.json].
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// `state` or `search-end` [default: state].
    #[arg(long)]
    pub task: Option<String>,
    /// Dataset file [default: dataset.jsonl].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated feature names [default: all].
    #[arg(long)]
    pub features: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub prep: PrepFlags,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct TrainArgs {
    /// Run manifest [default: runs/manifest.json].
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// `state` or `search-end` [default: state].
    #[arg(long)]
    pub task: Option<String>,
    /// Model file [default: model.jsonl, or search_end.json for search-end].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Training report [default: <out>.report.json].
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// LCS parameter preset: default, osprey or desk [default: desk].
    #[arg(long)]
    pub preset: Option<String>,
    /// Training and split seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the preset's iteration count.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Overrides the preset's population bound.
    #[arg(long)]
    pub population_size: Option<usize>,
    /// Overrides the preset's training-instance count.
    #[arg(long)]
    pub train_size: Option<usize>,
    /// Shards for two-layer training; above 1 implies CRA2 [default: 1].
    #[arg(long)]
    pub shards: Option<usize>,
    /// Post-training compaction: none, cra2 or pdrc [default: none].
    #[arg(long)]
    pub compaction: Option<String>,
    /// PDRC minimum experience [default: 10].
    #[arg(long)]
    pub pdrc_min_experience: Option<u64>,
    /// PDRC minimum accuracy [default: 0.8].
    #[arg(long)]
    pub pdrc_min_accuracy: Option<f64>,
    /// PDRC minimum numerosity [default: 1].
    #[arg(long)]
    pub pdrc_min_numerosity: Option<u32>,
    /// Fraction of runs held out [default: 0.2].
    #[arg(long)]
    pub holdout: Option<f64>,
    /// Comma-separated feature names [default: all].
    #[arg(long)]
    pub features: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub prep: PrepFlags,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct InferArgs {
    /// Run manifest [default: runs/manifest.json].
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Population file [default: model.jsonl].
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Search-end classifier file [default: none].
    #[arg(long)]
    pub search_end: Option<PathBuf>,
    /// Output directory, one `<run_id>.timeline.json` per run [default: inferred].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub prep: PrepFlags,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct FlsFlags {
    /// Fuzzy system file [default: built-in rulebase].
    #[arg(long)]
    pub fls: Option<PathBuf>,
    /// Expert rule-table CSV aggregated onto the system [default: none].
    #[arg(long)]
    pub experts: Option<PathBuf>,
    /// FOU widening per unit disagreement [default: 0.5].
    #[arg(long)]
    pub widening: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct EvaluateArgs {
    /// Run manifest [default: runs/manifest.json].
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Population file [default: model.jsonl].
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Search-end classifier file [default: none].
    #[arg(long)]
    pub search_end: Option<PathBuf>,
    /// Minimum aggregate state accuracy; below it the exit code is 2 [default: 0].
    #[arg(long)]
    pub floor: Option<f64>,
    /// Evaluation report [default: evaluation.json].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub fls: FlsFlags,
    #[command(flatten)]
    #[serde(flatten)]
    pub prep: PrepFlags,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ServeArgs {
    /// Directory of run logs [default: runs].
    #[arg(long, env = dipt_server::DATA_DIR_ENV)]
    pub data_dir: Option<PathBuf>,
    /// Listen address [default: 127.0.0.1:8080].
    #[arg(long, env = dipt_server::LISTEN_ENV)]
    pub listen: Option<String>,
    /// Population file for inferred-state overlays [default: none].
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Search-end classifier file [default: none].
    #[arg(long)]
    pub search_end: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub fls: FlsFlags,
    #[command(flatten)]
    #[serde(flatten)]
    pub prep: PrepFlags,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ReportArgs {
    /// Evaluation report [default: evaluation.json].
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Print the report as pretty JSON instead of a summary [default: false].
    #[arg(long, num_args = 0, default_missing_value = "true")]
    pub json: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct FlsArgs {
    /// System file to write [default: fls_system.json].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Expert rule-table CSV to aggregate [default: none].
    #[arg(long)]
    pub experts: Option<PathBuf>,
    /// FOU widening per unit disagreement [default: 0.5].
    #[arg(long)]
    pub widening: Option<f64>,
    /// Also write an expert-table template holding the base rulebase [default: none].
    #[arg(long)]
    pub template: Option<PathBuf>,
}

/// Overlays `flags` on the config-file table: keys present on the command
/// line replace the file's values.
pub fn layered<T: Serialize + DeserializeOwned>(flags: &T, table: Option<&toml::Value>) -> Result<T, CliError> {
    let mut merged = match table {
        Some(t) => serde_json::to_value(t).map_err(|e| CliError::Config(e.to_string()))?,
        None => serde_json::Value::Object(Default::default()),
    };
    let overlay = serde_json::to_value(flags).expect("flags serialize");
    merge_non_null(&mut merged, overlay);
    serde_json::from_value(merged).map_err(|e| CliError::Config(e.to_string()))
}

fn merge_non_null(base: &mut serde_json::Value, top: serde_json::Value) {
    match (base, top) {
        (serde_json::Value::Object(b), serde_json::Value::Object(t)) => {
            for (k, v) in t {
                if v.is_null() {
                    continue;
                }
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge_non_null(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) if !t.is_null() => *b = t,
        _ => {}
    }
}

pub fn read_config(path: &Path) -> Result<toml::Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.parse::<toml::Table>().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Runs a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> anyhow::Result<u8> {
    let config = cli.config.as_deref().map(read_config).transpose()?.unwrap_or_default();
    let section = |name: &str| config.get(name);
    match cli.command {
        Command::Simulate(a) => commands::simulate(&layered(&a, section("simulate"))?).map(|_| 0),
        Command::Prepare(a) => commands::prepare(&layered(&a, section("prepare"))?).map(|_| 0),
        Command::Train(a) => commands::train(&layered(&a, section("train"))?).map(|_| 0),
        Command::Infer(a) => commands::infer(&layered(&a, section("infer"))?).map(|_| 0),
        Command::Evaluate(a) => {
            let report = commands::evaluate(&layered(&a, section("evaluate"))?)?;
            Ok(if report.passed { 0 } else { 2 })
        }
        Command::Serve(a) => commands::serve(&layered(&a, section("serve"))?).map(|_| 0),
        Command::Report(a) => commands::report(&layered(&a, section("report"))?).map(|_| 0),
        Command::Fls(a) => commands::fls(&layered(&a, section("fls"))?).map(|_| 0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let table: toml::Table = "count = 5\nseed = 9\n[batch]\nabort_prob = 0.5".parse().unwrap();
        let table = toml::Value::Table(table);
        let flags = SimulateArgs { count: Some(3), ..Default::default() };
        let got = layered(&flags, Some(&table)).unwrap();
        assert_eq!(got.count, Some(3));
        assert_eq!(got.seed, Some(9));
        assert_eq!(got.batch.unwrap().abort_prob, 0.5);
    }

    #[test]
    fn batch_table_uses_field_names() {
        let table: toml::Table = "[batch]\nabort_prob = 0.5\nuav_count = [2, 2]".parse().unwrap();
        let got = layered(&SimulateArgs::default(), Some(&toml::Value::Table(table))).unwrap();
        let b = got.batch.unwrap();
        assert_eq!(b.abort_prob, 0.5);
        assert_eq!(b.uav_count, (2, 2));
    }

    #[test]
    fn flattened_prep_keys() {
        let table: toml::Table = "tick-hz = 1.0\nwindow = 4".parse().unwrap();
        let got = layered(&InferArgs::default(), Some(&toml::Value::Table(table))).unwrap();
        assert_eq!(got.prep.tick_hz, Some(1.0));
        assert_eq!(got.prep.window, Some(4));
    }

    #[test]
    fn unknown_types_are_config_errors() {
        let table: toml::Table = "count = \"many\"".parse().unwrap();
        let err = layered(&SimulateArgs::default(), Some(&toml::Value::Table(table))).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let cli = Cli::parse_from(["dipt", "report", "--json"]);
        match cli.command {
            Command::Report(a) => assert_eq!(a.json, Some(true)),
            _ => unreachable!(),
        }
    }
}
