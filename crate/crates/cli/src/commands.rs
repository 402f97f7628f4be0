use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::Context;
use dipt_core::compare::{
    compare_states, fls_report, fls_run, truth_timelines, FlsRun, PerceptionScoreReport, StateAccuracyReport,
};
use dipt_core::fls::{
    aggregate_experts, build_default_system, read_expert_tables, read_system, write_expert_tables, write_system,
    ExpertRuleTable, FlsSystem, DEFAULT_WIDENING,
};
use dipt_core::lcs::{
    compact_cra2, compact_pdrc, infer_state_timeline, read_population, search_end_examples, train as lcs_train, train_two_layer,
    write_population, AccuracyPoint, LcsParams, PdrcThresholds, Population, SearchEndClassifier, SearchEndExample,
    StateTimeline, TimelineContext, TrainReport,
};
use dipt_core::pipeline::{
    accuracy, fit_stats, prepare_corpus, prepare_run, split_by_run, state_training_set, PrepConfig, PreparedRun,
};
use dipt_core::prep::{apply_normalization, write_dataset, DatasetHeader, DatasetRecord, FeatureSet};
use dipt_core::replay::{ReplayModels, ReplayStore};
use dipt_core::{check_format_version, FORMAT_VERSION};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use crate::manifest::{load_runs, run_file_name, LoadedRun, Manifest, ManifestEntry, MANIFEST_FILE};
use crate::{
    CliError, EvaluateArgs, FlsArgs, FlsFlags, InferArgs, PrepFlags, PrepareArgs, ReportArgs, ServeArgs, SimulateArgs,
    TrainArgs,
};

const DEFAULT_MANIFEST: &str = "runs/manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    State,
    SearchEnd,
}

impl Task {
    fn parse(s: Option<&str>) -> Result<Self, CliError> {
        match s.unwrap_or("state") {
            "state" => Ok(Task::State),
            "search-end" => Ok(Task::SearchEnd),
            other => Err(CliError::InvalidArgument(format!("task must be state or search-end, got {other:?}"))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Task::State => "state",
            Task::SearchEnd => "search-end",
        }
    }
}

fn manifest_path(p: &Option<PathBuf>) -> PathBuf {
    p.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_MANIFEST))
}

fn prep_config(flags: &PrepFlags, features: Option<&str>) -> Result<PrepConfig, CliError> {
    let mut prep = PrepConfig::default();
    if let Some(t) = flags.tick_hz {
        prep.tick_hz = t;
    }
    if let Some(w) = flags.window {
        prep.window = w;
    }
    if let Some(list) = features {
        let names: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        prep.features = FeatureSet::from_names(&names).map_err(|e| CliError::InvalidArgument(e.to_string()))?;
    }
    Ok(prep)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

fn require_runs(path: &Path) -> Result<(Manifest, Vec<LoadedRun>), CliError> {
    let (m, runs) = load_runs(path)?;
    if runs.is_empty() {
        return Err(CliError::EmptyInput(format!("{} lists no runs", path.display())));
    }
    Ok((m, runs))
}

pub fn simulate(a: &SimulateArgs) -> anyhow::Result<Manifest> {
    let count = a.count.unwrap_or(10);
    let seed = a.seed.unwrap_or(0);
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("runs"));
    let batch = a.batch.clone().unwrap_or_default();
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;

    let entries = (seed..seed + count)
        .into_par_iter()
        .map(|s| -> anyhow::Result<ManifestEntry> {
            let log = dipt_core::simulate(&batch.scenario(s)).with_context(|| format!("seed {s}"))?;
            let bytes = log.to_jsonl();
            let file = run_file_name(s);
            let path = out.join(&file);
            fs::write(&path, &bytes).map_err(|e| CliError::io(&path, e))?;
            Ok(ManifestEntry { run_id: dipt_core::pipeline::run_id_of_bytes(&bytes), file, seed: s })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let mut manifest = Manifest::new(seed, batch);
    manifest.count = count;
    manifest.runs = entries;
    manifest.write(&out.join(MANIFEST_FILE))?;
    println!("simulated {count} runs (seed {seed}) into {}", out.display());
    Ok(manifest)
}

pub fn prepare(a: &PrepareArgs) -> anyhow::Result<usize> {
    let task = Task::parse(a.task.as_deref())?;
    let prep = prep_config(&a.prep, a.features.as_deref())?;
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("dataset.jsonl"));
    let (_, runs) = require_runs(&manifest_path(&a.manifest))?;
    let (header, records) = match task {
        Task::State => {
            let prepared = prepare_corpus(runs.into_iter().map(|r| r.log).collect(), &prep)?;
            let records = prepared
                .iter()
                .flat_map(|r| {
                    r.samples.iter().map(|s| DatasetRecord {
                        features: s.features.0.clone(),
                        label: s.truth_state.name().to_string(),
                        run_id: Some(r.run_id.clone()),
                        time: s.time,
                        uav_id: s.uav_id,
                    })
                })
                .collect::<Vec<_>>();
            (DatasetHeader::new(prep.features.names(), task.name()), records)
        }
        Task::SearchEnd => {
            let records = runs
                .iter()
                .flat_map(|r| {
                    search_end_examples(&r.log).into_iter().map(|e| DatasetRecord {
                        features: e.features.as_array().to_vec(),
                        label: e.label.trigger().name().to_string(),
                        run_id: Some(r.run_id.clone()),
                        time: 0.0,
                        uav_id: 0,
                    })
                })
                .collect::<Vec<_>>();
            let names = ["time_ratio", "pass_fraction", "heading_alignment"];
            (DatasetHeader::new(names.iter().map(|s| s.to_string()).collect(), task.name()), records)
        }
    };
    write_dataset(&out, &header, &records)?;
    println!("wrote {} {} records to {}", records.len(), task.name(), out.display());
    Ok(records.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub format_version: String,
    pub seed: u64,
    pub task: Task,
    pub train_runs: Vec<String>,
    pub holdout_runs: Vec<String>,
    pub train_instances: usize,
    pub holdout_instances: usize,
    /// Absent when the holdout is empty.
    pub holdout_accuracy: Option<f64>,
    pub majority_baseline: Option<f64>,
    pub training_accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<LcsParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shards: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compaction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub macro_size_before_compaction: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub macro_size: Option<usize>,
    /// Held-in training curve; single-shard training only.
    #[serde(default)]
    pub curve: Vec<AccuracyPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lcs: Option<TrainReport>,
}

fn lcs_params(a: &TrainArgs) -> Result<LcsParams, CliError> {
    let name = a.preset.as_deref().unwrap_or("desk");
    let mut p = LcsParams::preset(name).ok_or_else(|| CliError::InvalidArgument(format!("unknown preset {name:?}")))?;
    p.seed = a.seed.unwrap_or(0);
    if let Some(v) = a.iterations {
        p.iterations = v;
    }
    if let Some(v) = a.population_size {
        p.population_size = v;
    }
    if let Some(v) = a.train_size {
        p.train_size = v;
    }
    p.validate().map_err(|e| CliError::InvalidArgument(e.to_string()))?;
    Ok(p)
}

fn default_report_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".report.json");
    PathBuf::from(s)
}

fn train_outputs(a: &TrainArgs) -> Result<(Task, PathBuf, PathBuf), CliError> {
    let task = Task::parse(a.task.as_deref())?;
    let out = a.out.clone().unwrap_or_else(|| {
        PathBuf::from(match task {
            Task::State => "model.jsonl",
            Task::SearchEnd => "search_end.json",
        })
    });
    let report = a.report.clone().unwrap_or_else(|| default_report_path(&out));
    Ok((task, out, report))
}

pub fn train(a: &TrainArgs) -> anyhow::Result<TrainSummary> {
    let (task, out, report_path) = train_outputs(a)?;
    let seed = a.seed.unwrap_or(0);
    let holdout = a.holdout.unwrap_or(0.2);
    if !(0.0..1.0).contains(&holdout) {
        return Err(CliError::InvalidArgument(format!("holdout must be in [0, 1), got {holdout}")).into());
    }
    let (_, runs) = require_runs(&manifest_path(&a.manifest))?;
    let (train_idx, hold_idx) = split_by_run(runs.len(), holdout, seed);
    if hold_idx.is_empty() {
        warn!("holdout is empty ({} run(s)); no held-out accuracy", runs.len());
        eprintln!("warning: train/holdout split left the holdout empty; held-out accuracy is not reported");
    }
    let ids = |idx: &[usize]| idx.iter().map(|&i| runs[i].run_id.clone()).collect::<Vec<_>>();
    let (train_runs, holdout_runs) = (ids(&train_idx), ids(&hold_idx));

    let summary = match task {
        Task::State => {
            let prep = prep_config(&a.prep, a.features.as_deref())?;
            let params = lcs_params(a)?;
            let prepared = prepare_corpus(runs.into_iter().map(|r| r.log).collect(), &prep)?;
            let pick = |idx: &[usize]| idx.iter().map(|&i| &prepared[i]).collect::<Vec<&PreparedRun>>();
            let (tr, ho) = (pick(&train_idx), pick(&hold_idx));
            let stats = fit_stats(tr.iter().copied())?;
            let train_set = state_training_set(tr.iter().copied(), &stats)?;
            let hold_set = state_training_set(ho.iter().copied(), &stats)?;

            let shards = a.shards.unwrap_or(1).max(1);
            let (mut pop, lcs_report) = if shards > 1 {
                (train_two_layer(&train_set, shards, &params)?, None)
            } else {
                let (p, r) = lcs_train(&train_set, &params)?;
                (p, Some(r))
            };
            let before = pop.macro_size();
            let compaction = a.compaction.clone().unwrap_or_else(|| "none".into());
            pop = match compaction.as_str() {
                "none" => pop,
                "cra2" => compact_cra2(&pop, &train_set)?,
                "pdrc" => {
                    let th = PdrcThresholds {
                        min_experience: a.pdrc_min_experience.unwrap_or(10),
                        min_accuracy: a.pdrc_min_accuracy.unwrap_or(0.8),
                        min_numerosity: a.pdrc_min_numerosity.unwrap_or(1),
                    };
                    compact_pdrc(&pop, &th)?
                }
                other => return Err(CliError::InvalidArgument(format!("compaction must be none, cra2 or pdrc, got {other:?}")).into()),
            };
            pop.feature_names = prep.features.names();
            pop.normalization = Some(stats);
            let training_accuracy = accuracy(&pop, &train_set)?;
            let holdout_accuracy = if hold_set.is_empty() { None } else { Some(accuracy(&pop, &hold_set)?) };
            let majority_baseline = (!hold_set.is_empty()).then(|| hold_set.majority_fraction());
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            write_population(&out, &pop, Some(&params))?;
            TrainSummary {
                format_version: FORMAT_VERSION.to_string(),
                seed,
                task,
                train_runs,
                holdout_runs,
                train_instances: train_set.len(),
                holdout_instances: hold_set.len(),
                holdout_accuracy,
                majority_baseline,
                training_accuracy,
                params: Some(params),
                shards: Some(shards),
                compaction: Some(compaction),
                macro_size_before_compaction: Some(before),
                macro_size: Some(pop.macro_size()),
                curve: lcs_report.as_ref().map(|r| r.curve.clone()).unwrap_or_default(),
                lcs: lcs_report,
            }
        }
        Task::SearchEnd => {
            let examples = |idx: &[usize]| idx.iter().flat_map(|&i| search_end_examples(&runs[i].log)).collect::<Vec<SearchEndExample>>();
            let (tr, ho) = (examples(&train_idx), examples(&hold_idx));
            let clf = SearchEndClassifier::fit(&tr)?;
            write_json(&out, &clf)?;
            let majority = |ex: &[SearchEndExample]| {
                let complete = ex.iter().filter(|e| e.label == ex[0].label).count() as f64 / ex.len() as f64;
                complete.max(1.0 - complete)
            };
            TrainSummary {
                format_version: FORMAT_VERSION.to_string(),
                seed,
                task,
                train_runs,
                holdout_runs,
                train_instances: tr.len(),
                holdout_instances: ho.len(),
                holdout_accuracy: (!ho.is_empty()).then(|| clf.accuracy(&ho)),
                majority_baseline: (!ho.is_empty()).then(|| majority(&ho)),
                training_accuracy: clf.accuracy(&tr),
                params: None,
                shards: None,
                compaction: None,
                macro_size_before_compaction: None,
                macro_size: None,
                curve: Vec::new(),
                lcs: None,
            }
        }
    };
    write_json(&report_path, &summary)?;
    match summary.holdout_accuracy {
        Some(acc) => println!(
            "held-out accuracy: {acc:.4} ({} holdout runs, {} instances); model {}",
            summary.holdout_runs.len(),
            summary.holdout_instances,
            out.display()
        ),
        None => println!("held-out accuracy: n/a (empty holdout); model {}", out.display()),
    }
    Ok(summary)
}

fn load_population(path: &Path) -> Result<Population, CliError> {
    if !path.exists() {
        return Err(CliError::FileNotFound(path.to_path_buf()));
    }
    let (pop, _) = read_population(path).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    if pop.feature_names.is_empty() {
        return Err(CliError::Schema(format!("{}: population carries no feature names", path.display())));
    }
    Ok(pop)
}

fn load_search_end(path: Option<&Path>) -> Result<Option<SearchEndClassifier>, CliError> {
    let Some(path) = path else { return Ok(None) };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let clf: SearchEndClassifier =
        serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    check_format_version(&clf.format_version).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    Ok(Some(clf))
}

pub fn load_fls(flags: &FlsFlags) -> Result<FlsSystem, CliError> {
    let base = match &flags.fls {
        Some(p) if !p.exists() => return Err(CliError::FileNotFound(p.clone())),
        Some(p) => read_system(p).map_err(|e| CliError::Schema(format!("{}: {e}", p.display())))?,
        None => build_default_system(),
    };
    match &flags.experts {
        None => Ok(base),
        Some(p) if !p.exists() => Err(CliError::FileNotFound(p.clone())),
        Some(p) => {
            let tables = read_expert_tables(p, &base).map_err(|e| CliError::Schema(format!("{}: {e}", p.display())))?;
            aggregate_experts(&tables, &base, flags.widening.unwrap_or(DEFAULT_WIDENING))
                .map_err(|e| CliError::Schema(format!("{}: {e}", p.display())))
        }
    }
}

/// Population-derived prep settings: the model's features with the
/// caller's tick rate and window.
fn model_prep(flags: &PrepFlags, pop: &Population) -> Result<PrepConfig, CliError> {
    let mut prep = prep_config(flags, None)?;
    prep.features = FeatureSet::from_names(&pop.feature_names).map_err(|e| CliError::Schema(e.to_string()))?;
    Ok(prep)
}

fn infer_run(
    run: &LoadedRun,
    pop: &Population,
    search_end: Option<&SearchEndClassifier>,
    prep: &PrepConfig,
) -> anyhow::Result<(PreparedRun, Vec<StateTimeline>)> {
    let prepared = prepare_run(run.log.clone(), prep).with_context(|| format!("run {}", run.run_id))?;
    if let Some(stats) = &pop.normalization {
        if let Some(s) = prepared.samples.first() {
            apply_normalization(&s.features, stats).with_context(|| format!("run {}", run.run_id))?;
        }
    }
    let ctx = TimelineContext { config: &run.log.config, search_end };
    let timelines = infer_state_timeline(pop, &prepared.samples, ctx).with_context(|| format!("run {}", run.run_id))?;
    Ok((prepared, timelines))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTimelines {
    pub format_version: String,
    pub run_id: String,
    pub seed: u64,
    pub timelines: Vec<StateTimeline>,
}

pub fn infer(a: &InferArgs) -> anyhow::Result<Vec<PathBuf>> {
    let pop = load_population(a.model.as_deref().unwrap_or(Path::new("model.jsonl")))?;
    let search_end = load_search_end(a.search_end.as_deref())?;
    let prep = model_prep(&a.prep, &pop)?;
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("inferred"));
    let (_, runs) = require_runs(&manifest_path(&a.manifest))?;
    let written = runs
        .par_iter()
        .map(|r| -> anyhow::Result<PathBuf> {
            let (_, timelines) = infer_run(r, &pop, search_end.as_ref(), &prep)?;
            let doc = RunTimelines { format_version: FORMAT_VERSION.to_string(), run_id: r.run_id.clone(), seed: r.seed, timelines };
            let path = out.join(format!("{}.timeline.json", r.run_id));
            write_json(&path, &doc)?;
            Ok(path)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    println!("wrote {} timelines to {}", written.len(), out.display());
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEvaluation {
    pub run_id: String,
    pub seed: u64,
    pub state: StateAccuracyReport,
    pub perception: FlsRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format_version: String,
    /// Seed of the evaluated manifest.
    pub seed: u64,
    pub floor: f64,
    pub passed: bool,
    pub aggregate: StateAccuracyReport,
    pub perception: PerceptionScoreReport,
    pub runs: Vec<RunEvaluation>,
}

pub fn evaluate(a: &EvaluateArgs) -> anyhow::Result<EvaluationReport> {
    let floor = a.floor.unwrap_or(0.0);
    let (manifest, runs) = require_runs(&manifest_path(&a.manifest))?;
    let pop = load_population(a.model.as_deref().unwrap_or(Path::new("model.jsonl")))?;
    let search_end = load_search_end(a.search_end.as_deref())?;
    let fls = load_fls(&a.fls)?;
    let prep = model_prep(&a.prep, &pop)?;

    let per_run = runs
        .par_iter()
        .map(|r| -> anyhow::Result<RunEvaluation> {
            let (prepared, timelines) = infer_run(r, &pop, search_end.as_ref(), &prep)?;
            let per_uav = timelines
                .iter()
                .zip(truth_timelines(&prepared.samples))
                .map(|(inf, truth)| compare_states(inf, &truth))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(RunEvaluation {
                run_id: r.run_id.clone(),
                seed: r.seed,
                state: StateAccuracyReport::combine(&per_uav),
                perception: fls_run(&r.run_id, &r.log, &fls)?,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let aggregate = StateAccuracyReport::combine(per_run.iter().map(|r| &r.state));
    let fls_runs: Vec<FlsRun> = per_run.iter().map(|r| r.perception.clone()).collect();
    let perception = fls_report(&fls_runs)?;
    let report = EvaluationReport {
        format_version: FORMAT_VERSION.to_string(),
        seed: manifest.seed,
        floor,
        passed: aggregate.accuracy >= floor,
        aggregate,
        perception,
        runs: per_run,
    };
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("evaluation.json"));
    write_json(&out, &report)?;
    println!(
        "aggregate state accuracy {:.4} over {} runs (floor {floor}): {}",
        report.aggregate.accuracy,
        report.runs.len(),
        if report.passed { "pass" } else { "FAIL" }
    );
    info!(path = %out.display(), "evaluation written");
    Ok(report)
}

pub fn serve(a: &ServeArgs) -> anyhow::Result<()> {
    let data_dir = a.data_dir.clone().unwrap_or_else(|| PathBuf::from("runs"));
    let listen = a.listen.clone().unwrap_or_else(|| dipt_server::DEFAULT_LISTEN.to_string());
    let addr: SocketAddr = listen.parse().map_err(|e| CliError::InvalidArgument(format!("listen address {listen:?}: {e}")))?;
    let population = a.model.as_deref().map(load_population).transpose()?;
    let mut prep = prep_config(&a.prep, None)?;
    if let Some(p) = &population {
        prep = model_prep(&a.prep, p)?;
    }
    let models = ReplayModels { prep, population, search_end: load_search_end(a.search_end.as_deref())?, fls: load_fls(&a.fls)? };
    let store = ReplayStore::open(&data_dir, &models)?;
    for w in store.warnings() {
        eprintln!("warning: {w}");
    }
    println!("serving {} runs from {} on http://{addr}", store.list_runs().len(), data_dir.display());
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(dipt_server::serve(store, addr))?;
    Ok(())
}

pub fn read_evaluation(path: &Path) -> Result<EvaluationReport, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let report: EvaluationReport =
        serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    check_format_version(&report.format_version).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    Ok(report)
}

/// Human-readable summary of an evaluation report.
pub fn render_summary(r: &EvaluationReport) -> String {
    use dipt_core::BehaviorState;
    use std::fmt::Write;
    let mut s = String::new();
    let a = &r.aggregate;
    let _ = writeln!(s, "runs: {}  seed: {}  floor: {}  {}", r.runs.len(), r.seed, r.floor, if r.passed { "PASS" } else { "FAIL" });
    let _ = writeln!(s, "state accuracy: {:.4} ({}/{} frames)", a.accuracy, a.correct_frames, a.frames);
    let _ = writeln!(s, "confusion (rows truth, columns inferred):");
    let names: Vec<&str> = BehaviorState::ALL.iter().map(|st| st.name()).collect();
    let w = names.iter().map(|n| n.len()).max().unwrap_or(0);
    let _ = writeln!(s, "  {:w$} {}", "", names.iter().map(|n| format!("{n:>w$}")).collect::<Vec<_>>().join(" "));
    for (i, row) in a.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>w$}")).collect();
        let _ = writeln!(s, "  {:w$} {}", names[i], cells.join(" "));
    }
    let pct = |t: &dipt_core::compare::Tally| t.accuracy().map_or("n/a".to_string(), |x| format!("{x:.3}"));
    let _ = writeln!(s, "trigger accuracy: {} ({}/{})", pct(&a.triggers), a.triggers.correct, a.triggers.total);
    for (name, t) in &a.per_trigger {
        let _ = writeln!(s, "  {name}: {} ({}/{})", pct(t), t.correct, t.total);
    }
    let _ = writeln!(s, "illegal jumps: {}", a.illegal_jumps.len());
    let p = &r.perception;
    let mean = |m: Option<f64>| m.map_or("n/a".to_string(), |x| format!("{x:.3}"));
    let _ = writeln!(
        s,
        "perception: detected {} (mean score {}), undetected {} (mean score {})",
        p.detected_count,
        mean(p.detected_mean),
        p.undetected_count,
        mean(p.undetected_mean)
    );
    if !p.failures.is_empty() {
        let _ = writeln!(s, "failures (undetected, ascending score):");
        for f in p.failures.iter().take(10) {
            let _ = writeln!(s, "  {}", serde_json::to_string(f).expect("digest serializes"));
        }
    }
    s
}

pub fn report(a: &ReportArgs) -> anyhow::Result<()> {
    let path = a.input.clone().unwrap_or_else(|| PathBuf::from("evaluation.json"));
    let r = read_evaluation(&path)?;
    if a.json.unwrap_or(false) {
        println!("{}", serde_json::to_string_pretty(&r)?);
    } else {
        print!("{}", render_summary(&r));
    }
    Ok(())
}

pub fn fls(a: &FlsArgs) -> anyhow::Result<FlsSystem> {
    let base = build_default_system();
    if let Some(t) = &a.template {
        let table = ExpertRuleTable::from_rules("base", &base.rules);
        write_expert_tables(t, &base, &[table])?;
        println!("wrote expert table template to {}", t.display());
    }
    let flags = FlsFlags { fls: None, experts: a.experts.clone(), widening: a.widening };
    let system = load_fls(&flags)?;
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("fls_system.json"));
    write_system(&out, &system)?;
    println!("wrote fuzzy system ({} rules) to {}", system.rules.len(), out.display());
    Ok(system)
}
