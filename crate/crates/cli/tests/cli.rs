use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use dipt_cli::commands::{self, EvaluationReport, TrainSummary};
use dipt_cli::manifest::{Manifest, MANIFEST_FILE};
use dipt_cli::{CliError, EvaluateArgs, FlsArgs, FlsFlags, InferArgs, PrepareArgs, SimulateArgs, TrainArgs};

fn sim(dir: &Path, count: u64, seed: u64) -> Manifest {
    commands::simulate(&SimulateArgs { count: Some(count), seed: Some(seed), out: Some(dir.to_path_buf()), batch: None })
        .unwrap()
}

fn small_train(manifest: &Path, out: &Path, seed: u64) -> TrainArgs {
    TrainArgs {
        manifest: Some(manifest.to_path_buf()),
        out: Some(out.to_path_buf()),
        seed: Some(seed),
        iterations: Some(2_000),
        population_size: Some(600),
        train_size: Some(2_000),
        ..Default::default()
    }
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn dipt() -> Process {
    Process::new(env!("CARGO_BIN_EXE_dipt"))
}

#[test]
fn zero_count_gives_empty_manifest_and_evaluate_rejects_it() {
    let tmp = tempfile::tempdir().unwrap();
    let m = sim(tmp.path(), 0, 5);
    assert!(m.runs.is_empty());
    assert_eq!(Manifest::read(&tmp.path().join(MANIFEST_FILE)).unwrap(), m);

    let err = commands::evaluate(&EvaluateArgs {
        manifest: Some(tmp.path().join(MANIFEST_FILE)),
        model: Some(tmp.path().join("missing.jsonl")),
        ..Default::default()
    })
    .unwrap_err();
    assert!(matches!(err.downcast_ref::<CliError>(), Some(CliError::EmptyInput(_))), "{err:#}");
}

#[test]
fn simulate_is_reproducible_with_distinct_ids() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = sim(a.path(), 8, 40);
    sim(b.path(), 8, 40);
    assert_eq!(files_in(a.path()), files_in(b.path()));
    let mut ids: Vec<_> = ma.runs.iter().map(|r| r.run_id.clone()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 8);
    assert_eq!(ma.runs.iter().map(|r| r.seed).collect::<Vec<_>>(), (40..48).collect::<Vec<_>>());
}

#[test]
fn tampered_run_is_a_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    let m = sim(tmp.path(), 2, 0);
    let path = tmp.path().join(&m.runs[0].file);
    let mut bytes = fs::read(&path).unwrap();
    bytes.extend_from_slice(b"\n");
    fs::write(&path, bytes).unwrap();
    let err = commands::prepare(&PrepareArgs {
        manifest: Some(tmp.path().join(MANIFEST_FILE)),
        out: Some(tmp.path().join("d.jsonl")),
        ..Default::default()
    })
    .unwrap_err();
    assert!(matches!(err.downcast_ref::<CliError>(), Some(CliError::Schema(_))), "{err:#}");
}

#[test]
fn single_run_manifest_trains_with_empty_holdout() {
    let tmp = tempfile::tempdir().unwrap();
    sim(tmp.path(), 1, 3);
    let s = commands::train(&small_train(&tmp.path().join(MANIFEST_FILE), &tmp.path().join("m.jsonl"), 0)).unwrap();
    assert!(s.holdout_runs.is_empty());
    assert_eq!(s.holdout_accuracy, None);
    assert_eq!(s.train_runs.len(), 1);
    assert!(tmp.path().join("m.jsonl").exists());
}

#[test]
fn train_evaluate_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs");
    let m = sim(&runs, 15, 100);
    let manifest = runs.join(MANIFEST_FILE);
    let model = tmp.path().join("model.jsonl");

    let summary = commands::train(&small_train(&manifest, &model, 7)).unwrap();
    assert_eq!(summary.seed, 7);
    assert_eq!(summary.curve.len(), 2_000 / 500);
    assert_eq!((summary.train_runs.len(), summary.holdout_runs.len()), (12, 3));
    let report: TrainSummary =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("model.jsonl.report.json")).unwrap()).unwrap();
    assert_eq!(report, summary);

    // Same manifest and seed: identical model bytes.
    let again = tmp.path().join("again.jsonl");
    commands::train(&small_train(&manifest, &again, 7)).unwrap();
    assert_eq!(fs::read(&model).unwrap(), fs::read(&again).unwrap());

    // Model evaluated on its own training runs.
    let mut train_only = m.clone();
    train_only.runs.retain(|r| summary.train_runs.contains(&r.run_id));
    let train_manifest = runs.join("train_manifest.json");
    train_only.write(&train_manifest).unwrap();
    let eval = commands::evaluate(&EvaluateArgs {
        manifest: Some(train_manifest),
        model: Some(model.clone()),
        out: Some(tmp.path().join("train_eval.json")),
        ..Default::default()
    })
    .unwrap();
    let holdout = summary.holdout_accuracy.unwrap();
    assert!(eval.aggregate.accuracy >= holdout, "train-run accuracy {} < holdout {holdout}", eval.aggregate.accuracy);
    assert_eq!(eval.runs.len(), 12);

    let full = commands::evaluate(&EvaluateArgs {
        manifest: Some(manifest.clone()),
        model: Some(model.clone()),
        out: Some(tmp.path().join("eval.json")),
        ..Default::default()
    })
    .unwrap();
    assert!(full.passed);
    assert_eq!(full.seed, 100);
    assert_eq!(full.perception.detected_count + full.perception.undetected_count, 15);
    let back: EvaluationReport = commands::read_evaluation(&tmp.path().join("eval.json")).unwrap();
    assert_eq!(back, full);
    let text = commands::render_summary(&back);
    assert!(text.contains("state accuracy"));
    assert!(text.contains("confusion"));

    // Exit codes through the binary: floor 0 passes, an unreachable floor fails with 2.
    for (floor, code) in [("0", 0), ("1.01", 2)] {
        let status = dipt()
            .args(["evaluate", "--manifest"])
            .arg(&manifest)
            .arg("--model")
            .arg(&model)
            .arg("--out")
            .arg(tmp.path().join(format!("gate_{code}.json")))
            .args(["--floor", floor])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(code), "floor {floor}");
    }

    let written = commands::infer(&InferArgs {
        manifest: Some(manifest),
        model: Some(model),
        out: Some(tmp.path().join("inferred")),
        ..Default::default()
    })
    .unwrap();
    assert_eq!(written.len(), 15);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&written[0]).unwrap()).unwrap();
    assert_eq!(doc["format_version"], "1.0");
    assert!(doc["timelines"].as_array().is_some_and(|t| !t.is_empty()));
}

#[test]
fn search_end_training_writes_classifier() {
    let tmp = tempfile::tempdir().unwrap();
    sim(tmp.path(), 30, 500);
    let out = tmp.path().join("se.json");
    let s = commands::train(&TrainArgs {
        manifest: Some(tmp.path().join(MANIFEST_FILE)),
        task: Some("search-end".into()),
        out: Some(out.clone()),
        ..Default::default()
    })
    .unwrap();
    assert!(s.train_instances > 0);
    assert!(s.training_accuracy > 0.5);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["format_version"], "1.0");
}

#[test]
fn prepare_writes_versioned_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    sim(tmp.path(), 2, 9);
    let out = tmp.path().join("d.jsonl");
    let n = commands::prepare(&PrepareArgs {
        manifest: Some(tmp.path().join(MANIFEST_FILE)),
        out: Some(out.clone()),
        ..Default::default()
    })
    .unwrap();
    let (header, records) = dipt_core::prep::read_dataset(&out).unwrap();
    assert_eq!(header.format_version, "1.0");
    assert_eq!(records.len(), n);
    assert!(n > 0);
}

#[test]
fn config_file_supplies_values_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("dipt.toml");
    let out: PathBuf = tmp.path().join("runs");
    fs::write(&cfg, format!("[simulate]\ncount = 2\nseed = 11\nout = {:?}\n", out.display().to_string())).unwrap();

    let status = dipt().arg("--config").arg(&cfg).arg("simulate").status().unwrap();
    assert!(status.success());
    let m = Manifest::read(&out.join(MANIFEST_FILE)).unwrap();
    assert_eq!((m.count, m.seed), (2, 11));

    let status = dipt().arg("--config").arg(&cfg).args(["simulate", "--count", "3"]).status().unwrap();
    assert!(status.success());
    let m = Manifest::read(&out.join(MANIFEST_FILE)).unwrap();
    assert_eq!((m.count, m.seed), (3, 11));
}

#[test]
fn help_lists_every_subcommand() {
    let out = dipt().arg("--help").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    for cmd in ["simulate", "prepare", "train", "infer", "evaluate", "serve", "report"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn fls_template_round_trips_to_the_default_system() {
    let tmp = tempfile::tempdir().unwrap();
    let template = tmp.path().join("experts.csv");
    let sys = commands::fls(&FlsArgs {
        out: Some(tmp.path().join("a.json")),
        template: Some(template.clone()),
        ..Default::default()
    })
    .unwrap();
    // A single expert agreeing with the base leaves the rulebase and the FOUs as they are.
    let aggregated = commands::load_fls(&FlsFlags { fls: None, experts: Some(template), widening: None }).unwrap();
    assert_eq!(aggregated.rules, sys.rules);
    assert_eq!(aggregated.output, sys.output);
}
