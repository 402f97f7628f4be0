use dipt_core::compare::{compare_states, fls_report, fls_run, geoloc_records, truth_timelines, StateAccuracyReport};
use dipt_core::fls::build_default_system;
use dipt_core::lcs::{infer_state_timeline, read_population, train, write_population, LcsParams, TimelineContext};
use dipt_core::pipeline::{
    accuracy, fit_stats, prepare_corpus, run_id, simulate_corpus, split_by_run, state_training_set, PrepConfig,
};
use dipt_core::runlog::{read_log, write_log, RunLog};
use dipt_core::sim::batch::BatchSpec;

fn small() -> LcsParams {
    LcsParams { population_size: 800, iterations: 3_000, train_size: 3_000, ..LcsParams::desk() }
}

#[test]
fn logs_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for log in simulate_corpus(&BatchSpec::default(), 20, 4) {
        log.check_transitions().unwrap();
        let path = dir.path().join(format!("{}.jsonl", run_id(&log)));
        write_log(&log, &path).unwrap();
        let back = read_log(&path).unwrap();
        assert_eq!(back.to_jsonl(), log.to_jsonl());
    }
}

#[test]
fn unknown_major_version_is_rejected() {
    let log = simulate_corpus(&BatchSpec::default(), 1, 1).remove(0);
    let text = String::from_utf8(log.to_jsonl()).unwrap().replacen("\"format_version\":\"1.0\"", "\"format_version\":\"2.0\"", 1);
    assert!(RunLog::from_jsonl(text.as_bytes()).is_err());
}

#[test]
fn train_infer_compare_end_to_end() {
    let runs = prepare_corpus(simulate_corpus(&BatchSpec::default(), 300, 20), &PrepConfig::default()).unwrap();
    let (tr, ho) = split_by_run(runs.len(), 0.2, 1);
    let stats = fit_stats(tr.iter().map(|&i| &runs[i])).unwrap();
    let train_set = state_training_set(tr.iter().map(|&i| &runs[i]), &stats).unwrap();
    let hold_set = state_training_set(ho.iter().map(|&i| &runs[i]), &stats).unwrap();
    let (mut pop, report) = train(&train_set, &small()).unwrap();
    assert_eq!(report.curve.len(), 3_000 / 500);
    let held = accuracy(&pop, &hold_set).unwrap();
    assert!(held > hold_set.majority_fraction(), "held-out {held} vs majority {}", hold_set.majority_fraction());

    pop.feature_names = PrepConfig::default().features.names();
    pop.normalization = Some(stats);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pop.jsonl");
    write_population(&path, &pop, Some(&small())).unwrap();
    let (pop, _) = read_population(&path).unwrap();

    // Per-frame accuracy over the timeline equals the population accuracy on the same frames.
    let mut reports = Vec::new();
    for &i in &ho {
        let r = &runs[i];
        let ctx = TimelineContext { config: &r.log.config, search_end: None };
        let tls = infer_state_timeline(&pop, &r.samples, ctx).unwrap();
        for (inf, truth) in tls.iter().zip(truth_timelines(&r.samples)) {
            reports.push(compare_states(inf, &truth).unwrap());
        }
    }
    let pooled = StateAccuracyReport::combine(&reports);
    assert_eq!(pooled.frames as usize, hold_set.len());
    assert!((pooled.accuracy - held).abs() < 1e-12);
    let confusion_total: u64 = pooled.confusion.iter().flatten().sum();
    assert_eq!(confusion_total, pooled.frames);
}

#[test]
fn perception_and_geolocation_reports() {
    let logs = simulate_corpus(&BatchSpec::default(), 900, 12);
    let sys = build_default_system();
    let runs: Vec<_> = logs.iter().map(|l| fls_run(&run_id(l), l, &sys).unwrap()).collect();
    let report = fls_report(&runs).unwrap();
    assert_eq!(report.detected_count + report.undetected_count, 12);
    assert_eq!(report.failures.len(), report.undetected_count);
    for log in &logs {
        for rec in geoloc_records(log) {
            assert!(rec.error >= 0.0);
        }
    }
}
