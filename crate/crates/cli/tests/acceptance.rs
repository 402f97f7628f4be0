//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero when any fails.

use std::cell::Cell;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use dipt_core::behavior::{behavior_transition, BehaviorState, Trigger};
use dipt_core::compare::{fls_report, fls_run, geoloc_error};
use dipt_core::fls::{build_default_system, km_type_reduce, FiringInterval, FlsSystem, IT2TrapMF, Trapezoid};
use dipt_core::geometry::Vec2;
use dipt_core::lcs::{
    compact_cra2, compact_pdrc, reduce_shards, search_end_examples, train, train_shards, train_two_layer,
    write_population_to, LcsParams, PdrcThresholds, Population, SearchEndClassifier, SearchEndExample, SearchEndLabel,
    TrainingSet,
};
use dipt_core::pipeline::{
    accuracy, fit_stats, prepare_corpus, run_id, simulate_corpus, split_by_run, state_training_set, PrepConfig,
    PreparedRun,
};
use dipt_core::replay::{ReplayModels, ReplayStore};
use dipt_core::runlog::write_log;
use dipt_core::sim::batch::BatchSpec;
use dipt_core::sim::simulate;
use futures_util::{SinkExt, StreamExt};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rayon::prelude::*;
use serde_json::Value;
use tokio_tungstenite::tungstenite::Message;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(Config { cases, failure_persistence: None, ..Config::default() }, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// The desk corpus: 200 runs split 80/20 by run.
struct Desk {
    runs: Vec<PreparedRun>,
    train: TrainingSet,
    hold: TrainingSet,
}

impl Desk {
    fn build() -> Self {
        let runs = prepare_corpus(simulate_corpus(&BatchSpec::default(), 0, 200), &PrepConfig::default()).unwrap();
        let (tr, ho) = split_by_run(runs.len(), 0.2, 0);
        let pick = |idx: &[usize]| idx.iter().map(|&i| &runs[i]).collect::<Vec<_>>();
        let stats = fit_stats(pick(&tr)).unwrap();
        let train = state_training_set(pick(&tr), &stats).unwrap();
        let hold = state_training_set(pick(&ho), &stats).unwrap();
        Desk { runs, train, hold }
    }
}

fn desk_params(seed: u64, train_size: usize) -> LcsParams {
    LcsParams { seed, train_size, ..LcsParams::desk() }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn state_machine() -> Outcome {
    use BehaviorState::*;
    let t = Instant::now();
    // (from, trigger, to), transcribed from the behavior table.
    let table: [(&str, &str, &str); 13] = [
        ("Hold", "GoForLaunch", "FlyOrbitAndObserve"),
        ("FlyOrbitAndObserve", "FirstSearchWaypointReached", "FlySearchPattern"),
        ("FlyOrbitAndObserve", "LandingComplete", "Hold"),
        ("FlySearchPattern", "PotentialTargetFoundAuctionWon", "SurveyTarget"),
        ("FlySearchPattern", "SearchTimeoutReached", "FlyOrbitAndObserve"),
        ("FlySearchPattern", "SearchComplete", "FlyOrbitAndObserve"),
        ("FlySearchPattern", "BatteryLow", "FlyOrbitAndObserve"),
        ("FlySearchPattern", "AbortMission", "FlyOrbitAndObserve"),
        ("FlySearchPattern", "PotentialTargetFoundAuctionLost", "FlySearchPattern"),
        ("SurveyTarget", "SurveyComplete", "FlyOrbitAndObserve"),
        ("SurveyTarget", "BatteryLow", "FlyOrbitAndObserve"),
        ("SurveyTarget", "AbortMission", "FlyOrbitAndObserve"),
        ("SurveyTarget", "PotentialTargetLost", "FlySearchPattern"),
    ];
    let (mut legal, mut mismatches) = (0, 0);
    for s in [Hold, FlyOrbitAndObserve, FlySearchPattern, SurveyTarget] {
        for tr in Trigger::ALL {
            let expected = table.iter().find(|(f, g, _)| *f == s.name() && *g == tr.name()).map(|e| e.2);
            match (behavior_transition(s, tr), expected) {
                (Ok(to), Some(e)) if to.name() == e => legal += 1,
                (Err(_), None) => {}
                _ => mismatches += 1,
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        Trigger::ALL.len() == 11 && legal == 13 && mismatches == 0 && secs < 1.0,
        format!("{legal} legal pairs, {mismatches} mismatches over 4x11, {secs:.3}s"),
    )
}

fn determinism() -> Outcome {
    let t = Instant::now();
    let spec = BatchSpec::default();
    let mut runner = runner(50);
    let configs = Cell::new(0);
    let result = runner.run(&any::<u64>(), |seed| {
        let cfg = spec.scenario(seed);
        let a = simulate(&cfg).unwrap().to_jsonl();
        let b = simulate(&cfg).unwrap().to_jsonl();
        configs.set(configs.get() + 1);
        prop_assert_eq!(a, b);
        Ok(())
    });
    let secs = t.elapsed().as_secs_f64();
    outcome(result.is_ok() && configs.get() >= 50 && secs < 30.0, format!("{} configs byte-identical: {}, {secs:.1}s", configs.get(), result.is_ok()))
}

struct DeskResults {
    accs: Vec<f64>,
    pops: Vec<Population>,
}

fn desk_accuracy(desk: &Desk) -> (Outcome, DeskResults) {
    let t = Instant::now();
    let trained: Vec<(Population, f64)> = SEEDS
        .par_iter()
        .map(|&s| {
            let (pop, _) = train(&desk.train, &desk_params(s, 9_000)).unwrap();
            let acc = accuracy(&pop, &desk.hold).unwrap();
            (pop, acc)
        })
        .collect();
    let accs: Vec<f64> = trained.iter().map(|p| p.1).collect();
    let m = mean(&accs);
    let base = desk.hold.majority_fraction();
    let secs = t.elapsed().as_secs_f64();
    let o = outcome(
        m >= 0.90 && m - base >= 0.15 && secs < 300.0,
        format!(
            "{} train / {} holdout frames, mean held-out {m:.4} (seeds {:?}), majority {base:.4}, {secs:.1}s",
            desk.train.len(),
            desk.hold.len(),
            accs.iter().map(|a| format!("{a:.4}")).collect::<Vec<_>>()
        ),
    );
    (o, DeskResults { accs, pops: trained.into_iter().map(|p| p.0).collect() })
}

fn plateau(desk: &Desk, at_9000: &[f64]) -> Outcome {
    let t = Instant::now();
    let mut means = Vec::new();
    for size in [1_000, 3_000] {
        let accs: Vec<f64> = SEEDS
            .par_iter()
            .map(|&s| accuracy(&train(&desk.train, &desk_params(s, size)).unwrap().0, &desk.hold).unwrap())
            .collect();
        means.push(mean(&accs));
    }
    means.push(mean(at_9000));
    let ok = means.windows(2).all(|w| w[1] >= w[0] - 0.01);
    let secs = t.elapsed().as_secs_f64();
    outcome(ok && secs < 900.0, format!("means at 1000/3000/9000: {:.4} / {:.4} / {:.4}, {secs:.1}s", means[0], means[1], means[2]))
}

fn compaction(desk: &Desk, pop: &Population) -> Outcome {
    let base_acc = accuracy(pop, &desk.hold).unwrap();
    let before = pop.macro_size();
    let cra2 = compact_cra2(pop, &desk.train).unwrap();
    let pdrc = compact_pdrc(pop, &PdrcThresholds { min_experience: 10, min_accuracy: 0.8, min_numerosity: 2 }).unwrap();
    let mut ok = true;
    let mut parts = vec![format!("{before} rules, held-out {base_acc:.4}")];
    for (name, p) in [("CRA2", &cra2), ("PDRC", &pdrc)] {
        let acc = accuracy(p, &desk.hold).unwrap();
        let reduction = 1.0 - p.macro_size() as f64 / before as f64;
        let drop = base_acc - acc;
        ok &= reduction >= 0.5 && drop <= 0.02;
        parts.push(format!("{name}: {} rules (-{:.1}%), held-out {acc:.4} (drop {:.2} pts)", p.macro_size(), 100.0 * reduction, 100.0 * drop));
    }
    outcome(ok, parts.join("; "))
}

fn pop_bytes(p: &Population) -> Vec<u8> {
    let mut buf = Vec::new();
    write_population_to(&mut buf, p, None).unwrap();
    buf
}

fn two_layer(desk: &Desk) -> Outcome {
    let params = desk_params(0, 9_000);
    let single = train_two_layer(&desk.train, 1, &params).unwrap();
    let shards = train_shards(&desk.train, 4, &params).unwrap();
    let merged = reduce_shards(&shards, &desk.train).unwrap();
    let (a1, a4) = (accuracy(&single, &desk.hold).unwrap(), accuracy(&merged, &desk.hold).unwrap());
    let reference = pop_bytes(&merged);
    let orders: [[usize; 4]; 3] = [[3, 2, 1, 0], [1, 3, 0, 2], [2, 0, 3, 1]];
    let order_free = orders.iter().all(|o| {
        let permuted: Vec<Population> = o.iter().map(|&i| shards[i].clone()).collect();
        pop_bytes(&reduce_shards(&permuted, &desk.train).unwrap()) == reference
    });
    let end_to_end = pop_bytes(&train_two_layer(&desk.train, 4, &params).unwrap()) == reference;
    outcome(
        (a1 - a4).abs() <= 0.03 && order_free && end_to_end,
        format!("1-shard {a1:.4}, 4-shard {a4:.4}; permuted merges bitwise identical: {order_free}; rerun identical: {end_to_end}"),
    )
}

fn search_end() -> Outcome {
    let t = Instant::now();
    let spec = BatchSpec::default();
    let fit_set: Vec<SearchEndExample> =
        simulate_corpus(&spec, 50_000, 300).iter().flat_map(search_end_examples).collect();
    let clf = SearchEndClassifier::fit(&fit_set).unwrap();
    // One example per run, 250 of each label, from runs disjoint from the fit set.
    let (mut timeout, mut complete) = (Vec::new(), Vec::new());
    let mut next = 100_000u64;
    while (timeout.len() < 250 || complete.len() < 250) && next < 120_000 {
        for log in simulate_corpus(&spec, next, 200) {
            if let Some(e) = search_end_examples(&log).into_iter().next() {
                let bucket = if e.label == SearchEndLabel::Timeout { &mut timeout } else { &mut complete };
                if bucket.len() < 250 {
                    bucket.push(e);
                }
            }
        }
        next += 200;
    }
    let balanced: Vec<SearchEndExample> = timeout.into_iter().chain(complete).collect();
    let acc = clf.accuracy(&balanced);
    let secs = t.elapsed().as_secs_f64();
    outcome(
        balanced.len() == 500 && acc >= 0.95 && secs < 120.0,
        format!("{} fit examples, balanced set of {} runs, accuracy {acc:.4}, {secs:.1}s", fit_set.len(), balanced.len()),
    )
}

/// Extremes of the weighted mean over every vertex of the firing box.
fn km_oracle(c: &[f64], f: &[(f64, f64)]) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for mask in 0u32..(1 << c.len()) {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..c.len() {
            let w = if mask >> i & 1 == 1 { f[i].1 } else { f[i].0 };
            num += w * c[i];
            den += w;
        }
        if den > 0.0 {
            lo = lo.min(num / den);
            hi = hi.max(num / den);
        }
    }
    (lo, hi)
}

fn trap_grade(t: &Trapezoid, x: f64) -> f64 {
    if x <= t.a || x >= t.d {
        return if (x == t.a && t.a == t.b) || (x == t.d && t.c == t.d) { 1.0 } else { 0.0 };
    }
    if x < t.b {
        (x - t.a) / (t.b - t.a)
    } else if x <= t.c {
        1.0
    } else {
        (t.d - x) / (t.d - t.c)
    }
}

/// Closed-form centroid of a trapezoid.
fn trap_centroid(t: &Trapezoid) -> f64 {
    let (a, b, c, d) = (t.a, t.b, t.c, t.d);
    let den = 3.0 * (c + d - a - b);
    if den == 0.0 {
        return a;
    }
    (c * c + d * d + c * d - a * a - b * b - a * b) / den
}

/// Type-1 Mamdani max-min with centroid defuzzification over the output
/// term centroids.
fn type1_oracle(sys: &FlsSystem, x: &[f64]) -> Option<f64> {
    let mut per_term = vec![0.0f64; sys.output.terms.len()];
    for r in &sys.rules {
        let mut w = 1.0f64;
        for (v, (var, label)) in sys.inputs.iter().zip(&r.antecedent).enumerate() {
            let t = var.terms.iter().find(|t| &t.label == label).unwrap();
            w = w.min(trap_grade(&t.mf.upper, x[v]));
        }
        let k = sys.output.terms.iter().position(|t| t.label == r.consequent).unwrap();
        per_term[k] = per_term[k].max(w);
    }
    let den: f64 = per_term.iter().sum();
    (den > 0.0).then(|| {
        per_term.iter().zip(&sys.output.terms).map(|(w, t)| w * trap_centroid(&t.mf.upper)).sum::<f64>() / den
    })
}

fn collapse(mut s: FlsSystem) -> FlsSystem {
    for v in s.inputs.iter_mut().chain([&mut s.output]) {
        for t in &mut v.terms {
            t.mf = IT2TrapMF::type1(t.mf.upper);
        }
    }
    s
}

fn km() -> Outcome {
    let t = Instant::now();
    let systems = prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, 0.01..1.0f64), 1..=5);
    let worst = Cell::new(0.0f64);
    let km_result = runner(1000).run(&systems, |rules| {
        let c: Vec<f64> = rules.iter().map(|r| r.0).collect();
        let f: Vec<(f64, f64)> = rules.iter().map(|r| (r.1 * r.2, r.2)).collect();
        let firing: Vec<FiringInterval> = f.iter().map(|&(lower, upper)| FiringInterval { lower, upper }).collect();
        let got = km_type_reduce(&c, &firing).unwrap();
        let (lo, hi) = km_oracle(&c, &f);
        let err = (got.y_l - lo).abs().max((got.y_r - hi).abs());
        worst.set(worst.get().max(err));
        prop_assert!(err <= 1e-6, "rules {:?}: km ({}, {}) vs oracle ({lo}, {hi})", rules, got.y_l, got.y_r);
        Ok(())
    });
    let sys = collapse(build_default_system());
    let worst_t1 = Cell::new(0.0f64);
    let collapse_result = runner(1000).run(&(0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64), |(a, b, c)| {
        let x = [a, b, c];
        let got = sys.infer(&x).unwrap();
        match type1_oracle(&sys, &x) {
            Some(want) => {
                worst_t1.set(worst_t1.get().max((got.score - want).abs()));
                prop_assert!((got.score - want).abs() <= 1e-9, "x {:?}: {} vs {}", x, got.score, want);
            }
            None => prop_assert!(got.no_firing),
        }
        Ok(())
    });
    let secs = t.elapsed().as_secs_f64();
    let (worst, worst_t1) = (worst.get(), worst_t1.get());
    let mut detail = format!("1000 systems, max KM error {worst:.2e}; 1000 collapsed inputs, max error {worst_t1:.2e}; {secs:.2}s");
    for e in [km_result.err().map(|e| e.to_string()), collapse_result.err().map(|e| e.to_string())].into_iter().flatten() {
        detail.push_str(&format!("; {e}"));
    }
    outcome(worst <= 1e-6 && worst_t1 <= 1e-9 && !detail.contains("Test failed") && secs < 60.0, detail)
}

fn monotonicity() -> Outcome {
    let sys = build_default_system();
    let grid: Vec<f64> = (0..20).map(|k| k as f64 / 19.0).collect();
    let mut violations = 0;
    let mut worst = 0.0f64;
    for &l in &grid {
        for &s in &grid {
            let mut prev = f64::NEG_INFINITY;
            for &v in &grid {
                let score = sys.infer(&[v, l, s]).unwrap().score;
                if score < prev {
                    violations += 1;
                    worst = worst.max(prev - score);
                }
                prev = score;
            }
        }
    }
    outcome(violations == 0, format!("{} grid points, {violations} violations (largest drop {worst:.2e})", 20 * 20 * 20))
}

fn comparator(desk: &Desk) -> Outcome {
    let point = || (-1e4..1e4f64, -1e4..1e4f64).prop_map(|(x, y)| Vec2 { x, y });
    let axioms = runner(1000).run(&(point(), point(), point()), |(a, b, c)| {
        let (ab, ba, ac, bc) = (geoloc_error(a, b), geoloc_error(b, a), geoloc_error(a, c), geoloc_error(b, c));
        prop_assert_eq!(geoloc_error(a, a), 0.0);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, ba);
        prop_assert!(ac <= ab + bc + 1e-9 * (1.0 + ab + bc));
        if a != b {
            prop_assert!(ab > 0.0);
        }
        Ok(())
    });
    let five = geoloc_error(Vec2 { x: 0.0, y: 0.0 }, Vec2 { x: 3.0, y: 4.0 });
    let sys = build_default_system();
    let runs: Vec<_> = desk.runs.iter().map(|r| fls_run(&r.run_id, &r.log, &sys).unwrap()).collect();
    let report = fls_report(&runs).unwrap();
    let (det, undet) = (report.detected_mean, report.undetected_mean);
    let ok = axioms.is_ok() && five == 5.0 && matches!((det, undet), (Some(d), Some(u)) if d > u);
    outcome(
        ok,
        format!(
            "metric axioms: {}; (0,0)-(3,4) = {five}; detected {} runs mean {:?}, undetected {} runs mean {:?}",
            if axioms.is_ok() { "hold" } else { "violated" },
            report.detected_count,
            det,
            report.undetected_count,
            undet
        ),
    )
}

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn recv(ws: &mut Ws, wait: Duration) -> Option<Value> {
    match tokio::time::timeout(wait, ws.next()).await {
        Ok(Some(Ok(Message::Text(t)))) => Some(serde_json::from_str(&t).unwrap()),
        Ok(other) => panic!("unexpected message {other:?}"),
        Err(_) => None,
    }
}

async fn send(ws: &mut Ws, text: &str) {
    ws.send(Message::Text(text.into())).await.unwrap();
}

async fn until_ack(ws: &mut Ws, command: &str) -> Vec<Value> {
    let mut before = Vec::new();
    loop {
        let m = recv(ws, Duration::from_secs(5)).await.expect("acknowledgment");
        if m["type"] == "ack" && m["command"] == command {
            return before;
        }
        before.push(m);
    }
}

async fn replay_session(models: ReplayModels) -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let logs = simulate_corpus(&BatchSpec::default(), 7, 2);
    for log in &logs {
        write_log(log, dir.path().join(format!("{}.jsonl", run_id(log)))).unwrap();
    }
    let store = ReplayStore::open(dir.path(), &models).unwrap();
    let id = store.list_runs()[0].run_id.clone();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, dipt_server::router(Arc::new(store))).await.unwrap() });
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/runs/{id}/stream")).await.unwrap();

    send(&mut ws, "rate 50").await;
    until_ack(&mut ws, "rate").await;
    send(&mut ws, "play").await;
    until_ack(&mut ws, "play").await;
    let mut times = Vec::new();
    while times.len() < 20 {
        let m = recv(&mut ws, Duration::from_secs(2)).await.expect("frame while playing");
        times.push(m["time"].as_f64().unwrap());
    }
    send(&mut ws, "pause").await;
    let in_flight = until_ack(&mut ws, "pause").await;
    times.extend(in_flight.iter().filter_map(|m| m["time"].as_f64()));
    let increasing = times.windows(2).all(|w| w[1] > w[0]);
    let after_pause = recv(&mut ws, Duration::from_millis(600)).await.is_some();

    send(&mut ws, "seek 20").await;
    until_ack(&mut ws, "seek").await;
    let mut seek_frames = 0;
    let mut seek_time = None;
    while let Some(m) = recv(&mut ws, Duration::from_millis(600)).await {
        seek_frames += 1;
        seek_time = m["time"].as_f64();
    }

    send(&mut ws, "play").await;
    until_ack(&mut ws, "play").await;
    let resumed = recv(&mut ws, Duration::from_secs(2)).await.and_then(|m| m["time"].as_f64());

    let ok = increasing && !after_pause && seek_frames == 1 && seek_time == Some(20.0) && resumed.is_some_and(|t| t > 20.0);
    (
        ok,
        format!(
            "{} frames strictly increasing: {increasing}; frames after pause ack: {}; seek frames: {seek_frames} at {seek_time:?}; resumed at {resumed:?}",
            times.len(),
            if after_pause { "yes" } else { "none" },
        ),
    )
}

fn replay(pop: &Population, desk: &Desk) -> Outcome {
    let mut pop = pop.clone();
    let stats = fit_stats(desk.runs.iter()).unwrap();
    pop.feature_names = PrepConfig::default().features.names();
    pop.normalization = Some(stats);
    let models = ReplayModels { population: Some(pop), ..ReplayModels::default() };
    let rt = tokio::runtime::Runtime::new().unwrap();
    let (ok, detail) = rt.block_on(replay_session(models));
    outcome(ok, detail)
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
    })
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as `--nocapture`; a name filter skips the suite.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return ExitCode::SUCCESS;
    }
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut report = |name: &'static str, o: Outcome| {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o));
    };

    report("state-machine conformance", guarded(state_machine));
    report("simulator determinism", guarded(determinism));
    let t = Instant::now();
    let desk = Desk::build();
    println!("     (desk corpus built in {:.1}s)", t.elapsed().as_secs_f64());
    let (o, trained) = desk_accuracy(&desk);
    report("LCS desk-scale accuracy", o);
    report("plateau trend", guarded(|| plateau(&desk, &trained.accs)));
    report("compaction", guarded(|| compaction(&desk, &trained.pops[0])));
    report("two-layer training", guarded(|| two_layer(&desk)));
    report("search-end classifier", guarded(search_end));
    report("KM type reduction", guarded(km));
    report("FLS monotonicity", guarded(monotonicity));
    report("comparator", guarded(|| comparator(&desk)));
    report("replay contract", guarded(|| replay(&trained.pops[0], &desk)));

    let failed = results.iter().filter(|r| !r.1.pass).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
