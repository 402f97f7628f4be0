//! Python module `dipt`: run the simulator, query the behavior machine,
//! score perception with the fuzzy system and apply trained populations.

use dipt_core::behavior::{behavior_transition, BehaviorState, Trigger};
use dipt_core::compare::{compare_states, geoloc_error as distance, truth_timelines, StateAccuracyReport};
use dipt_core::fls::{km_type_reduce as km, FiringInterval, FlsSystem};
use dipt_core::geometry::Vec2;
use dipt_core::lcs::{infer_state_timeline, read_population, Population, StateTimeline, TimelineContext};
use dipt_core::pipeline::{prepare_run, run_id_of_bytes, PrepConfig};
use dipt_core::prep::FeatureSet;
use dipt_core::runlog::RunLog;
use dipt_core::sim::batch::BatchSpec;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

pub fn simulate_jsonl(seed: u64, batch_json: Option<&str>) -> Result<String, String> {
    let spec: BatchSpec = match batch_json {
        Some(text) => serde_json::from_str(text).map_err(|e| e.to_string())?,
        None => BatchSpec::default(),
    };
    let log = dipt_core::simulate(&spec.scenario(seed)).map_err(|e| e.to_string())?;
    String::from_utf8(log.to_jsonl()).map_err(|e| e.to_string())
}

pub fn next_state(state: &str, trigger: &str) -> Result<&'static str, String> {
    let s: BehaviorState = state.parse().map_err(|_| format!("unknown state {state:?}"))?;
    let t: Trigger = trigger.parse().map_err(|_| format!("unknown trigger {trigger:?}"))?;
    behavior_transition(s, t).map(BehaviorState::name).map_err(|e| e.to_string())
}

fn parse_log(log: &str) -> Result<RunLog, String> {
    RunLog::from_jsonl(log.as_bytes()).map_err(|e| e.to_string())
}

fn timelines(pop: &Population, log: &RunLog) -> Result<(Vec<StateTimeline>, StateAccuracyReport), String> {
    let features = FeatureSet::from_names(&pop.feature_names).map_err(|e| e.to_string())?;
    let prep = PrepConfig { features, ..PrepConfig::default() };
    let prepared = prepare_run(log.clone(), &prep).map_err(|e| e.to_string())?;
    let ctx = TimelineContext { config: &log.config, search_end: None };
    let tls = infer_state_timeline(pop, &prepared.samples, ctx).map_err(|e| e.to_string())?;
    let per_uav = tls
        .iter()
        .zip(truth_timelines(&prepared.samples))
        .map(|(i, t)| compare_states(i, &t))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok((tls, StateAccuracyReport::combine(&per_uav)))
}

/// Simulates one run of the batch family (default ranges unless
/// `batch_json` is given) and returns its JSON Lines log.
#[pyfunction]
#[pyo3(signature = (seed, batch_json=None))]
fn simulate(seed: u64, batch_json: Option<&str>) -> PyResult<String> {
    simulate_jsonl(seed, batch_json).map_err(value_err)
}

/// Content hash identifying a serialized log.
#[pyfunction]
fn run_id(log: &str) -> String {
    run_id_of_bytes(log.as_bytes())
}

#[pyfunction]
fn states() -> Vec<&'static str> {
    BehaviorState::ALL.iter().map(|s| s.name()).collect()
}

#[pyfunction]
fn triggers() -> Vec<&'static str> {
    Trigger::ALL.iter().map(|t| t.name()).collect()
}

/// Target state of a legal transition; ValueError otherwise.
#[pyfunction]
fn transition(state: &str, trigger: &str) -> PyResult<&'static str> {
    next_state(state, trigger).map_err(value_err)
}

/// Fuzzy detection-performance estimate for one set of conditions.
#[pyfunction]
#[pyo3(signature = (visibility, light_level, apparent_size, system_json=None))]
fn perception<'py>(
    py: Python<'py>,
    visibility: f64,
    light_level: f64,
    apparent_size: f64,
    system_json: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let system = match system_json {
        Some(text) => {
            let s: FlsSystem = serde_json::from_str(text).map_err(value_err)?;
            s.validate().map_err(value_err)?;
            s
        }
        None => FlsSystem::default(),
    };
    let e = system.infer(&[visibility, light_level, apparent_size]).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("score", e.score)?;
    d.set_item("y_l", e.y_l)?;
    d.set_item("y_r", e.y_r)?;
    d.set_item("class", serde_json::to_value(e.class).map_err(value_err)?.as_str().unwrap_or_default())?;
    d.set_item("no_firing", e.no_firing)?;
    Ok(d)
}

/// Karnik-Mendel interval `(y_l, y_r)` for centroids and firing bounds.
#[pyfunction]
fn km_type_reduce(centroids: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> PyResult<(f64, f64)> {
    if lower.len() != upper.len() {
        return Err(value_err("lower and upper differ in length"));
    }
    let firing: Vec<FiringInterval> = lower.into_iter().zip(upper).map(|(lower, upper)| FiringInterval { lower, upper }).collect();
    let r = km(&centroids, &firing).map_err(value_err)?;
    Ok((r.y_l, r.y_r))
}

#[pyfunction]
fn geoloc_error(perceived: (f64, f64), truth: (f64, f64)) -> f64 {
    distance(Vec2 { x: perceived.0, y: perceived.1 }, Vec2 { x: truth.0, y: truth.1 })
}

/// A trained state population.
#[pyclass]
struct Model {
    pop: Population,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let (pop, _) = read_population(path).map_err(value_err)?;
        Ok(Model { pop })
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.pop.feature_names.clone()
    }

    #[getter]
    fn macro_size(&self) -> usize {
        self.pop.macro_size()
    }

    /// Inferred per-vehicle timelines for a JSON Lines log, as JSON.
    fn infer(&self, log: &str) -> PyResult<String> {
        let log = parse_log(log).map_err(value_err)?;
        let (tls, _) = timelines(&self.pop, &log).map_err(value_err)?;
        serde_json::to_string(&tls).map_err(value_err)
    }

    /// Per-frame state accuracy against the log's truth channel.
    fn accuracy(&self, log: &str) -> PyResult<f64> {
        let log = parse_log(log).map_err(value_err)?;
        Ok(timelines(&self.pop, &log).map_err(value_err)?.1.accuracy)
    }
}

#[pymodule]
fn dipt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FORMAT_VERSION", dipt_core::FORMAT_VERSION)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_id, m)?)?;
    m.add_function(wrap_pyfunction!(states, m)?)?;
    m.add_function(wrap_pyfunction!(triggers, m)?)?;
    m.add_function(wrap_pyfunction!(transition, m)?)?;
    m.add_function(wrap_pyfunction!(perception, m)?)?;
    m.add_function(wrap_pyfunction!(km_type_reduce, m)?)?;
    m.add_function(wrap_pyfunction!(geoloc_error, m)?)?;
    m.add_class::<Model>()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulate_is_deterministic_and_parses() {
        let a = simulate_jsonl(3, None).unwrap();
        assert_eq!(a, simulate_jsonl(3, None).unwrap());
        assert!(parse_log(&a).is_ok());
        assert!(simulate_jsonl(3, Some("{\"abort_prob\": \"x\"}")).is_err());
    }

    #[test]
    fn transitions_by_name() {
        assert_eq!(next_state("Hold", "GoForLaunch").unwrap(), "FlyOrbitAndObserve");
        assert!(next_state("Hold", "BatteryLow").is_err());
        assert!(next_state("Parked", "GoForLaunch").is_err());
    }
}
