//! Glue shared by the CLI, the replay service and the test suites:
//! run identity, corpus preparation and splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::behavior::BehaviorState;
use crate::lcs::predict::predict_or_majority;
use crate::lcs::{LcsError, Population, TrainingSet};
use crate::prep::{
    apply_normalization, extract_samples, fit_normalization, merge_streams, FeatureSet, FrameSample,
    NormalizationStats, PrepError, DEFAULT_WINDOW,
};
use crate::runlog::RunLog;
use crate::sim::batch::BatchSpec;
use crate::sim::simulate;

/// Content hash of a serialized log, 16 hex digits.
pub fn run_id_of_bytes(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn run_id(log: &RunLog) -> String {
    run_id_of_bytes(&log.to_jsonl())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrepConfig {
    pub tick_hz: f64,
    pub window: usize,
    pub features: FeatureSet,
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self { tick_hz: 0.5, window: DEFAULT_WINDOW, features: FeatureSet::default() }
    }
}

/// A run reduced to its labeled samples.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub run_id: String,
    pub log: RunLog,
    pub samples: Vec<FrameSample>,
}

pub fn prepare_run(log: RunLog, prep: &PrepConfig) -> Result<PreparedRun, PrepError> {
    let frames = merge_streams(&log, prep.tick_hz)?;
    let samples = extract_samples(&log, &frames, prep.window, &prep.features)?;
    Ok(PreparedRun { run_id: run_id(&log), log, samples })
}

/// Simulates `count` runs of `spec` with seeds `seed..seed + count`.
pub fn simulate_corpus(spec: &BatchSpec, seed: u64, count: u64) -> Vec<RunLog> {
    (seed..seed + count)
        .into_par_iter()
        .map(|s| simulate(&spec.scenario(s)).expect("batch scenarios are valid"))
        .collect()
}

pub fn prepare_corpus(logs: Vec<RunLog>, prep: &PrepConfig) -> Result<Vec<PreparedRun>, PrepError> {
    logs.into_par_iter().map(|log| prepare_run(log, prep)).collect()
}

/// Deterministic run-level split: `(train, holdout)` index lists, each
/// ascending. The holdout is empty when there is a single run.
pub fn split_by_run(n_runs: usize, holdout_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n_runs).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_hold = if n_runs < 2 { 0 } else { ((n_runs as f64 * holdout_fraction).round() as usize).clamp(1, n_runs - 1) };
    let (hold, train) = idx.split_at(n_hold);
    let (mut train, mut hold) = (train.to_vec(), hold.to_vec());
    train.sort_unstable();
    hold.sort_unstable();
    (train, hold)
}

pub fn state_labels() -> Vec<String> {
    BehaviorState::ALL.iter().map(|s| s.name().to_string()).collect()
}

pub fn fit_stats<'a>(runs: impl IntoIterator<Item = &'a PreparedRun>) -> Result<NormalizationStats, PrepError> {
    fit_normalization(runs.into_iter().flat_map(|r| r.samples.iter().map(|s| &s.features)))
}

/// Normalized state-labeled instances from the given runs.
pub fn state_training_set<'a>(
    runs: impl IntoIterator<Item = &'a PreparedRun>,
    stats: &NormalizationStats,
) -> Result<TrainingSet, PrepError> {
    let mut pairs = Vec::new();
    for r in runs {
        for s in &r.samples {
            pairs.push((apply_normalization(&s.features, stats)?.0, s.truth_state.name()));
        }
    }
    TrainingSet::with_labels(state_labels(), pairs).map_err(|e| PrepError::Format(e.to_string()))
}

/// Fraction of instances the population labels correctly, with the
/// uncovered fallback applied.
pub fn accuracy(pop: &Population, data: &TrainingSet) -> Result<f64, LcsError> {
    if data.is_empty() {
        return Err(LcsError::EmptyDataset);
    }
    if pop.is_empty() {
        return Err(LcsError::EmptyPopulation);
    }
    if pop.labels != data.labels {
        return Err(LcsError::InvalidParams("label sets differ".into()));
    }
    let correct: usize = data
        .x
        .par_iter()
        .zip(&data.y)
        .map_init(|| vec![0.0; pop.labels.len()], |votes, (x, &y)| usize::from(predict_or_majority(pop, x, votes) == y))
        .sum();
    Ok(correct as f64 / data.len() as f64)
}
