use serde::{Deserialize, Serialize};

use crate::lcs::LcsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LcsParams {
    /// Maximum micro population size.
    pub population_size: usize,
    pub iterations: usize,
    /// Instances drawn from the dataset for training.
    pub train_size: usize,
    /// Fitness exponent.
    pub nu: f64,
    pub crossover_prob: f64,
    /// Per-allele mutation probability.
    pub mutation_prob: f64,
    /// Maximum bound shift applied by interval mutation.
    pub mutation_spread: f64,
    pub p_dontcare: f64,
    /// Covering interval half-width upper bound.
    pub cover_spread: f64,
    pub tournament_fraction: f64,
    pub theta_ga: u64,
    pub theta_sub: u64,
    pub subsumption_accuracy: f64,
    pub theta_del: u64,
    /// Iterations between accuracy-curve points.
    pub report_interval: usize,
    pub seed: u64,
}

impl Default for LcsParams {
    fn default() -> Self {
        Self {
            population_size: 16_000,
            iterations: 15_000,
            train_size: 9_000,
            nu: 10.0,
            crossover_prob: 0.8,
            mutation_prob: 0.04,
            mutation_spread: 0.1,
            p_dontcare: 0.5,
            cover_spread: 0.25,
            tournament_fraction: 0.4,
            theta_ga: 25,
            theta_sub: 20,
            subsumption_accuracy: 0.99,
            theta_del: 20,
            report_interval: 500,
            seed: 0,
        }
    }
}

impl LcsParams {
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::default()),
            "osprey" => Some(Self::osprey()),
            "desk" => Some(Self::desk()),
            _ => None,
        }
    }

    /// The larger-scale configuration: 5000 training instances over
    /// 120000 iterations.
    pub fn osprey() -> Self {
        Self { train_size: 5_000, iterations: 120_000, ..Self::default() }
    }

    /// Scaled down for laptop runs.
    pub fn desk() -> Self {
        Self { population_size: 2_000, iterations: 30_000, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), LcsError> {
        let probs = [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
            ("p_dontcare", self.p_dontcare),
            ("tournament_fraction", self.tournament_fraction),
            ("subsumption_accuracy", self.subsumption_accuracy),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(LcsError::InvalidParams(format!("{name} = {p} not in [0, 1]")));
            }
        }
        if self.population_size == 0 || self.iterations == 0 || self.train_size == 0 || self.report_interval == 0 {
            return Err(LcsError::InvalidParams(
                "population_size, iterations, train_size and report_interval must be > 0".into(),
            ));
        }
        if !(self.nu > 0.0) || !(self.cover_spread >= 0.0) || !(self.mutation_spread >= 0.0) {
            return Err(LcsError::InvalidParams("nu must be > 0 and spreads >= 0".into()));
        }
        Ok(())
    }
}
