use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lcs::predict::{predict_class, predict_or_majority};
use crate::lcs::rule::interval_around;
use crate::lcs::{cover, ClassifierRule, LcsError, LcsParams, Population, Predicate, TrainingSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyPoint {
    pub iteration: usize,
    /// Fraction of correct pre-update predictions over the preceding interval.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub format_version: String,
    pub seed: u64,
    pub iterations: usize,
    pub train_instances: usize,
    pub curve: Vec<AccuracyPoint>,
    /// Accuracy of the final population over the training instances.
    pub training_accuracy: f64,
    pub macro_size: usize,
    pub micro_size: usize,
}

struct Trainer<'a> {
    params: &'a LcsParams,
    pop: Population,
    micro: usize,
    rng: ChaCha8Rng,
    match_set: Vec<usize>,
    correct_set: Vec<usize>,
}

pub fn train(data: &TrainingSet, params: &LcsParams) -> Result<(Population, TrainReport), LcsError> {
    params.validate()?;
    if data.is_empty() {
        return Err(LcsError::EmptyDataset);
    }
    let arity = data.arity();
    if let Some(bad) = data.x.iter().find(|x| x.len() != arity) {
        return Err(LcsError::ArityMismatch { expected: arity, got: bad.len() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    order.truncate(params.train_size);

    let mut t = Trainer {
        params,
        pop: Population::empty(data.labels.clone(), params.nu),
        micro: 0,
        rng,
        match_set: Vec::new(),
        correct_set: Vec::new(),
    };
    let mut votes = vec![0.0; data.labels.len()];
    let mut curve = Vec::new();
    let mut hits = 0usize;
    for it in 0..params.iterations {
        let idx = order[it % order.len()];
        let (x, y) = (&data.x[idx], data.y[idx]);
        if predict_class(&t.pop, x, &mut votes) == Some(y) {
            hits += 1;
        }
        t.step(x, y, it as u64);
        if (it + 1) % params.report_interval == 0 {
            curve.push(AccuracyPoint { iteration: it + 1, accuracy: hits as f64 / params.report_interval as f64 });
            hits = 0;
        }
    }

    let pop = t.pop;
    let correct = order.iter().filter(|&&i| predict_or_majority(&pop, &data.x[i], &mut votes) == data.y[i]).count();
    let report = TrainReport {
        format_version: crate::FORMAT_VERSION.to_string(),
        seed: params.seed,
        iterations: params.iterations,
        train_instances: order.len(),
        curve,
        training_accuracy: correct as f64 / order.len() as f64,
        macro_size: pop.macro_size(),
        micro_size: pop.micro_size(),
    };
    Ok((pop, report))
}

impl Trainer<'_> {
    fn step(&mut self, x: &[f64], y: u16, it: u64) {
        let rules = &mut self.pop.rules;
        self.match_set.clear();
        self.correct_set.clear();
        for (i, r) in rules.iter_mut().enumerate() {
            if r.matches_unchecked(x) {
                r.experience += 1;
                self.match_set.push(i);
                if r.action == y {
                    r.correct_count += 1;
                    self.correct_set.push(i);
                }
            }
        }

        if self.correct_set.is_empty() {
            let mut rule = cover(x, y, self.params, &mut self.rng);
            rule.birth_iteration = it;
            rule.ga_stamp = it;
            self.insert(rule);
        } else {
            self.maybe_ga(x, y, it);
        }
        self.enforce_bound();
    }

    fn maybe_ga(&mut self, x: &[f64], y: u16, it: u64) {
        let rules = &self.pop.rules;
        let (mut num, mut stamp) = (0u64, 0u64);
        for &i in &self.correct_set {
            num += rules[i].numerosity as u64;
            stamp += rules[i].ga_stamp * rules[i].numerosity as u64;
        }
        if it.saturating_sub(stamp / num) < self.params.theta_ga {
            return;
        }
        for &i in &self.correct_set {
            self.pop.rules[i].ga_stamp = it;
        }

        let p1 = self.tournament();
        let p2 = self.tournament();
        let mut c1 = self.pop.rules[p1].condition.clone();
        let mut c2 = self.pop.rules[p2].condition.clone();
        if self.rng.random::<f64>() < self.params.crossover_prob {
            let d = c1.len();
            let mut a = self.rng.random_range(0..=d);
            let mut b = self.rng.random_range(0..=d);
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            for k in a..b {
                std::mem::swap(&mut c1[k], &mut c2[k]);
            }
        }
        for cond in [c1, c2] {
            let cond = self.mutate(cond, x);
            let mut child = ClassifierRule::new(cond, y);
            child.birth_iteration = it;
            child.ga_stamp = it;
            if let Some(parent) = [p1, p2].into_iter().find(|&p| self.subsumes(&self.pop.rules[p], &child)) {
                self.pop.rules[parent].numerosity += 1;
                self.micro += 1;
            } else {
                self.insert(child);
            }
        }
    }

    /// Best fitness among a random sample of the correct set.
    fn tournament(&mut self) -> usize {
        let set = &self.correct_set;
        let k = ((set.len() as f64 * self.params.tournament_fraction).ceil() as usize).max(1);
        let mut best = set[self.rng.random_range(0..set.len())];
        for _ in 1..k {
            let c = set[self.rng.random_range(0..set.len())];
            if self.pop.rules[c].fitness(self.params.nu) > self.pop.rules[best].fitness(self.params.nu) {
                best = c;
            }
        }
        best
    }

    /// Per-allele mutation that keeps the current instance matched.
    fn mutate(&mut self, mut cond: Vec<Predicate>, x: &[f64]) -> Vec<Predicate> {
        let p = self.params;
        for (k, pred) in cond.iter_mut().enumerate() {
            if self.rng.random::<f64>() >= p.mutation_prob {
                continue;
            }
            *pred = match *pred {
                Predicate::DontCare => interval_around(x[k], p.cover_spread, &mut self.rng),
                Predicate::Interval { .. } if self.rng.random::<f64>() < 0.5 => Predicate::DontCare,
                Predicate::Interval { lo, hi } => {
                    let lo = lo + self.rng.random_range(-1.0..=1.0) * p.mutation_spread;
                    let hi = hi + self.rng.random_range(-1.0..=1.0) * p.mutation_spread;
                    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
                    Predicate::Interval { lo: lo.clamp(0.0, 1.0).min(x[k]), hi: hi.clamp(0.0, 1.0).max(x[k]) }
                }
            };
        }
        cond
    }

    fn subsumes(&self, parent: &ClassifierRule, child: &ClassifierRule) -> bool {
        parent.action == child.action
            && parent.experience > self.params.theta_sub
            && parent.accuracy() >= self.params.subsumption_accuracy
            && parent.condition_covers(child)
    }

    fn insert(&mut self, rule: ClassifierRule) {
        self.micro += rule.numerosity as usize;
        if let Some(existing) = self.pop.rules.iter_mut().find(|r| r.same_rule(&rule)) {
            existing.numerosity += rule.numerosity;
        } else {
            self.pop.rules.push(rule);
        }
    }

    fn enforce_bound(&mut self) {
        while self.micro > self.params.population_size {
            self.delete_one();
        }
        debug_assert!(self.micro <= self.params.population_size);
        debug_assert_eq!(self.micro, self.pop.micro_size());
    }

    /// Roulette over numerosity / fitness. Rules younger than theta_del
    /// are scored at the population's mean fitness.
    fn delete_one(&mut self) {
        let nu = self.params.nu;
        let rules = &self.pop.rules;
        let mean_fit = rules.iter().map(|r| r.fitness(nu) * r.numerosity as f64).sum::<f64>() / self.micro as f64;
        let weight = |r: &ClassifierRule| {
            let f = if r.experience >= self.params.theta_del { r.fitness(nu) } else { mean_fit };
            r.numerosity as f64 / f.max(1e-6)
        };
        let total: f64 = rules.iter().map(weight).sum();
        let mut pick = self.rng.random::<f64>() * total;
        let mut chosen = rules.len() - 1;
        for (i, r) in rules.iter().enumerate() {
            pick -= weight(r);
            if pick <= 0.0 {
                chosen = i;
                break;
            }
        }
        let r = &mut self.pop.rules[chosen];
        r.numerosity -= 1;
        if r.numerosity == 0 {
            self.pop.rules.swap_remove(chosen);
        }
        self.micro -= 1;
    }
}
