use rayon::prelude::*;

use crate::lcs::{compact_cra2, train, ClassifierRule, LcsError, LcsParams, Population, TrainingSet};

/// Concatenates populations into one with a canonical rule order:
/// sorted by (action, condition bits), identical rules merged by summing
/// numerosity and counters. The result does not depend on input order.
pub fn merge_populations(pops: &[Population]) -> Result<Population, LcsError> {
    let first = pops.first().ok_or(LcsError::EmptyPopulation)?;
    if pops.iter().any(|p| p.labels != first.labels) {
        return Err(LcsError::InvalidParams("populations have different label sets".into()));
    }
    let mut keyed: Vec<_> = pops.iter().flat_map(|p| &p.rules).map(|r| (r.canonical_key(), r)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    let mut rules: Vec<ClassifierRule> = Vec::new();
    let mut last_key = None;
    for (key, r) in keyed {
        match rules.last_mut() {
            Some(prev) if last_key.as_ref() == Some(&key) => {
                prev.numerosity += r.numerosity;
                prev.experience += r.experience;
                prev.correct_count += r.correct_count;
                prev.birth_iteration = prev.birth_iteration.min(r.birth_iteration);
            }
            _ => {
                rules.push(r.clone());
                last_key = Some(key);
            }
        }
    }
    let mut out = first.clone();
    out.rules = rules;
    Ok(out)
}

/// Replaces each rule's counters with its record on `data`.
fn reevaluate(pop: &mut Population, data: &TrainingSet) {
    pop.rules.par_iter_mut().for_each(|r| {
        let (mut exp, mut cor) = (0u64, 0u64);
        for (x, &y) in data.x.iter().zip(&data.y) {
            if r.matches_unchecked(x) {
                exp += 1;
                cor += u64::from(y == r.action);
            }
        }
        r.experience = exp;
        r.correct_count = cor;
    });
}

/// Map: round-robin shards trained independently (shard `s` uses seed
/// `params.seed + s`). Reduce: canonical merge, re-evaluation on the full
/// dataset, CRA2. A single shard is exactly `train` followed by CRA2.
pub fn train_two_layer(data: &TrainingSet, shard_count: usize, params: &LcsParams) -> Result<Population, LcsError> {
    if shard_count == 1 {
        params.validate()?;
        let (pop, _) = train(data, params)?;
        return compact_cra2(&pop, data);
    }
    reduce_shards(&train_shards(data, shard_count, params)?, data)
}

/// The map layer alone: one trained population per shard, in shard order.
pub fn train_shards(data: &TrainingSet, shard_count: usize, params: &LcsParams) -> Result<Vec<Population>, LcsError> {
    if shard_count == 0 {
        return Err(LcsError::InvalidParams("shard_count must be >= 1".into()));
    }
    if data.len() < shard_count {
        return Err(LcsError::InvalidParams(format!("{} instances for {shard_count} shards", data.len())));
    }
    let shards: Vec<TrainingSet> = (0..shard_count)
        .map(|s| data.subset(&(s..data.len()).step_by(shard_count).collect::<Vec<_>>()))
        .collect();
    shards
        .par_iter()
        .enumerate()
        .map(|(s, shard)| {
            let p = LcsParams { seed: params.seed.wrapping_add(s as u64), ..params.clone() };
            train(shard, &p).map(|(pop, _)| pop)
        })
        .collect()
}

/// The reduce layer: the outcome does not depend on the order of `pops`.
pub fn reduce_shards(pops: &[Population], data: &TrainingSet) -> Result<Population, LcsError> {
    let mut merged = merge_populations(pops)?;
    reevaluate(&mut merged, data);
    merged.rules.retain(|r| r.experience > 0);
    if merged.rules.is_empty() {
        return Err(LcsError::EmptyPopulation);
    }
    compact_cra2(&merged, data)
}
