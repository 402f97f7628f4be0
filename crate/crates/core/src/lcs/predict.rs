use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::lcs::{ClassifierRule, LcsError, Population, Predicate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleContribution {
    pub index: usize,
    pub condition: Vec<Predicate>,
    pub label: String,
    pub accuracy: f64,
    pub generality: f64,
    pub numerosity: u32,
    pub vote: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionExplanation {
    pub label: String,
    pub class: u16,
    pub votes: BTreeMap<String, f64>,
    /// Matching rules, strongest vote first.
    pub contributing: Vec<RuleContribution>,
    /// A more general matching rule of another class was outvoted.
    pub override_applied: bool,
    /// No rule matched; the label is the population's majority class.
    pub uncovered: bool,
}

#[inline]
pub(crate) fn rule_vote(rule: &ClassifierRule, nu: f64) -> f64 {
    rule.fitness(nu) * rule.numerosity as f64 * (1.0 + rule.specificity())
}

/// Index of the largest vote, smallest index on ties.
pub(crate) fn argmax(votes: &[f64]) -> u16 {
    let mut best = 0;
    for (i, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = i;
        }
    }
    best as u16
}

/// Vote mass per class from the rules matching `x`.
pub fn class_votes(pop: &Population, x: &[f64]) -> Result<Vec<f64>, LcsError> {
    check(pop, x)?;
    let mut votes = vec![0.0; pop.labels.len()];
    for r in pop.rules.iter().filter(|r| r.matches_unchecked(x)) {
        votes[r.action as usize] += rule_vote(r, pop.nu);
    }
    Ok(votes)
}

fn check(pop: &Population, x: &[f64]) -> Result<(), LcsError> {
    let arity = pop.arity().ok_or(LcsError::EmptyPopulation)?;
    if arity != x.len() {
        return Err(LcsError::ArityMismatch { expected: arity, got: x.len() });
    }
    Ok(())
}

/// Class only, without building the explanation. `None` when nothing matches.
pub(crate) fn predict_class(pop: &Population, x: &[f64], votes: &mut [f64]) -> Option<u16> {
    votes.iter_mut().for_each(|v| *v = 0.0);
    let mut any = false;
    for r in pop.rules.iter().filter(|r| r.matches_unchecked(x)) {
        votes[r.action as usize] += rule_vote(r, pop.nu);
        any = true;
    }
    any.then(|| argmax(votes))
}

/// `predict_class` with the uncovered fallback applied.
pub(crate) fn predict_or_majority(pop: &Population, x: &[f64], votes: &mut [f64]) -> u16 {
    predict_class(pop, x, votes).unwrap_or_else(|| pop.majority_class().unwrap_or(0))
}

pub fn predict(pop: &Population, x: &[f64]) -> Result<PredictionExplanation, LcsError> {
    check(pop, x)?;
    let matched: Vec<usize> = (0..pop.rules.len()).filter(|&i| pop.rules[i].matches_unchecked(x)).collect();
    let mut votes = vec![0.0; pop.labels.len()];
    for &i in &matched {
        let r = &pop.rules[i];
        votes[r.action as usize] += rule_vote(r, pop.nu);
    }
    let uncovered = matched.is_empty();
    let class = if uncovered { pop.majority_class().ok_or(LcsError::EmptyPopulation)? } else { argmax(&votes) };

    let max_gen_of = |pred: &dyn Fn(u16) -> bool| {
        matched
            .iter()
            .map(|&i| &pop.rules[i])
            .filter(|r| pred(r.action))
            .map(ClassifierRule::generality)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let override_applied = !uncovered && max_gen_of(&|a| a != class) > max_gen_of(&|a| a == class);

    let mut contributing: Vec<RuleContribution> = matched
        .iter()
        .map(|&i| {
            let r = &pop.rules[i];
            RuleContribution {
                index: i,
                condition: r.condition.clone(),
                label: pop.label(r.action).to_string(),
                accuracy: r.accuracy(),
                generality: r.generality(),
                numerosity: r.numerosity,
                vote: rule_vote(r, pop.nu),
            }
        })
        .collect();
    contributing.sort_by(|a, b| b.vote.total_cmp(&a.vote).then(a.index.cmp(&b.index)));

    Ok(PredictionExplanation {
        label: pop.label(class).to_string(),
        class,
        votes: pop.labels.iter().cloned().zip(votes).collect(),
        contributing,
        override_applied,
        uncovered,
    })
}
