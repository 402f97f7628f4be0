use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lcs::predict::{argmax, rule_vote};
use crate::lcs::{ClassifierRule, LcsError, Population, TrainingSet};

/// Indices ordered by accuracy, numerosity, then generality, all
/// descending; original index breaks remaining ties.
fn quality_order(rules: &[ClassifierRule]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rules.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&rules[a], &rules[b]);
        rb.accuracy()
            .total_cmp(&ra.accuracy())
            .then(rb.numerosity.cmp(&ra.numerosity))
            .then(rb.generality().total_cmp(&ra.generality()))
            .then(a.cmp(&b))
    });
    order
}

fn check_arity(pop: &Population, data: &TrainingSet) -> Result<(), LcsError> {
    let arity = pop.arity().ok_or(LcsError::EmptyPopulation)?;
    if data.is_empty() {
        return Err(LcsError::EmptyDataset);
    }
    if data.arity() != arity {
        return Err(LcsError::ArityMismatch { expected: arity, got: data.arity() });
    }
    if data.labels != pop.labels {
        return Err(LcsError::InvalidParams("dataset and population label sets differ".into()));
    }
    Ok(())
}

/// Greedy coverage compaction.
///
/// First pass: repeatedly keep the rule that correctly classifies the
/// most instances not yet covered by kept rules, until no rule adds
/// coverage (ties go to the earlier rule in quality order). Second pass:
/// while the kept set misclassifies instances some discarded rule labels
/// correctly, add the discarded rule fixing the most of them, accepting it
/// only if the dataset accuracy of the kept set strictly improves.
pub fn compact_cra2(pop: &Population, data: &TrainingSet) -> Result<Population, LcsError> {
    check_arity(pop, data)?;
    let order = quality_order(&pop.rules);
    let words = data.len().div_ceil(64);
    let cover_bits: Vec<Vec<u64>> = order
        .par_iter()
        .map(|&ri| {
            let r = &pop.rules[ri];
            let mut bits = vec![0u64; words];
            for (i, (x, &y)) in data.x.iter().zip(&data.y).enumerate() {
                if y == r.action && r.matches_unchecked(x) {
                    bits[i / 64] |= 1 << (i % 64);
                }
            }
            bits
        })
        .collect();

    let mut covered = vec![0u64; words];
    let mut heap: BinaryHeap<(u32, Reverse<usize>)> =
        cover_bits.iter().enumerate().map(|(pos, b)| (gain(b, &covered), Reverse(pos))).collect();
    let mut kept = vec![false; order.len()];
    // Stored gains only shrink, so a popped entry whose recomputed gain is
    // unchanged is the true maximum.
    while let Some((stale, Reverse(pos))) = heap.pop() {
        if stale == 0 {
            break;
        }
        let fresh = gain(&cover_bits[pos], &covered);
        if fresh == stale {
            for (c, b) in covered.iter_mut().zip(&cover_bits[pos]) {
                *c |= b;
            }
            kept[pos] = true;
        } else if fresh > 0 {
            heap.push((fresh, Reverse(pos)));
        }
    }
    if !kept.iter().any(|&k| k) {
        kept[0] = true;
    }
    repair(pop, data, &order, &cover_bits, &mut kept);

    let mut out = pop.clone();
    out.rules = (0..order.len()).filter(|&p| kept[p]).map(|p| pop.rules[order[p]].clone()).collect();
    Ok(out)
}

fn gain(bits: &[u64], mask: &[u64]) -> u32 {
    bits.iter().zip(mask).map(|(b, m)| (b & !m).count_ones()).sum()
}

fn repair(pop: &Population, data: &TrainingSet, order: &[usize], cover_bits: &[Vec<u64>], kept: &mut [bool]) {
    let n_class = pop.labels.len();
    let fallback = pop.majority_class().unwrap_or(0);
    let mut votes = vec![0.0; data.len() * n_class];
    let mut any = vec![false; data.len()];
    let add = |rule: &ClassifierRule, votes: &mut [f64], any: &mut [bool]| {
        let v = rule_vote(rule, pop.nu);
        for (i, x) in data.x.iter().enumerate() {
            if rule.matches_unchecked(x) {
                votes[i * n_class + rule.action as usize] += v;
                any[i] = true;
            }
        }
    };
    for p in (0..order.len()).filter(|&p| kept[p]) {
        add(&pop.rules[order[p]], &mut votes, &mut any);
    }
    let predicted = |i: usize, votes: &[f64], any: &[bool]| {
        if any[i] {
            argmax(&votes[i * n_class..(i + 1) * n_class])
        } else {
            fallback
        }
    };
    let words = data.len().div_ceil(64);
    // Bits set for correctly classified instances.
    let mut right = vec![0u64; words];
    let mut n_right = 0usize;
    for i in 0..data.len() {
        if predicted(i, &votes, &any) == data.y[i] {
            right[i / 64] |= 1 << (i % 64);
            n_right += 1;
        }
    }
    let mut rejected = vec![false; order.len()];
    loop {
        let best = (0..order.len())
            .filter(|&p| !kept[p] && !rejected[p])
            .map(|p| (gain(&cover_bits[p], &right), Reverse(p)))
            .max();
        let Some((g, Reverse(p))) = best else { break };
        if g == 0 {
            break;
        }
        let mut trial_votes = votes.clone();
        let mut trial_any = any.clone();
        add(&pop.rules[order[p]], &mut trial_votes, &mut trial_any);
        let mut trial_right = vec![0u64; words];
        let mut trial_n = 0usize;
        for i in 0..data.len() {
            if predicted(i, &trial_votes, &trial_any) == data.y[i] {
                trial_right[i / 64] |= 1 << (i % 64);
                trial_n += 1;
            }
        }
        if trial_n > n_right {
            kept[p] = true;
            (votes, any, right, n_right) = (trial_votes, trial_any, trial_right, trial_n);
            rejected.iter_mut().for_each(|r| *r = false);
        } else {
            rejected[p] = true;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdrcThresholds {
    pub min_experience: u64,
    pub min_accuracy: f64,
    pub min_numerosity: u32,
}

impl Default for PdrcThresholds {
    fn default() -> Self {
        Self { min_experience: 10, min_accuracy: 0.8, min_numerosity: 1 }
    }
}

/// Threshold filter. A class present in the input always keeps its best
/// rule (by quality order), even when every rule of it fails.
pub fn compact_pdrc(pop: &Population, th: &PdrcThresholds) -> Result<Population, LcsError> {
    if pop.is_empty() {
        return Err(LcsError::EmptyPopulation);
    }
    let pass = |r: &ClassifierRule| {
        r.experience >= th.min_experience && r.accuracy() >= th.min_accuracy && r.numerosity >= th.min_numerosity
    };
    let mut keep: Vec<bool> = pop.rules.iter().map(pass).collect();
    let order = quality_order(&pop.rules);
    for class in 0..pop.labels.len() as u16 {
        let of_class = |&&i: &&usize| pop.rules[i].action == class;
        if !order.iter().filter(of_class).any(|&i| keep[i]) {
            if let Some(&best) = order.iter().find(of_class) {
                keep[best] = true;
            }
        }
    }
    let mut out = pop.clone();
    out.rules = pop.rules.iter().zip(keep).filter(|(_, k)| *k).map(|(r, _)| r.clone()).collect();
    Ok(out)
}
