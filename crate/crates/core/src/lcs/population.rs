use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lcs::{ClassifierRule, LcsError, LcsParams, Predicate};
use crate::prep::NormalizationStats;
use crate::{check_format_version, FORMAT_VERSION};

/// A trained rule set plus what is needed to apply it to raw features.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    /// Sorted class vocabulary; rule actions index into it.
    pub labels: Vec<String>,
    pub feature_names: Vec<String>,
    pub normalization: Option<NormalizationStats>,
    pub nu: f64,
    pub rules: Vec<ClassifierRule>,
}

impl Population {
    pub fn empty(labels: Vec<String>, nu: f64) -> Self {
        Self { labels, feature_names: Vec::new(), normalization: None, nu, rules: Vec::new() }
    }

    pub fn macro_size(&self) -> usize {
        self.rules.len()
    }

    pub fn micro_size(&self) -> usize {
        self.rules.iter().map(|r| r.numerosity as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn arity(&self) -> Option<usize> {
        self.rules.first().map(|r| r.condition.len())
    }

    pub fn label(&self, class: u16) -> &str {
        &self.labels[class as usize]
    }

    pub fn class_of(&self, label: &str) -> Option<u16> {
        self.labels.iter().position(|l| l == label).map(|i| i as u16)
    }

    /// Class with the largest total numerosity; ties go to the smaller id.
    pub fn majority_class(&self) -> Option<u16> {
        let mut mass = vec![0u64; self.labels.len()];
        for r in &self.rules {
            mass[r.action as usize] += r.numerosity as u64;
        }
        if self.rules.is_empty() {
            return None;
        }
        let mut best = 0;
        for (i, &m) in mass.iter().enumerate() {
            if m > mass[best] {
                best = i;
            }
        }
        Some(best as u16)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationHeader {
    pub format_version: String,
    pub feature_names: Vec<String>,
    pub labels: Vec<String>,
    pub nu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<NormalizationStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<LcsParams>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Line {
    Header(PopulationHeader),
    Rule(RuleLine),
}

#[derive(Serialize, Deserialize)]
struct RuleLine {
    condition: Vec<Predicate>,
    action: String,
    experience: u64,
    correct_count: u64,
    numerosity: u32,
    birth_iteration: u64,
}

pub fn write_population(path: impl AsRef<Path>, pop: &Population, params: Option<&LcsParams>) -> Result<(), LcsError> {
    let io = |e: std::io::Error| LcsError::Format(e.to_string());
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    write_population_to(&mut out, pop, params)?;
    out.flush().map_err(io)
}

/// Same format as [`write_population`], into any writer.
pub fn write_population_to<W: Write>(mut out: W, pop: &Population, params: Option<&LcsParams>) -> Result<(), LcsError> {
    let io = |e: std::io::Error| LcsError::Format(e.to_string());
    let header = PopulationHeader {
        format_version: FORMAT_VERSION.to_string(),
        feature_names: pop.feature_names.clone(),
        labels: pop.labels.clone(),
        nu: pop.nu,
        normalization: pop.normalization.clone(),
        params: params.cloned(),
    };
    let mut emit = |line: &Line| -> Result<(), LcsError> {
        let s = serde_json::to_string(line).map_err(|e| LcsError::Format(e.to_string()))?;
        writeln!(out, "{s}").map_err(io)
    };
    emit(&Line::Header(header))?;
    for r in &pop.rules {
        emit(&Line::Rule(RuleLine {
            condition: r.condition.clone(),
            action: pop.label(r.action).to_string(),
            experience: r.experience,
            correct_count: r.correct_count,
            numerosity: r.numerosity,
            birth_iteration: r.birth_iteration,
        }))?;
    }
    Ok(())
}

pub fn read_population(path: impl AsRef<Path>) -> Result<(Population, PopulationHeader), LcsError> {
    let file = File::open(path).map_err(|e| LcsError::Format(e.to_string()))?;
    let mut header: Option<PopulationHeader> = None;
    let mut pop: Option<Population> = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| LcsError::Format(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line =
            serde_json::from_str(&line).map_err(|e| LcsError::Format(format!("line {}: {e}", i + 1)))?;
        match (parsed, pop.as_mut()) {
            (Line::Header(h), None) => {
                check_format_version(&h.format_version).map_err(LcsError::Format)?;
                let mut p = Population::empty(h.labels.clone(), h.nu);
                p.feature_names = h.feature_names.clone();
                p.normalization = h.normalization.clone();
                pop = Some(p);
                header = Some(h);
            }
            (Line::Rule(r), Some(p)) => {
                let action = p.class_of(&r.action).ok_or_else(|| LcsError::UnknownLabel(r.action.clone()))?;
                if r.numerosity == 0 || r.correct_count > r.experience {
                    return Err(LcsError::Format(format!("line {}: inconsistent counters", i + 1)));
                }
                let mut rule = ClassifierRule::new(r.condition, action)
                    .with_counts(r.experience, r.correct_count, r.numerosity);
                rule.birth_iteration = r.birth_iteration;
                p.rules.push(rule);
            }
            (Line::Header(_), Some(_)) => return Err(LcsError::Format(format!("line {}: duplicate header", i + 1))),
            (Line::Rule(_), None) => return Err(LcsError::Format("rule before header".into())),
        }
    }
    match (pop, header) {
        (Some(p), Some(h)) => Ok((p, h)),
        _ => Err(LcsError::Format("missing header".into())),
    }
}
