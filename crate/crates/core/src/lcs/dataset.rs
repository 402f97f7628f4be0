use std::collections::BTreeSet;

use crate::lcs::LcsError;

/// Training data in LCS form: class ids index `labels`, which is sorted
/// so that the smallest id is also the lexicographically smallest label.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub labels: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<u16>,
}

impl TrainingSet {
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, LcsError>
    where
        I: IntoIterator<Item = (Vec<f64>, S)>,
        S: AsRef<str>,
    {
        let pairs: Vec<(Vec<f64>, S)> = pairs.into_iter().collect();
        let labels: Vec<String> =
            pairs.iter().map(|(_, l)| l.as_ref().to_string()).collect::<BTreeSet<_>>().into_iter().collect();
        Self::with_labels(labels, pairs)
    }

    /// Uses a fixed label vocabulary, so datasets drawn from different
    /// splits share class ids. `labels` is sorted and deduplicated.
    pub fn with_labels<I, S>(mut labels: Vec<String>, pairs: I) -> Result<Self, LcsError>
    where
        I: IntoIterator<Item = (Vec<f64>, S)>,
        S: AsRef<str>,
    {
        labels.sort();
        labels.dedup();
        let mut set = TrainingSet { labels, x: Vec::new(), y: Vec::new() };
        for (features, label) in pairs {
            let class = set.class_of(label.as_ref()).ok_or_else(|| LcsError::UnknownLabel(label.as_ref().into()))?;
            if let Some(first) = set.x.first() {
                if first.len() != features.len() {
                    return Err(LcsError::ArityMismatch { expected: first.len(), got: features.len() });
                }
            }
            set.x.push(features);
            set.y.push(class);
        }
        Ok(set)
    }

    pub fn class_of(&self, label: &str) -> Option<u16> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok().map(|i| i as u16)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn subset(&self, indices: &[usize]) -> TrainingSet {
        TrainingSet {
            labels: self.labels.clone(),
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Fraction of instances carrying the most frequent label.
    pub fn majority_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let mut counts = vec![0usize; self.labels.len()];
        for &c in &self.y {
            counts[c as usize] += 1;
        }
        *counts.iter().max().unwrap() as f64 / self.len() as f64
    }
}
