use serde::{Deserialize, Serialize};

use crate::prep::{FeatureVector, PrepError};

/// Per-feature min/max observed on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_normalization<'a, I>(vectors: I) -> Result<NormalizationStats, PrepError>
where
    I: IntoIterator<Item = &'a FeatureVector>,
{
    let mut iter = vectors.into_iter();
    let first = iter.next().ok_or(PrepError::EmptyDataset)?;
    let mut stats = NormalizationStats { min: first.0.clone(), max: first.0.clone() };
    for v in iter {
        if v.len() != stats.min.len() {
            return Err(PrepError::ArityMismatch { expected: stats.min.len(), got: v.len() });
        }
        for (i, &x) in v.0.iter().enumerate() {
            stats.min[i] = stats.min[i].min(x);
            stats.max[i] = stats.max[i].max(x);
        }
    }
    Ok(stats)
}

/// Min-max scaling into [0, 1]; out-of-range values clamp, and a feature
/// whose fitted range is empty maps to 0.5.
pub fn apply_normalization(v: &FeatureVector, stats: &NormalizationStats) -> Result<FeatureVector, PrepError> {
    if v.len() != stats.min.len() {
        return Err(PrepError::ArityMismatch { expected: stats.min.len(), got: v.len() });
    }
    let out = v
        .0
        .iter()
        .zip(stats.min.iter().zip(&stats.max))
        .map(|(&x, (&lo, &hi))| if hi > lo { ((x - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 })
        .collect();
    Ok(FeatureVector(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector(v.to_vec())
    }

    #[test]
    fn endpoints_and_degenerate() {
        let data = [fv(&[1.0, 7.0]), fv(&[3.0, 7.0]), fv(&[2.0, 7.0])];
        let stats = fit_normalization(&data).unwrap();
        assert_eq!(apply_normalization(&fv(&[1.0, 7.0]), &stats).unwrap().0, vec![0.0, 0.5]);
        assert_eq!(apply_normalization(&fv(&[3.0, 3.0]), &stats).unwrap().0, vec![1.0, 0.5]);
        assert_eq!(apply_normalization(&fv(&[9.0, 9.0]), &stats).unwrap().0, vec![1.0, 0.5]);
        assert_eq!(apply_normalization(&fv(&[-9.0, 0.0]), &stats).unwrap().0, vec![0.0, 0.5]);
    }

    #[test]
    fn errors() {
        let empty: Vec<FeatureVector> = vec![];
        assert!(matches!(fit_normalization(&empty), Err(PrepError::EmptyDataset)));
        let stats = fit_normalization(&[fv(&[1.0])]).unwrap();
        assert!(matches!(apply_normalization(&fv(&[1.0, 2.0]), &stats), Err(PrepError::ArityMismatch { .. })));
    }

    proptest! {
        #[test]
        fn twice_equals_once_then_clamp(
            data in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 1..20),
            probe in prop::collection::vec(-200.0f64..200.0, 3),
        ) {
            let vs: Vec<_> = data.into_iter().map(FeatureVector).collect();
            let stats = fit_normalization(&vs).unwrap();
            prop_assert!(stats.max.iter().zip(&stats.min).all(|(hi, lo)| hi >= lo));
            let once = apply_normalization(&FeatureVector(probe), &stats).unwrap();
            prop_assert!(once.0.iter().all(|x| (0.0..=1.0).contains(x)));
            let unit = NormalizationStats { min: vec![0.0; 3], max: vec![1.0; 3] };
            let clamped = apply_normalization(&once, &unit).unwrap();
            prop_assert_eq!(clamped, once);
        }
    }
}
