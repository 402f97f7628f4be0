use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::lcs::{LcsError, LcsParams};

/// Condition on one normalized attribute. Serialized as `null` or `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "Option<[f64; 2]>", into = "Option<[f64; 2]>")]
pub enum Predicate {
    DontCare,
    Interval { lo: f64, hi: f64 },
}

impl From<Option<[f64; 2]>> for Predicate {
    fn from(v: Option<[f64; 2]>) -> Self {
        match v {
            None => Predicate::DontCare,
            Some([lo, hi]) => Predicate::interval(lo, hi),
        }
    }
}

impl From<Predicate> for Option<[f64; 2]> {
    fn from(p: Predicate) -> Self {
        match p {
            Predicate::DontCare => None,
            Predicate::Interval { lo, hi } => Some([lo, hi]),
        }
    }
}

impl Predicate {
    /// Clamped to [0, 1] with the bounds ordered.
    pub fn interval(lo: f64, hi: f64) -> Self {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        Predicate::Interval { lo: lo.clamp(0.0, 1.0), hi: hi.clamp(0.0, 1.0) }
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        match *self {
            Predicate::DontCare => true,
            Predicate::Interval { lo, hi } => lo <= v && v <= hi,
        }
    }

    /// True when every value accepted by `other` is accepted by `self`.
    pub fn covers(&self, other: &Predicate) -> bool {
        match (*self, *other) {
            (Predicate::DontCare, _) => true,
            (Predicate::Interval { .. }, Predicate::DontCare) => false,
            (Predicate::Interval { lo, hi }, Predicate::Interval { lo: l2, hi: h2 }) => lo <= l2 && h2 <= hi,
        }
    }

    pub fn is_dont_care(&self) -> bool {
        matches!(self, Predicate::DontCare)
    }

    /// Bitwise identity key, used for canonical ordering.
    pub(crate) fn key(&self) -> (u8, u64, u64) {
        match *self {
            Predicate::DontCare => (0, 0, 0),
            Predicate::Interval { lo, hi } => (1, lo.to_bits(), hi.to_bits()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierRule {
    pub condition: Vec<Predicate>,
    pub action: u16,
    pub experience: u64,
    pub correct_count: u64,
    pub numerosity: u32,
    pub birth_iteration: u64,
    /// Iteration of the last GA event in a correct set containing this rule.
    #[serde(skip)]
    pub(crate) ga_stamp: u64,
}

impl ClassifierRule {
    pub fn new(condition: Vec<Predicate>, action: u16) -> Self {
        Self { condition, action, experience: 0, correct_count: 0, numerosity: 1, birth_iteration: 0, ga_stamp: 0 }
    }

    pub fn with_counts(mut self, experience: u64, correct_count: u64, numerosity: u32) -> Self {
        self.experience = experience;
        self.correct_count = correct_count;
        self.numerosity = numerosity;
        self
    }

    pub fn accuracy(&self) -> f64 {
        if self.experience == 0 {
            0.0
        } else {
            self.correct_count as f64 / self.experience as f64
        }
    }

    pub fn fitness(&self, nu: f64) -> f64 {
        self.accuracy().powf(nu)
    }

    /// Fraction of DontCare predicates.
    pub fn generality(&self) -> f64 {
        if self.condition.is_empty() {
            return 1.0;
        }
        self.condition.iter().filter(|p| p.is_dont_care()).count() as f64 / self.condition.len() as f64
    }

    pub fn specificity(&self) -> f64 {
        1.0 - self.generality()
    }

    /// Unchecked match; callers guarantee arity.
    #[inline]
    pub fn matches_unchecked(&self, x: &[f64]) -> bool {
        self.condition.iter().zip(x).all(|(p, &v)| p.contains(v))
    }

    /// Every predicate of `self` covers the corresponding one of `other`.
    pub fn condition_covers(&self, other: &ClassifierRule) -> bool {
        self.condition.iter().zip(&other.condition).all(|(a, b)| a.covers(b))
    }

    pub(crate) fn same_rule(&self, other: &ClassifierRule) -> bool {
        self.action == other.action && self.condition.iter().map(Predicate::key).eq(other.condition.iter().map(Predicate::key))
    }

    pub(crate) fn canonical_key(&self) -> (u16, Vec<(u8, u64, u64)>) {
        (self.action, self.condition.iter().map(Predicate::key).collect())
    }
}

pub fn matches(rule: &ClassifierRule, instance: &[f64]) -> Result<bool, LcsError> {
    if rule.condition.len() != instance.len() {
        return Err(LcsError::ArityMismatch { expected: rule.condition.len(), got: instance.len() });
    }
    Ok(rule.matches_unchecked(instance))
}

/// Interval around `v` with half-width drawn from (0, spread].
pub(crate) fn interval_around<R: Rng + ?Sized>(v: f64, spread: f64, rng: &mut R) -> Predicate {
    let u = spread * (1.0 - rng.random::<f64>());
    let lo = (v - u).clamp(0.0, 1.0).min(v);
    let hi = (v + u).clamp(0.0, 1.0).max(v);
    Predicate::Interval { lo, hi }
}

/// New rule matching `instance`, labeled `action`, with one recorded
/// (correct) match.
pub fn cover<R: Rng + ?Sized>(instance: &[f64], action: u16, params: &LcsParams, rng: &mut R) -> ClassifierRule {
    let condition = instance
        .iter()
        .map(|&v| {
            if rng.random::<f64>() < params.p_dontcare {
                Predicate::DontCare
            } else {
                interval_around(v, params.cover_spread, rng)
            }
        })
        .collect();
    ClassifierRule::new(condition, action).with_counts(1, 1, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rule(cond: Vec<Predicate>) -> ClassifierRule {
        ClassifierRule::new(cond, 0)
    }

    #[test]
    fn matching_is_inclusive() {
        let all = rule(vec![Predicate::DontCare; 3]);
        assert!(matches(&all, &[0.3, 0.9, 0.0]).unwrap());
        let r = rule(vec![Predicate::interval(0.2, 0.4)]);
        assert!(matches(&r, &[0.4]).unwrap());
        assert!(matches(&r, &[0.2]).unwrap());
        assert!(!matches(&r, &[0.5]).unwrap());
        assert_eq!(matches(&r, &[0.1, 0.2]), Err(LcsError::ArityMismatch { expected: 1, got: 2 }));
    }

    #[test]
    fn cover_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = [0.1, 0.5, 0.95];
        let general = cover(&x, 2, &LcsParams { p_dontcare: 1.0, ..Default::default() }, &mut rng);
        assert_eq!(general.generality(), 1.0);
        assert_eq!(general.action, 2);
        assert_eq!((general.experience, general.correct_count, general.numerosity), (1, 1, 1));

        let point = cover(&x, 0, &LcsParams { p_dontcare: 0.0, cover_spread: 0.0, ..Default::default() }, &mut rng);
        for (p, &v) in point.condition.iter().zip(&x) {
            assert_eq!(*p, Predicate::Interval { lo: v, hi: v });
        }
    }

    #[test]
    fn serde_form() {
        let r = rule(vec![Predicate::DontCare, Predicate::interval(0.25, 0.5)]);
        let json = serde_json::to_string(&r.condition).unwrap();
        assert_eq!(json, "[null,[0.25,0.5]]");
        let back: Vec<Predicate> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r.condition);
    }

    #[test]
    fn accuracy_and_generality() {
        let r = rule(vec![Predicate::DontCare, Predicate::interval(0.0, 1.0)]).with_counts(4, 3, 2);
        assert_eq!(r.accuracy(), 0.75);
        assert_eq!(r.generality(), 0.5);
        assert!((r.fitness(2.0) - 0.5625).abs() < 1e-12);
        assert_eq!(rule(vec![]).accuracy(), 0.0);
    }

    #[test]
    fn covers_relation() {
        let wide = Predicate::interval(0.1, 0.9);
        let narrow = Predicate::interval(0.2, 0.3);
        assert!(wide.covers(&narrow) && !narrow.covers(&wide));
        assert!(Predicate::DontCare.covers(&wide) && !wide.covers(&Predicate::DontCare));
    }

    proptest! {
        #[test]
        fn covered_rule_matches_its_instance(
            x in prop::collection::vec(0.0f64..=1.0, 1..10),
            p in 0.0f64..=1.0,
            s0 in 0.0f64..=1.0,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let params = LcsParams { p_dontcare: p, cover_spread: s0, ..Default::default() };
            let r = cover(&x, 0, &params, &mut rng);
            prop_assert!(matches(&r, &x).unwrap());
            for pr in &r.condition {
                if let Predicate::Interval { lo, hi } = *pr {
                    prop_assert!((0.0..=1.0).contains(&lo) && lo <= hi && hi <= 1.0);
                }
            }
        }
    }
}
