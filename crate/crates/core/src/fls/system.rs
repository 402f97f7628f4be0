use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fls::{fire_rule, km_type_reduce, FiringInterval, FlsError, IT2TrapMF, MembershipInterval, Trapezoid};
use crate::scenario::ScenarioConfig;

/// Score reported when no rule fires.
pub const NEUTRAL_SCORE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputClass {
    UavParams,
    Environment,
    Imagery,
    TargetInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub label: String,
    #[serde(flatten)]
    pub mf: IT2TrapMF,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinguisticVariable {
    pub name: String,
    pub domain: [f64; 2],
    /// Tags an input with the kind of information it carries.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classes: Vec<InputClass>,
    /// Ordered from the lowest to the highest label.
    pub terms: Vec<Term>,
}

impl LinguisticVariable {
    pub fn term_index(&self, label: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.label == label)
    }

    pub fn fuzzify(&self, x: f64) -> Result<Vec<MembershipInterval>, FlsError> {
        let [lo, hi] = self.domain;
        if !(lo <= x && x <= hi) {
            return Err(FlsError::DomainViolation { variable: self.name.clone(), value: x });
        }
        Ok(self.terms.iter().map(|t| t.mf.fuzzify(x)).collect())
    }

    fn validate(&self) -> Result<(), FlsError> {
        let [lo, hi] = self.domain;
        if !(lo < hi) || self.terms.is_empty() {
            return Err(FlsError::InvalidSystem(format!("{}: empty domain or no terms", self.name)));
        }
        for t in &self.terms {
            t.mf.validate()?;
            if t.mf.upper.a < lo || t.mf.upper.d > hi {
                return Err(FlsError::InvalidSystem(format!("{}/{} extends past the domain", self.name, t.label)));
            }
        }
        const STEPS: usize = 1000;
        for k in 0..=STEPS {
            let x = lo + (hi - lo) * k as f64 / STEPS as f64;
            if self.terms.iter().all(|t| t.mf.upper.eval(x) <= 0.0) {
                return Err(FlsError::InvalidSystem(format!("{} has a coverage gap at {x}", self.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzyRule {
    /// One label per input variable, in input order.
    pub antecedent: Vec<String>,
    pub consequent: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PerceptionClass {
    Poor,
    Marginal,
    Good,
}

impl PerceptionClass {
    pub fn from_score(score: f64) -> Self {
        if score < 1.0 / 3.0 {
            PerceptionClass::Poor
        } else if score < 2.0 / 3.0 {
            PerceptionClass::Marginal
        } else {
            PerceptionClass::Good
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleActivation {
    pub rule: usize,
    pub antecedent: Vec<String>,
    pub consequent: String,
    pub firing: FiringInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionEstimate {
    pub y_l: f64,
    pub y_r: f64,
    pub score: f64,
    pub class: PerceptionClass,
    /// No rule fired; the score is the neutral fallback.
    pub no_firing: bool,
    pub activations: Vec<RuleActivation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlsSystem {
    pub format_version: String,
    pub inputs: Vec<LinguisticVariable>,
    pub output: LinguisticVariable,
    pub rules: Vec<FuzzyRule>,
}

impl FlsSystem {
    pub fn new(inputs: Vec<LinguisticVariable>, output: LinguisticVariable, rules: Vec<FuzzyRule>) -> Result<Self, FlsError> {
        let s = Self { format_version: crate::FORMAT_VERSION.to_string(), inputs, output, rules };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), FlsError> {
        crate::check_format_version(&self.format_version).map_err(FlsError::Format)?;
        for v in self.inputs.iter().chain([&self.output]) {
            v.validate()?;
        }
        for (i, r) in self.rules.iter().enumerate() {
            if r.antecedent.len() != self.inputs.len() {
                return Err(FlsError::InvalidSystem(format!("rule {i} has {} antecedents", r.antecedent.len())));
            }
            for (v, l) in self.inputs.iter().zip(&r.antecedent) {
                if v.term_index(l).is_none() {
                    return Err(FlsError::InvalidSystem(format!("rule {i}: {} has no term {l:?}", v.name)));
                }
            }
            if self.output.term_index(&r.consequent).is_none() {
                return Err(FlsError::InvalidSystem(format!("rule {i}: unknown consequent {:?}", r.consequent)));
            }
        }
        Ok(())
    }

    pub fn input_names(&self) -> Vec<&str> {
        self.inputs.iter().map(|v| v.name.as_str()).collect()
    }

    /// Inputs in `self.inputs` order.
    pub fn infer(&self, values: &[f64]) -> Result<PerceptionEstimate, FlsError> {
        if values.len() != self.inputs.len() {
            let missing = self.inputs.get(values.len()).map_or_else(|| "<extra input>".to_string(), |v| v.name.clone());
            return Err(FlsError::MissingInput(missing));
        }
        let grades: Vec<Vec<MembershipInterval>> =
            self.inputs.iter().zip(values).map(|(v, &x)| v.fuzzify(x)).collect::<Result<_, _>>()?;
        // Rules sharing a consequent are merged with max into one firing
        // interval per output term.
        let centroids: Vec<f64> = self.output.terms.iter().map(|t| t.mf.centroid()).collect();
        let mut firing = vec![FiringInterval { lower: 0.0, upper: 0.0 }; centroids.len()];
        let mut activations = Vec::with_capacity(self.rules.len());
        for (i, rule) in self.rules.iter().enumerate() {
            let g: Vec<MembershipInterval> = rule
                .antecedent
                .iter()
                .zip(&self.inputs)
                .zip(&grades)
                .map(|((label, var), gs)| gs[var.term_index(label).expect("validated")])
                .collect();
            let f = fire_rule(&g);
            let k = self.output.term_index(&rule.consequent).expect("validated");
            firing[k].lower = firing[k].lower.max(f.lower);
            firing[k].upper = firing[k].upper.max(f.upper);
            activations.push(RuleActivation {
                rule: i,
                antecedent: rule.antecedent.clone(),
                consequent: rule.consequent.clone(),
                firing: f,
            });
        }
        let (y_l, y_r, no_firing) = match km_type_reduce(&centroids, &firing) {
            Ok(r) => (r.y_l, r.y_r, false),
            Err(FlsError::NoFiring) => (NEUTRAL_SCORE, NEUTRAL_SCORE, true),
            Err(e) => return Err(e),
        };
        let score = ((y_l + y_r) / 2.0).clamp(0.0, 1.0);
        Ok(PerceptionEstimate { y_l, y_r, score, class: PerceptionClass::from_score(score), no_firing, activations })
    }

    pub fn infer_named(&self, values: &BTreeMap<String, f64>) -> Result<PerceptionEstimate, FlsError> {
        let ordered: Vec<f64> = self
            .inputs
            .iter()
            .map(|v| values.get(&v.name).copied().ok_or_else(|| FlsError::MissingInput(v.name.clone())))
            .collect::<Result<_, _>>()?;
        self.infer(&ordered)
    }
}

/// Target size over the camera footprint radius, clamped to [0, 1].
pub fn apparent_target_size(target_size: f64, altitude: f64, fov_deg: f64) -> f64 {
    let footprint = altitude * (fov_deg.to_radians() / 2.0).tan();
    if footprint <= 0.0 {
        return 1.0;
    }
    (target_size / footprint).clamp(0.0, 1.0)
}

/// Inputs of the default system for a scenario seen from `altitude`.
pub fn fls_inputs_for(config: &ScenarioConfig, altitude: f64) -> [f64; 3] {
    [
        config.visibility.clamp(0.0, 1.0),
        config.light_level.clamp(0.0, 1.0),
        apparent_target_size(config.target_size, altitude, config.camera_fov_deg),
    ]
}

fn term(label: &str, upper: [f64; 4], lower: [f64; 4], height: f64) -> Term {
    Term { label: label.into(), mf: IT2TrapMF::new(Trapezoid::from(upper), Trapezoid::from(lower), height).expect("valid") }
}

fn unit_terms() -> Vec<Term> {
    vec![
        term("Low", [0.0, 0.0, 0.3, 0.5], [0.0, 0.0, 0.3, 0.45], 0.8),
        term("Medium", [0.1, 0.25, 0.75, 0.9], [0.15, 0.3, 0.7, 0.85], 0.8),
        term("High", [0.5, 0.7, 1.0, 1.0], [0.55, 0.7, 1.0, 1.0], 0.8),
    ]
}

/// Visibility, light level and apparent target size, three terms each,
/// with the full 27-rule grid. The consequent is the lowest of the three
/// antecedent levels.
///
/// Adjacent terms overlap in their cores, and one term of each variable
/// sits at full height wherever its neighbour moves. Together with the
/// min consequent this keeps the score non-decreasing in every input.
pub fn build_default_system() -> FlsSystem {
    let inputs = vec![
        LinguisticVariable {
            name: "visibility".into(),
            domain: [0.0, 1.0],
            classes: vec![InputClass::Environment],
            terms: unit_terms(),
        },
        LinguisticVariable {
            name: "light_level".into(),
            domain: [0.0, 1.0],
            classes: vec![InputClass::Environment],
            terms: unit_terms(),
        },
        LinguisticVariable {
            name: "apparent_size".into(),
            domain: [0.0, 1.0],
            classes: vec![InputClass::UavParams, InputClass::Imagery, InputClass::TargetInfo],
            terms: vec![
                term("Low", [0.0, 0.0, 0.02, 0.04], [0.0, 0.0, 0.02, 0.035], 0.8),
                term("Medium", [0.005, 0.015, 0.08, 0.12], [0.008, 0.02, 0.08, 0.11], 0.8),
                term("High", [0.04, 0.08, 1.0, 1.0], [0.05, 0.08, 1.0, 1.0], 0.8),
            ],
        },
    ];
    let output = LinguisticVariable {
        name: "detection_performance".into(),
        domain: [0.0, 1.0],
        classes: vec![],
        terms: vec![
            term("Poor", [0.0, 0.0, 0.15, 0.35], [0.0, 0.0, 0.1, 0.3], 0.9),
            term("Marginal", [0.25, 0.45, 0.55, 0.75], [0.3, 0.5, 0.5, 0.7], 0.8),
            term("Good", [0.65, 0.85, 1.0, 1.0], [0.7, 0.9, 1.0, 1.0], 0.9),
        ],
    };
    let levels = ["Low", "Medium", "High"];
    let outputs = ["Poor", "Marginal", "Good"];
    let mut rules = Vec::with_capacity(27);
    for v in 0..3usize {
        for l in 0..3usize {
            for s in 0..3usize {
                rules.push(FuzzyRule {
                    antecedent: vec![levels[v].into(), levels[l].into(), levels[s].into()],
                    consequent: outputs[v.min(l).min(s)].into(),
                });
            }
        }
    }
    FlsSystem::new(inputs, output, rules).expect("default system is valid")
}

impl Default for FlsSystem {
    fn default() -> Self {
        build_default_system()
    }
}

pub fn write_system(path: impl AsRef<Path>, system: &FlsSystem) -> Result<(), FlsError> {
    let text = serde_json::to_string_pretty(system).map_err(|e| FlsError::Format(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| FlsError::Format(e.to_string()))
}

pub fn read_system(path: impl AsRef<Path>) -> Result<FlsSystem, FlsError> {
    let text = std::fs::read_to_string(path).map_err(|e| FlsError::Format(e.to_string()))?;
    let system: FlsSystem = serde_json::from_str(&text).map_err(|e| FlsError::Format(e.to_string()))?;
    system.validate()?;
    Ok(system)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rank(label: &str) -> usize {
        ["Low", "Medium", "High", "Poor", "Marginal", "Good"].iter().position(|l| *l == label).unwrap() % 3
    }

    #[test]
    fn default_rulebase_shape() {
        let s = build_default_system();
        assert_eq!(s.rules.len(), 27);
        let find = |a: [&str; 3]| &s.rules.iter().find(|r| r.antecedent == a).unwrap().consequent;
        assert_eq!(find(["High", "High", "High"]), "Good");
        assert_eq!(find(["Low", "Low", "Low"]), "Poor");
        // Raising any single antecedent never lowers the consequent.
        for r in &s.rules {
            for k in 0..3 {
                let i = rank(&r.antecedent[k]);
                if i < 2 {
                    let mut up = r.antecedent.clone();
                    up[k] = ["Low", "Medium", "High"][i + 1].into();
                    let other = s.rules.iter().find(|o| o.antecedent == up).unwrap();
                    assert!(rank(&other.consequent) >= rank(&r.consequent));
                }
            }
        }
    }

    #[test]
    fn extreme_inputs() {
        let s = build_default_system();
        assert_eq!(s.infer(&[1.0, 1.0, 1.0]).unwrap().class, PerceptionClass::Good);
        for light in [0.0, 0.5, 1.0] {
            for size in [0.0, 0.05, 1.0] {
                assert_eq!(s.infer(&[0.0, light, size]).unwrap().class, PerceptionClass::Poor);
            }
        }
        let e = s.infer(&[0.7, 0.2, 0.05]).unwrap();
        assert!(e.y_l <= e.y_r && (0.0..=1.0).contains(&e.score));
        assert_eq!(e.activations.len(), 27);
    }

    #[test]
    fn domain_and_input_errors() {
        let s = build_default_system();
        assert!(matches!(s.infer(&[1.2, 0.5, 0.5]), Err(FlsError::DomainViolation { .. })));
        assert!(matches!(s.infer(&[0.5]), Err(FlsError::MissingInput(_))));
        let named: BTreeMap<String, f64> = [("visibility".to_string(), 1.0), ("light_level".to_string(), 1.0)].into();
        assert_eq!(s.infer_named(&named), Err(FlsError::MissingInput("apparent_size".into())));
    }

    #[test]
    fn no_firing_gives_neutral_score() {
        let mut s = build_default_system();
        s.rules.retain(|r| r.antecedent[0] == "High");
        let e = s.infer(&[0.1, 0.5, 0.5]).unwrap();
        assert!(e.no_firing);
        assert_eq!(e.score, NEUTRAL_SCORE);
    }

    #[test]
    fn monotone_in_visibility_on_grid() {
        let s = build_default_system();
        let g = |k: usize| k as f64 / 19.0;
        for l in 0..20 {
            for z in 0..20 {
                let mut prev = f64::NEG_INFINITY;
                for v in 0..20 {
                    let score = s.infer(&[g(v), g(l), g(z)]).unwrap().score;
                    assert!(score >= prev - 1e-12, "v={} l={} z={}: {score} < {prev}", g(v), g(l), g(z));
                    prev = score;
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn monotone_in_every_input(base in proptest::array::uniform3(0.0..=1.0f64), v0 in 0.0..=1.0f64, v1 in 0.0..=1.0f64, k in 0usize..3) {
            let s = build_default_system();
            let at = |v: f64| {
                let mut x = base;
                x[k] = v;
                s.infer(&x).unwrap().score
            };
            proptest::prop_assert!(at(v0.max(v1)) >= at(v0.min(v1)) - 1e-12);
        }
    }

    /// Independent type-1 system: min firing, max per consequent, then the
    /// centroid-weighted average.
    fn type1_score(s: &FlsSystem, x: &[f64]) -> f64 {
        let mut best: BTreeMap<&str, f64> = BTreeMap::new();
        for r in &s.rules {
            let mut f: f64 = 1.0;
            for ((label, var), &v) in r.antecedent.iter().zip(&s.inputs).zip(x) {
                let t = var.terms.iter().find(|t| &t.label == label).unwrap();
                f = f.min(t.mf.upper.eval(v));
            }
            let e = best.entry(r.consequent.as_str()).or_insert(0.0);
            *e = e.max(f);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (label, f) in best {
            let c = s.output.terms.iter().find(|t| t.label == label).unwrap().mf.upper.centroid();
            num += f * c;
            den += f;
        }
        if den == 0.0 {
            NEUTRAL_SCORE
        } else {
            num / den
        }
    }

    fn collapse(mut s: FlsSystem) -> FlsSystem {
        for v in s.inputs.iter_mut().chain([&mut s.output]) {
            for t in &mut v.terms {
                t.mf = IT2TrapMF::type1(t.mf.upper);
            }
        }
        s
    }

    #[test]
    fn collapsed_fou_matches_type1() {
        let s = collapse(build_default_system());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let x = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            let e = s.infer(&x).unwrap();
            assert!((e.score - type1_score(&s, &x)).abs() < 1e-9);
        }
    }

    #[test]
    fn system_file_round_trip() {
        let s = build_default_system();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("fls.json");
        write_system(&p, &s).unwrap();
        assert_eq!(read_system(&p).unwrap(), s);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("\"upper\"") && text.contains("\"antecedent\""));
    }

    #[test]
    fn apparent_size() {
        assert!((apparent_target_size(5.0, 100.0, 90.0) - 0.05).abs() < 1e-12);
        assert_eq!(apparent_target_size(5.0, 0.0, 90.0), 1.0);
        assert_eq!(apparent_target_size(500.0, 10.0, 90.0), 1.0);
    }
}
