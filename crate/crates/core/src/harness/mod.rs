//! Empirical verification of the inequalities: corpora, ratios and reports.

pub mod corpus;
pub mod ratios;
pub mod suites;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use corpus::{build_corpus, CaseGrid, CorpusCase, CorpusKind};

/// The registered inequality IDs, in run order.
pub const INEQUALITY_IDS: [&str; 13] = [
    "adams-2.1",
    "sharp-max-2.2",
    "weighted-2.3",
    "hardy-2.4",
    "truncated-2.6",
    "weighted-2.8",
    "counterexample-2.9",
    "trace-3.5",
    "trace-local-3.5c",
    "tail-3.6",
    "trace-morrey-3.2",
    "trace-morrey-3.3",
    "trace-remark-3.4",
];

/// Default threshold on `scale_drift`.
pub const DEFAULT_DRIFT: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub scale_index: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub case_id: String,
    pub reason: String,
}

/// A case that produced a ratio or was set aside.
pub type Outcome = std::result::Result<CaseResult, Exclusion>;

/// Builds a case, excluding it when `rhs` is zero or not finite.
pub fn make_case(case_id: impl Into<String>, scale_index: usize, lhs: f64, rhs: f64) -> Outcome {
    let case_id = case_id.into();
    if !(rhs > 0.0) || !rhs.is_finite() {
        return Err(Exclusion { case_id, reason: format!("rhs = {rhs}") });
    }
    Ok(CaseResult { case_id, scale_index, lhs, rhs, ratio: lhs / rhs })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
    pub version: String,
}

impl Default for Provenance {
    fn default() -> Self {
        Self { seed: 0, config_hash: String::new(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub inequality_id: String,
    pub params: serde_json::Value,
    pub cases: Vec<CaseResult>,
    /// `None` (JSON null) when there are no cases.
    pub empirical_constant: Option<f64>,
    pub scale_drift: Option<f64>,
    pub excluded: Vec<Exclusion>,
    pub pass: bool,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// A named diagnostic that must hold for the suite to pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: serde_json::Value,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, value: impl Serialize, pass: bool) -> Self {
        Self { name: name.into(), value: serde_json::to_value(value).unwrap_or(serde_json::Value::Null), pass }
    }

    /// Informational entry that never fails the suite.
    pub fn info(name: &str, value: impl Serialize) -> Self {
        Self::new(name, value, true)
    }
}

/// Everything a suite produced before the constant is estimated.
#[derive(Debug, Clone, Default)]
pub struct Draft {
    pub inequality_id: String,
    pub params: serde_json::Map<String, serde_json::Value>,
    pub outcomes: Vec<Outcome>,
    pub checks: Vec<Check>,
}

impl Draft {
    pub fn new(id: &str) -> Self {
        Self { inequality_id: id.into(), ..Default::default() }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.params.insert(key.into(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }

    pub fn push(&mut self, o: Outcome) {
        self.outcomes.push(o);
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }
}

/// Largest ratio in each scale group.
pub fn group_maxima(cases: &[CaseResult]) -> BTreeMap<usize, f64> {
    let mut g: BTreeMap<usize, f64> = BTreeMap::new();
    for c in cases {
        let e = g.entry(c.scale_index).or_insert(f64::NEG_INFINITY);
        *e = e.max(c.ratio);
    }
    g
}

/// Turns a draft into a report: the empirical constant is the largest
/// ratio, the drift is the spread of the per-scale maxima, and the report
/// passes iff the constant is finite, the drift is within `drift_threshold`
/// and every check holds.
pub fn estimate_constant(draft: Draft, drift_threshold: f64, provenance: Provenance) -> Result<VerificationReport> {
    let mut cases = Vec::new();
    let mut excluded = Vec::new();
    for o in draft.outcomes {
        match o {
            Ok(c) => cases.push(c),
            Err(e) => excluded.push(e),
        }
    }
    if cases.is_empty() && !excluded.is_empty() {
        return Err(Error::Degenerate(format!("{}: all {} cases degenerate", draft.inequality_id, excluded.len())));
    }
    cases.sort_by(|a, b| (a.scale_index, &a.case_id).cmp(&(b.scale_index, &b.case_id)));
    excluded.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    let empirical = cases.iter().map(|c| c.ratio).fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
    let groups = group_maxima(&cases);
    let drift = if groups.is_empty() {
        None
    } else {
        let hi = groups.values().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = groups.values().cloned().fold(f64::INFINITY, f64::min);
        Some(if hi == 0.0 && lo == 0.0 { 1.0 } else { hi / lo })
    };
    let mut reasons = Vec::new();
    if cases.len() < 5 {
        reasons.push(format!("{} cases, need at least 5", cases.len()));
    }
    if groups.len() < 2 {
        reasons.push(format!("{} scale groups, need at least 2", groups.len()));
    }
    match empirical {
        Some(c) if c.is_finite() => {}
        _ => reasons.push("empirical constant not finite".into()),
    }
    match drift {
        Some(d) if d.is_finite() && d <= drift_threshold => {}
        Some(d) => reasons.push(format!("scale drift {d} exceeds {drift_threshold}")),
        None => {}
    }
    for c in draft.checks.iter().filter(|c| !c.pass) {
        reasons.push(format!("check {} failed", c.name));
    }
    let mut params = draft.params;
    params.insert("drift_threshold".into(), drift_threshold.into());
    params.insert("excluded_count".into(), excluded.len().into());
    if !draft.checks.is_empty() {
        let checks: serde_json::Map<String, serde_json::Value> = draft
            .checks
            .iter()
            .map(|c| (c.name.clone(), serde_json::json!({ "value": c.value, "pass": c.pass })))
            .collect();
        params.insert("checks".into(), serde_json::Value::Object(checks));
    }
    Ok(VerificationReport {
        inequality_id: draft.inequality_id,
        params: serde_json::Value::Object(params),
        cases,
        empirical_constant: empirical,
        scale_drift: drift,
        excluded,
        pass: reasons.is_empty(),
        provenance,
        reason: if reasons.is_empty() { None } else { Some(reasons.join("; ")) },
    })
}

/// Log-log sweep of the counterexample family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kappa: Vec<f64>,
    pub norm_bdu: Vec<f64>,
    pub norm_d2u: Vec<f64>,
    pub norm_u: Vec<f64>,
    pub slope_bdu: f64,
    pub slope_d2u: f64,
    /// Largest over smallest of `norm_u`.
    pub u_drift: f64,
    /// Same quantities without normalization by the support ball.
    pub unnormalized: SweepNorms,
    /// Largest relative deviation of `|Du_κ|` from `1/κ` on the annulus
    /// `2κ < |x| < 3κ`, per κ.
    pub annulus_gradient_error: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepNorms {
    pub norm_bdu: Vec<f64>,
    pub norm_d2u: Vec<f64>,
    pub norm_u: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draft_with(ratios: &[(usize, f64)]) -> Draft {
        let mut d = Draft::new("adams-2.1");
        for (i, &(s, r)) in ratios.iter().enumerate() {
            d.push(make_case(format!("c{i}"), s, r, 1.0));
        }
        d
    }

    #[test]
    fn equal_ratios() {
        let d = draft_with(&[(0, 2.0), (0, 2.0), (1, 2.0), (1, 2.0), (2, 2.0)]);
        let r = estimate_constant(d, 1.5, Provenance::default()).unwrap();
        assert_eq!(r.empirical_constant, Some(2.0));
        assert_eq!(r.scale_drift, Some(1.0));
        assert!(r.pass);
    }

    #[test]
    fn zero_rhs_is_excluded() {
        let mut d = draft_with(&[(0, 1.0), (0, 1.0), (1, 1.0), (1, 1.0), (2, 1.0)]);
        d.push(make_case("z", 0, 1.0, 0.0));
        let r = estimate_constant(d, 1.5, Provenance::default()).unwrap();
        assert_eq!(r.excluded.len(), 1);
        assert_eq!(r.params["excluded_count"], 1);
        assert!(r.pass);
    }

    #[test]
    fn all_degenerate_is_an_error() {
        let mut d = Draft::new("adams-2.1");
        d.push(make_case("z", 0, 0.0, 0.0));
        assert!(matches!(estimate_constant(d, 1.5, Provenance::default()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn empty_report_fails_with_reason() {
        let r = estimate_constant(Draft::new("hardy-2.4"), 1.5, Provenance::default()).unwrap();
        assert!(!r.pass);
        assert!(r.cases.is_empty());
        assert!(r.reason.is_some());
    }

    #[test]
    fn drift_over_threshold_fails() {
        let d = draft_with(&[(0, 1.0), (0, 1.0), (1, 2.0), (1, 1.0), (2, 1.0)]);
        let r = estimate_constant(d, 1.5, Provenance::default()).unwrap();
        assert_eq!(r.scale_drift, Some(2.0));
        assert!(!r.pass);
    }
}
