use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const REPORT_SCHEMA: &str = "driftlab.report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

/// Direction of the comparison `statistic ⋚ tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// PASS iff statistic ≤ tolerance.
    AtMost,
    /// PASS iff statistic ≥ tolerance.
    AtLeast,
    /// PASS iff statistic > tolerance (negative controls).
    Exceeds,
}

/// One pass/fail comparison. A non-finite statistic or tolerance fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub comparison: Comparison,
    pub statistic: f64,
    pub tolerance: f64,
    pub se: Option<f64>,
    pub verdict: Verdict,
    /// Named inputs of the statistic (both sides of an identity, terms).
    pub terms: BTreeMap<String, f64>,
}

impl Check {
    fn new(name: impl Into<String>, comparison: Comparison, statistic: f64, tolerance: f64, se: Option<f64>) -> Self {
        let ok = statistic.is_finite()
            && tolerance.is_finite()
            && match comparison {
                Comparison::AtMost => statistic <= tolerance,
                Comparison::AtLeast => statistic >= tolerance,
                Comparison::Exceeds => statistic > tolerance,
            };
        Check {
            name: name.into(),
            comparison,
            statistic,
            tolerance,
            se,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            terms: BTreeMap::new(),
        }
    }

    pub fn at_most(name: impl Into<String>, statistic: f64, tolerance: f64, se: Option<f64>) -> Self {
        Check::new(name, Comparison::AtMost, statistic, tolerance, se)
    }

    pub fn at_least(name: impl Into<String>, statistic: f64, tolerance: f64, se: Option<f64>) -> Self {
        Check::new(name, Comparison::AtLeast, statistic, tolerance, se)
    }

    pub fn exceeds(name: impl Into<String>, statistic: f64, tolerance: f64, se: Option<f64>) -> Self {
        Check::new(name, Comparison::Exceeds, statistic, tolerance, se)
    }

    /// A boolean property recorded as statistic 0 (holds) or 1 (violated).
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check::new(name, Comparison::AtMost, if ok { 0.0 } else { 1.0 }, 0.5, None)
    }

    pub fn term(mut self, key: &str, value: f64) -> Self {
        self.terms.insert(key.to_string(), value);
        self
    }
}

/// Data for an SVG figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Figure {
    /// Lines y(x), optionally on log-log axes.
    Lines { name: String, x_label: String, y_label: String, log_log: bool, series: Vec<Series> },
    /// Values on a (row, column) grid; row-major.
    Heatmap { name: String, x: Vec<f64>, y: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Outcome of one suite. Serialization is deterministic: maps are ordered
/// and no wall-clock data is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub experiment: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    pub figures: Vec<Figure>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, config: &impl Serialize) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        Ok(ExperimentReport {
            schema: REPORT_SCHEMA.to_string(),
            experiment: experiment.into(),
            config_hash: config_hash(&config)?,
            config,
            checks: Vec::new(),
            verdict: Verdict::Pass,
            notes: Vec::new(),
            figures: Vec::new(),
        })
    }

    pub fn push(&mut self, check: Check) {
        if !check.verdict.is_pass() {
            self.verdict = Verdict::Fail;
        }
        self.checks.push(check);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.verdict.is_pass())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// SHA-256 of the compact JSON encoding. serde_json keeps object keys
/// sorted (no `preserve_order`), so equal values hash equally.
pub fn config_hash(value: &serde_json::Value) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_follow_the_comparison() {
        assert!(Check::at_most("a", 1.0, 1.0, None).verdict.is_pass());
        assert!(!Check::at_most("a", 1.1, 1.0, None).verdict.is_pass());
        assert!(!Check::at_most("a", f64::NAN, 1.0, None).verdict.is_pass());
        assert!(Check::exceeds("a", 5.1, 5.0, None).verdict.is_pass());
        assert!(!Check::exceeds("a", 5.0, 5.0, None).verdict.is_pass());
        assert!(!Check::holds("a", false).verdict.is_pass());
    }

    #[test]
    fn one_failure_fails_the_report() {
        let mut r = ExperimentReport::new("x", &serde_json::json!({"b": 1, "a": 2})).unwrap();
        r.push(Check::at_most("ok", 0.0, 1.0, None));
        assert!(r.passed());
        r.push(Check::at_most("bad", 2.0, 1.0, None));
        assert!(!r.passed());
        assert_eq!(r.failed_checks().count(), 1);
        let back = ExperimentReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn hash_ignores_key_order() {
        let a: serde_json::Value = serde_json::from_str(r#"{"a":1,"b":[1,2]}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"b":[1,2],"a":1}"#).unwrap();
        assert_eq!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        assert_eq!(config_hash(&a).unwrap().len(), 64);
    }
}
