use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for certificate checks.
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TheoremId {
    #[serde(rename = "SMALLNEC")]
    SmallNecessity,
    #[serde(rename = "NEC")]
    Necessity,
    #[serde(rename = "PSI")]
    Psi,
    #[serde(rename = "SUFF")]
    Sufficiency,
    #[serde(rename = "INTERP")]
    Interpolation,
    #[serde(rename = "TWOWEIGHT_BMO")]
    TwoWeightBmo,
    #[serde(rename = "DUAL_HARDY")]
    DualHardy,
    #[serde(rename = "LITTLE_BMO")]
    LittleBmo,
    #[serde(rename = "TL_DYADIC")]
    TlDyadic,
    /// Single-check report of the power-bump lemma; not part of `all()`.
    #[serde(rename = "POWER_BUMP")]
    PowerBump,
}

impl TheoremId {
    /// The certificate suites, in reporting order.
    pub fn all() -> [TheoremId; 9] {
        use TheoremId::*;
        [SmallNecessity, Necessity, Psi, Sufficiency, Interpolation, TwoWeightBmo, DualHardy, LittleBmo, TlDyadic]
    }

    pub fn as_str(self) -> &'static str {
        use TheoremId::*;
        match self {
            SmallNecessity => "SMALLNEC",
            Necessity => "NEC",
            Psi => "PSI",
            Sufficiency => "SUFF",
            Interpolation => "INTERP",
            TwoWeightBmo => "TWOWEIGHT_BMO",
            DualHardy => "DUAL_HARDY",
            LittleBmo => "LITTLE_BMO",
            TlDyadic => "TL_DYADIC",
            PowerBump => "POWER_BUMP",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.to_ascii_uppercase();
        TheoremId::all()
            .into_iter()
            .chain([TheoremId::PowerBump])
            .find(|t| t.as_str() == upper)
            .ok_or_else(|| Error::Parse(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

/// One inequality `lhs <= rhs` with both sides computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub status: CheckStatus,
    /// Machine-readable reason code, present for skipped checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Check {
    pub fn evaluate(label: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = rhs - lhs;
        let ok = lhs.is_finite() && rhs.is_finite() && slack >= -tol * rhs.abs();
        Check {
            label: label.into(),
            lhs,
            rhs,
            slack,
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            reason: None,
        }
    }

    /// A check that is reported but not asserted; `lhs`/`rhs` may carry
    /// informational values (NaN when nothing was computed).
    pub fn skipped(label: impl Into<String>, reason: &str, lhs: f64, rhs: f64) -> Self {
        Check {
            label: label.into(),
            lhs,
            rhs,
            slack: rhs - lhs,
            status: CheckStatus::Skipped,
            reason: Some(reason.to_string()),
        }
    }

    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub theorem: TheoremId,
    pub inputs_digest: String,
    pub checks: Vec<Check>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

impl CertificateReport {
    pub fn new(theorem: TheoremId, inputs_digest: String) -> Self {
        Self { theorem, inputs_digest, checks: Vec::new(), pass: true, metadata: Default::default() }
    }

    pub fn push(&mut self, check: Check) {
        self.pass &= !check.failed();
        self.checks.push(check);
    }

    pub fn check(&mut self, label: impl Into<String>, lhs: f64, rhs: f64) {
        self.push(Check::evaluate(label, lhs, rhs, CHECK_TOL));
    }

    pub fn skip(&mut self, label: impl Into<String>, reason: &str) {
        self.push(Check::skipped(label, reason, f64::NAN, f64::NAN));
    }

    pub fn meta(&mut self, key: &str, value: impl Serialize) {
        self.metadata.insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.failed()).count()
    }

    /// Largest violation `max(0, -slack)` over failed-or-passed asserted checks.
    pub fn worst_negative_slack(&self) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.status != CheckStatus::Skipped)
            .map(|c| if c.slack.is_nan() { f64::INFINITY } else { (-c.slack).max(0.0) })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_is_relative_to_rhs() {
        assert_eq!(Check::evaluate("a", 1.0 + 5e-10, 1.0, CHECK_TOL).status, CheckStatus::Pass);
        assert_eq!(Check::evaluate("a", 1.0 + 2e-9, 1.0, CHECK_TOL).status, CheckStatus::Fail);
        assert_eq!(Check::evaluate("a", 0.0, 0.0, CHECK_TOL).status, CheckStatus::Pass);
        assert_eq!(Check::evaluate("a", f64::NAN, 1.0, CHECK_TOL).status, CheckStatus::Fail);
    }

    #[test]
    fn suite_names_parse() {
        for t in TheoremId::all() {
            assert_eq!(t.as_str().parse::<TheoremId>().unwrap(), t);
            let json = serde_json::to_string(&t).unwrap();
            assert_eq!(json, format!("\"{}\"", t.as_str()));
        }
        assert!("NOPE".parse::<TheoremId>().is_err());
        assert_eq!("suff".parse::<TheoremId>().unwrap(), TheoremId::Sufficiency);
    }

    #[test]
    fn report_pass_tracks_failures() {
        let mut r = CertificateReport::new(TheoremId::Psi, "x".into());
        r.check("ok", 1.0, 2.0);
        r.skip("later", "NOT_APPLICABLE");
        assert!(r.pass);
        r.check("bad", 3.0, 2.0);
        assert!(!r.pass);
        assert_eq!(r.failures(), 1);
        assert_eq!(r.worst_negative_slack(), 1.0);
    }
}
