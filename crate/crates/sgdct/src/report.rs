//! The JSON experiment report.
//!
//! Verdict ids:
//!
//! | id | experiment | measured | passes when |
//! |----|------------|----------|-------------|
//! | `rate.slope.p<p>` | verify-rate | log-log slope of E‖θ_t − θ*‖^p | within the predicted slope ± tolerance |
//! | `rate.oracle` | verify-rate | max relative gap to the moment ODE for t ≥ `rate.oracle_from` | ≤ `rate.oracle_tolerance` |
//! | `clt.variance.<i>` | verify-clt | empirical / predicted variance of coordinate i | within 1 ± `clt.variance_band` |
//! | `clt.ks.<i>` | verify-clt | KS distance of whitened coordinate i | below 1.628/√N |
//! | `covariance.route_agreement` | predict-covariance | max entry gap between the two Σ̄ routes | ≤ `covariance.agreement` |
//! | `poisson.residual` | poisson-solve | sup of the generator residual | ≤ `poisson.residual_limit` |
//! | `poisson.centering` | poisson-solve | `|∫ v dπ|` | ≤ 1e-6 |
//! | `poisson.closed_form` | poisson-solve (ou, centred-square) | sup gap of v' to x/θ* on the range | ≤ 1e-4 |
//! | `estimate.mean.<i>` | estimate | `|mean θ_T − θ*| / stderr` | ≤ 3 |
//! | `sweep.slope.c_alpha=<c>` | regime-sweep | L² log-log slope | within the regime's slope ± tolerance |
//!
//! Coordinates `<i>` count from 1.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub id: String,
    /// `None` when the quantity could not be computed.
    pub measured: Option<f64>,
    /// Closed interval; `None` marks an unbounded side.
    pub band: (Option<f64>, Option<f64>),
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Verdict {
    pub fn within(id: impl Into<String>, measured: f64, lo: Option<f64>, hi: Option<f64>) -> Self {
        let pass = measured.is_finite() && lo.is_none_or(|l| measured >= l) && hi.is_none_or(|h| measured <= h);
        Verdict {
            id: id.into(),
            measured: measured.is_finite().then_some(measured),
            band: (lo, hi),
            pass,
            note: None,
        }
    }

    pub fn at_most(id: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::within(id, measured, None, Some(limit))
    }

    /// A verdict that could not be evaluated; always a failure.
    pub fn unavailable(id: impl Into<String>, lo: Option<f64>, hi: Option<f64>, why: impl Into<String>) -> Self {
        Verdict {
            id: id.into(),
            measured: None,
            band: (lo, hi),
            pass: false,
            note: Some(why.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        ErrorRecord {
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// The resolved configuration; feeding it back through the parser reproduces the run.
    pub config: BTreeMap<String, String>,
    pub verdicts: Vec<Verdict>,
    /// Experiment-specific measurements.
    pub details: BTreeMap<String, serde_json::Value>,
    pub failed_replications: Vec<FailureRecord>,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
    pub error: Option<ErrorRecord>,
    pub passed: bool,
    pub wall_clock: f64,
}

impl ExperimentReport {
    /// Every verdict passed and nothing failed outright.
    pub fn all_passed(&self) -> bool {
        self.error.is_none() && self.verdicts.iter().all(|v| v.pass)
    }

    pub fn config_text(&self) -> String {
        self.config.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("report.json");
        std::fs::write(&path, self.to_json()?).map_err(|source| Error::Io { path, source })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}
