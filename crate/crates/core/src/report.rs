use serde::{Deserialize, Serialize};

use crate::tensor::{Residual, Scalar};

/// Fixed 17-significant-digit rendering used in digests and reports.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_scalar(z: Scalar) -> String {
    format!("({},{})", fmt_f64(z.re), fmt_f64(z.im))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubResidual {
    pub label: String,
    pub residual: Residual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub residual: Residual,
    pub tolerance: f64,
    pub passed: bool,
    pub outcome: Outcome,
    pub skip_reason: Option<String>,
    pub inputs_digest: String,
    pub details: Vec<SubResidual>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, residual: Residual, tolerance: f64, digest: impl Into<String>) -> Self {
        let passed = residual.relative <= tolerance;
        Self {
            name: name.into(),
            residual,
            tolerance,
            passed,
            outcome: if passed { Outcome::Pass } else { Outcome::Fail },
            skip_reason: None,
            inputs_digest: digest.into(),
            details: Vec::new(),
        }
    }

    /// A check whose preconditions did not hold. The residual is NaN so that
    /// `passed` still agrees with `relative ≤ tolerance`.
    pub fn skipped(name: impl Into<String>, reason: impl Into<String>, tolerance: f64, digest: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            residual: Residual { absolute: f64::NAN, relative: f64::NAN },
            tolerance,
            passed: false,
            outcome: Outcome::Skip,
            skip_reason: Some(reason.into()),
            inputs_digest: digest.into(),
            details: Vec::new(),
        }
    }

    pub fn with_details(mut self, details: Vec<SubResidual>) -> Self {
        self.details = details;
        self
    }

    pub fn with_digest(mut self, digest: impl Into<String>) -> Self {
        self.inputs_digest = digest.into();
        self
    }

    pub fn is_skipped(&self) -> bool {
        self.outcome == Outcome::Skip
    }

    pub fn is_failure(&self) -> bool {
        self.outcome == Outcome::Fail
    }
}

/// Combines labelled sub-residuals into one report carrying the worst of them.
pub fn aggregate(
    name: impl Into<String>,
    parts: Vec<SubResidual>,
    tolerance: f64,
    digest: impl Into<String>,
) -> CheckReport {
    let worst = Residual::worst(parts.iter().map(|p| p.residual));
    CheckReport::new(name, worst, tolerance, digest).with_details(parts)
}
