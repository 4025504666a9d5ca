//! Conversions among certificate kinds and the combination theorems.
//!
//! Every combinator verifies its inputs, checks that the sub-certificates
//! meet the bounds the requested target needs, builds the output, and then
//! re-measures it. Stage bounds and measured values go into a
//! [`Provenance`] record.

mod combine;
mod convert;
mod eta;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::certificates::VerificationReport;
use crate::error::{Error, Result};
use crate::exact::{fmt_q, Real, Q};

pub use combine::{combine_exact, combine_se_coarse, combine_se_strong, CoarseTargets, Targets};
pub use convert::{exact_to_se_family, prop_a_to_strong, sets_to_vector, strong_to_coarse};
pub use eta::EtaSection;

/// One inequality a combinator relied on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub bound: Real,
    /// The sub-certificate's own constant, when it has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared: Option<Real>,
    pub measured: Real,
    pub passed: bool,
}

impl Stage {
    /// Passes when the measured value is at most `bound`; the declared
    /// constant is kept for the record.
    pub fn new(name: impl Into<String>, bound: Real, declared: Option<Real>, measured: Real) -> Self {
        let passed = measured <= bound;
        Stage {
            name: name.into(),
            bound,
            declared,
            measured,
            passed,
        }
    }

    fn require(&self) -> Result<()> {
        if self.passed {
            return Ok(());
        }
        Err(Error::mismatch(
            self.name.clone(),
            format!("{} ≤ {} does not hold", self.measured, self.bound),
        ))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub operation: String,
    pub parameters: BTreeMap<String, String>,
    pub stages: Vec<Stage>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn new(operation: &str) -> Self {
        Provenance {
            operation: operation.into(),
            ..Default::default()
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.into(), value.to_string());
    }

    pub fn param_q(&mut self, key: &str, value: &Q) {
        self.param(key, fmt_q(value));
    }

    /// Records the stage and fails with a parameter mismatch if it does not hold.
    pub fn stage(&mut self, stage: Stage) -> Result<()> {
        let check = stage.require();
        self.stages.push(stage);
        check
    }

    pub fn find_stage(&self, prefix: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name.starts_with(prefix))
    }
}

/// A combinator's output certificate, how it was obtained, and its final
/// verification report.
#[derive(Clone, Debug)]
pub struct Combined<C> {
    pub cert: C,
    pub provenance: Provenance,
    pub report: VerificationReport,
}

fn refuse_unless_passed(report: &VerificationReport, what: &str) -> Result<()> {
    if report.passed() {
        return Ok(());
    }
    let failing: Vec<&str> = report
        .conditions
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    Err(Error::Refused(format!(
        "{what} does not verify ({})",
        failing.join("; ")
    )))
}

fn worst(report: &VerificationReport, prefix: &str) -> Result<Real> {
    report
        .condition(prefix)
        .map(|c| c.worst.clone())
        .ok_or_else(|| Error::Internal(format!("report has no {prefix} condition")))
}

fn half() -> Q {
    Q::new(1.into(), 2.into())
}
