use serde::{Deserialize, Serialize};

use crate::exact::Real;

/// Which pairs a verifier quantifies over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    /// Every pair of the stored finite space.
    #[default]
    Window,
    /// Only points whose validity radius covers the certificate's locality
    /// radius; the rest are skipped and counted.
    Ambient,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub member: Option<String>,
    pub x: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub y: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub distance: Option<String>,
}

/// `worst ≤ bound`, measured exhaustively.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub name: String,
    pub bound: Real,
    pub worst: Real,
    /// `worst − bound`; the condition holds iff this is `≤ 0`.
    pub slack: Real,
    pub witness: Option<Witness>,
    pub checked: u64,
    pub skipped: u64,
    /// No pair or point fell under the condition.
    pub vacuous: bool,
    /// `worst = bound` (allowed; flagged because the paper's inequality is strict).
    pub equality: bool,
    pub passed: bool,
}

impl ConditionReport {
    pub fn new(
        name: impl Into<String>,
        bound: Real,
        worst: Option<(Real, Witness)>,
        checked: u64,
        skipped: u64,
    ) -> Self {
        let vacuous = worst.is_none();
        let (worst, witness) = match worst {
            Some((w, wit)) => (w, Some(wit)),
            None => (Real::zero(), None),
        };
        let slack = worst.sub(&bound);
        let passed = vacuous || slack.signum() != std::cmp::Ordering::Greater;
        ConditionReport {
            name: name.into(),
            equality: !vacuous && slack.is_zero(),
            bound,
            worst,
            slack,
            witness,
            checked,
            skipped,
            vacuous,
            passed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub kind: String,
    pub verdict: Verdict,
    pub scope: Scope,
    pub points: usize,
    pub skipped_points: usize,
    /// Radius the ambient validity rule was applied with.
    pub locality_radius: String,
    pub conditions: Vec<ConditionReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(
        kind: &str,
        scope: Scope,
        points: usize,
        skipped_points: usize,
        locality_radius: String,
        conditions: Vec<ConditionReport>,
    ) -> Self {
        let verdict = if conditions.iter().all(|c| c.passed) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        VerificationReport {
            kind: kind.into(),
            verdict,
            scope,
            points,
            skipped_points,
            locality_radius,
            conditions,
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn condition(&self, prefix: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.name.starts_with(prefix))
    }

    pub fn skipped_pairs(&self) -> u64 {
        self.conditions.iter().map(|c| c.skipped).sum()
    }

    /// Largest slack over all conditions.
    pub fn worst_slack(&self) -> Real {
        self.conditions
            .iter()
            .map(|c| c.slack.clone())
            .max()
            .unwrap_or_else(Real::zero)
    }
}
