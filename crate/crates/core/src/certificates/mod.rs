//! Certificate records and their verifiers.

mod report;
mod verify;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exact::{Real, Q};
use crate::hilbert::UnitField;
use crate::metric::{FiniteMetricSpace, SetMapFamily};

pub use report::{ConditionReport, Scope, Verdict, VerificationReport, Witness};
pub use verify::symmetric_difference;
pub use verify::{
    family_support_radius, located_support_radius, orthogonality_radius, verify_coarse_witness, verify_equi,
    verify_exact_family, verify_prop_a_sets, verify_prop_a_vector, verify_se_family,
    verify_strong_embed, verify_two_prime, TwoPrime,
};

/// A finite decay or tail profile `[(S_k, δ_k)]`.
pub type Profile<T> = Vec<(Q, T)>;

/// `A_x ⊂ X × ℕ`, one set per point, as sorted `(point, tag)` pairs.
#[derive(Clone, Debug)]
pub struct PropASetCertificate {
    pub space: Arc<FiniteMetricSpace>,
    pub r: Q,
    pub eps: Q,
    pub s: Q,
    pub sets: Vec<Vec<(usize, u64)>>,
}

#[derive(Clone, Debug)]
pub struct PropAVectorCertificate {
    pub space: Arc<FiniteMetricSpace>,
    pub r: Q,
    pub eps: Real,
    /// Orthogonality radius.
    pub s: Q,
    pub field: UnitField,
}

#[derive(Clone, Debug)]
pub struct StrongEmbedCertificate {
    pub space: Arc<FiniteMetricSpace>,
    pub r: Q,
    pub eps: Real,
    pub field: UnitField,
    pub tail: Profile<Q>,
}

#[derive(Clone, Debug)]
pub struct CoarseWitness {
    pub space: Arc<FiniteMetricSpace>,
    pub r: Q,
    pub eps: Real,
    pub field: UnitField,
    pub decay: Profile<Real>,
}

/// Field over `𝒴`: the universe must be located in the flat index of `𝒴`.
#[derive(Clone, Debug)]
pub struct ExactFamilyCertificate {
    pub family: Arc<SetMapFamily>,
    pub r: Q,
    pub eps: Real,
    pub s: Q,
    pub field: UnitField,
}

#[derive(Clone, Debug)]
pub struct SEFamilyCertificate {
    pub family: Arc<SetMapFamily>,
    pub r: Q,
    pub eps: Real,
    pub field: UnitField,
    pub tail: Profile<Q>,
}

/// One space `X_j` of an equi-family. `points[i]` is the point of the
/// ambient space that local point `i` stands for, when there is one.
#[derive(Clone, Debug)]
pub struct Member {
    pub label: String,
    pub points: Vec<usize>,
    pub space: Arc<FiniteMetricSpace>,
    pub field: UnitField,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EquiFlavor {
    Exact { s: Q },
    Coarse { decay: Profile<Real> },
    Strong { tail: Profile<Q> },
}

impl EquiFlavor {
    pub fn name(&self) -> &'static str {
        match self {
            EquiFlavor::Exact { .. } => "equi-exact",
            EquiFlavor::Coarse { .. } => "equi-coarse",
            EquiFlavor::Strong { .. } => "equi-strong",
        }
    }
}

#[derive(Clone, Debug)]
pub struct EquiFamilyCertificate {
    pub members: Vec<Member>,
    pub r: Q,
    pub eps: Real,
    pub flavor: EquiFlavor,
}

fn field_matches(space: &FiniteMetricSpace, field: &UnitField, what: &str) -> Result<()> {
    if field.len() != space.len() {
        return Err(Error::Malformed(format!(
            "{what}: field has {} vectors for {} points",
            field.len(),
            space.len()
        )));
    }
    Ok(())
}

fn located_in(field: &UnitField, n: usize, what: &str) -> Result<()> {
    match field.universe().location() {
        None => Err(Error::Malformed(format!(
            "{what}: universe {} is not located",
            field.universe().tag()
        ))),
        Some(loc) => match loc.iter().find(|&&p| p >= n) {
            Some(p) => Err(Error::Malformed(format!("{what}: location {p} out of range"))),
            None => Ok(()),
        },
    }
}

fn nonneg(v: &Q, what: &str) -> Result<()> {
    if *v < Q::from_integer(0.into()) {
        return Err(Error::Malformed(format!("{what} is negative")));
    }
    Ok(())
}

/// Radii strictly increasing and bounds nonincreasing.
pub(crate) fn check_profile<T: Ord + Clone>(profile: &[(Q, T)], zero: &T, what: &str) -> Result<()> {
    for (s, d) in profile {
        nonneg(s, what)?;
        if d < zero {
            return Err(Error::Malformed(format!("{what}: negative bound")));
        }
    }
    for w in profile.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::Malformed(format!("{what}: radii must increase")));
        }
        if w[1].1 > w[0].1 {
            return Err(Error::Malformed(format!("{what}: bounds must be nonincreasing")));
        }
    }
    Ok(())
}

impl PropASetCertificate {
    pub fn validate(&self) -> Result<()> {
        if self.sets.len() != self.space.len() {
            return Err(Error::Malformed("one set per point is required".into()));
        }
        nonneg(&self.r, "R")?;
        nonneg(&self.s, "S")?;
        nonneg(&self.eps, "ε")?;
        for (x, a) in self.sets.iter().enumerate() {
            if a.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Malformed(format!(
                    "A_{} is not sorted without repeats",
                    self.space.label(x)
                )));
            }
            if a.iter().any(|&(p, _)| p >= self.space.len()) {
                return Err(Error::Malformed("set element outside the space".into()));
            }
        }
        Ok(())
    }
}

impl PropAVectorCertificate {
    pub fn validate(&self) -> Result<()> {
        field_matches(&self.space, &self.field, "property A vector certificate")?;
        if let Some(loc) = self.field.universe().location() {
            if loc.iter().any(|&p| p >= self.space.len()) {
                return Err(Error::Malformed("location out of range".into()));
            }
        }
        nonneg(&self.r, "R")?;
        nonneg(&self.s, "S")
    }
}

impl StrongEmbedCertificate {
    pub fn validate(&self) -> Result<()> {
        field_matches(&self.space, &self.field, "strong certificate")?;
        located_in(&self.field, self.space.len(), "strong certificate")?;
        nonneg(&self.r, "R")?;
        check_profile(&self.tail, &Q::from_integer(0.into()), "tail profile")
    }
}

impl CoarseWitness {
    pub fn validate(&self) -> Result<()> {
        field_matches(&self.space, &self.field, "coarse witness")?;
        nonneg(&self.r, "R")?;
        check_profile(&self.decay, &Real::zero(), "decay profile")
    }
}

impl ExactFamilyCertificate {
    pub fn validate(&self) -> Result<()> {
        field_matches(self.family.domain(), &self.field, "exact family certificate")?;
        located_in(&self.field, self.family.len(), "exact family certificate")?;
        nonneg(&self.r, "R")?;
        nonneg(&self.s, "S")
    }
}

impl SEFamilyCertificate {
    pub fn validate(&self) -> Result<()> {
        field_matches(self.family.domain(), &self.field, "strongly embeddable family certificate")?;
        located_in(&self.field, self.family.len(), "strongly embeddable family certificate")?;
        nonneg(&self.r, "R")?;
        check_profile(&self.tail, &Q::from_integer(0.into()), "tail profile")
    }
}

impl EquiFamilyCertificate {
    pub fn validate(&self) -> Result<()> {
        nonneg(&self.r, "R")?;
        for m in &self.members {
            field_matches(&m.space, &m.field, &format!("member {}", m.label))?;
            if !m.points.is_empty() && m.points.len() != m.space.len() {
                return Err(Error::Malformed(format!("member {}: point map length", m.label)));
            }
            match &self.flavor {
                EquiFlavor::Strong { .. } => {
                    located_in(&m.field, m.space.len(), &format!("member {}", m.label))?
                }
                _ => {
                    if let Some(loc) = m.field.universe().location() {
                        if loc.iter().any(|&p| p >= m.space.len()) {
                            return Err(Error::Malformed(format!("member {}: location", m.label)));
                        }
                    }
                }
            }
        }
        match &self.flavor {
            EquiFlavor::Exact { s } => nonneg(s, "S"),
            EquiFlavor::Coarse { decay } => check_profile(decay, &Real::zero(), "decay profile"),
            EquiFlavor::Strong { tail } => {
                check_profile(tail, &Q::from_integer(0.into()), "tail profile")
            }
        }
    }
}
