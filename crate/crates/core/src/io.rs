//! JSON files for spaces, families, fields and certificates.
//!
//! Spaces and families are stored either inline or as a recipe (a group
//! preset and a radius) that is rebuilt on load. Rationals are `"p/q"`
//! strings and surds `"c*sqrt(m)"`; nothing is stored as a float.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::certificates::{
    verify_coarse_witness, verify_equi, verify_exact_family, verify_prop_a_sets, verify_prop_a_vector,
    verify_se_family, verify_strong_embed, CoarseWitness, EquiFamilyCertificate, EquiFlavor,
    ExactFamilyCertificate, Member, PropASetCertificate, PropAVectorCertificate, SEFamilyCertificate, Scope,
    StrongEmbedCertificate, TwoPrime, VerificationReport,
};
use crate::config::Caps;
use crate::error::{Error, Result};
use crate::exact::{fmt_q, parse_q, qser, Real, Scalar, Q};
use crate::groups::{orbit_decomposition, ActionSpec, GroupAction};
use crate::hilbert::{SparseVector, UnitField, Universe};
use crate::metric::{
    cayley_ball, quotient_space, Component, FiniteMetricSpace, GroupBall, GroupModel, GroupSpec, SetMapFamily,
    SpaceJson, Subgroup, SubgroupSpec,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum SpaceSource {
    Inline {
        #[serde(flatten)]
        space: SpaceJson,
        /// Per-point validity radii, when the space is a window.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        validity: Option<Vec<String>>,
    },
    /// The word-metric ball of the given radius.
    Cayley { group: GroupSpec, radius: u64 },
    /// The cosets met by the ball, with the quotient metric.
    Quotient {
        group: GroupSpec,
        radius: u64,
        subgroup: SubgroupSpec,
    },
    /// The subgroup's elements inside the ball, with the ambient metric.
    Subgroup {
        group: GroupSpec,
        radius: u64,
        subgroup: SubgroupSpec,
    },
}

pub fn group_ball(group: &GroupSpec, radius: u64, caps: &Caps) -> Result<GroupBall> {
    cayley_ball(Arc::new(GroupModel::from_spec(group)?), radius, caps)
}

/// The subgroup's elements inside the ball as a subspace, labeled by ball labels.
pub fn subgroup_window(ball: &GroupBall, h: &Subgroup) -> Result<FiniteMetricSpace> {
    let members: Vec<usize> = (0..ball.len()).filter(|&g| h.contains(ball.element(g))).collect();
    ball.space().subspace(&members)
}

impl SpaceSource {
    pub fn inline(space: &FiniteMetricSpace) -> Self {
        SpaceSource::Inline {
            space: space.to_json(),
            validity: space
                .validity_radii()
                .map(|v| v.iter().map(|&r| fmt_q(&space.raw_to_q(r))).collect()),
        }
    }

    pub fn resolve(&self, caps: &Caps, seed: u64) -> Result<Arc<FiniteMetricSpace>> {
        match self {
            SpaceSource::Inline { space, validity } => {
                let mut s = FiniteMetricSpace::from_json(space)?;
                if let Some(v) = validity {
                    let raw = v
                        .iter()
                        .map(|r| Ok(s.raw_at_most(&parse_q(r)?).unwrap_or(0)))
                        .collect::<Result<Vec<_>>>()?;
                    s = s.with_validity(raw)?;
                }
                Ok(Arc::new(s))
            }
            SpaceSource::Cayley { group, radius } => Ok(group_ball(group, *radius, caps)?.space().clone()),
            SpaceSource::Quotient {
                group,
                radius,
                subgroup,
            } => {
                let ball = group_ball(group, *radius, caps)?;
                let h = Subgroup::from_spec(subgroup, ball.model())?;
                Ok(quotient_space(&ball, &h, seed)?.space().clone())
            }
            SpaceSource::Subgroup {
                group,
                radius,
                subgroup,
            } => {
                let ball = group_ball(group, *radius, caps)?;
                let h = Subgroup::from_spec(subgroup, ball.model())?;
                Ok(Arc::new(subgroup_window(&ball, &h)?))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentJson {
    pub label: String,
    pub codomain: Vec<String>,
    pub map: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum FamilySource {
    /// `π : G → G/H` on the ball.
    Quotient {
        group: GroupSpec,
        radius: u64,
        subgroup: SubgroupSpec,
    },
    /// A lattice ball projected to one coordinate.
    Projection { group: GroupSpec, radius: u64, coord: usize },
    /// The quotient maps `G → G/H_i` of an action's orbits.
    Orbits {
        group: GroupSpec,
        radius: u64,
        action: ActionSpec,
    },
    Identity { space: SpaceSource },
    Inline {
        domain: SpaceSource,
        components: Vec<ComponentJson>,
    },
}

impl FamilySource {
    pub fn inline(family: &SetMapFamily, domain: Option<&SpaceSource>) -> Self {
        FamilySource::Inline {
            domain: domain
                .cloned()
                .unwrap_or_else(|| SpaceSource::inline(family.domain())),
            components: family
                .components()
                .iter()
                .map(|c| ComponentJson {
                    label: c.label.clone(),
                    codomain: c.codomain.clone(),
                    map: c.map.clone(),
                })
                .collect(),
        }
    }

    /// Where the family's domain comes from.
    pub fn domain(&self) -> SpaceSource {
        match self {
            FamilySource::Quotient { group, radius, .. }
            | FamilySource::Projection { group, radius, .. }
            | FamilySource::Orbits { group, radius, .. } => SpaceSource::Cayley {
                group: group.clone(),
                radius: *radius,
            },
            FamilySource::Identity { space } => space.clone(),
            FamilySource::Inline { domain, .. } => domain.clone(),
        }
    }

    pub fn resolve(&self, caps: &Caps, seed: u64) -> Result<Arc<SetMapFamily>> {
        let family = match self {
            FamilySource::Quotient {
                group,
                radius,
                subgroup,
            } => {
                let ball = group_ball(group, *radius, caps)?;
                let h = Subgroup::from_spec(subgroup, ball.model())?;
                SetMapFamily::quotient_map(&ball, &quotient_space(&ball, &h, seed)?)?
            }
            FamilySource::Projection { group, radius, coord } => {
                SetMapFamily::projection(&group_ball(group, *radius, caps)?, *coord)?
            }
            FamilySource::Orbits { group, radius, action } => {
                let ball = Arc::new(group_ball(group, *radius, caps)?);
                let action = GroupAction::from_spec(action, ball, caps, seed)?;
                orbit_decomposition(&action, seed)?.quotient_family(&action)?
            }
            FamilySource::Identity { space } => SetMapFamily::identity(space.resolve(caps, seed)?)?,
            FamilySource::Inline { domain, components } => SetMapFamily::new(
                domain.resolve(caps, seed)?,
                components
                    .iter()
                    .map(|c| Component {
                        label: c.label.clone(),
                        codomain: c.codomain.clone(),
                        map: c.map.clone(),
                    })
                    .collect(),
            )?,
        };
        Ok(Arc::new(family))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniverseJson {
    pub tag: String,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorJson {
    pub universe: String,
    #[serde(with = "index_keys")]
    pub entries: BTreeMap<u32, Scalar>,
}

// Integer map keys do not survive serde's buffering inside tagged enums,
// so indices are read back from their string form.
mod index_keys {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::exact::Scalar;

    pub fn serialize<S: Serializer>(m: &BTreeMap<u32, Scalar>, s: S) -> Result<S::Ok, S::Error> {
        m.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u32, Scalar>, D::Error> {
        BTreeMap::<String, Scalar>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| {
                k.parse::<u32>()
                    .map(|k| (k, v))
                    .map_err(|_| D::Error::custom(format!("vector index {k:?} is not a natural number")))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldJson {
    pub universe: UniverseJson,
    pub vectors: Vec<VectorJson>,
}

impl FieldJson {
    pub fn encode(field: &UnitField) -> Self {
        let u = field.universe();
        FieldJson {
            universe: UniverseJson {
                tag: u.tag().to_string(),
                labels: u.labels().to_vec(),
                location: u.location().map(<[usize]>::to_vec),
            },
            vectors: field
                .vectors()
                .iter()
                .map(|v| VectorJson {
                    universe: v.tag().to_string(),
                    entries: v.entries().map(|(k, c)| (k, c.clone())).collect(),
                })
                .collect(),
        }
    }

    pub fn decode(&self) -> Result<UnitField> {
        let u = &self.universe;
        let uni = Arc::new(Universe::new(u.tag.as_str(), u.labels.clone(), u.location.clone())?);
        let tag = uni.tag().clone();
        let vectors = self
            .vectors
            .iter()
            .map(|v| {
                if v.universe != u.tag {
                    return Err(Error::Malformed(format!(
                        "vector over {} in a field over {}",
                        v.universe, u.tag
                    )));
                }
                if let Some((k, _)) = v.entries.iter().find(|(&k, _)| k as usize >= u.labels.len()) {
                    return Err(Error::Malformed(format!("index {k} outside universe {}", u.tag)));
                }
                SparseVector::from_entries(tag.clone(), v.entries.iter().map(|(&k, c)| (k, c.clone())).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        UnitField::new(uni, vectors)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEntry {
    #[serde(with = "qser")]
    pub s: Q,
    #[serde(with = "qser")]
    pub delta: Q,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayEntry {
    #[serde(with = "qser")]
    pub s: Q,
    pub delta: Real,
}

fn tail_json(p: &[(Q, Q)]) -> Vec<TailEntry> {
    p.iter()
        .map(|(s, d)| TailEntry {
            s: s.clone(),
            delta: d.clone(),
        })
        .collect()
}

fn decay_json(p: &[(Q, Real)]) -> Vec<DecayEntry> {
    p.iter()
        .map(|(s, d)| DecayEntry {
            s: s.clone(),
            delta: d.clone(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "flavor", rename_all = "kebab-case")]
pub enum FlavorJson {
    EquiExact {
        #[serde(with = "qser")]
        s: Q,
    },
    EquiCoarse { decay: Vec<DecayEntry> },
    EquiStrong { tail: Vec<TailEntry> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberJson {
    pub label: String,
    #[serde(default)]
    pub points: Vec<usize>,
    pub space: SpaceSource,
    pub field: FieldJson,
}

/// A certificate file. `kind` selects the verifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CertificateJson {
    PropASets {
        space: SpaceSource,
        #[serde(with = "qser")]
        r: Q,
        #[serde(with = "qser")]
        eps: Q,
        #[serde(with = "qser")]
        s: Q,
        /// `(point index, multiplicity tag)` pairs per point.
        sets: Vec<Vec<(usize, u64)>>,
    },
    PropAVector {
        space: SpaceSource,
        #[serde(with = "qser")]
        r: Q,
        eps: Real,
        #[serde(with = "qser")]
        s: Q,
        field: FieldJson,
    },
    StrongEmbed {
        space: SpaceSource,
        #[serde(with = "qser")]
        r: Q,
        eps: Real,
        field: FieldJson,
        tail: Vec<TailEntry>,
    },
    CoarseWitness {
        space: SpaceSource,
        #[serde(with = "qser")]
        r: Q,
        eps: Real,
        field: FieldJson,
        decay: Vec<DecayEntry>,
    },
    ExactFamily {
        family: FamilySource,
        #[serde(with = "qser")]
        r: Q,
        eps: Real,
        #[serde(with = "qser")]
        s: Q,
        field: FieldJson,
    },
    SeFamily {
        family: FamilySource,
        #[serde(with = "qser")]
        r: Q,
        eps: Real,
        field: FieldJson,
        tail: Vec<TailEntry>,
    },
    EquiFamily {
        #[serde(with = "qser")]
        r: Q,
        eps: Real,
        flavor: FlavorJson,
        members: Vec<MemberJson>,
    },
}

#[derive(Clone, Debug)]
pub enum Certificate {
    PropASets(PropASetCertificate),
    PropAVector(PropAVectorCertificate),
    StrongEmbed(StrongEmbedCertificate),
    CoarseWitness(CoarseWitness),
    ExactFamily(ExactFamilyCertificate),
    SeFamily(SEFamilyCertificate),
    EquiFamily(EquiFamilyCertificate),
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::PropASets(_) => "prop-a-sets",
            Certificate::PropAVector(_) => "prop-a-vector",
            Certificate::StrongEmbed(_) => "strong-embed",
            Certificate::CoarseWitness(_) => "coarse-witness",
            Certificate::ExactFamily(_) => "exact-family",
            Certificate::SeFamily(_) => "se-family",
            Certificate::EquiFamily(_) => "equi-family",
        }
    }

    pub fn verify(&self, scope: Scope) -> Result<VerificationReport> {
        match self {
            Certificate::PropASets(c) => verify_prop_a_sets(c, scope),
            Certificate::PropAVector(c) => verify_prop_a_vector(c, scope),
            Certificate::StrongEmbed(c) => verify_strong_embed(c, scope),
            Certificate::CoarseWitness(c) => verify_coarse_witness(c, scope),
            Certificate::ExactFamily(c) => verify_exact_family(c, scope),
            Certificate::SeFamily(c) => verify_se_family(c, scope),
            Certificate::EquiFamily(c) => verify_equi(c, scope),
        }
    }
}

/// A loaded certificate together with the recipes its space or family
/// came from, so outputs over the same space can reuse them.
#[derive(Clone, Debug)]
pub struct CertFile {
    pub cert: Certificate,
    pub space: Option<SpaceSource>,
    pub family: Option<FamilySource>,
}

impl CertFile {
    pub fn new(cert: Certificate) -> Self {
        CertFile {
            cert,
            space: None,
            family: None,
        }
    }

    pub fn with_space(mut self, space: SpaceSource) -> Self {
        self.space = Some(space);
        self
    }

    pub fn with_family(mut self, family: FamilySource) -> Self {
        self.family = Some(family);
        self
    }

    pub fn encode(&self) -> CertificateJson {
        let space = |s: &FiniteMetricSpace| self.space.clone().unwrap_or_else(|| SpaceSource::inline(s));
        let family = |f: &SetMapFamily| self.family.clone().unwrap_or_else(|| FamilySource::inline(f, None));
        match &self.cert {
            Certificate::PropASets(c) => CertificateJson::PropASets {
                space: space(&c.space),
                r: c.r.clone(),
                eps: c.eps.clone(),
                s: c.s.clone(),
                sets: c.sets.clone(),
            },
            Certificate::PropAVector(c) => CertificateJson::PropAVector {
                space: space(&c.space),
                r: c.r.clone(),
                eps: c.eps.clone(),
                s: c.s.clone(),
                field: FieldJson::encode(&c.field),
            },
            Certificate::StrongEmbed(c) => CertificateJson::StrongEmbed {
                space: space(&c.space),
                r: c.r.clone(),
                eps: c.eps.clone(),
                field: FieldJson::encode(&c.field),
                tail: tail_json(&c.tail),
            },
            Certificate::CoarseWitness(c) => CertificateJson::CoarseWitness {
                space: space(&c.space),
                r: c.r.clone(),
                eps: c.eps.clone(),
                field: FieldJson::encode(&c.field),
                decay: decay_json(&c.decay),
            },
            Certificate::ExactFamily(c) => CertificateJson::ExactFamily {
                family: family(&c.family),
                r: c.r.clone(),
                eps: c.eps.clone(),
                s: c.s.clone(),
                field: FieldJson::encode(&c.field),
            },
            Certificate::SeFamily(c) => CertificateJson::SeFamily {
                family: family(&c.family),
                r: c.r.clone(),
                eps: c.eps.clone(),
                field: FieldJson::encode(&c.field),
                tail: tail_json(&c.tail),
            },
            Certificate::EquiFamily(c) => CertificateJson::EquiFamily {
                r: c.r.clone(),
                eps: c.eps.clone(),
                flavor: match &c.flavor {
                    EquiFlavor::Exact { s } => FlavorJson::EquiExact { s: s.clone() },
                    EquiFlavor::Coarse { decay } => FlavorJson::EquiCoarse {
                        decay: decay_json(decay),
                    },
                    EquiFlavor::Strong { tail } => FlavorJson::EquiStrong { tail: tail_json(tail) },
                },
                members: c
                    .members
                    .iter()
                    .map(|m| MemberJson {
                        label: m.label.clone(),
                        points: m.points.clone(),
                        space: SpaceSource::inline(&m.space),
                        field: FieldJson::encode(&m.field),
                    })
                    .collect(),
            },
        }
    }

    /// Rebuilds the certificate and checks its shape (not its inequalities).
    pub fn decode(json: &CertificateJson, caps: &Caps, seed: u64) -> Result<Self> {
        let tail = |t: &[TailEntry]| t.iter().map(|e| (e.s.clone(), e.delta.clone())).collect::<Vec<_>>();
        let decay = |t: &[DecayEntry]| t.iter().map(|e| (e.s.clone(), e.delta.clone())).collect::<Vec<_>>();
        let out = match json {
            CertificateJson::PropASets { space, r, eps, s, sets } => CertFile::new(Certificate::PropASets(
                PropASetCertificate {
                    space: space.resolve(caps, seed)?,
                    r: r.clone(),
                    eps: eps.clone(),
                    s: s.clone(),
                    sets: sets.clone(),
                },
            ))
            .with_space(space.clone()),
            CertificateJson::PropAVector { space, r, eps, s, field } => CertFile::new(Certificate::PropAVector(
                PropAVectorCertificate {
                    space: space.resolve(caps, seed)?,
                    r: r.clone(),
                    eps: eps.clone(),
                    s: s.clone(),
                    field: field.decode()?,
                },
            ))
            .with_space(space.clone()),
            CertificateJson::StrongEmbed {
                space,
                r,
                eps,
                field,
                tail: t,
            } => CertFile::new(Certificate::StrongEmbed(StrongEmbedCertificate {
                space: space.resolve(caps, seed)?,
                r: r.clone(),
                eps: eps.clone(),
                field: field.decode()?,
                tail: tail(t),
            }))
            .with_space(space.clone()),
            CertificateJson::CoarseWitness {
                space,
                r,
                eps,
                field,
                decay: d,
            } => CertFile::new(Certificate::CoarseWitness(CoarseWitness {
                space: space.resolve(caps, seed)?,
                r: r.clone(),
                eps: eps.clone(),
                field: field.decode()?,
                decay: decay(d),
            }))
            .with_space(space.clone()),
            CertificateJson::ExactFamily {
                family,
                r,
                eps,
                s,
                field,
            } => CertFile::new(Certificate::ExactFamily(ExactFamilyCertificate {
                family: family.resolve(caps, seed)?,
                r: r.clone(),
                eps: eps.clone(),
                s: s.clone(),
                field: field.decode()?,
            }))
            .with_space(family.domain())
            .with_family(family.clone()),
            CertificateJson::SeFamily {
                family,
                r,
                eps,
                field,
                tail: t,
            } => CertFile::new(Certificate::SeFamily(SEFamilyCertificate {
                family: family.resolve(caps, seed)?,
                r: r.clone(),
                eps: eps.clone(),
                field: field.decode()?,
                tail: tail(t),
            }))
            .with_space(family.domain())
            .with_family(family.clone()),
            CertificateJson::EquiFamily {
                r,
                eps,
                flavor,
                members,
            } => CertFile::new(Certificate::EquiFamily(EquiFamilyCertificate {
                members: members
                    .iter()
                    .map(|m| {
                        Ok(Member {
                            label: m.label.clone(),
                            points: m.points.clone(),
                            space: m.space.resolve(caps, seed)?,
                            field: m.field.decode()?,
                        })
                    })
                    .collect::<Result<_>>()?,
                r: r.clone(),
                eps: eps.clone(),
                flavor: match flavor {
                    FlavorJson::EquiExact { s } => EquiFlavor::Exact { s: s.clone() },
                    FlavorJson::EquiCoarse { decay: d } => EquiFlavor::Coarse { decay: decay(d) },
                    FlavorJson::EquiStrong { tail: t } => EquiFlavor::Strong { tail: tail(t) },
                },
            })),
        };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.cert {
            Certificate::PropASets(c) => c.validate(),
            Certificate::PropAVector(c) => c.validate(),
            Certificate::StrongEmbed(c) => c.validate(),
            Certificate::CoarseWitness(c) => c.validate(),
            Certificate::ExactFamily(c) => c.validate(),
            Certificate::SeFamily(c) => c.validate(),
            Certificate::EquiFamily(c) => c.validate(),
        }
    }
}

/// A verification report as written to disk: the seed travels with it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub seed: u64,
    pub certificate: String,
    pub report: VerificationReport,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub two_prime: Vec<TwoPrime>,
}

impl ReportFile {
    pub fn new(seed: u64, cert: &Certificate, report: VerificationReport) -> Self {
        ReportFile {
            seed,
            certificate: cert.kind().to_string(),
            report,
            two_prime: Vec::new(),
        }
    }

    /// Pass iff the report passes and every two-prime check holds.
    pub fn passed(&self) -> bool {
        self.report.passed() && self.two_prime.iter().all(|t| t.diagonal_equal && t.additive_bound)
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_certificate(path: &Path, caps: &Caps, seed: u64) -> Result<CertFile> {
    CertFile::decode(&read_json(path)?, caps, seed)
}

pub fn write_certificate(path: &Path, cert: &CertFile) -> Result<()> {
    write_json(path, &cert.encode())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinators::{prop_a_to_strong, sets_to_vector};
    use crate::exact::qi;
    use crate::generators::folner_prop_a;

    #[test]
    fn space_sources_round_trip() {
        let src = SpaceSource::Cayley {
            group: GroupSpec::Zn { n: 2 },
            radius: 3,
        };
        let json = serde_json::to_string(&src).unwrap();
        assert_eq!(json, r#"{"source":"cayley","group":{"preset":"Zn","n":2},"radius":3}"#);
        let space = src.resolve(&Caps::default(), 0).unwrap();
        let inline = SpaceSource::inline(&space);
        let back = inline.resolve(&Caps::default(), 0).unwrap();
        assert_eq!(back.labels(), space.labels());
        assert_eq!(back.validity_radii(), space.validity_radii());
        assert_eq!(back.raw(0, 5), space.raw(0, 5));
    }

    #[test]
    fn strong_certificate_round_trip_keeps_the_report() {
        let sets = folner_prop_a(1, 3, 12, &qi(1), &Caps::default()).unwrap().cert;
        let strong = prop_a_to_strong(&sets_to_vector(&sets).unwrap().cert).unwrap().cert;
        let file = CertFile::new(Certificate::StrongEmbed(strong)).with_space(SpaceSource::Cayley {
            group: GroupSpec::Z,
            radius: 12,
        });
        let first = file.cert.verify(Scope::Window).unwrap();
        let text = serde_json::to_string(&file.encode()).unwrap();
        assert!(!text.contains('.'), "no floats in artifacts");
        let back = CertFile::decode(&serde_json::from_str(&text).unwrap(), &Caps::default(), 0).unwrap();
        assert_eq!(back.cert.verify(Scope::Window).unwrap(), first);
        assert_eq!(serde_json::to_string(&back.encode()).unwrap(), text);
    }

    #[test]
    fn vector_outside_its_universe_is_malformed() {
        let json = FieldJson {
            universe: UniverseJson {
                tag: "u".into(),
                labels: vec!["a".into()],
                location: None,
            },
            vectors: vec![VectorJson {
                universe: "u".into(),
                entries: [(3, Scalar::one())].into_iter().collect(),
            }],
        };
        assert!(matches!(json.decode(), Err(Error::Malformed(_))));
    }
}
