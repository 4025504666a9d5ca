use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;

use super::report::{ConditionReport, Scope, VerificationReport, Witness};
use super::{
    CoarseWitness, EquiFamilyCertificate, EquiFlavor, ExactFamilyCertificate, Member,
    PropASetCertificate, PropAVectorCertificate, SEFamilyCertificate, StrongEmbedCertificate,
};
use crate::error::Result;
use crate::exact::{fmt_q, Real, Q};
use crate::hilbert::UnitField;
use crate::metric::{FiniteMetricSpace, SetMapFamily};

/// Points a verifier quantifies over.
struct Domain<'a> {
    space: &'a FiniteMetricSpace,
    valid: Vec<bool>,
}

impl<'a> Domain<'a> {
    fn new(space: &'a FiniteMetricSpace, scope: Scope, locality: u64) -> Self {
        let valid = (0..space.len())
            .map(|x| scope == Scope::Window || space.valid_at(x, locality))
            .collect();
        Domain { space, valid }
    }

    fn skipped_points(&self) -> usize {
        self.valid.iter().filter(|v| !**v).count()
    }

    fn pair_witness(&self, x: usize, y: usize) -> Witness {
        Witness {
            member: None,
            x: self.space.label(x).to_string(),
            y: Some(self.space.label(y).to_string()),
            distance: Some(fmt_q(&self.space.dist(x, y))),
        }
    }

    fn point_witness(&self, x: usize) -> Witness {
        Witness {
            member: None,
            x: self.space.label(x).to_string(),
            y: None,
            distance: None,
        }
    }
}

/// One condition before it is turned into a report, so equi-families can
/// merge members first.
#[derive(Clone, Debug)]
struct Partial {
    name: String,
    bound: Real,
    worst: Option<(Real, Witness)>,
    checked: u64,
    skipped: u64,
}

impl Partial {
    fn merge(&mut self, other: Partial) {
        self.checked += other.checked;
        self.skipped += other.skipped;
        if let Some((v, w)) = other.worst {
            let better = match &self.worst {
                None => true,
                Some((cur, _)) => v > *cur,
            };
            if better {
                self.worst = Some((v, w));
            }
        }
    }

    fn finish(self) -> ConditionReport {
        ConditionReport::new(self.name, self.bound, self.worst, self.checked, self.skipped)
    }
}

/// Keeps the first strict maximum, so ties go to the smallest index.
fn reduce_max<T>(items: impl IntoIterator<Item = Option<(Real, T)>>) -> Option<(Real, T)> {
    let mut best: Option<(Real, T)> = None;
    for (v, t) in items.into_iter().flatten() {
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, t));
        }
    }
    best
}

fn point_condition(
    dom: &Domain,
    name: String,
    bound: Real,
    value: impl Fn(usize) -> Result<Real> + Sync,
) -> Result<Partial> {
    let n = dom.space.len();
    let per: Vec<Option<(Real, usize)>> = (0..n)
        .into_par_iter()
        .map(|x| -> Result<Option<(Real, usize)>> {
            if !dom.valid[x] {
                return Ok(None);
            }
            Ok(Some((value(x)?, x)))
        })
        .collect::<Result<_>>()?;
    let checked = per.iter().filter(|p| p.is_some()).count() as u64;
    let worst = reduce_max(per).map(|(v, x)| (v, dom.point_witness(x)));
    Ok(Partial {
        name,
        bound,
        worst,
        checked,
        skipped: dom.skipped_points() as u64,
    })
}

/// Which `y` get evaluated for a given `x` among the in-domain pairs.
enum Candidates<'a> {
    All,
    /// Only pairs whose supports meet; the others are exactly zero.
    Overlapping(&'a crate::hilbert::SupportIndex, &'a UnitField),
}

fn pair_condition(
    dom: &Domain,
    name: String,
    bound: Real,
    ordered: bool,
    in_range: impl Fn(u64) -> bool + Sync,
    candidates: Candidates,
    value: impl Fn(usize, usize) -> Result<Real> + Sync,
) -> Result<Partial> {
    let n = dom.space.len();
    let per: Vec<(Option<(Real, (usize, usize))>, u64, u64)> = (0..n)
        .into_par_iter()
        .map(|x| -> Result<_> {
            let row = dom.space.row(x);
            let start = if ordered { 0 } else { x };
            let mut checked = 0u64;
            let mut skipped = 0u64;
            let mut first: Option<usize> = None;
            let mut eval_all: Vec<usize> = Vec::new();
            for (y, &d) in row.iter().enumerate().skip(start) {
                if !in_range(d) {
                    continue;
                }
                if dom.valid[x] && dom.valid[y] {
                    checked += 1;
                    if first.is_none() {
                        first = Some(y);
                    }
                    if let Candidates::All = candidates {
                        eval_all.push(y);
                    }
                } else {
                    skipped += 1;
                }
            }
            let ys: Vec<usize> = match &candidates {
                Candidates::All => eval_all,
                Candidates::Overlapping(index, field) => match first {
                    None => Vec::new(),
                    Some(f) => {
                        let mut ys: Vec<usize> = index
                            .partners(field.vector(x))
                            .into_iter()
                            .filter(|&y| {
                                y > f && y >= start && in_range(row[y]) && dom.valid[y]
                            })
                            .collect();
                        ys.insert(0, f);
                        ys
                    }
                },
            };
            let mut best: Option<(Real, (usize, usize))> = None;
            for y in ys {
                let v = value(x, y)?;
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, (x, y)));
                }
            }
            Ok((best, checked, skipped))
        })
        .collect::<Result<_>>()?;
    let checked = per.iter().map(|p| p.1).sum();
    let skipped = per.iter().map(|p| p.2).sum();
    let worst = reduce_max(per.into_iter().map(|p| p.0)).map(|(v, (x, y))| (v, dom.pair_witness(x, y)));
    Ok(Partial {
        name,
        bound,
        worst,
        checked,
        skipped,
    })
}

fn abs_gap_from_one(ip: Real) -> Real {
    Real::one().sub(&ip).abs()
}

fn two() -> Q {
    Q::from_integer(BigInt::from(2))
}

/// Largest raw distance from a point to the location of its support.
pub fn located_support_radius(space: &FiniteMetricSpace, field: &UnitField) -> Option<u64> {
    let loc = field.universe().location()?;
    Some(
        field
            .vectors()
            .iter()
            .enumerate()
            .flat_map(|(x, v)| v.support().iter().map(move |&k| space.raw(x, loc[k as usize])))
            .max()
            .unwrap_or(0),
    )
}

/// Largest raw `d(x, φ_i⁻¹(w))` over `w` in the support of `ξ_x`.
pub fn family_support_radius(family: &SetMapFamily, field: &UnitField) -> Option<u64> {
    let loc = field.universe().location()?;
    Some(
        field
            .vectors()
            .iter()
            .enumerate()
            .flat_map(|(x, v)| {
                v.support()
                    .iter()
                    .map(move |&k| family.fiber_dist_raw(x, loc[k as usize]))
            })
            .max()
            .unwrap_or(0),
    )
}

#[derive(Clone, Copy)]
enum NearForm {
    /// `|1 − ⟨u,v⟩| ≤ ε`
    InnerGap,
    /// `‖u − v‖² ≤ ε²`
    NormSq,
}

#[derive(Clone, Copy)]
enum Locator<'a> {
    None,
    Located(&'a [usize]),
    Family(&'a SetMapFamily, &'a [usize]),
}

impl Locator<'_> {
    fn dist(&self, space: &FiniteMetricSpace, x: usize, k: u32) -> u64 {
        match self {
            Locator::None => 0,
            Locator::Located(loc) => space.raw(x, loc[k as usize]),
            Locator::Family(fam, loc) => fam.fiber_dist_raw(x, loc[k as usize]),
        }
    }
}

struct FieldSpec<'a> {
    r: &'a Q,
    eps: &'a Real,
    near: NearForm,
    orthogonal_beyond: Option<&'a Q>,
    support: Option<&'a Q>,
    decay: &'a [(Q, Real)],
    tail: &'a [(Q, Q)],
    locator: Locator<'a>,
    /// Used as the locality radius when the field is not located.
    declared: Q,
}

struct FieldOutcome {
    partials: Vec<Partial>,
    skipped_points: usize,
    locality: u64,
}

fn field_conditions(
    space: &FiniteMetricSpace,
    field: &UnitField,
    scope: Scope,
    spec: &FieldSpec,
) -> Result<FieldOutcome> {
    let measured = match spec.locator {
        Locator::None => None,
        Locator::Located(_) => located_support_radius(space, field),
        Locator::Family(fam, _) => family_support_radius(fam, field),
    };
    let locality = measured.unwrap_or_else(|| space.raw_at_most(&spec.declared).unwrap_or(0));
    let dom = Domain::new(space, scope, locality);
    let mut partials = Vec::new();

    partials.push(point_condition(
        &dom,
        "unit-norm |‖β_x‖² − 1| ≤ 0".into(),
        Real::zero(),
        |x| Ok(Real::from(field.vector(x).norm_sq() - Q::one()).abs()),
    )?);

    let r_raw = space.raw_at_most(spec.r);
    let near_in = |d: u64| r_raw.is_some_and(|r| d <= r);
    let (name, bound) = match spec.near {
        NearForm::InnerGap => ("near |1 − ⟨β_x,β_y⟩| ≤ ε for d ≤ R".to_string(), spec.eps.clone()),
        NearForm::NormSq => (
            "near ‖β_x − β_y‖² ≤ ε² for d ≤ R".to_string(),
            spec.eps.mul(spec.eps),
        ),
    };
    let near = spec.near;
    partials.push(pair_condition(&dom, name, bound, false, near_in, Candidates::All, |x, y| {
        let (u, v) = (field.vector(x), field.vector(y));
        match near {
            NearForm::InnerGap => Ok(abs_gap_from_one(u.inner(v)?)),
            NearForm::NormSq => u.dist_norm_sq(v),
        }
    })?);

    let needs_index = spec.orthogonal_beyond.is_some() || !spec.decay.is_empty();
    let index = needs_index.then(|| field.support_index());
    let abs_inner = |x: usize, y: usize| -> Result<Real> { Ok(field.vector(x).inner(field.vector(y))?.abs()) };

    if let Some(s) = spec.orthogonal_beyond {
        let s_raw = space.raw_at_least(s);
        partials.push(pair_condition(
            &dom,
            format!("orthogonality ⟨β_x,β_y⟩ = 0 for d ≥ {}", fmt_q(s)),
            Real::zero(),
            false,
            |d| d >= s_raw,
            Candidates::Overlapping(index.as_ref().expect("index"), field),
            abs_inner,
        )?);
    }

    if let Some(s) = spec.support {
        let locator = spec.locator;
        partials.push(point_condition(
            &dom,
            format!("support radius ≤ {}", fmt_q(s)),
            Real::from(s.clone()),
            |x| {
                let worst = field
                    .vector(x)
                    .support()
                    .iter()
                    .map(|&k| locator.dist(space, x, k))
                    .max()
                    .unwrap_or(0);
                Ok(Real::from(space.raw_to_q(worst)))
            },
        )?);
    }

    for (s, delta) in spec.decay {
        let s_raw = space.raw_at_least(s);
        partials.push(pair_condition(
            &dom,
            format!("decay |⟨β_x,β_y⟩| ≤ δ for d ≥ {}", fmt_q(s)),
            delta.clone(),
            false,
            |d| d >= s_raw,
            Candidates::Overlapping(index.as_ref().expect("index"), field),
            abs_inner,
        )?);
    }

    for (s, delta) in spec.tail {
        let s_raw = space.raw_at_most(s).unwrap_or(0);
        let tail_dom = Domain::new(space, scope, locality.max(s_raw));
        let locator = spec.locator;
        partials.push(point_condition(
            &tail_dom,
            format!("tail Σ_(w∉B_S(x)) |β_x(w)|² ≤ δ at S = {}", fmt_q(s)),
            Real::from(delta.clone()),
            |x| {
                Ok(Real::from(
                    field.vector(x).tail_mass(|k| locator.dist(space, x, k) <= s_raw),
                ))
            },
        )?);
    }

    Ok(FieldOutcome {
        skipped_points: dom.skipped_points(),
        partials,
        locality,
    })
}

fn report(kind: &str, scope: Scope, space: &FiniteMetricSpace, out: FieldOutcome) -> VerificationReport {
    VerificationReport::new(
        kind,
        scope,
        space.len(),
        out.skipped_points,
        fmt_q(&space.raw_to_q(out.locality)),
        out.partials.into_iter().map(Partial::finish).collect(),
    )
}

pub fn verify_prop_a_sets(cert: &PropASetCertificate, scope: Scope) -> Result<VerificationReport> {
    cert.validate()?;
    let space = &*cert.space;
    let sets = &cert.sets;
    let support_raw = |x: usize| sets[x].iter().map(|&(p, _)| space.raw(x, p)).max();
    let locality = (0..space.len()).filter_map(support_raw).max().unwrap_or(0);
    let dom = Domain::new(space, scope, locality);
    let mut partials = Vec::new();
    partials.push(point_condition(&dom, "nonempty A_x".into(), Real::zero(), |x| {
        Ok(if sets[x].is_empty() { Real::one() } else { Real::zero() })
    })?);
    partials.push(point_condition(
        &dom,
        "support d(x,y) ≤ S for (y,n) ∈ A_x".into(),
        Real::from(cert.s.clone()),
        |x| Ok(Real::from(space.raw_to_q(support_raw(x).unwrap_or(0)))),
    )?);
    let r_raw = space.raw_at_most(&cert.r);
    partials.push(pair_condition(
        &dom,
        "near |A_x Δ A_y| / |A_x| ≤ ε for d ≤ R".into(),
        Real::from(cert.eps.clone()),
        true,
        |d| r_raw.is_some_and(|r| d <= r),
        Candidates::All,
        |x, y| {
            if sets[x].is_empty() {
                return Ok(Real::zero());
            }
            let delta = symmetric_difference(&sets[x], &sets[y]);
            Ok(Real::from(Q::new(
                BigInt::from(delta),
                BigInt::from(sets[x].len()),
            )))
        },
    )?);
    Ok(VerificationReport::new(
        "prop-a-sets",
        scope,
        space.len(),
        dom.skipped_points(),
        fmt_q(&space.raw_to_q(locality)),
        partials.into_iter().map(Partial::finish).collect(),
    ))
}

/// `|A Δ B|` for sorted slices.
pub fn symmetric_difference<T: Ord>(a: &[T], b: &[T]) -> usize {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    a.len() + b.len() - 2 * common
}

fn locator_of(field: &UnitField) -> Locator<'_> {
    match field.universe().location() {
        Some(loc) => Locator::Located(loc),
        None => Locator::None,
    }
}

pub fn verify_prop_a_vector(cert: &PropAVectorCertificate, scope: Scope) -> Result<VerificationReport> {
    cert.validate()?;
    let spec = FieldSpec {
        r: &cert.r,
        eps: &cert.eps,
        near: NearForm::InnerGap,
        orthogonal_beyond: Some(&cert.s),
        support: None,
        decay: &[],
        tail: &[],
        locator: locator_of(&cert.field),
        declared: cert.s.clone(),
    };
    let out = field_conditions(&cert.space, &cert.field, scope, &spec)?;
    Ok(report("prop-a-vector", scope, &cert.space, out))
}

pub fn verify_strong_embed(cert: &StrongEmbedCertificate, scope: Scope) -> Result<VerificationReport> {
    cert.validate()?;
    let spec = FieldSpec {
        r: &cert.r,
        eps: &cert.eps,
        near: NearForm::NormSq,
        orthogonal_beyond: None,
        support: None,
        decay: &[],
        tail: &cert.tail,
        locator: locator_of(&cert.field),
        declared: Q::zero(),
    };
    let out = field_conditions(&cert.space, &cert.field, scope, &spec)?;
    Ok(report("strong-embed", scope, &cert.space, out))
}

pub fn verify_coarse_witness(cert: &CoarseWitness, scope: Scope) -> Result<VerificationReport> {
    cert.validate()?;
    let spec = FieldSpec {
        r: &cert.r,
        eps: &cert.eps,
        near: NearForm::InnerGap,
        orthogonal_beyond: None,
        support: None,
        decay: &cert.decay,
        tail: &[],
        locator: locator_of(&cert.field),
        declared: cert.decay.last().map(|(s, _)| s.clone()).unwrap_or_else(Q::zero),
    };
    let out = field_conditions(&cert.space, &cert.field, scope, &spec)?;
    Ok(report("coarse-witness", scope, &cert.space, out))
}

pub fn verify_exact_family(cert: &ExactFamilyCertificate, scope: Scope) -> Result<VerificationReport> {
    cert.validate()?;
    let loc = cert.field.universe().location().expect("validated");
    let spec = FieldSpec {
        r: &cert.r,
        eps: &cert.eps,
        near: NearForm::NormSq,
        orthogonal_beyond: None,
        support: Some(&cert.s),
        decay: &[],
        tail: &[],
        locator: Locator::Family(&cert.family, loc),
        declared: cert.s.clone(),
    };
    let out = field_conditions(cert.family.domain(), &cert.field, scope, &spec)?;
    Ok(report("exact-family", scope, cert.family.domain(), out))
}

pub fn verify_se_family(cert: &SEFamilyCertificate, scope: Scope) -> Result<VerificationReport> {
    cert.validate()?;
    let loc = cert.field.universe().location().expect("validated");
    let spec = FieldSpec {
        r: &cert.r,
        eps: &cert.eps,
        near: NearForm::NormSq,
        orthogonal_beyond: None,
        support: None,
        decay: &[],
        tail: &cert.tail,
        locator: Locator::Family(&cert.family, loc),
        declared: Q::zero(),
    };
    let out = field_conditions(cert.family.domain(), &cert.field, scope, &spec)?;
    Ok(report("se-family", scope, cert.family.domain(), out))
}

/// Checks every member and takes the sup over members before comparing
/// with the shared constants.
pub fn verify_equi(cert: &EquiFamilyCertificate, scope: Scope) -> Result<VerificationReport> {
    cert.validate()?;
    let mut merged: Option<Vec<Partial>> = None;
    let mut points = 0;
    let mut skipped_points = 0;
    let mut locality = Q::zero();
    let no_decay: Vec<(Q, Real)> = Vec::new();
    let no_tail: Vec<(Q, Q)> = Vec::new();
    for m in &cert.members {
        let Member { space, field, label, .. } = m;
        let (orth, decay, tail, declared) = match &cert.flavor {
            EquiFlavor::Exact { s } => (Some(s), &no_decay, &no_tail, s.clone()),
            EquiFlavor::Coarse { decay } => (
                None,
                decay,
                &no_tail,
                decay.last().map(|(s, _)| s.clone()).unwrap_or_else(Q::zero),
            ),
            EquiFlavor::Strong { tail } => (None, &no_decay, tail, Q::zero()),
        };
        let spec = FieldSpec {
            r: &cert.r,
            eps: &cert.eps,
            near: NearForm::NormSq,
            orthogonal_beyond: orth,
            support: None,
            decay,
            tail,
            locator: locator_of(field),
            declared,
        };
        let out = field_conditions(space, field, scope, &spec)?;
        points += space.len();
        skipped_points += out.skipped_points;
        let l = space.raw_to_q(out.locality);
        if l > locality {
            locality = l;
        }
        let mut partials = out.partials;
        for p in &mut partials {
            if let Some((_, w)) = &mut p.worst {
                w.member = Some(label.clone());
            }
        }
        merged = Some(match merged {
            None => partials,
            Some(mut acc) => {
                for (a, p) in acc.iter_mut().zip(partials) {
                    a.merge(p);
                }
                acc
            }
        });
    }
    let conditions = merged
        .unwrap_or_default()
        .into_iter()
        .map(Partial::finish)
        .collect();
    let mut rep = VerificationReport::new(
        cert.flavor.name(),
        scope,
        points,
        skipped_points,
        fmt_q(&locality),
        conditions,
    );
    rep.notes.push(format!("{} members", cert.members.len()));
    Ok(rep)
}

/// Sup of the mixed tail against the sup of single tails at one radius.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TwoPrime {
    pub s: String,
    pub mixed_sup: Real,
    pub mixed_witness: Option<Witness>,
    pub single_sup: Real,
    pub single_witness: Option<Witness>,
    /// `mixed(x, x) = tail(x)` at every point.
    pub diagonal_equal: bool,
    /// `sup mixed ≤ 2 · sup tail`.
    pub additive_bound: bool,
    /// `sup mixed ≤ 2 · √(sup tail)`, the Cauchy–Schwarz form.
    pub root_bound: bool,
    pub pairs_checked: u64,
}

pub fn verify_two_prime(cert: &StrongEmbedCertificate, s: &Q, scope: Scope) -> Result<TwoPrime> {
    cert.validate()?;
    let space = &*cert.space;
    let field = &cert.field;
    let loc = field.universe().location().expect("validated");
    let locality = located_support_radius(space, field).unwrap_or(0);
    let s_raw = space.raw_at_most(s).unwrap_or(0);
    let dom = Domain::new(space, scope, locality.max(s_raw));
    let inside = |x: usize, k: u32| space.raw(x, loc[k as usize]) <= s_raw;
    let tail = |x: usize| field.vector(x).tail_mass(|k| inside(x, k));
    let mixed = |x: usize, y: usize| -> Result<Real> {
        field
            .vector(x)
            .mixed_tail(field.vector(y), |k| inside(x, k) && inside(y, k))
    };
    let single = point_condition(&dom, "tail".into(), Real::zero(), |x| Ok(Real::from(tail(x))))?;
    let diagonal_equal = (0..space.len())
        .into_par_iter()
        .filter(|&x| dom.valid[x])
        .map(|x| mixed(x, x).map(|m| m == Real::from(tail(x))))
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .all(|b| b);
    let index = field.support_index();
    let pairs = pair_condition(
        &dom,
        "mixed".into(),
        Real::zero(),
        false,
        |_| true,
        Candidates::Overlapping(&index, field),
        mixed,
    )?;
    let mixed_sup = pairs.worst.as_ref().map(|(v, _)| v.clone()).unwrap_or_else(Real::zero);
    let single_sup = single.worst.as_ref().map(|(v, _)| v.clone()).unwrap_or_else(Real::zero);
    let single_q = single_sup.as_rational().expect("tails are rational");
    let additive_bound = mixed_sup <= Real::from(&single_q * two());
    let root_bound = mixed_sup <= Real::sqrt_of(&single_q)?.mul_q(&two());
    Ok(TwoPrime {
        s: fmt_q(s),
        mixed_witness: pairs.worst.map(|(_, w)| w),
        single_witness: single.worst.map(|(_, w)| w),
        mixed_sup,
        single_sup,
        diagonal_equal,
        additive_bound,
        root_bound,
        pairs_checked: pairs.checked,
    })
}

/// Smallest distance beyond which every inner product vanishes: the next
/// stored distance above the largest distance carrying a nonzero inner
/// product (or one raw unit above it when no larger distance is stored).
pub fn orthogonality_radius(space: &FiniteMetricSpace, field: &UnitField) -> Result<u64> {
    let index = field.support_index();
    let mut largest = 0u64;
    for x in 0..space.len() {
        for y in index.partners(field.vector(x)) {
            let d = space.raw(x, y);
            if d > largest && !field.vector(x).inner(field.vector(y))?.is_zero() {
                largest = d;
            }
        }
    }
    Ok(space.next_distance_above(largest).unwrap_or(largest + 1))
}

