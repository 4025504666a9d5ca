use std::sync::Arc;

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{half, refuse_unless_passed, worst, Combined, EtaSection, Provenance, Stage};
use crate::certificates::{
    orthogonality_radius, verify_coarse_witness, verify_equi, verify_exact_family, verify_prop_a_vector,
    verify_se_family, verify_strong_embed, CoarseWitness, EquiFamilyCertificate, EquiFlavor,
    ExactFamilyCertificate, Member, PropAVectorCertificate, SEFamilyCertificate, Scope,
    StrongEmbedCertificate,
};
use crate::error::{Error, Result};
use crate::exact::{fmt_q, qi, Real, Q};
use crate::hilbert::{SparseVector, UnitField, Universe};
use crate::metric::SetMapFamily;

/// Near range and tolerance requested of a combinator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Targets {
    #[serde(with = "crate::exact::qser")]
    pub r: Q,
    pub eps: Real,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoarseTargets {
    #[serde(with = "crate::exact::qser")]
    pub r: Q,
    pub eps: Real,
    #[serde(with = "crate::exact::qser")]
    pub delta: Q,
}

fn check_members(family: &SetMapFamily, members: &[Member]) -> Result<()> {
    if members.len() != family.len() {
        return Err(Error::Domain(format!(
            "{} fiber certificates for {} fibers",
            members.len(),
            family.len()
        )));
    }
    for (w, m) in members.iter().enumerate() {
        if m.points != family.fiber(w) {
            return Err(Error::Domain(format!(
                "member {} is not the fiber over {}",
                m.label,
                family.label(w)
            )));
        }
    }
    Ok(())
}

/// `ℓ²(⊔_w ℓ²(fiber w))` flattened, labels `w|t`, located through the
/// fiber locations when every fiber is located.
struct Nested {
    universe: Arc<Universe>,
    offsets: Vec<usize>,
}

fn nested_universe(family: &SetMapFamily, members: &[Member]) -> Result<Nested> {
    let located = members.iter().all(|m| m.field.universe().is_located());
    let mut labels = Vec::new();
    let mut location = Vec::new();
    let mut offsets = Vec::with_capacity(members.len());
    for (w, m) in members.iter().enumerate() {
        offsets.push(labels.len());
        let uni = m.field.universe();
        for (t, l) in uni.labels().iter().enumerate() {
            labels.push(format!("{}|{l}", family.label(w)));
            if located {
                location.push(m.points[uni.location().expect("located")[t]]);
            }
        }
    }
    let universe = Universe::new("l2(Y×fibers)", labels, located.then_some(location))?;
    Ok(Nested {
        universe: Arc::new(universe),
        offsets,
    })
}

/// `ξ_x(w, t) = α_x(w) · β_{η(x,w)}(t)`.
fn nested_field(eta: &EtaSection, outer: &UnitField, members: &[Member], nested: &Nested) -> Result<UnitField> {
    let loc = outer
        .universe()
        .location()
        .ok_or_else(|| Error::Malformed("outer field is not located in 𝒴".into()))?;
    let tag = nested.universe.tag().clone();
    let vectors = (0..outer.len())
        .into_par_iter()
        .map(|x| {
            let mut entries = Vec::new();
            for (k, a) in outer.vector(x).entries() {
                let w = loc[k as usize];
                let beta = members[w].field.vector(eta.local(x, w)?);
                for (t, b) in beta.entries() {
                    entries.push(((nested.offsets[w] + t as usize) as u32, a.mul(b)));
                }
            }
            SparseVector::from_entries(tag.clone(), entries)
        })
        .collect::<Result<Vec<_>>>()?;
    UnitField::new(nested.universe.clone(), vectors)
}

/// Which pairs a mixed-tail supremum ranges over.
#[derive(Clone, Copy)]
enum Pairs {
    /// `d(x, y) ≤ R` (raw).
    Near(u64),
    /// Every pair whose supports meet; the rest contribute 0.
    Overlapping,
}

/// `sup Σ |α_x(w) α_y(w)|` over `w` with `d(x, φ⁻¹(w)) > S` or `d(y, φ⁻¹(w)) > S`.
fn sup_mixed_tail(family: &SetMapFamily, field: &UnitField, s_raw: u64, pairs: Pairs) -> Result<Real> {
    let loc = field.universe().location().expect("validated");
    let space = family.domain();
    let index = matches!(pairs, Pairs::Overlapping).then(|| field.support_index());
    let per: Vec<Real> = (0..space.len())
        .into_par_iter()
        .map(|x| -> Result<Real> {
            let ys: Vec<usize> = match pairs {
                Pairs::Near(r) => space.ball_raw(x, r).collect(),
                Pairs::Overlapping => index.as_ref().expect("index").partners(field.vector(x)),
            };
            let mut best = Real::zero();
            for y in ys {
                let inside = |k: u32| {
                    let w = loc[k as usize];
                    family.fiber_dist_raw(x, w) <= s_raw && family.fiber_dist_raw(y, w) <= s_raw
                };
                let m = field.vector(x).mixed_tail(field.vector(y), inside)?;
                if m > best {
                    best = m;
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().fold(Real::zero(), Real::max))
}

/// Inner-gap form of the sub-certificate tolerance: `ε_X²/2`.
fn gap_of(eps: &Real) -> Real {
    eps.mul(eps).mul_q(&half())
}

fn range_stage(prov: &mut Provenance, name: &str, needed: &Q, have: &Q) -> Result<()> {
    prov.stage(Stage::new(
        format!("{name} near range {} ≤ {}", fmt_q(needed), fmt_q(have)),
        Real::from(have.clone()),
        None,
        Real::from(needed.clone()),
    ))
}

fn fiber_gap_at(fibers: &EquiFamilyCertificate, range: &Q) -> Result<Real> {
    let mut at = fibers.clone();
    at.r = range.clone();
    at.eps = Real::from(qi(2));
    Ok(worst(&verify_equi(&at, Scope::Window)?, "near")?.mul_q(&half()))
}

/// Property A from an exact family whose fibers are equi-exact:
/// `ξ_x(w, t) = α_x(w) β_{η(x,w)}(t)` with parameters `(R, ε, 2S_X + S_Y)`.
pub fn combine_exact(
    outer: &ExactFamilyCertificate,
    fibers: &EquiFamilyCertificate,
    targets: &Targets,
) -> Result<Combined<PropAVectorCertificate>> {
    let s_y = match &fibers.flavor {
        EquiFlavor::Exact { s } => s.clone(),
        other => {
            return Err(Error::Malformed(format!(
                "combine exact needs equi-exact fibers, got {}",
                other.name()
            )))
        }
    };
    let family = &outer.family;
    check_members(family, &fibers.members)?;
    let outer_report = verify_exact_family(outer, Scope::Window)?;
    refuse_unless_passed(&outer_report, "outer exact family certificate")?;
    refuse_unless_passed(&verify_equi(fibers, Scope::Window)?, "fiber certificate")?;

    let eps_half = targets.eps.mul_q(&half());
    let s_x = outer.s.clone();
    let range = &s_x * qi(2) + &targets.r;
    let threshold = &s_x * qi(2) + &s_y;
    let mut prov = Provenance::new("combine-exact");
    prov.param_q("R", &targets.r);
    prov.param("ε", &targets.eps);
    prov.param_q("S_X", &s_x);
    prov.param_q("S_Y", &s_y);
    prov.param_q("fiber range 2S_X + R", &range);
    prov.param_q("threshold 2S_X + S_Y", &threshold);

    range_stage(&mut prov, "outer", &targets.r, &outer.r)?;
    let outer_measured = worst(&outer_report, "near")?.mul_q(&half());
    prov.stage(Stage::new(
        "outer |1 − ⟨α_x,α_y⟩| ≤ ε/2",
        eps_half.clone(),
        Some(gap_of(&outer.eps)),
        outer_measured.clone(),
    ))?;
    range_stage(&mut prov, "fiber", &range, &fibers.r)?;
    let fiber_measured = fiber_gap_at(fibers, &range)?;
    prov.stage(Stage::new(
        "fiber |1 − ⟨β_s,β_t⟩| ≤ ε/2",
        eps_half,
        Some(gap_of(&fibers.eps)),
        fiber_measured.clone(),
    ))?;

    let eta = EtaSection::new(family.clone());
    let nested = nested_universe(family, &fibers.members)?;
    let field = nested_field(&eta, &outer.field, &fibers.members, &nested)?;
    let mut out = PropAVectorCertificate {
        space: family.domain().clone(),
        r: targets.r.clone(),
        eps: targets.eps.clone(),
        s: threshold.clone(),
        field,
    };
    let first = verify_prop_a_vector(&out, Scope::Window)?;
    if !first.passed() {
        return Err(Error::Internal("combined field does not verify at the target".into()));
    }
    let measured = worst(&first, "near")?;
    prov.stage(Stage::new(
        "bookkeeping: output gap ≤ outer gap + fiber gap",
        outer_measured.add(&fiber_measured),
        None,
        measured.clone(),
    ))?;
    let orth = orthogonality_radius(out.space.as_ref(), &out.field)?;
    prov.param_q("orthogonality radius (measured)", &out.space.raw_to_q(orth));
    prov.param("ε (measured)", &measured);
    out.eps = measured;
    let report = verify_prop_a_vector(&out, Scope::Window)?;
    Ok(Combined {
        cert: out,
        provenance: prov,
        report,
    })
}

/// Smallest radius in `candidates` whose mixed-tail supremum is at most `bound`.
fn choose_radius(
    family: &SetMapFamily,
    field: &UnitField,
    candidates: &[Q],
    pairs: Pairs,
    bound: &Real,
) -> Result<(Q, Real)> {
    let space = family.domain();
    let mut last = None;
    for s in candidates {
        let s_raw = space.raw_at_most(s).unwrap_or(0);
        let m = sup_mixed_tail(family, field, s_raw, pairs)?;
        if m <= *bound {
            return Ok((s.clone(), m));
        }
        last = Some((s.clone(), m));
    }
    Err(match last {
        Some((s, m)) => Error::mismatch(
            "outer mixed tail",
            format!("{m} ≤ {bound} fails at every profile radius up to {}", fmt_q(&s)),
        ),
        None => Error::mismatch("outer mixed tail", "empty outer tail profile"),
    })
}

/// The near stages shared by both strongly embeddable combinations, with
/// `gap` the inner-product tolerance. Returns `(S_X, range, stage sum)`.
fn se_near_stages(
    prov: &mut Provenance,
    outer: &SEFamilyCertificate,
    outer_report: &crate::certificates::VerificationReport,
    fibers: &EquiFamilyCertificate,
    r: &Q,
    gap: &Real,
) -> Result<(Q, Q, Real)> {
    let third = gap.mul_q(&Q::new(1.into(), 3.into()));
    let sixth = gap.mul_q(&Q::new(1.into(), 6.into()));
    range_stage(prov, "outer", r, &outer.r)?;
    let outer_measured = worst(outer_report, "near")?.mul_q(&half());
    prov.stage(Stage::new(
        "outer |1 − ⟨α_x,α_y⟩| ≤ ε/3",
        third.clone(),
        Some(gap_of(&outer.eps)),
        outer_measured.clone(),
    ))?;
    let radii: Vec<Q> = outer.tail.iter().map(|(s, _)| s.clone()).collect();
    let r_raw = outer.family.domain().raw_at_most(r).unwrap_or(0);
    let (s_x, mixed) = choose_radius(&outer.family, &outer.field, &radii, Pairs::Near(r_raw), &sixth)?;
    prov.param_q("S_X", &s_x);
    prov.stage(Stage::new(
        format!("outer mixed tail at S_X = {} ≤ ε/6", fmt_q(&s_x)),
        sixth,
        None,
        mixed.clone(),
    ))?;
    let rest = mixed.mul_q(&qi(2));
    prov.stage(Stage::new(
        "remainder 2·Σ|α_x α_y| ≤ ε/3",
        third.clone(),
        None,
        rest.clone(),
    ))?;
    let range = &s_x * qi(2) + r;
    prov.param_q("fiber range 2S_X + R", &range);
    range_stage(prov, "fiber", &range, &fibers.r)?;
    let fiber_measured = fiber_gap_at(fibers, &range)?;
    prov.stage(Stage::new(
        "fiber |1 − ⟨β_s,β_t⟩| ≤ ε/3",
        third,
        Some(gap_of(&fibers.eps)),
        fiber_measured.clone(),
    ))?;
    Ok((s_x, range, outer_measured.add(&fiber_measured).add(&rest)))
}

/// Coarse embedding from a strongly embeddable family with equi-coarse
/// fibers, with the split `ε/3 + ε/3 + ε/3` and `δ/2 + δ/2`.
pub fn combine_se_coarse(
    outer: &SEFamilyCertificate,
    fibers: &EquiFamilyCertificate,
    targets: &CoarseTargets,
) -> Result<Combined<CoarseWitness>> {
    let decay = match &fibers.flavor {
        EquiFlavor::Coarse { decay } => decay.clone(),
        other => {
            return Err(Error::Malformed(format!(
                "combine se-coarse needs equi-coarse fibers, got {}",
                other.name()
            )))
        }
    };
    let family = &outer.family;
    check_members(family, &fibers.members)?;
    let outer_report = verify_se_family(outer, Scope::Window)?;
    refuse_unless_passed(&outer_report, "outer strongly embeddable family certificate")?;
    let fiber_report = verify_equi(fibers, Scope::Window)?;
    refuse_unless_passed(&fiber_report, "fiber certificate")?;

    let mut prov = Provenance::new("combine-se-coarse");
    prov.param_q("R", &targets.r);
    prov.param("ε", &targets.eps);
    prov.param_q("δ", &targets.delta);
    let (_, _, near_sum) = se_near_stages(&mut prov, outer, &outer_report, fibers, &targets.r, &targets.eps)?;

    let delta_half = Real::from(&targets.delta * half());
    let radii: Vec<Q> = outer.tail.iter().map(|(s, _)| s.clone()).collect();
    let (s_x_far, far_mixed) = choose_radius(family, &outer.field, &radii, Pairs::Overlapping, &delta_half)?;
    prov.param_q("S′_X", &s_x_far);
    prov.stage(Stage::new(
        format!("outer far mixed tail at S′_X = {} ≤ δ/2", fmt_q(&s_x_far)),
        delta_half.clone(),
        None,
        far_mixed.clone(),
    ))?;
    let decays: Vec<_> = fiber_report
        .conditions
        .iter()
        .filter(|c| c.name.starts_with("decay"))
        .collect();
    let pick = decay.iter().position(|(_, b)| *b <= delta_half).ok_or_else(|| {
        Error::mismatch(
            "fiber decay",
            format!("no fiber decay entry is at most δ/2 = {delta_half}"),
        )
    })?;
    let s_y = decay[pick].0.clone();
    prov.param_q("S_Y", &s_y);
    prov.stage(Stage::new(
        format!("fiber decay at S_Y = {} ≤ δ/2", fmt_q(&s_y)),
        delta_half,
        Some(decay[pick].1.clone()),
        decays[pick].worst.clone(),
    ))?;
    let threshold = &s_x_far * qi(2) + &s_y;
    prov.param_q("threshold 2S′_X + S_Y", &threshold);

    let eta = EtaSection::new(family.clone());
    let nested = nested_universe(family, &fibers.members)?;
    let field = nested_field(&eta, &outer.field, &fibers.members, &nested)?;
    let mut out = CoarseWitness {
        space: family.domain().clone(),
        r: targets.r.clone(),
        eps: targets.eps.clone(),
        field,
        decay: vec![(threshold, Real::from(targets.delta.clone()))],
    };
    let first = verify_coarse_witness(&out, Scope::Window)?;
    if !first.passed() {
        return Err(Error::Internal("combined field does not verify at the target".into()));
    }
    let near = worst(&first, "near")?;
    let far = worst(&first, "decay")?;
    prov.stage(Stage::new(
        "bookkeeping: output gap ≤ sum of near stages",
        near_sum,
        None,
        near.clone(),
    ))?;
    prov.param("ε (measured)", &near);
    prov.param("δ (measured)", &far);
    out.eps = near;
    out.decay[0].1 = far;
    let report = verify_coarse_witness(&out, Scope::Window)?;
    Ok(Combined {
        cert: out,
        provenance: prov,
        report,
    })
}

/// Running minimum over `(radius, bound)` pairs sorted by radius, keeping
/// strictly increasing radii.
fn monotone_profile(mut entries: Vec<(Q, Q)>) -> Vec<(Q, Q)> {
    entries.sort();
    let mut out: Vec<(Q, Q)> = Vec::new();
    for (s, b) in entries {
        let b = match out.last() {
            Some((_, prev)) if *prev < b => prev.clone(),
            _ => b,
        };
        match out.last_mut() {
            Some(last) if last.0 == s => last.1 = b,
            _ => out.push((s, b)),
        }
    }
    out
}

/// Strong embedding from a strongly embeddable family with equi-strong,
/// located fibers. The near split runs on `ε²/2`; tails combine as
/// `(S_X + S_Y, δ_X + δ_Y)` and are then re-measured.
pub fn combine_se_strong(
    outer: &SEFamilyCertificate,
    fibers: &EquiFamilyCertificate,
    targets: &Targets,
) -> Result<Combined<StrongEmbedCertificate>> {
    let fiber_tail = match &fibers.flavor {
        EquiFlavor::Strong { tail } => tail.clone(),
        other => {
            return Err(Error::Malformed(format!(
                "combine se-strong needs equi-strong fibers, got {}",
                other.name()
            )))
        }
    };
    if let Some(m) = fibers.members.iter().find(|m| !m.field.universe().is_located()) {
        return Err(Error::Refused(format!("fiber field of {} is not located", m.label)));
    }
    let family = &outer.family;
    check_members(family, &fibers.members)?;
    let outer_report = verify_se_family(outer, Scope::Window)?;
    refuse_unless_passed(&outer_report, "outer strongly embeddable family certificate")?;
    refuse_unless_passed(&verify_equi(fibers, Scope::Window)?, "fiber certificate")?;

    let gap = gap_of(&targets.eps);
    let mut prov = Provenance::new("combine-se-strong");
    prov.param_q("R", &targets.r);
    prov.param("ε", &targets.eps);
    prov.param("inner-product tolerance ε²/2", &gap);
    let (_, _, near_sum) = se_near_stages(&mut prov, outer, &outer_report, fibers, &targets.r, &gap)?;

    let one = Q::from_integer(1.into());
    let mut combos = Vec::new();
    for (sa, da) in &outer.tail {
        for (sb, db) in &fiber_tail {
            let b = da + db;
            combos.push((sa + sb, if b > one { one.clone() } else { b }));
        }
    }
    let analytic = monotone_profile(combos);

    let eta = EtaSection::new(family.clone());
    let nested = nested_universe(family, &fibers.members)?;
    let field = nested_field(&eta, &outer.field, &fibers.members, &nested)?;
    let mut out = StrongEmbedCertificate {
        space: family.domain().clone(),
        r: targets.r.clone(),
        eps: targets.eps.clone(),
        field,
        tail: analytic.clone(),
    };
    let first = verify_strong_embed(&out, Scope::Window)?;
    if !first.passed() {
        return Err(Error::Internal("combined field does not verify at the target".into()));
    }
    let near_sq = worst(&first, "near")?;
    prov.stage(Stage::new(
        "bookkeeping: output gap ≤ sum of near stages",
        near_sum,
        None,
        near_sq.mul_q(&half()),
    ))?;
    let tails: Vec<_> = first
        .conditions
        .iter()
        .filter(|c| c.name.starts_with("tail"))
        .collect();
    for (k, ((s, bound), cond)) in analytic.iter().zip(&tails).enumerate() {
        prov.stages.push(Stage::new(
            format!("tail at S = {}", fmt_q(s)),
            Real::from(bound.clone()),
            None,
            cond.worst.clone(),
        ));
        let measured = cond.worst.as_rational().expect("tails are rational");
        if measured < out.tail[k].1 {
            out.tail[k].1 = measured;
        }
    }
    if let Some((s, _)) = out.tail.iter().find(|(_, b)| b.is_zero()) {
        prov.param_q("zero-tail threshold", s);
    }
    let eps = near_sq.sqrt_upper()?.min(targets.eps.clone());
    prov.param("ε (measured)", &eps);
    out.eps = eps;
    let report = verify_strong_embed(&out, Scope::Window)?;
    Ok(Combined {
        cert: out,
        provenance: prov,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinators::{exact_to_se_family, prop_a_to_strong, strong_to_coarse};
    use crate::config::Caps;
    use crate::exact::q;
    use crate::generators::{family_ball_field, fiber_ball_equi, FiberFlavor};
    use crate::metric::{cayley_ball, GroupModel};

    fn plane(radius: u64) -> Arc<SetMapFamily> {
        let ball = cayley_ball(Arc::new(GroupModel::Lattice { rank: 2 }), radius, &Caps::default()).unwrap();
        Arc::new(SetMapFamily::projection(&ball, 0).unwrap())
    }

    fn targets(r: i64, eps: Q) -> Targets {
        Targets {
            r: qi(r),
            eps: Real::from(eps),
        }
    }

    #[test]
    fn exact_combination_on_a_small_plane() {
        let fam = plane(12);
        let outer = family_ball_field(fam.clone(), &qi(2), &qi(1)).unwrap().cert;
        let fibers = fiber_ball_equi(&fam, &qi(6), &qi(5), FiberFlavor::Exact).unwrap().cert;
        let out = combine_exact(&outer, &fibers, &targets(1, q(4, 5))).unwrap();
        assert!(out.report.passed());
        assert_eq!(out.cert.s, qi(2 * 2 + 13));
        assert!(out.cert.field.non_unit().is_empty());
        let orth = out.provenance.parameters["orthogonality radius (measured)"].clone();
        assert!(crate::exact::parse_q(&orth).unwrap() <= qi(17));
        assert!(out.provenance.stages.iter().all(|s| s.passed));

        // the implication chain keeps passing
        let strong = prop_a_to_strong(&out.cert).unwrap();
        assert!(strong.report.passed());
        let coarse = strong_to_coarse(&strong.cert).unwrap();
        assert!(coarse.report.passed());
    }

    #[test]
    fn short_fiber_range_is_a_mismatch() {
        let fam = plane(8);
        let outer = family_ball_field(fam.clone(), &qi(2), &qi(1)).unwrap().cert;
        let fibers = fiber_ball_equi(&fam, &qi(6), &qi(3), FiberFlavor::Exact).unwrap().cert;
        match combine_exact(&outer, &fibers, &targets(1, q(4, 5))) {
            Err(Error::ParameterMismatch { stage, .. }) => assert!(stage.starts_with("fiber near range")),
            other => panic!("expected a mismatch, got {other:?}"),
        }
    }

    #[test]
    fn loose_outer_is_a_mismatch() {
        let fam = plane(8);
        let outer = family_ball_field(fam.clone(), &qi(1), &qi(1)).unwrap().cert;
        let fibers = fiber_ball_equi(&fam, &qi(6), &qi(3), FiberFlavor::Exact).unwrap().cert;
        // outer gap at d = 1 is 1/3 > 1/10
        match combine_exact(&outer, &fibers, &targets(1, q(1, 5))) {
            Err(Error::ParameterMismatch { stage, .. }) => assert!(stage.starts_with("outer |1")),
            other => panic!("expected a mismatch, got {other:?}"),
        }
    }

    #[test]
    fn singleton_fibers_reproduce_the_outer_inner_products() {
        let ball = cayley_ball(Arc::new(GroupModel::Lattice { rank: 1 }), 15, &Caps::default()).unwrap();
        let fam = Arc::new(SetMapFamily::identity(ball.space().clone()).unwrap());
        let outer = family_ball_field(fam.clone(), &qi(3), &qi(1)).unwrap().cert;
        let fibers = fiber_ball_equi(&fam, &qi(0), &qi(7), FiberFlavor::Exact).unwrap().cert;
        let out = combine_exact(&outer, &fibers, &targets(1, q(1, 2))).unwrap();
        let (a, x) = (&outer.field, &out.cert.field);
        for i in 0..ball.len() {
            for j in 0..ball.len() {
                assert_eq!(
                    a.vector(i).inner(a.vector(j)).unwrap(),
                    x.vector(i).inner(x.vector(j)).unwrap()
                );
            }
        }
    }

    #[test]
    fn wrong_fiber_flavor() {
        let fam = plane(5);
        let outer = family_ball_field(fam.clone(), &qi(1), &qi(1)).unwrap().cert;
        let fibers = fiber_ball_equi(&fam, &qi(2), &qi(3), FiberFlavor::Strong).unwrap().cert;
        assert!(matches!(
            combine_exact(&outer, &fibers, &targets(1, q(1, 1))),
            Err(Error::Malformed(_))
        ));
    }

    #[test]
    fn fibers_from_another_family() {
        let fam = plane(5);
        let other = plane(6);
        let outer = family_ball_field(fam.clone(), &qi(1), &qi(1)).unwrap().cert;
        let fibers = fiber_ball_equi(&other, &qi(2), &qi(3), FiberFlavor::Exact).unwrap().cert;
        assert!(matches!(
            combine_exact(&outer, &fibers, &targets(1, q(1, 1))),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn coarse_combination_split() {
        let fam = plane(16);
        let outer = family_ball_field(fam.clone(), &qi(2), &qi(1)).unwrap().cert;
        let outer = exact_to_se_family(&outer).unwrap().cert;
        let fibers = fiber_ball_equi(&fam, &qi(12), &qi(5), FiberFlavor::Coarse).unwrap().cert;
        let t = CoarseTargets {
            r: qi(1),
            eps: Real::from(q(4, 5)),
            delta: q(1, 10),
        };
        let out = combine_se_coarse(&outer, &fibers, &t).unwrap();
        assert!(out.report.passed());
        let p = &out.provenance;
        assert_eq!(p.parameters["S_X"], "2/1");
        assert_eq!(p.parameters["S′_X"], "2/1");
        assert_eq!(p.parameters["S_Y"], "25/1");
        assert_eq!(p.parameters["threshold 2S′_X + S_Y"], "29/1");
        let thirds = p.stages.iter().filter(|s| s.name.contains("ε/3")).count();
        let halves = p.stages.iter().filter(|s| s.name.contains("δ/2")).count();
        assert_eq!((thirds, halves), (3, 2));
        assert!(p.stages.iter().all(|s| s.passed));
        assert!(out.cert.decay[0].1.is_zero());
        assert!(!out.report.condition("decay").unwrap().vacuous);
    }

    #[test]
    fn delta_one_is_always_met() {
        let fam = plane(10);
        let outer = family_ball_field(fam.clone(), &qi(2), &qi(1)).unwrap().cert;
        let outer = exact_to_se_family(&outer).unwrap().cert;
        let fibers = fiber_ball_equi(&fam, &qi(12), &qi(5), FiberFlavor::Coarse).unwrap().cert;
        let t = CoarseTargets {
            r: qi(1),
            eps: Real::from(q(4, 5)),
            delta: qi(1),
        };
        let out = combine_se_coarse(&outer, &fibers, &t).unwrap();
        assert!(out.report.passed());
    }

    #[test]
    fn strong_combination_zero_tail_at_the_sum() {
        let fam = plane(10);
        let outer = family_ball_field(fam.clone(), &qi(2), &qi(1)).unwrap().cert;
        let outer = exact_to_se_family(&outer).unwrap().cert;
        let fibers = fiber_ball_equi(&fam, &qi(12), &qi(5), FiberFlavor::Strong).unwrap().cert;
        let out = combine_se_strong(&outer, &fibers, &targets(1, q(5, 4))).unwrap();
        assert!(out.report.passed());
        assert_eq!(out.cert.tail, vec![(qi(14), Q::zero())]);
        assert!(out.cert.field.universe().is_located());
    }

    #[test]
    fn monotone_profile_takes_running_minimum() {
        let p = monotone_profile(vec![(qi(3), q(1, 2)), (qi(1), q(1, 4)), (qi(3), q(1, 8)), (qi(5), q(1, 3))]);
        assert_eq!(p, vec![(qi(1), q(1, 4)), (qi(3), q(1, 8)), (qi(5), q(1, 8))]);
    }
}
