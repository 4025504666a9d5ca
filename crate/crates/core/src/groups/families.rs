use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::action::GroupAction;
use super::orbits::OrbitData;
use super::tk::{compute_tk, displacement_constant};
use crate::certificates::{
    family_support_radius, verify_equi, verify_exact_family, verify_se_family, verify_strong_embed,
    EquiFamilyCertificate, EquiFlavor, ExactFamilyCertificate, Member, SEFamilyCertificate, Scope,
    StrongEmbedCertificate,
};
use crate::combinators::{exact_to_se_family, Combined, Provenance, Stage, Targets};
use crate::error::{Error, Result};
use crate::exact::{fmt_q, qi, Real, Q};
use crate::generators::family_universe;
use crate::hilbert::{SparseVector, UnitField, Universe};
use crate::metric::{CosetSpace, Elem, GroupBall, SetMapFamily};

fn worst(report: &crate::certificates::VerificationReport, prefix: &str) -> Result<Real> {
    report
        .condition(prefix)
        .map(|c| c.worst.clone())
        .ok_or_else(|| Error::Internal(format!("report has no {prefix} condition")))
}

fn tails(report: &crate::certificates::VerificationReport) -> Vec<Q> {
    report
        .conditions
        .iter()
        .filter(|c| c.name.starts_with("tail"))
        .map(|c| c.worst.as_rational().expect("tails are rational"))
        .collect()
}

fn refuse(report: &crate::certificates::VerificationReport, what: &str) -> Result<()> {
    if report.passed() {
        Ok(())
    } else {
        Err(Error::Refused(format!("{what} does not verify")))
    }
}

/// Constant uniform field over `𝒴` for a family of quotient maps with
/// finite codomains. Near slack is 0; `S` is the measured largest distance
/// from a point to a fiber.
pub fn finite_quotient_exact_cert(family: Arc<SetMapFamily>, r: &Q) -> Result<Combined<ExactFamilyCertificate>> {
    if let Some(w) = (0..family.len()).find(|&w| family.fiber(w).is_empty()) {
        return Err(Error::Truncation(format!(
            "coset {} has no stored element",
            family.label(w)
        )));
    }
    let space = family.domain().clone();
    let uni = family_universe(&family, "l2(K)")?;
    let all: Vec<u32> = (0..family.len() as u32).collect();
    let v = SparseVector::uniform(uni.tag().clone(), &all)?;
    let field = UnitField::new(uni, vec![v; space.len()])?;
    let s_raw = family_support_radius(&family, &field).unwrap_or(0);
    let s = space.raw_to_q(s_raw);
    let cert = ExactFamilyCertificate {
        family,
        r: r.clone(),
        eps: Real::zero(),
        s: s.clone(),
        field,
    };
    let report = verify_exact_family(&cert, Scope::Window)?;
    let mut prov = Provenance::new("finite-quotient-exact");
    prov.param_q("R", r);
    prov.param_q("S (measured)", &s);
    Ok(Combined {
        cert,
        provenance: prov,
        report,
    })
}

/// The family `{π_i : G → G/H_i}` of a cofinite action, strongly
/// embeddable through `ξ_g = β_{g·x_1}` read in `⊔ G/H_i`.
///
/// Tail entries come from the base tails at `T_S`. When the window does not
/// certify a `T_S` reaching a base radius, that entry is placed at the base
/// radius itself and its bound is the measured tail.
pub fn action_to_se_family(
    action: &GroupAction,
    orbits: &OrbitData,
    base: &StrongEmbedCertificate,
    targets: &Targets,
) -> Result<Combined<SEFamilyCertificate>> {
    let space = action.space();
    let ball = action.ball();
    if base.space.labels() != space.labels() {
        return Err(Error::Domain("base certificate lives on another space".into()));
    }
    let family = Arc::new(orbits.quotient_family(action)?);
    refuse(&verify_strong_embed(base, Scope::Window)?, "base strong certificate")?;

    if !space.is_window() {
        let exact = finite_quotient_exact_cert(family, &targets.r)?;
        let mut out = exact_to_se_family(&exact.cert)?;
        out.provenance.operation = "action-to-se-family".into();
        out.provenance.param_q("R", &targets.r);
        out.provenance.param_q("S (measured)", &exact.cert.s);
        out.provenance
            .notes
            .push("finite space: constant field over the cosets".into());
        return Ok(out);
    }

    let x1 = orbits.representatives[0];
    let c = displacement_constant(action, orbits);
    let tk = compute_tk(action, orbits)?;
    let range = qi(c.c as i64) * (&targets.r + qi(1));
    let mut prov = Provenance::new("action-to-se-family");
    prov.param_q("R", &targets.r);
    prov.param("ε", &targets.eps);
    prov.param("C", c.c);
    prov.param_q("C(R + 1)", &range);
    prov.param("orbits", orbits.len());
    prov.param("T_k", format!("{:?}", tk.t));

    // d_G ≤ R ⇒ d_X(g·x_1, g′·x_1) ≤ C(R + 1), checked on every stored pair
    let r_raw = ball.space().raw_at_most(&targets.r).unwrap_or(0);
    let images: Vec<Option<usize>> = (0..ball.len()).map(|g| action.act(g, x1)).collect();
    let far = (0..ball.len())
        .into_par_iter()
        .map(|g| {
            let Some(p) = images[g] else { return 0 };
            ball.space()
                .ball_raw(g, r_raw)
                .filter_map(|h| images[h].map(|q| space.raw(p, q)))
                .max()
                .unwrap_or(0)
        })
        .max()
        .unwrap_or(0);
    prov.stage(Stage::new(
        "d_G ≤ R ⇒ d_X(g·x_1, g′·x_1) ≤ C(R + 1)",
        Real::from(range.clone()),
        None,
        Real::from(space.raw_to_q(far)),
    ))?;
    prov.stage(Stage::new(
        format!("base near range {} ≤ {}", fmt_q(&range), fmt_q(&base.r)),
        Real::from(base.r.clone()),
        None,
        Real::from(range.clone()),
    ))?;
    let mut probe = base.clone();
    probe.r = range.clone();
    probe.eps = Real::from(qi(2));
    let base_near = worst(&verify_strong_embed(&probe, Scope::Window)?, "near")?;
    prov.stage(Stage::new(
        "base ‖β_x − β_y‖² ≤ ε² for d_X ≤ C(R + 1)",
        targets.eps.mul(&targets.eps),
        Some(base.eps.mul(&base.eps)),
        base_near,
    ))?;

    // 𝒴 = ⊔ G/H_i; base universe entries located at identified points
    let loc = base
        .field
        .universe()
        .location()
        .ok_or_else(|| Error::Refused("base universe is not located".into()))?;
    let mut labels = Vec::new();
    let mut location = Vec::new();
    let mut new_index = vec![None; loc.len()];
    for (k, &p) in loc.iter().enumerate() {
        if let Some((i, cs)) = orbits.coset_of_point[p] {
            new_index[k] = Some(labels.len() as u32);
            labels.push(base.field.universe().label(k as u32).to_string());
            location.push(family.flat(i, cs));
        }
    }
    let uni = Arc::new(Universe::new("l2(K)", labels, Some(location))?);
    let tag = uni.tag().clone();
    let vectors = (0..ball.len())
        .map(|g| {
            let p = images[g].ok_or_else(|| {
                Error::Truncation(format!("{}·x_1 is not stored", ball.label(g)))
            })?;
            let beta = base.field.vector(p);
            if let Some(k) = beta.support().iter().find(|&&k| new_index[k as usize].is_none()) {
                return Err(Error::Truncation(format!(
                    "β at {} charges {}, which no stored coset represents",
                    space.label(p),
                    base.field.universe().label(*k)
                )));
            }
            beta.reindex(tag.clone(), |k| new_index[k as usize])
        })
        .collect::<Result<Vec<_>>>()?;
    let field = UnitField::new(uni, vectors)?;

    let mut entries: Vec<(Q, Option<Q>)> = Vec::new();
    for (s, delta) in &base.tail {
        match tk.first_reaching(s) {
            Some(k) => entries.push((qi(k as i64), Some(delta.clone()))),
            None => {
                prov.notes.push(format!(
                    "T_k does not reach {} inside the window; tail at S = {} is measured",
                    fmt_q(s),
                    fmt_q(&s.ceil())
                ));
                entries.push((s.ceil(), None));
            }
        }
    }
    // near the window edge fibers look farther away than they are; the
    // measured support radius closes the profile there
    if let Some(sup) = family_support_radius(&family, &field) {
        entries.push((ball.space().raw_to_q(sup).ceil(), Some(qi(0))));
    }
    entries.sort();
    entries.dedup_by(|b, a| {
        if a.0 == b.0 {
            a.1 = match (a.1.take(), b.1.take()) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, y) => x.or(y),
            };
            true
        } else {
            false
        }
    });
    let mut out = SEFamilyCertificate {
        family,
        r: targets.r.clone(),
        eps: Real::from(qi(2)),
        field,
        tail: entries.iter().map(|(s, _)| (s.clone(), Q::from_integer(1.into()))).collect(),
    };
    let first = verify_se_family(&out, Scope::Window)?;
    let near = worst(&first, "near")?;
    let interior = verify_se_family(&out, Scope::Ambient)?;
    for ((s, analytic), measured) in entries.iter().zip(tails(&interior)) {
        if let Some(a) = analytic {
            prov.stages.push(Stage::new(
                format!("interior tail at S = {} ≤ analytic bound", fmt_q(s)),
                Real::from(a.clone()),
                None,
                Real::from(measured.clone()),
            ));
        }
    }
    let mut running: Option<Q> = None;
    for (entry, measured) in out.tail.iter_mut().zip(tails(&first)) {
        let b = match running.take() {
            Some(prev) if prev < measured => prev,
            _ => measured,
        };
        entry.1 = b.clone();
        running = Some(b);
    }
    out.eps = near.sqrt_upper()?.min(targets.eps.clone());
    prov.param("ε (measured)", &out.eps);
    let report = verify_se_family(&out, Scope::Window)?;
    Ok(Combined {
        cert: out,
        provenance: prov,
        report,
    })
}

/// Carries a strong certificate on the `H` window to every stored coset
/// `gH` along `h′ ↦ g⁻¹h′`, with `g` the minimal representative. Entries
/// that land outside the stored coset are dropped and the vector is
/// renormalized; if that breaks the base constants they are re-measured.
pub fn transport_coset_certs(
    ball: &GroupBall,
    cosets: &CosetSpace,
    base: &StrongEmbedCertificate,
) -> Result<Combined<EquiFamilyCertificate>> {
    refuse(&verify_strong_embed(base, Scope::Window)?, "subgroup strong certificate")?;
    let model = ball.model();
    let bspace = &base.space;
    let base_elem: Vec<Elem> = bspace
        .labels()
        .iter()
        .map(|l| {
            let i = ball.space().index_of(l).map_err(|_| {
                Error::Domain(format!("subgroup point {l} is not an element of the ball"))
            })?;
            Ok(ball.element(i).clone())
        })
        .collect::<Result<_>>()?;
    let base_of: HashMap<&Elem, usize> = base_elem.iter().enumerate().map(|(b, e)| (e, b)).collect();
    let loc = base
        .field
        .universe()
        .location()
        .ok_or_else(|| Error::Refused("subgroup certificate universe is not located".into()))?;
    let injective = {
        let mut l = loc.to_vec();
        l.sort_unstable();
        l.windows(2).all(|w| w[0] != w[1])
    };

    let mut renormalized = 0usize;
    let members = (0..cosets.len())
        .map(|c| -> Result<Member> {
            let points = cosets.members(c).to_vec();
            let rep = ball.element(cosets.representative(c));
            let rep_inv = model.inverse(rep);
            let pulled: Vec<usize> = points
                .iter()
                .map(|&m| {
                    let e = model.multiply(&rep_inv, ball.element(m));
                    base_of.get(&e).copied().ok_or_else(|| {
                        Error::Truncation(format!(
                            "{} is in coset {} but {} is not in the subgroup window",
                            ball.label(m),
                            cosets.space().label(c),
                            model.label(&e)
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            for (a, &pa) in points.iter().enumerate() {
                for (b, &pb) in points.iter().enumerate() {
                    if ball.space().dist(pa, pb) != bspace.dist(pulled[a], pulled[b]) {
                        return Err(Error::Truncation(format!(
                            "coset {} is not isometric to the subgroup window at ({}, {})",
                            cosets.space().label(c),
                            ball.label(pa),
                            ball.label(pb)
                        )));
                    }
                }
            }
            let mut labels = Vec::new();
            let mut location = Vec::new();
            let mut moved = vec![None; loc.len()];
            for (k, &q) in loc.iter().enumerate() {
                let image = model.multiply(rep, &base_elem[q]);
                let Some(t) = ball.index_of(&image).and_then(|i| points.binary_search(&i).ok()) else {
                    continue;
                };
                moved[k] = Some(labels.len() as u32);
                let name = ball.label(points[t]);
                labels.push(if injective {
                    name.to_string()
                } else {
                    format!("{name}#{}", base.field.universe().label(k as u32))
                });
                location.push(t);
            }
            let tag: Arc<str> = format!("l2({})", cosets.space().label(c)).into();
            let uni = Arc::new(Universe::new(tag.clone(), labels, Some(location))?);
            let mut vectors = Vec::with_capacity(points.len());
            for (a, &b) in pulled.iter().enumerate() {
                let beta = base.field.vector(b);
                let v = beta.reindex(tag.clone(), |k| moved[k as usize])?;
                if v.nnz() == beta.nnz() {
                    vectors.push(v);
                    continue;
                }
                if v.is_zero() {
                    return Err(Error::Truncation(format!(
                        "the vector at {} leaves the stored coset entirely",
                        ball.label(points[a])
                    )));
                }
                renormalized += 1;
                vectors.push(v.normalized()?);
            }
            Ok(Member {
                label: cosets.space().label(c).to_string(),
                space: Arc::new(ball.space().subspace(&points)?),
                field: UnitField::new(uni, vectors)?,
                points,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = EquiFamilyCertificate {
        members,
        r: base.r.clone(),
        eps: base.eps.clone(),
        flavor: EquiFlavor::Strong {
            tail: base.tail.clone(),
        },
    };
    let mut prov = Provenance::new("transport-coset-certs");
    prov.param("cosets", cosets.len());
    prov.param_q("R", &base.r);
    prov.param("ε", &base.eps);
    prov.param("renormalized vectors", renormalized);
    let mut report = verify_equi(&out, Scope::Window)?;
    if !report.passed() {
        if renormalized == 0 {
            return Err(Error::Internal("transported certificates do not verify at the base constants".into()));
        }
        let mut probe = out.clone();
        probe.eps = Real::from(qi(2));
        probe.flavor = EquiFlavor::Strong {
            tail: base.tail.iter().map(|(s, _)| (s.clone(), qi(1))).collect(),
        };
        let m = verify_equi(&probe, Scope::Window)?;
        out.eps = base.eps.clone().max(worst(&m, "near")?.sqrt_upper()?);
        out.flavor = EquiFlavor::Strong {
            tail: base
                .tail
                .iter()
                .zip(tails(&m))
                .map(|((s, d), t)| (s.clone(), d.clone().max(t)))
                .collect(),
        };
        prov.notes.push("renormalization at the window edge moved the constants; re-measured".into());
        prov.param("ε (re-measured)", &out.eps);
        report = verify_equi(&out, Scope::Window)?;
    }
    Ok(Combined {
        cert: out,
        provenance: prov,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinators::{prop_a_to_strong, sets_to_vector};
    use crate::config::Caps;
    use crate::generators::ball_sets;
    use crate::groups::{orbit_decomposition, GroupAction};
    use crate::metric::{cayley_ball, quotient_space, FiniteMetricSpace, GroupModel, Subgroup, SubgroupSpec};

    fn lattice(rank: usize, radius: u64) -> Arc<GroupBall> {
        Arc::new(cayley_ball(Arc::new(GroupModel::Lattice { rank }), radius, &Caps::default()).unwrap())
    }

    fn strong_on(space: Arc<FiniteMetricSpace>, radius: i64, r: i64) -> StrongEmbedCertificate {
        let sets = ball_sets(space, &qi(radius), &qi(r)).unwrap().cert;
        prop_a_to_strong(&sets_to_vector(&sets).unwrap().cert).unwrap().cert
    }

    fn quotient_family(ball: &GroupBall, spec: SubgroupSpec) -> Arc<SetMapFamily> {
        let h = Subgroup::from_spec(&spec, ball.model()).unwrap();
        let cs = quotient_space(ball, &h, 0).unwrap();
        Arc::new(SetMapFamily::quotient_map(ball, &cs).unwrap())
    }

    #[test]
    fn even_integers_have_support_one() {
        let ball = lattice(1, 6);
        let fam = quotient_family(&ball, SubgroupSpec::Multiples { modulus: 2 });
        let out = finite_quotient_exact_cert(fam, &qi(3)).unwrap();
        assert_eq!(out.cert.s, qi(1));
        assert!(out.report.passed());
        assert!(worst(&out.report, "near").unwrap().is_zero());
    }

    #[test]
    fn whole_group_has_support_zero() {
        let ball = lattice(1, 4);
        let fam = quotient_family(&ball, SubgroupSpec::Whole);
        assert_eq!(finite_quotient_exact_cert(fam, &qi(2)).unwrap().cert.s, qi(0));
    }

    #[test]
    fn finite_group_trivial_subgroup_support_is_the_diameter() {
        // every coset is a point, so the uniform field reaches the farthest one
        let ball = cayley_ball(Arc::new(GroupModel::cyclic(6)), 6, &Caps::default()).unwrap();
        let fam = quotient_family(&ball, SubgroupSpec::Trivial);
        let out = finite_quotient_exact_cert(fam, &qi(1)).unwrap();
        assert_eq!(out.cert.s, qi(3));
        assert!(out.report.passed());
    }

    #[test]
    fn projection_action_on_a_line() {
        let ball = lattice(2, 12);
        let action = GroupAction::shift(ball.clone(), 0, 1, 12, &Caps::default()).unwrap();
        let orbits = orbit_decomposition(&action, 0).unwrap();
        let base = strong_on(action.space().clone(), 3, 2);
        let targets = Targets {
            r: qi(1),
            eps: base.eps.clone(),
        };
        let out = action_to_se_family(&action, &orbits, &base, &targets).unwrap();
        assert!(out.report.passed(), "{:?}", out.report);
        assert_eq!(out.provenance.parameters["C"], "1");
        // window edge: from (0,-12) the line a = 3 is first met at (3,-9)
        assert_eq!(out.cert.tail.last().unwrap(), &(qi(6), qi(0)));
        assert_eq!(out.cert.tail[0].0, qi(3));
        assert!(out.cert.tail[0].1 > qi(0));
        // away from the edge the T_k bound holds exactly
        let mut interior = out.cert.clone();
        interior.tail = vec![(qi(3), qi(0))];
        assert!(verify_se_family(&interior, Scope::Ambient).unwrap().passed());
        assert!(out.provenance.stages.iter().filter(|s| s.name.starts_with("interior")).all(|s| s.passed));
        let implied = out.provenance.find_stage("d_G ≤ R").unwrap();
        assert!(implied.passed);
        assert_eq!(implied.measured, Real::from(qi(1)));
    }

    #[test]
    fn translation_keeps_the_base_tails() {
        let ball = lattice(1, 15);
        let action = GroupAction::translation(ball).unwrap();
        let orbits = orbit_decomposition(&action, 0).unwrap();
        let base = strong_on(action.space().clone(), 4, 2);
        let targets = Targets {
            r: qi(1),
            eps: base.eps.clone(),
        };
        let out = action_to_se_family(&action, &orbits, &base, &targets).unwrap();
        assert!(out.report.passed());
        assert_eq!(out.cert.tail, base.tail);
        // neighbouring 9-point intervals: ‖ξ_g − ξ_g′‖² = 2/9
        assert_eq!(out.cert.eps, Real::sqrt_of(&crate::exact::q(2, 9)).unwrap());
    }

    #[test]
    fn short_base_range_is_a_mismatch() {
        let ball = lattice(2, 8);
        let action = GroupAction::shift(ball, 0, 1, 8, &Caps::default()).unwrap();
        let orbits = orbit_decomposition(&action, 0).unwrap();
        let base = strong_on(action.space().clone(), 3, 1);
        let targets = Targets {
            r: qi(1),
            eps: Real::from(qi(1)),
        };
        match action_to_se_family(&action, &orbits, &base, &targets) {
            Err(Error::ParameterMismatch { stage, .. }) => assert!(stage.starts_with("base near range")),
            other => panic!("expected a mismatch, got {other:?}"),
        }
    }

    #[test]
    fn finite_space_dispatches_to_the_constant_field() {
        let ball = Arc::new(cayley_ball(Arc::new(GroupModel::cyclic(5)), 5, &Caps::default()).unwrap());
        let action = GroupAction::translation(ball).unwrap();
        let orbits = orbit_decomposition(&action, 0).unwrap();
        let base = strong_on(action.space().clone(), 2, 1);
        let targets = Targets {
            r: qi(1),
            eps: Real::from(qi(1)),
        };
        let out = action_to_se_family(&action, &orbits, &base, &targets).unwrap();
        assert!(out.report.passed());
        assert!(out.cert.eps.is_zero());
        assert_eq!(out.cert.tail, vec![(qi(2), qi(0))]);
        assert!(out.provenance.notes[0].starts_with("finite space"));
    }

    fn vertical(ball: &GroupBall) -> (Subgroup, CosetSpace, Arc<FiniteMetricSpace>) {
        let h = Subgroup::from_spec(&SubgroupSpec::ZeroCoords { coords: vec![0] }, ball.model()).unwrap();
        let cs = quotient_space(ball, &h, 0).unwrap();
        let members: Vec<usize> = (0..ball.len()).filter(|&g| h.contains(ball.element(g))).collect();
        let hw = Arc::new(ball.space().subspace(&members).unwrap());
        (h, cs, hw)
    }

    #[test]
    fn transported_lines_match_the_base() {
        let ball = lattice(2, 8);
        let (_, cs, hw) = vertical(&ball);
        let base = strong_on(hw, 2, 1);
        let out = transport_coset_certs(&ball, &cs, &base).unwrap();
        assert!(out.report.passed(), "{:?}", out.report);
        assert_eq!(out.cert.members.len(), 17);
        // the central line is the subgroup window itself
        let center = out.cert.members.iter().find(|m| m.label == "(0,0)H").unwrap();
        assert_eq!(center.field.vectors(), base.field.vectors().iter().map(|v| v.reindex(center.field.universe().tag().clone(), Some).unwrap()).collect::<Vec<_>>().as_slice());
        for m in &out.cert.members {
            for (a, &p) in m.points.iter().enumerate() {
                assert_eq!(m.space.label(a), ball.label(p));
            }
        }
    }

    #[test]
    fn trivial_subgroup_gives_singletons() {
        let ball = lattice(1, 5);
        let h = Subgroup::from_spec(&SubgroupSpec::Trivial, ball.model()).unwrap();
        let cs = quotient_space(&ball, &h, 0).unwrap();
        let hw = Arc::new(ball.space().subspace(&[0]).unwrap());
        let base = strong_on(hw, 0, 1);
        let out = transport_coset_certs(&ball, &cs, &base).unwrap();
        assert!(out.report.passed());
        assert!(out.cert.members.iter().all(|m| m.points.len() == 1 && m.field.vector(0).nnz() == 1));
    }
}
