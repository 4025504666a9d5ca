use std::sync::Arc;

use num_traits::Zero;
use rayon::prelude::*;

use super::{refuse_unless_passed, worst, Combined, Provenance, Stage};
use crate::certificates::{
    located_support_radius, orthogonality_radius, verify_coarse_witness, verify_exact_family,
    verify_prop_a_sets, verify_prop_a_vector, verify_se_family, verify_strong_embed, CoarseWitness,
    ExactFamilyCertificate, PropASetCertificate, PropAVectorCertificate, SEFamilyCertificate, Scope,
    StrongEmbedCertificate,
};
use crate::error::{Error, Result};
use crate::exact::{fmt_q, qi, Real, Q};
use crate::hilbert::{SparseVector, UnitField, Universe};
use crate::metric::FiniteMetricSpace;

/// Smallest stored distance strictly above `r` (raw), or one unit above it.
pub(crate) fn next_raw_above(space: &FiniteMetricSpace, r: &Q) -> u64 {
    let floor = space.raw_at_most(r).unwrap_or(0);
    space.next_distance_above(floor).unwrap_or(floor + 1)
}

/// `α_x = 1_{A_x} / √|A_x|` over `ℓ²(X × ℕ)`, located at the first factor.
pub fn sets_to_vector(cert: &PropASetCertificate) -> Result<Combined<PropAVectorCertificate>> {
    let input = verify_prop_a_sets(cert, Scope::Window)?;
    refuse_unless_passed(&input, "property A set certificate")?;
    let space = &cert.space;
    let mut keys: Vec<(usize, u64)> = cert.sets.iter().flatten().copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let labels = keys
        .iter()
        .map(|&(p, n)| format!("{}#{n}", space.label(p)))
        .collect();
    let uni = Arc::new(Universe::new(
        "l2(X×N)",
        labels,
        Some(keys.iter().map(|k| k.0).collect()),
    )?);
    let vectors = cert
        .sets
        .par_iter()
        .map(|a| {
            let idx: Vec<u32> = a
                .iter()
                .map(|k| keys.binary_search(k).expect("key") as u32)
                .collect();
            SparseVector::uniform(uni.tag().clone(), &idx)
        })
        .collect::<Result<Vec<_>>>()?;
    let field = UnitField::new(uni, vectors)?;

    let analytic = next_raw_above(space, &(&cert.s * qi(2)));
    let measured = orthogonality_radius(space, &field)?.min(analytic);
    let mut out = PropAVectorCertificate {
        space: space.clone(),
        r: cert.r.clone(),
        eps: Real::from(qi(2)),
        s: space.raw_to_q(measured),
        field,
    };
    let probe = verify_prop_a_vector(&out, Scope::Window)?;
    out.eps = worst(&probe, "near")?;
    let report = verify_prop_a_vector(&out, Scope::Window)?;

    let mut prov = Provenance::new("sets-to-vector");
    prov.param_q("R", &cert.r);
    prov.param_q("S (sets)", &cert.s);
    prov.param_q("ε (sets)", &cert.eps);
    prov.param("ε′ (measured)", &out.eps);
    prov.param_q("orthogonality radius (analytic)", &space.raw_to_q(analytic));
    prov.param_q("orthogonality radius (measured)", &out.s);
    Ok(Combined {
        cert: out,
        provenance: prov,
        report,
    })
}

/// Same field with tail profile `[(L, 0)]`, `L` the measured support radius.
pub fn prop_a_to_strong(cert: &PropAVectorCertificate) -> Result<Combined<StrongEmbedCertificate>> {
    if !cert.field.universe().is_located() {
        return Err(Error::Refused(
            "strong certificates need a located universe".into(),
        ));
    }
    let input = verify_prop_a_vector(cert, Scope::Window)?;
    refuse_unless_passed(&input, "property A vector certificate")?;
    let space = &cert.space;
    let support = located_support_radius(space, &cert.field).unwrap_or(0);
    // ‖u − v‖² = 2(1 − ⟨u,v⟩) for real unit vectors
    let analytic = cert.eps.mul_q(&qi(2)).sqrt_upper()?;
    let mut out = StrongEmbedCertificate {
        space: space.clone(),
        r: cert.r.clone(),
        eps: Real::from(qi(2)),
        field: cert.field.clone(),
        tail: vec![(space.raw_to_q(support), Q::zero())],
    };
    let probe = verify_strong_embed(&out, Scope::Window)?;
    let measured = worst(&probe, "near")?.sqrt_upper()?;
    out.eps = analytic.clone().min(measured.clone());
    let report = verify_strong_embed(&out, Scope::Window)?;

    let mut prov = Provenance::new("prop-a-to-strong");
    prov.param_q("R", &cert.r);
    prov.param("ε (input)", &cert.eps);
    prov.param("ε (analytic √(2ε))", &analytic);
    prov.param("ε (measured)", &measured);
    prov.param_q("support radius", &space.raw_to_q(support));
    Ok(Combined {
        cert: out,
        provenance: prov,
        report,
    })
}

/// Same field. Near tolerance `ε²/2`; one decay entry per tail entry
/// `(S_k, δ_k)`, placed at the first stored distance beyond `2S_k` with
/// bound `min(2√δ_k, 1)`, then tightened to the measured supremum.
pub fn strong_to_coarse(cert: &StrongEmbedCertificate) -> Result<Combined<CoarseWitness>> {
    let input = verify_strong_embed(cert, Scope::Window)?;
    refuse_unless_passed(&input, "strong certificate")?;
    let space = &cert.space;
    let two = qi(2);

    let mut analytic: Vec<(u64, Real)> = Vec::new();
    for (s, delta) in &cert.tail {
        let t = next_raw_above(space, &(s * &two));
        let bound = Real::sqrt_of(delta)?.mul_q(&two).min(Real::one());
        match analytic.last_mut() {
            Some(last) if last.0 >= t => {
                last.1 = last.1.clone().min(bound);
            }
            _ => analytic.push((t, bound)),
        }
    }

    let mut out = CoarseWitness {
        space: space.clone(),
        r: cert.r.clone(),
        eps: Real::from(qi(2)),
        field: cert.field.clone(),
        decay: analytic
            .iter()
            .map(|(t, _)| (space.raw_to_q(*t), Real::one()))
            .collect(),
    };
    let probe = verify_coarse_witness(&out, Scope::Window)?;
    let eps_analytic = cert.eps.mul(&cert.eps).mul_q(&Q::new(1.into(), 2.into()));
    let eps_measured = worst(&probe, "near")?;
    out.eps = eps_analytic.clone().min(eps_measured.clone());

    let decays: Vec<_> = probe
        .conditions
        .iter()
        .filter(|c| c.name.starts_with("decay"))
        .collect();
    let mut prov = Provenance::new("strong-to-coarse");
    prov.param_q("R", &cert.r);
    prov.param("ε (analytic ε²/2)", &eps_analytic);
    prov.param("ε (measured)", &eps_measured);
    for (k, ((t, bound), cond)) in analytic.iter().zip(&decays).enumerate() {
        let radius = space.raw_to_q(*t);
        prov.stages.push(Stage::new(
            format!("decay entry {k} at d ≥ {}", fmt_q(&radius)),
            bound.clone(),
            None,
            cond.worst.clone(),
        ));
        out.decay[k].1 = bound.clone().min(cond.worst.clone());
    }
    let report = verify_coarse_witness(&out, Scope::Window)?;
    Ok(Combined {
        cert: out,
        provenance: prov,
        report,
    })
}

/// An exact family is strongly embeddable with tail profile `[(S, 0)]`.
pub fn exact_to_se_family(cert: &ExactFamilyCertificate) -> Result<Combined<SEFamilyCertificate>> {
    let input = verify_exact_family(cert, Scope::Window)?;
    refuse_unless_passed(&input, "exact family certificate")?;
    let out = SEFamilyCertificate {
        family: cert.family.clone(),
        r: cert.r.clone(),
        eps: cert.eps.clone(),
        field: cert.field.clone(),
        tail: vec![(cert.s.clone(), Q::zero())],
    };
    let report = verify_se_family(&out, Scope::Window)?;
    let mut prov = Provenance::new("exact-to-se-family");
    prov.param_q("S", &cert.s);
    Ok(Combined {
        cert: out,
        provenance: prov,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Caps;
    use crate::exact::q;
    use crate::generators::{delta_field, folner_prop_a, point_universe, uniform_field};
    use crate::metric::{cayley_ball, GroupModel};

    #[test]
    fn folner_vectors() {
        let g = folner_prop_a(1, 10, 200, &qi(2), &Caps::default()).unwrap();
        let v = sets_to_vector(&g.cert).unwrap();
        assert!(v.report.passed());
        assert_eq!(v.cert.eps, Real::from(q(2, 21)));
        assert_eq!(v.cert.s, qi(21));
        let space = &v.cert.space;
        let x = space.index_of("0").unwrap();
        let y = space.index_of("2").unwrap();
        let z = space.index_of("21").unwrap();
        let f = &v.cert.field;
        assert_eq!(f.vector(x).inner(f.vector(y)).unwrap(), Real::from(q(19, 21)));
        assert!(f.vector(x).inner(f.vector(z)).unwrap().is_zero());
        let at_twenty = space.index_of("20").unwrap();
        assert_eq!(f.vector(x).inner(f.vector(at_twenty)).unwrap(), Real::from(q(1, 21)));
    }

    #[test]
    fn equal_sets_give_zero_gap() {
        let b = cayley_ball(Arc::new(GroupModel::cyclic(5)), 5, &Caps::default()).unwrap();
        let g = crate::generators::finite_uniform(b.space().clone(), &qi(2)).unwrap();
        let v = sets_to_vector(&g.cert).unwrap();
        assert!(v.cert.eps.is_zero());
    }

    #[test]
    fn failing_sets_are_refused() {
        let mut g = folner_prop_a(1, 1, 20, &qi(2), &Caps::default()).unwrap();
        g.cert.eps = q(1, 5);
        assert!(matches!(sets_to_vector(&g.cert), Err(Error::Refused(_))));
    }

    #[test]
    fn chain_on_folner() {
        let g = folner_prop_a(1, 10, 60, &qi(2), &Caps::default()).unwrap();
        let v = sets_to_vector(&g.cert).unwrap();
        let s = prop_a_to_strong(&v.cert).unwrap();
        assert!(s.report.passed());
        assert_eq!(s.cert.tail, vec![(qi(10), Q::zero())]);
        let c = strong_to_coarse(&s.cert).unwrap();
        assert!(c.report.passed());
        assert_eq!(c.cert.decay, vec![(qi(21), Real::zero())]);
        assert!(c.report.worst_slack() <= Real::zero());
    }

    #[test]
    fn single_point() {
        let space = Arc::new(FiniteMetricSpace::new(vec!["p".into()], 1, vec![0]).unwrap());
        let g = crate::generators::finite_uniform(space, &qi(1)).unwrap();
        let v = sets_to_vector(&g.cert).unwrap();
        let s = prop_a_to_strong(&v.cert).unwrap();
        assert_eq!(s.cert.tail, vec![(qi(0), Q::zero())]);
    }

    #[test]
    fn unlocated_field_is_refused() {
        let b = cayley_ball(Arc::new(GroupModel::Lattice { rank: 1 }), 3, &Caps::default()).unwrap();
        let space = b.space().clone();
        let f = delta_field(&space).unwrap();
        let uni = Arc::new(Universe::new("free", f.universe().labels().to_vec(), None).unwrap());
        let vectors = f
            .vectors()
            .iter()
            .map(|v| v.reindex(uni.tag().clone(), Some).unwrap())
            .collect();
        let cert = PropAVectorCertificate {
            space,
            r: qi(0),
            eps: Real::zero(),
            s: qi(1),
            field: UnitField::new(uni, vectors).unwrap(),
        };
        assert!(verify_prop_a_vector(&cert, Scope::Window).unwrap().passed());
        assert!(matches!(prop_a_to_strong(&cert), Err(Error::Refused(_))));
    }

    #[test]
    fn uniform_field_clamps_to_one() {
        // two points at distance 1, one vector uniform on both: tail 1/2 at S = 0
        let b = cayley_ball(Arc::new(GroupModel::cyclic(2)), 1, &Caps::default()).unwrap();
        let space = b.space().clone();
        let cert = StrongEmbedCertificate {
            space: space.clone(),
            r: qi(1),
            eps: Real::zero(),
            field: uniform_field(&space).unwrap(),
            tail: vec![(qi(0), q(1, 2))],
        };
        let c = strong_to_coarse(&cert).unwrap();
        let stage = &c.provenance.stages[0];
        assert_eq!(stage.bound, Real::one());
        assert_eq!(stage.measured, Real::one());
        assert_eq!(c.cert.decay, vec![(qi(1), Real::one())]);
    }

    #[test]
    fn deltas_are_orthogonal_at_any_separation() {
        let b = cayley_ball(Arc::new(GroupModel::cyclic(2)), 1, &Caps::default()).unwrap();
        let space = b.space().clone();
        let uni = point_universe(&space, "l2(X)").unwrap();
        assert!(uni.is_located());
        let cert = StrongEmbedCertificate {
            space: space.clone(),
            r: qi(0),
            eps: Real::zero(),
            field: delta_field(&space).unwrap(),
            tail: vec![(qi(0), Q::zero())],
        };
        let c = strong_to_coarse(&cert).unwrap();
        assert_eq!(c.cert.decay, vec![(qi(1), Real::zero())]);
        assert!(c.report.passed());
    }
}
