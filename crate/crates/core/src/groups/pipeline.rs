use std::sync::Arc;

use serde::Serialize;

use super::action::GroupAction;
use super::families::{action_to_se_family, transport_coset_certs};
use super::orbits::orbit_decomposition;
use crate::certificates::{
    verify_strong_embed, EquiFamilyCertificate, SEFamilyCertificate, Scope, StrongEmbedCertificate,
    VerificationReport,
};
use crate::combinators::{combine_se_strong, Provenance, Stage, Targets};
use crate::error::{Error, Result};
use crate::exact::{Real, Q};
use crate::hilbert::{UnitField, Universe};
use crate::metric::{quotient_space, FiniteMetricSpace, GroupBall, Subgroup};

/// A strong certificate on the group window and the provenance of every
/// stage that produced it.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub cert: StrongEmbedCertificate,
    pub stages: Vec<Provenance>,
    pub report: VerificationReport,
    pub degenerate: Option<Degenerate>,
    /// The orbit family and the transported fibers; absent when degenerate.
    pub family: Option<SEFamilyCertificate>,
    pub fibers: Option<EquiFamilyCertificate>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Degenerate {
    /// `H = G`: the subgroup certificate is the answer.
    WholeGroup,
    /// `H` trivial: the quotient certificate pulled back along `G ≅ G/H`.
    TrivialSubgroup,
}

/// Moves a certificate onto `space` along `point_of[x]`, a bijection onto
/// the certificate's points that preserves distances.
fn pull_back(cert: &StrongEmbedCertificate, space: Arc<FiniteMetricSpace>, point_of: &[usize]) -> Result<StrongEmbedCertificate> {
    let n = cert.space.len();
    let mut inverse = vec![usize::MAX; n];
    for (x, &p) in point_of.iter().enumerate() {
        inverse[p] = x;
    }
    if point_of.len() != n || inverse.contains(&usize::MAX) {
        return Err(Error::Domain("relabeling is not a bijection".into()));
    }
    for x in 0..n {
        for y in 0..n {
            if space.dist(x, y) != cert.space.dist(point_of[x], point_of[y]) {
                return Err(Error::Domain(format!(
                    "relabeling is not an isometry at ({}, {})",
                    space.label(x),
                    space.label(y)
                )));
            }
        }
    }
    let old = cert.field.universe();
    let location = old.location().map(|l| l.iter().map(|&p| inverse[p]).collect());
    let uni = Arc::new(Universe::new(old.tag().clone(), old.labels().to_vec(), location)?);
    let vectors = point_of.iter().map(|&p| cert.field.vector(p).clone()).collect();
    Ok(StrongEmbedCertificate {
        space,
        r: cert.r.clone(),
        eps: cert.eps.clone(),
        field: UnitField::new(uni, vectors)?,
        tail: cert.tail.clone(),
    })
}

fn finish(cert: StrongEmbedCertificate, stages: Vec<Provenance>, degenerate: Option<Degenerate>) -> Result<Pipeline> {
    let report = verify_strong_embed(&cert, Scope::Window)?;
    Ok(Pipeline {
        cert,
        stages,
        report,
        degenerate,
        family: None,
        fibers: None,
    })
}

/// Strong embedding of `G` from strong embeddings of a normal subgroup `H`
/// (on its window, labeled by ball elements) and of `G/H` (on the coset
/// window). `G` acts on `G/H`; the resulting family is combined with the
/// coset translates of the subgroup certificate.
pub fn extension_pipeline(
    ball: Arc<GroupBall>,
    subgroup: &Subgroup,
    quotient_cert: &StrongEmbedCertificate,
    sub_cert: &StrongEmbedCertificate,
    targets: &Targets,
    seed: u64,
) -> Result<Pipeline> {
    subgroup.check_normal(&ball)?;
    let cosets = Arc::new(quotient_space(&ball, subgroup, seed).map_err(|e| e.in_stage("quotient-space"))?);
    if quotient_cert.space.labels() != cosets.space().labels() {
        return Err(Error::Domain("quotient certificate does not live on the coset window".into()));
    }
    let gspace = ball.space().clone();
    let mut head = Provenance::new("extension-pipeline");
    head.param("subgroup", subgroup.name());
    head.param("cosets", cosets.len());
    head.param_q("R", &targets.r);
    head.param("ε", &targets.eps);

    if cosets.len() == 1 {
        let point_of = gspace
            .labels()
            .iter()
            .map(|l| sub_cert.space.index_of(l))
            .collect::<Result<Vec<_>>>()?;
        head.notes.push("H = G: the subgroup certificate is returned".into());
        let cert = pull_back(sub_cert, gspace, &point_of)?;
        return finish(cert, vec![head], Some(Degenerate::WholeGroup));
    }
    if (0..cosets.len()).all(|c| cosets.members(c).len() == 1) {
        let point_of: Vec<usize> = (0..ball.len()).map(|g| cosets.coset_of(g)).collect();
        head.notes.push("H trivial: the quotient certificate is pulled back".into());
        let cert = pull_back(quotient_cert, gspace, &point_of)?;
        return finish(cert, vec![head], Some(Degenerate::TrivialSubgroup));
    }

    let action = GroupAction::on_cosets(ball.clone(), cosets.clone(), subgroup.clone())
        .map_err(|e| e.in_stage("coset-action"))?;
    let orbits = orbit_decomposition(&action, seed).map_err(|e| e.in_stage("orbit-decomposition"))?;
    // the family must carry ε/√3 so that its gap is a third of ε²/2
    let third = Real::sqrt_of(&Q::new(1.into(), 3.into()))?;
    let family_targets = Targets {
        r: targets.r.clone(),
        eps: targets.eps.mul(&third),
    };
    let family = action_to_se_family(&action, &orbits, quotient_cert, &family_targets)
        .map_err(|e| e.in_stage("action-to-se-family"))?;
    let fibers = transport_coset_certs(&ball, &cosets, sub_cert).map_err(|e| e.in_stage("transport-coset-certs"))?;
    let combined =
        combine_se_strong(&family.cert, &fibers.cert, targets).map_err(|e| e.in_stage("combine-se-strong"))?;

    let bookkeeping = combined
        .provenance
        .find_stage("bookkeeping")
        .cloned()
        .ok_or_else(|| Error::Internal("combination has no bookkeeping stage".into()))?;
    head.stage(Stage::new(
        "output gap ≤ sum of stage gaps",
        bookkeeping.bound,
        None,
        bookkeeping.measured,
    ))?;
    let stages = vec![head, family.provenance, fibers.provenance, combined.provenance];
    Ok(Pipeline {
        cert: combined.cert,
        stages,
        report: combined.report,
        degenerate: None,
        family: Some(family.cert),
        fibers: Some(fibers.cert),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinators::{prop_a_to_strong, sets_to_vector};
    use crate::config::Caps;
    use crate::exact::qi;
    use crate::generators::ball_sets;
    use crate::metric::{cayley_ball, Elem, GroupModel, SubgroupSpec};

    fn strong_on(space: Arc<FiniteMetricSpace>, radius: i64, r: i64) -> StrongEmbedCertificate {
        let sets = ball_sets(space, &qi(radius), &qi(r)).unwrap().cert;
        prop_a_to_strong(&sets_to_vector(&sets).unwrap().cert).unwrap().cert
    }

    struct Setup {
        ball: Arc<GroupBall>,
        h: Subgroup,
        quotient: Arc<FiniteMetricSpace>,
        window: Arc<FiniteMetricSpace>,
    }

    fn setup(model: GroupModel, radius: u64, spec: SubgroupSpec) -> Setup {
        let ball = Arc::new(cayley_ball(Arc::new(model), radius, &Caps::default()).unwrap());
        let h = Subgroup::from_spec(&spec, ball.model()).unwrap();
        let quotient = quotient_space(&ball, &h, 0).unwrap().space().clone();
        let members: Vec<usize> = (0..ball.len()).filter(|&g| h.contains(ball.element(g))).collect();
        let window = Arc::new(ball.space().subspace(&members).unwrap());
        Setup {
            ball,
            h,
            quotient,
            window,
        }
    }

    fn plane() -> Setup {
        setup(GroupModel::Lattice { rank: 2 }, 10, SubgroupSpec::ZeroCoords { coords: vec![0] })
    }

    #[test]
    fn plane_over_a_line() {
        let s = plane();
        // quotient: 13-point intervals, ‖·‖² = 4/13 at distance 2
        let quotient_cert = strong_on(s.quotient.clone(), 6, 2);
        // subgroup: intervals cover the 21-point window, a constant field;
        // its range must reach 2S_X + R, and window edges push S_X to the
        // support radius 12
        let sub_cert = strong_on(s.window.clone(), 20, 25);
        let targets = Targets {
            r: qi(1),
            eps: Real::from(qi(1)),
        };
        let out = extension_pipeline(s.ball.clone(), &s.h, &quotient_cert, &sub_cert, &targets, 0).unwrap();
        assert!(out.report.passed(), "{:?}", out.report);
        assert_eq!(out.degenerate, None);
        let ops: Vec<&str> = out.stages.iter().map(|p| p.operation.as_str()).collect();
        assert_eq!(
            ops,
            ["extension-pipeline", "action-to-se-family", "transport-coset-certs", "combine-se-strong"]
        );
        assert_eq!(out.stages[3].parameters["S_X"], "12/1");
        assert!(out.stages.iter().all(|p| p.stages.iter().filter(|s| !s.name.starts_with("interior")).all(|s| s.passed)));
        // a constant fiber field leaves the quotient distances: ‖ξ_g − ξ_g′‖² = 2/13 at R = 1
        assert_eq!(
            out.report.condition("near").unwrap().worst,
            Real::from(crate::exact::q(2, 13))
        );
    }

    #[test]
    fn short_fiber_range_names_the_stage() {
        let s = plane();
        let quotient_cert = strong_on(s.quotient.clone(), 6, 2);
        let sub_cert = strong_on(s.window.clone(), 20, 5);
        let targets = Targets {
            r: qi(1),
            eps: Real::from(qi(1)),
        };
        match extension_pipeline(s.ball.clone(), &s.h, &quotient_cert, &sub_cert, &targets, 0) {
            Err(Error::ParameterMismatch { stage, .. }) => assert!(stage.starts_with("fiber near range"), "{stage}"),
            other => panic!("expected a mismatch, got {other:?}"),
        }
    }

    #[test]
    fn whole_subgroup_returns_the_subgroup_certificate() {
        let s = setup(GroupModel::Lattice { rank: 1 }, 8, SubgroupSpec::Whole);
        let quotient_cert = strong_on(s.quotient.clone(), 0, 1);
        let sub_cert = strong_on(s.window.clone(), 3, 1);
        let targets = Targets {
            r: qi(1),
            eps: Real::from(qi(1)),
        };
        let out = extension_pipeline(s.ball.clone(), &s.h, &quotient_cert, &sub_cert, &targets, 0).unwrap();
        assert_eq!(out.degenerate, Some(Degenerate::WholeGroup));
        assert!(out.report.passed());
        assert_eq!(out.cert.field.vectors(), sub_cert.field.vectors());
        assert_eq!(out.cert.eps, sub_cert.eps);
    }

    #[test]
    fn trivial_subgroup_pulls_the_quotient_back() {
        let s = setup(GroupModel::Lattice { rank: 1 }, 8, SubgroupSpec::Trivial);
        let quotient_cert = strong_on(s.quotient.clone(), 3, 1);
        let sub_cert = strong_on(s.window.clone(), 0, 1);
        let targets = Targets {
            r: qi(1),
            eps: Real::from(qi(1)),
        };
        let out = extension_pipeline(s.ball.clone(), &s.h, &quotient_cert, &sub_cert, &targets, 0).unwrap();
        assert_eq!(out.degenerate, Some(Degenerate::TrivialSubgroup));
        assert!(out.report.passed());
        for g in 0..s.ball.len() {
            let c = s.quotient.index_of(&format!("{}H", s.ball.label(g))).unwrap();
            assert_eq!(out.cert.field.vector(g), quotient_cert.field.vector(c));
        }
    }

    #[test]
    fn non_normal_subgroup_is_rejected() {
        let ball = Arc::new(cayley_ball(Arc::new(GroupModel::Dihedral { rank: 1 }), 4, &Caps::default()).unwrap());
        let flip = Subgroup::new("flips", |g: &Elem| g.0[1] == 0);
        let dummy = strong_on(ball.space().clone(), 1, 1);
        let targets = Targets {
            r: qi(1),
            eps: Real::from(qi(1)),
        };
        assert!(matches!(
            extension_pipeline(ball, &flip, &dummy, &dummy, &targets, 0),
            Err(Error::InvalidSubgroup(_))
        ));
    }
}
