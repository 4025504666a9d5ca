use std::sync::Arc;

use coarsekit::certificates::{verify_prop_a_sets, Scope};
use coarsekit::combinators::{prop_a_to_strong, sets_to_vector, EtaSection};
use coarsekit::exact::{qi, Real};
use coarsekit::generators::{ball_sets, folner_prop_a};
use coarsekit::io::{CertFile, Certificate, SpaceSource};
use coarsekit::metric::{cayley_ball, quotient_space, GroupModel, GroupSpec, SetMapFamily, Subgroup, SubgroupSpec};
use coarsekit::{Caps, Q};
use proptest::prelude::*;

fn near(report: &coarsekit::certificates::VerificationReport) -> Real {
    report
        .conditions
        .iter()
        .find(|c| c.name.starts_with("near"))
        .unwrap()
        .worst
        .clone()
}

fn group() -> impl Strategy<Value = GroupSpec> {
    prop_oneof![
        Just(GroupSpec::Z),
        (1usize..=2).prop_map(|n| GroupSpec::Zn { n }),
        (1usize..=2).prop_map(|rank| GroupSpec::Free { rank }),
        Just(GroupSpec::Semidirect { n: 1 }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cayley_windows_are_metric(spec in group(), radius in 1u64..5, seed in any::<u64>()) {
        let model = Arc::new(GroupModel::from_spec(&spec).unwrap());
        let ball = cayley_ball(model, radius, &Caps::default()).unwrap();
        prop_assert!(ball.space().check(seed).ok());
    }

    #[test]
    fn lattice_quotients_are_metric(radius in 1u64..7, coord in 0usize..2, m in 2i64..4, seed in any::<u64>()) {
        let model = Arc::new(GroupModel::from_spec(&GroupSpec::Zn { n: 2 }).unwrap());
        let ball = cayley_ball(model.clone(), radius, &Caps::default()).unwrap();
        for spec in [SubgroupSpec::ZeroCoords { coords: vec![coord] }, SubgroupSpec::Multiples { modulus: m }] {
            let h = Subgroup::from_spec(&spec, &model).unwrap();
            let q = quotient_space(&ball, &h, seed).unwrap();
            prop_assert!(q.space().check(seed).ok());
            prop_assert!(q.space().len() <= ball.len());
        }
    }

    // verdicts only depend on which side of the measured worst ε falls
    #[test]
    fn set_verdict_is_monotone_in_eps(half in 1u64..5, r in 1i64..4, num in 0i64..12) {
        let mut cert = folner_prop_a(1, half, 16, &qi(r), &Caps::default()).unwrap().cert;
        let worst = near(&verify_prop_a_sets(&cert, Scope::Ambient).unwrap());
        cert.eps = Q::new(num.into(), 6.into());
        let passed = verify_prop_a_sets(&cert, Scope::Ambient).unwrap().passed();
        prop_assert_eq!(passed, Real::from(cert.eps.clone()) >= worst);
    }

    #[test]
    fn strong_eps_is_within_root_two_eps(radius in 2i64..6, r in 1i64..3) {
        let model = Arc::new(GroupModel::from_spec(&GroupSpec::Z).unwrap());
        let ball = cayley_ball(model, 14, &Caps::default()).unwrap();
        let sets = ball_sets(ball.space().clone(), &qi(radius), &qi(r)).unwrap().cert;
        let vector = sets_to_vector(&sets).unwrap();
        let strong = prop_a_to_strong(&vector.cert).unwrap();
        prop_assert!(strong.report.passed());
        // ‖u − v‖² = 2(1 − ⟨u, v⟩)
        prop_assert_eq!(near(&strong.report), near(&vector.report).mul_q(&qi(2)));
        prop_assert!(strong.cert.eps.mul(&strong.cert.eps) <= vector.cert.eps.mul_q(&qi(2)));
    }

    #[test]
    fn eta_realizes_fiber_distances(radius in 1u64..6, coord in 0usize..2) {
        let model = Arc::new(GroupModel::from_spec(&GroupSpec::Zn { n: 2 }).unwrap());
        let ball = cayley_ball(model, radius, &Caps::default()).unwrap();
        let family = SetMapFamily::projection(&ball, coord).unwrap();
        let checked = EtaSection::new(Arc::new(family)).check_triangles().unwrap();
        prop_assert!(checked > 0);
    }

    #[test]
    fn certificate_files_round_trip(half in 1u64..4, window in 4u64..9, seed in any::<u64>()) {
        let cert = folner_prop_a(2, half, window, &qi(1), &Caps::default()).unwrap().cert;
        let file = CertFile::new(Certificate::PropASets(cert)).with_space(SpaceSource::Cayley {
            group: GroupSpec::Zn { n: 2 },
            radius: window,
        });
        let json = file.encode();
        let back = CertFile::decode(&json, &Caps::default(), seed).unwrap();
        let a = serde_json::to_string(&json).unwrap();
        let b = serde_json::to_string(&back.encode()).unwrap();
        prop_assert_eq!(a, b);
        let ra = serde_json::to_string(&file.cert.verify(Scope::Window).unwrap()).unwrap();
        let rb = serde_json::to_string(&back.cert.verify(Scope::Window).unwrap()).unwrap();
        prop_assert_eq!(ra, rb);
    }
}
