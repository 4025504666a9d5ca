//! Ground-truth certificates for standard spaces.
//!
//! Every generator emits the parameters it measured, never the ones it
//! was asked for: `ε` is read back from the verifier's own report.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::certificates::{
    orthogonality_radius, verify_equi, verify_exact_family, verify_prop_a_sets, EquiFamilyCertificate, EquiFlavor,
    ExactFamilyCertificate, Member, PropASetCertificate, Scope, VerificationReport,
};
use crate::config::Caps;
use crate::error::{Error, Result};
use crate::exact::{qi, Real, Q};
use crate::hilbert::{SparseVector, UnitField, Universe};
use crate::metric::{cayley_ball, Elem, FiniteMetricSpace, GroupBall, GroupModel, SetMapFamily};

/// A generated certificate with the report its parameters were read from.
#[derive(Clone, Debug)]
pub struct Generated<C> {
    pub cert: C,
    pub report: VerificationReport,
}

/// JSON generator requests.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    FolnerZn { n: usize, half_width: u64, window: u64, r: u64 },
    TreeRay { rank: usize, length: usize, window: u64, r: u64 },
    FiniteUniform { order: usize, r: u64 },
    DeltaField { window: u64 },
}

fn measured_near(report: &VerificationReport) -> Result<Real> {
    report
        .condition("near")
        .map(|c| c.worst.clone())
        .ok_or_else(|| Error::Internal("report without a near condition".into()))
}

fn measured_sets(mut cert: PropASetCertificate) -> Result<Generated<PropASetCertificate>> {
    cert.eps = qi(1_000_000);
    let first = verify_prop_a_sets(&cert, Scope::Window)?;
    cert.eps = measured_near(&first)?
        .as_rational()
        .ok_or_else(|| Error::Internal("set ratios are rational".into()))?;
    let report = verify_prop_a_sets(&cert, Scope::Window)?;
    Ok(Generated { cert, report })
}

pub fn lattice_window(rank: usize, radius: u64, caps: &Caps) -> Result<GroupBall> {
    cayley_ball(Arc::new(GroupModel::Lattice { rank }), radius, caps)
}

/// `A_x = (x + [−N,N]ⁿ) ∩ window`, as point indices.
pub fn folner_sets(ball: &GroupBall, half_width: u64) -> Result<Vec<Vec<(usize, u64)>>> {
    let rank = match **ball.model() {
        GroupModel::Lattice { rank } => rank,
        _ => return Err(Error::Domain("Følner boxes need a lattice".into())),
    };
    let n = half_width as i64;
    let side = (2 * n + 1) as usize;
    let mut offsets: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..rank {
        offsets = offsets
            .into_iter()
            .flat_map(|o| {
                (-n..=n).map(move |c| {
                    let mut v = o.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    debug_assert_eq!(offsets.len(), side.pow(rank as u32));
    Ok(ball
        .elements()
        .iter()
        .map(|g| {
            let mut set: Vec<(usize, u64)> = offsets
                .iter()
                .filter_map(|o| {
                    let y = Elem(g.0.iter().zip(o).map(|(a, b)| a + b).collect());
                    ball.index_of(&y).map(|i| (i, 1))
                })
                .collect();
            set.sort_unstable();
            set
        })
        .collect())
}

/// Følner boxes on a `Zⁿ` window with the ℓ¹ word metric; `S = nN`.
pub fn folner_prop_a(
    n: usize,
    half_width: u64,
    window: u64,
    r: &Q,
    caps: &Caps,
) -> Result<Generated<PropASetCertificate>> {
    if n == 0 || half_width == 0 {
        return Err(Error::Domain("Følner boxes need n ≥ 1 and N ≥ 1".into()));
    }
    if window < half_width {
        return Err(Error::Truncation(format!(
            "window radius {window} is smaller than N = {half_width}"
        )));
    }
    let ball = lattice_window(n, window, caps)?;
    let sets = folner_sets(&ball, half_width)?;
    measured_sets(PropASetCertificate {
        space: ball.space().clone(),
        r: r.clone(),
        eps: Q::zero(),
        s: qi((n as u64 * half_width) as i64),
        sets,
    })
}

/// `A_x = B_N(x) × {1}` on any finite space; `S = N`.
pub fn ball_sets(space: Arc<FiniteMetricSpace>, radius: &Q, r: &Q) -> Result<Generated<PropASetCertificate>> {
    let sets = (0..space.len())
        .map(|x| Ok(space.ball(x, radius)?.into_iter().map(|y| (y, 1)).collect()))
        .collect::<Result<_>>()?;
    measured_sets(PropASetCertificate {
        space,
        r: r.clone(),
        eps: Q::zero(),
        s: radius.clone(),
        sets,
    })
}

/// First `len` vertices of the geodesic ray from `g` toward `a^∞`: the
/// prefixes of `g` down to its longest `a^k` prefix, then `a^(k+1), …`.
pub fn tree_ray(g: &Elem, len: usize) -> Vec<Elem> {
    let word = &g.0;
    let k = word.iter().take_while(|&&l| l == 1).count();
    let mut out = Vec::with_capacity(len);
    let mut cut = word.len();
    while out.len() < len && cut >= k {
        out.push(Elem(word[..cut].to_vec()));
        if cut == 0 {
            break;
        }
        cut -= 1;
    }
    let mut extra = k + 1;
    while out.len() < len {
        out.push(Elem(vec![1; extra]));
        extra += 1;
    }
    out
}

/// Ray segments in a free-group window; `S = len − 1`.
pub fn tree_ray_prop_a(
    rank: usize,
    len: usize,
    window: u64,
    r: &Q,
    caps: &Caps,
) -> Result<Generated<PropASetCertificate>> {
    if rank == 0 || len == 0 {
        return Err(Error::Domain("tree rays need rank ≥ 1 and N ≥ 1".into()));
    }
    let ball = cayley_ball(Arc::new(GroupModel::Free { rank }), window, caps)?;
    let sets = ball
        .elements()
        .iter()
        .map(|g| {
            let mut set: Vec<(usize, u64)> = tree_ray(g, len)
                .iter()
                .filter_map(|v| ball.index_of(v).map(|i| (i, 1)))
                .collect();
            set.sort_unstable();
            set
        })
        .collect();
    measured_sets(PropASetCertificate {
        space: ball.space().clone(),
        r: r.clone(),
        eps: Q::zero(),
        s: qi(len as i64 - 1),
        sets,
    })
}

/// `A_x = X × {1}` on a finite space; `S = diam X`.
pub fn finite_uniform(space: Arc<FiniteMetricSpace>, r: &Q) -> Result<Generated<PropASetCertificate>> {
    let all: Vec<(usize, u64)> = (0..space.len()).map(|y| (y, 1)).collect();
    let s = space.raw_to_q(space.diameter_raw());
    measured_sets(PropASetCertificate {
        sets: vec![all; space.len()],
        space,
        r: r.clone(),
        eps: Q::zero(),
        s,
    })
}

/// The universe `X` located at itself.
pub fn point_universe(space: &FiniteMetricSpace, tag: &str) -> Result<Arc<Universe>> {
    Ok(Arc::new(Universe::new(
        tag,
        space.labels().to_vec(),
        Some((0..space.len()).collect()),
    )?))
}

/// `β_x = δ_x`.
pub fn delta_field(space: &FiniteMetricSpace) -> Result<UnitField> {
    let uni = point_universe(space, "l2(X)")?;
    let vectors = (0..space.len())
        .map(|x| SparseVector::delta(uni.tag().clone(), x as u32))
        .collect();
    UnitField::new(uni, vectors)
}

/// `β_x` uniform on all of `X`.
pub fn uniform_field(space: &FiniteMetricSpace) -> Result<UnitField> {
    let uni = point_universe(space, "l2(X)")?;
    let all: Vec<u32> = (0..space.len() as u32).collect();
    let v = SparseVector::uniform(uni.tag().clone(), &all)?;
    UnitField::new(uni, vec![v; space.len()])
}

/// `β_x = 1_{B_N(x)} / √|B_N(x)|`, located at the points.
pub fn ball_field(space: &FiniteMetricSpace, radius: &Q, tag: &str) -> Result<UnitField> {
    let uni = point_universe(space, tag)?;
    let vectors = (0..space.len())
        .map(|x| {
            let ball: Vec<u32> = space.ball(x, radius)?.into_iter().map(|y| y as u32).collect();
            SparseVector::uniform(uni.tag().clone(), &ball)
        })
        .collect::<Result<_>>()?;
    UnitField::new(uni, vectors)
}

/// `ℓ²(𝒴)` located at the flat index of `𝒴`.
pub fn family_universe(family: &SetMapFamily, tag: &str) -> Result<Arc<Universe>> {
    Ok(Arc::new(Universe::new(
        tag,
        family.labels().to_vec(),
        Some((0..family.len()).collect()),
    )?))
}

/// `α_x` uniform on `∪_i φ_i(B_N(x))`; support radius `N`.
pub fn family_ball_field(
    family: Arc<SetMapFamily>,
    radius: &Q,
    r: &Q,
) -> Result<Generated<ExactFamilyCertificate>> {
    let uni = family_universe(&family, "l2(Y)")?;
    let space = family.domain().clone();
    let ncomp = family.components().len();
    let vectors = (0..space.len())
        .map(|x| {
            let mut image: Vec<u32> = space
                .ball(x, radius)?
                .into_iter()
                .flat_map(|y| (0..ncomp).map(move |i| (i, y)))
                .map(|(i, y)| family.image(i, y) as u32)
                .collect();
            image.sort_unstable();
            image.dedup();
            SparseVector::uniform(uni.tag().clone(), &image)
        })
        .collect::<Result<_>>()?;
    let mut cert = ExactFamilyCertificate {
        family,
        r: r.clone(),
        eps: Real::from(qi(2)),
        s: radius.clone(),
        field: UnitField::new(uni, vectors)?,
    };
    let first = verify_exact_family(&cert, Scope::Window)?;
    cert.eps = measured_near(&first)?.sqrt_upper()?;
    let report = verify_exact_family(&cert, Scope::Window)?;
    Ok(Generated { cert, report })
}

/// The fibers `φ_i⁻¹(w)` as member spaces, in flat `𝒴` order.
pub fn fiber_spaces(family: &SetMapFamily) -> Result<Vec<(String, Vec<usize>, Arc<FiniteMetricSpace>)>> {
    (0..family.len())
        .map(|w| {
            let points = family.fiber(w).to_vec();
            if points.is_empty() {
                return Err(Error::Domain(format!("empty fiber over {}", family.label(w))));
            }
            let space = Arc::new(family.domain().subspace(&points)?);
            Ok((family.label(w).to_string(), points, space))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiberFlavor {
    Exact,
    Coarse,
    Strong,
}

/// Ball fields of radius `M` on every fiber, with shared measured constants.
pub fn fiber_ball_equi(
    family: &SetMapFamily,
    radius: &Q,
    r: &Q,
    flavor: FiberFlavor,
) -> Result<Generated<EquiFamilyCertificate>> {
    let mut members = Vec::new();
    let mut orth = Q::zero();
    for (label, points, space) in fiber_spaces(family)? {
        let field = ball_field(&space, radius, &format!("l2(fiber {label})"))?;
        let o = space.raw_to_q(orthogonality_radius(&space, &field)?);
        if o > orth {
            orth = o;
        }
        members.push(Member {
            label,
            points,
            space,
            field,
        });
    }
    let flavor = match flavor {
        FiberFlavor::Exact => EquiFlavor::Exact { s: orth },
        FiberFlavor::Coarse => EquiFlavor::Coarse {
            decay: vec![(orth, Real::zero())],
        },
        FiberFlavor::Strong => EquiFlavor::Strong {
            tail: vec![(radius.clone(), Q::zero())],
        },
    };
    let mut cert = EquiFamilyCertificate {
        members,
        r: r.clone(),
        eps: Real::from(Q::from_integer(BigInt::from(2))),
        flavor,
    };
    let first = verify_equi(&cert, Scope::Window)?;
    cert.eps = measured_near(&first)?.sqrt_upper()?;
    let report = verify_equi(&cert, Scope::Window)?;
    Ok(Generated { cert, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::verify_prop_a_sets;
    use crate::exact::q;

    fn ratio(g: &Generated<PropASetCertificate>) -> Real {
        g.report.condition("near").unwrap().worst.clone()
    }

    #[test]
    fn folner_one_dimensional() {
        let g = folner_prop_a(1, 10, 50, &qi(2), &Caps::default()).unwrap();
        assert!(g.report.passed());
        assert_eq!(g.cert.eps, q(4, 21));
        let g0 = folner_prop_a(1, 10, 50, &qi(0), &Caps::default()).unwrap();
        assert_eq!(g0.cert.eps, qi(0));
    }

    #[test]
    fn folner_boxes_in_the_plane_interior() {
        // interior value 2·11/121; window-edge boxes are truncated, so the
        // ambient scope is the one that sees it
        let g = folner_prop_a(2, 5, 16, &qi(1), &Caps::default()).unwrap();
        let amb = verify_prop_a_sets(&g.cert, Scope::Ambient).unwrap();
        assert_eq!(amb.condition("near").unwrap().worst, Real::from(q(22, 121)));
        assert!(amb.skipped_points > 0);
    }

    #[test]
    fn narrow_folner_fails_at_one_fifth() {
        // truncated boxes at the window edge reach 3/2; the interior is 4/3
        let mut g = folner_prop_a(1, 1, 50, &qi(2), &Caps::default()).unwrap();
        assert_eq!(g.cert.eps, q(3, 2));
        let amb = verify_prop_a_sets(&g.cert, Scope::Ambient).unwrap();
        assert_eq!(amb.condition("near").unwrap().worst, Real::from(q(4, 3)));
        g.cert.eps = q(1, 5);
        let rep = verify_prop_a_sets(&g.cert, Scope::Ambient).unwrap();
        assert!(!rep.passed());
        assert_eq!(rep.condition("near").unwrap().witness.as_ref().unwrap().distance.as_deref(), Some("2/1"));
    }

    #[test]
    fn window_smaller_than_box() {
        assert!(matches!(
            folner_prop_a(1, 10, 5, &qi(1), &Caps::default()),
            Err(Error::Truncation(_))
        ));
    }

    #[test]
    fn ray_from_identity() {
        let ray = tree_ray(&Elem(vec![]), 3);
        assert_eq!(ray, vec![Elem(vec![]), Elem(vec![1]), Elem(vec![1, 1])]);
        // b a⁻¹ climbs back to e before heading along a
        let ray = tree_ray(&Elem(vec![2, -1]), 4);
        assert_eq!(ray, vec![Elem(vec![2, -1]), Elem(vec![2]), Elem(vec![]), Elem(vec![1])]);
        // a a b: longest a-prefix is a a
        let ray = tree_ray(&Elem(vec![1, 1, 2]), 3);
        assert_eq!(ray, vec![Elem(vec![1, 1, 2]), Elem(vec![1, 1]), Elem(vec![1, 1, 1])]);
    }

    #[test]
    fn rays_on_one_line_differ_by_twice_the_distance() {
        // g = a^{-2}, h = e share the ray direction; |A_g Δ A_h| = 2d when d ≤ N
        let g = tree_ray(&Elem(vec![-1, -1]), 5);
        let h = tree_ray(&Elem(vec![]), 5);
        let mut a: Vec<_> = g.into_iter().collect();
        let mut b: Vec<_> = h.into_iter().collect();
        a.sort();
        b.sort();
        assert_eq!(crate::certificates::symmetric_difference(&a, &b), 4);
    }

    #[test]
    fn tree_ray_ratio_bound() {
        let g = tree_ray_prop_a(2, 3, 6, &qi(1), &Caps::default()).unwrap();
        assert!(g.report.passed());
        let amb = verify_prop_a_sets(&g.cert, Scope::Ambient).unwrap();
        assert!(amb.skipped_points > 0);
        assert_eq!(amb.condition("near").unwrap().worst, Real::from(q(2, 3)));
        assert!(ratio(&g) >= Real::from(q(2, 3)));
    }

    #[test]
    fn finite_uniform_has_ratio_zero() {
        let b = cayley_ball(Arc::new(GroupModel::cyclic(7)), 10, &Caps::default()).unwrap();
        let g = finite_uniform(b.space().clone(), &qi(3)).unwrap();
        assert!(g.report.passed());
        assert_eq!(g.cert.eps, qi(0));
        assert_eq!(g.cert.s, qi(3));
    }

    #[test]
    fn folner_ratio_shrinks_with_n() {
        let eps: Vec<Q> = [2, 5, 10, 20]
            .iter()
            .map(|&n| folner_prop_a(1, n, 40, &qi(2), &Caps::default()).unwrap().cert.eps)
            .collect();
        assert!(eps.windows(2).all(|w| w[1] <= w[0]));
    }
}
