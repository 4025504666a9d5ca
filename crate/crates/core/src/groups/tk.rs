use rayon::prelude::*;
use serde::Serialize;

use super::action::GroupAction;
use super::orbits::OrbitData;
use crate::error::{Error, Result};
use crate::exact::{fmt_q, qi, Q};

/// `g_w`: a shortest element carrying some representative `x_{i_w}` to `w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Translator {
    pub element: usize,
    pub orbit: usize,
}

/// `N_m = max{|g_w| : w ∈ B_m(x_1)}` for `m = 0..=M` and
/// `T_k = max{m : N_m ≤ k}` for the `k` the window certifies.
#[derive(Clone, Debug, Serialize)]
pub struct TkProfile {
    pub translators: Vec<Option<Translator>>,
    pub n: Vec<u64>,
    pub t: Vec<u64>,
    /// True when the space is complete and `T` reached its diameter.
    pub saturated: bool,
    /// `(g, k)` pairs whose inclusion was checked.
    pub inclusion_checks: u64,
}

impl TkProfile {
    /// Largest `m` with `N_m` certified.
    pub fn m_max(&self) -> u64 {
        self.n.len() as u64 - 1
    }

    /// Largest certified `k`.
    pub fn k_max(&self) -> u64 {
        self.t.len() as u64 - 1
    }

    /// Smallest certified `k` with `T_k ≥ s`.
    pub fn first_reaching(&self, s: &Q) -> Option<u64> {
        self.t.iter().position(|&t| qi(t as i64) >= *s).map(|k| k as u64)
    }
}

fn translators(action: &GroupAction, orbits: &OrbitData) -> Vec<Option<Translator>> {
    let ball = action.ball();
    let mut out = vec![None; action.space().len()];
    // ball order is (word length, canonical form)
    for g in 0..ball.len() {
        for (i, &xi) in orbits.representatives.iter().enumerate() {
            if let Some(w) = action.act(g, xi) {
                if out[w].is_none() {
                    out[w] = Some(Translator { element: g, orbit: i });
                }
            }
        }
    }
    out
}

pub fn compute_tk(action: &GroupAction, orbits: &OrbitData) -> Result<TkProfile> {
    let space = action.space();
    let ball = action.ball();
    let x1 = orbits.representatives[0];
    let trans = translators(action, orbits);
    let complete = !space.is_window();
    let diam = space.diameter_raw();

    let mut n: Vec<u64> = Vec::new();
    let mut m = 0u64;
    loop {
        let Some(raw) = space.raw_at_most(&qi(m as i64)) else { break };
        if space.validity(x1).is_some_and(|v| raw > v) {
            break;
        }
        let mut worst = 0;
        let mut covered = true;
        for w in space.ball_raw(x1, raw) {
            match trans[w] {
                Some(t) => worst = worst.max(ball.word_length(t.element)),
                None => covered = false,
            }
        }
        if !covered {
            break;
        }
        n.push(worst);
        if complete && raw >= diam {
            break;
        }
        m += 1;
    }
    if n.is_empty() {
        return Err(Error::Resource("no ball around x_1 is certified".into()));
    }
    let n_top = *n.last().expect("nonempty");
    let k_max = if complete { n_top } else { n_top.saturating_sub(1) };
    if !complete && n_top == 0 {
        return Err(Error::Resource(format!(
            "window too small for any k ≥ 1: N_m = 0 up to m = {}",
            n.len() - 1
        )));
    }
    let t: Vec<u64> = (0..=k_max)
        .map(|k| n.iter().rposition(|&v| v <= k).expect("N_0 = 0") as u64)
        .collect();
    if !complete && t.len() < 2 {
        return Err(Error::Resource("window too small for any k ≥ 1".into()));
    }
    let inclusion_checks = check_inclusion(action, orbits, &t)?;
    Ok(TkProfile {
        translators: trans,
        saturated: complete,
        n,
        t,
        inclusion_checks,
    })
}

/// `B_{T_k}(g·x_1) ⊆ ∪_i {g′·x_i : d_G(g, g′) ≤ k}` for every `k ≥ 1` and
/// every `g` where both sides are inside their windows.
fn check_inclusion(action: &GroupAction, orbits: &OrbitData, t: &[u64]) -> Result<u64> {
    let space = action.space();
    let ball = action.ball();
    let gs = ball.space();
    let x1 = orbits.representatives[0];
    let mut preimages: Vec<Vec<usize>> = vec![Vec::new(); space.len()];
    for g in 0..ball.len() {
        for &xi in &orbits.representatives {
            if let Some(w) = action.act(g, xi) {
                preimages[w].push(g);
            }
        }
    }
    let t_raw: Vec<u64> = t
        .iter()
        .map(|&v| space.raw_at_most(&qi(v as i64)).unwrap_or(0))
        .collect();
    let k_raw: Vec<u64> = (0..t.len())
        .map(|k| gs.raw_at_most(&qi(k as i64)).unwrap_or(0))
        .collect();
    let counts: Vec<u64> = (0..ball.len())
        .into_par_iter()
        .map(|g| -> Result<u64> {
            let Some(y) = action.act(g, x1) else { return Ok(0) };
            let valid: Vec<usize> = (1..t.len())
                .filter(|&k| space.validity(y).is_none_or(|v| v >= t_raw[k]))
                .filter(|&k| ball.is_complete() || ball.word_length(g) + k as u64 <= ball.radius())
                .collect();
            let Some(&top) = valid.last() else { return Ok(0) };
            for w in space.ball_raw(y, t_raw[top]) {
                let near = preimages[w].iter().map(|&h| gs.raw(g, h)).min().unwrap_or(u64::MAX);
                let d = space.raw(y, w);
                for &k in &valid {
                    if d <= t_raw[k] && near > k_raw[k] {
                        return Err(Error::Internal(format!(
                            "inclusion fails at g = {}, k = {k}, w = {}",
                            ball.label(g),
                            space.label(w)
                        )));
                    }
                }
            }
            Ok(valid.len() as u64)
        })
        .collect::<Result<_>>()?;
    Ok(counts.into_iter().sum())
}

/// `C` with `d_X(g·x_i, g′·x_j) ≤ C(d_G(g, g′) + 1)` on the window.
#[derive(Clone, Debug, Serialize)]
pub struct DisplacementConstant {
    pub c: u64,
    #[serde(serialize_with = "ser_q")]
    pub max_ratio: Q,
    /// `(g, g′, x_i, x_j)` labels at the maximum.
    pub witness: Option<[String; 4]>,
    pub pairs: u64,
}

fn ser_q<S: serde::Serializer>(q: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_q(q))
}

/// Maximum of `d_X / (d_G + 1)` over stored pairs, rounded up, at least 1.
pub fn displacement_constant(action: &GroupAction, orbits: &OrbitData) -> DisplacementConstant {
    let space = action.space();
    let ball = action.ball();
    let gs = ball.space();
    let (dx, dg) = (space.denom() as u128, gs.denom() as u128);
    let reps = &orbits.representatives;
    // ratio = raw_x·dg / (dx·(raw_g + dg)) kept as (num, den)
    let per: Vec<(u128, u128, Option<[usize; 4]>, u64)> = (0..ball.len())
        .into_par_iter()
        .map(|g| {
            let mut best = (0u128, 1u128, None, 0u64);
            for (i, &xi) in reps.iter().enumerate() {
                let Some(p) = action.act(g, xi) else { continue };
                for h in 0..ball.len() {
                    let den = dx * (gs.raw(g, h) as u128 + dg);
                    for (j, &xj) in reps.iter().enumerate() {
                        let Some(q) = action.act(h, xj) else { continue };
                        best.3 += 1;
                        let num = space.raw(p, q) as u128 * dg;
                        if num * best.1 > best.0 * den {
                            best = (num, den, Some([g, h, i, j]), best.3);
                        }
                    }
                }
            }
            best
        })
        .collect();
    let pairs = per.iter().map(|b| b.3).sum();
    let top = per
        .into_iter()
        .reduce(|a, b| if b.0 * a.1 > a.0 * b.1 { b } else { a })
        .unwrap_or((0, 1, None, 0));
    let max_ratio = Q::new((top.0 as i128).into(), (top.1 as i128).into());
    let c = max_ratio.ceil().to_integer().try_into().unwrap_or(u64::MAX).max(1);
    let witness = top.2.map(|[g, h, i, j]| {
        [
            ball.label(g).to_string(),
            ball.label(h).to_string(),
            space.label(reps[i]).to_string(),
            space.label(reps[j]).to_string(),
        ]
    });
    DisplacementConstant {
        c,
        max_ratio,
        witness,
        pairs,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::config::Caps;
    use crate::groups::orbit_decomposition;
    use crate::metric::{cayley_ball, GroupBall, GroupModel};

    fn z(radius: u64) -> Arc<GroupBall> {
        Arc::new(cayley_ball(Arc::new(GroupModel::Lattice { rank: 1 }), radius, &Caps::default()).unwrap())
    }

    #[test]
    fn translation_on_z() {
        let a = GroupAction::translation(z(12)).unwrap();
        let o = orbit_decomposition(&a, 0).unwrap();
        let tk = compute_tk(&a, &o).unwrap();
        assert_eq!(tk.n, (0..=12).collect::<Vec<u64>>());
        assert_eq!(tk.t, (0..12).collect::<Vec<u64>>());
        assert!(tk.inclusion_checks > 0);
        let w = a.space().index_of("-5").unwrap();
        assert_eq!(a.ball().label(tk.translators[w].unwrap().element), "-5");
        let c = displacement_constant(&a, &o);
        assert_eq!(c.c, 1);
    }

    #[test]
    fn doubled_shift() {
        let a = GroupAction::shift(z(10), 0, 2, 10, &Caps::default()).unwrap();
        let o = orbit_decomposition(&a, 0).unwrap();
        let tk = compute_tk(&a, &o).unwrap();
        // oracle: w = 2g + i with i = w mod 2, so g_w = (w − i)/2
        let cost = |w: i64| ((w - w.rem_euclid(2)) / 2).unsigned_abs();
        let oracle: Vec<u64> = (0..=10i64).map(|m| (-m..=m).map(cost).max().unwrap()).collect();
        assert_eq!(oracle, (0..=10u64).map(|m| m.div_ceil(2)).collect::<Vec<_>>());
        assert_eq!(tk.n, oracle);
        assert_eq!(tk.k_max(), 4);
        for (k, &tv) in tk.t.iter().enumerate() {
            let expect = (0..=10usize).filter(|&m| oracle[m] <= k as u64).max().unwrap();
            assert_eq!(tv, expect as u64);
        }
        assert_eq!(displacement_constant(&a, &o).c, 2);
    }

    #[test]
    fn finite_transitive_action_saturates() {
        let ball = Arc::new(cayley_ball(Arc::new(GroupModel::cyclic(7)), 7, &Caps::default()).unwrap());
        let a = GroupAction::translation(ball).unwrap();
        let o = orbit_decomposition(&a, 0).unwrap();
        let tk = compute_tk(&a, &o).unwrap();
        assert!(tk.saturated);
        assert_eq!(tk.n, vec![0, 1, 2, 3]);
        assert_eq!(*tk.t.last().unwrap(), 3);
        assert_eq!(displacement_constant(&a, &o).c, 1);
    }

    #[test]
    fn finite_space_constant_is_the_diameter() {
        // trivial group on a 4-point path with two orbits apart by the diameter
        let ball = Arc::new(cayley_ball(Arc::new(GroupModel::cyclic(1)), 1, &Caps::default()).unwrap());
        let labels = (0..4).map(|i| i.to_string()).collect();
        let table = (0..16u64).map(|k| (k / 4).abs_diff(k % 4)).collect();
        let space = Arc::new(crate::metric::FiniteMetricSpace::new(labels, 1, table).unwrap());
        let rows = vec![(0..4).map(Some).collect()];
        let a = GroupAction::from_table(ball, space, rows).unwrap();
        let o = orbit_decomposition(&a, 0).unwrap();
        assert_eq!(o.len(), 4);
        assert_eq!(displacement_constant(&a, &o).c, 3);
    }

    #[test]
    fn tiny_window_is_a_resource_error() {
        let a = GroupAction::shift(z(1), 0, 2, 1, &Caps::default()).unwrap();
        let o = orbit_decomposition(&a, 0).unwrap();
        assert!(matches!(compute_tk(&a, &o), Err(Error::Resource(_))));
    }
}
