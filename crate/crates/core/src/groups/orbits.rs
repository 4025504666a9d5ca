use std::sync::Arc;

use super::action::GroupAction;
use crate::error::{Error, Result};
use crate::metric::{quotient_space, Component, CosetSpace, SetMapFamily, Subgroup};

/// Orbit representatives, their stabilizers and the identification of
/// each orbit with a coset space.
#[derive(Clone, Debug)]
pub struct OrbitData {
    pub representatives: Vec<usize>,
    /// Orbit index of every point.
    pub orbit_of: Vec<usize>,
    pub stabilizers: Vec<Subgroup>,
    pub cosets: Vec<Arc<CosetSpace>>,
    /// `identification[i][c]`: the point `c·x_i`, when stored.
    pub identification: Vec<Vec<Option<usize>>>,
    /// Inverse of the identification: `point ↦ (i, c)`.
    pub coset_of_point: Vec<Option<(usize, usize)>>,
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            y = std::mem::replace(&mut self.0[y], r);
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // smaller id wins so roots are orbit minima
        if ra < rb {
            self.0[rb] = ra;
        } else if rb < ra {
            self.0[ra] = rb;
        }
    }
}

/// Undefined generator moves are tolerated only near the window edge:
/// a point whose validity radius reaches the largest generator displacement
/// must have all its generator images stored.
fn check_table(action: &GroupAction) -> Result<()> {
    let space = action.space();
    let ball = action.ball();
    let gens: Vec<usize> = ball
        .model()
        .generators()
        .iter()
        .filter_map(|s| ball.index_of(s))
        .collect();
    let mut reach = 0;
    for &s in &gens {
        for x in 0..space.len() {
            if let Some(y) = action.act(s, x) {
                reach = reach.max(space.raw(x, y));
            }
        }
    }
    for &s in &gens {
        for x in 0..space.len() {
            if action.act(s, x).is_none() && space.validity(x).is_none_or(|v| v >= reach) {
                return Err(Error::Truncation(format!(
                    "action table has no entry for ({}, {})",
                    ball.label(s),
                    space.label(x)
                )));
            }
        }
    }
    Ok(())
}

/// Union-find over the action table; the smallest point id represents
/// its orbit.
pub fn orbit_decomposition(action: &GroupAction, seed: u64) -> Result<OrbitData> {
    check_table(action)?;
    let space = action.space();
    let ball = action.ball();
    let n = space.len();
    let mut dsu = Dsu((0..n).collect());
    for g in 0..ball.len() {
        for x in 0..n {
            if let Some(y) = action.act(g, x) {
                dsu.union(x, y);
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|x| dsu.find(x)).collect();
    let mut representatives: Vec<usize> = roots.clone();
    representatives.sort_unstable();
    representatives.dedup();
    let orbit_of = roots
        .iter()
        .map(|r| representatives.binary_search(r).expect("root is a representative"))
        .collect();

    let mut stabilizers = Vec::new();
    let mut cosets = Vec::new();
    let mut identification = Vec::new();
    let mut coset_of_point = vec![None; n];
    for (i, &xi) in representatives.iter().enumerate() {
        let act = action.act_fn().clone();
        let stab = Subgroup::new(format!("Stab({})", space.label(xi)), move |g| act(g, xi) == Some(xi));
        let cs = quotient_space(ball, &stab, seed)?;
        let mut ident = Vec::with_capacity(cs.len());
        for c in 0..cs.len() {
            let mut image = None;
            for &g in cs.members(c) {
                match (image, action.act(g, xi)) {
                    (_, None) => {}
                    (None, Some(p)) => image = Some(p),
                    (Some(q), Some(p)) if p != q => {
                        return Err(Error::Internal(format!(
                            "orbit identification is not well defined on coset {}",
                            cs.space().label(c)
                        )))
                    }
                    _ => {}
                }
            }
            if let Some(p) = image {
                if coset_of_point[p].is_some() {
                    return Err(Error::Internal(format!(
                        "two cosets land on {} (second: {})",
                        space.label(p),
                        cs.space().label(c)
                    )));
                }
                coset_of_point[p] = Some((i, c));
            }
            ident.push(image);
        }
        stabilizers.push(stab);
        cosets.push(Arc::new(cs));
        identification.push(ident);
    }
    Ok(OrbitData {
        representatives,
        orbit_of,
        stabilizers,
        cosets,
        identification,
        coset_of_point,
    })
}

impl OrbitData {
    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// The quotient maps `π_i : G → G/H_i` on the ball, as one family.
    pub fn quotient_family(&self, action: &GroupAction) -> Result<SetMapFamily> {
        let components = self
            .cosets
            .iter()
            .enumerate()
            .map(|(i, cs)| Component {
                label: format!("pi{}", i + 1),
                codomain: cs.space().labels().to_vec(),
                map: cs.coset_map().to_vec(),
            })
            .collect();
        SetMapFamily::new(action.ball().space().clone(), components)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Caps;
    use crate::metric::{cayley_ball, Elem, GroupModel};

    fn z(radius: u64) -> Arc<crate::metric::GroupBall> {
        Arc::new(cayley_ball(Arc::new(GroupModel::Lattice { rank: 1 }), radius, &Caps::default()).unwrap())
    }

    #[test]
    fn translation_has_one_orbit() {
        let a = GroupAction::translation(z(6)).unwrap();
        let o = orbit_decomposition(&a, 0).unwrap();
        assert_eq!(o.representatives, vec![0]);
        assert_eq!(o.cosets[0].len(), a.ball().len());
        assert!(o.coset_of_point.iter().all(Option::is_some));
        assert!(o.stabilizers[0].contains(&Elem(vec![0])));
        assert!(!o.stabilizers[0].contains(&Elem(vec![1])));
    }

    #[test]
    fn doubled_shift_has_two_orbits() {
        let a = GroupAction::shift(z(10), 0, 2, 10, &Caps::default()).unwrap();
        let o = orbit_decomposition(&a, 0).unwrap();
        let labels: Vec<&str> = o.representatives.iter().map(|&x| a.space().label(x)).collect();
        assert_eq!(labels, vec!["0", "-1"]);
        for x in 0..a.space().len() {
            let v: i64 = a.space().label(x).parse().unwrap();
            assert_eq!(o.orbit_of[x], v.rem_euclid(2) as usize);
        }
        // trivial stabilizers: every coset is a single element
        assert!((0..o.cosets[1].len()).all(|c| o.cosets[1].members(c).len() == 1));
    }

    #[test]
    fn finite_group_on_itself() {
        let ball = Arc::new(cayley_ball(Arc::new(GroupModel::cyclic(6)), 6, &Caps::default()).unwrap());
        assert!(ball.is_complete());
        let a = GroupAction::translation(ball).unwrap();
        let o = orbit_decomposition(&a, 0).unwrap();
        assert_eq!(o.len(), 1);
        assert_eq!(o.cosets[0].len(), 6);
    }

    #[test]
    fn missing_interior_entry_is_truncation() {
        let ball = z(3);
        let space = ball.space().clone();
        let mut rows: Vec<Vec<Option<usize>>> = (0..ball.len())
            .map(|g| (0..space.len()).map(|x| ball.product_index(g, x)).collect())
            .collect();
        let one = ball.index_of(&Elem(vec![1])).unwrap();
        rows[one][0] = None;
        let a = GroupAction::from_table(ball, space, rows).unwrap();
        assert!(matches!(orbit_decomposition(&a, 0), Err(Error::Truncation(_))));
    }
}
