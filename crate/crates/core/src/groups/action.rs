use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Caps;
use crate::error::{Error, Result};
use crate::metric::{cayley_ball, quotient_space, CosetSpace, Elem, FiniteMetricSpace, GroupBall, GroupModel, SpaceJson, Subgroup, SubgroupSpec};

pub(crate) const NONE: u32 = u32::MAX;

pub type ActFn = Arc<dyn Fn(&Elem, usize) -> Option<usize> + Send + Sync>;

/// JSON action presets.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "preset", rename_all = "kebab-case")]
pub enum ActionSpec {
    /// The group acting on its own ball by left multiplication.
    Translation,
    /// A lattice acting on the window `[-window, window]` of `Z` by
    /// `g·x = x + scale·g[coord]`.
    Shift { coord: usize, scale: i64, window: u64 },
    /// Left multiplication on the cosets of a subgroup.
    Cosets { subgroup: SubgroupSpec },
    /// `rows[g][x]` for `g` in ball order; `null` where the image is not stored.
    Table { space: SpaceJson, rows: Vec<Vec<Option<usize>>> },
}

/// A group window acting on a finite space. `act` is defined on every
/// element the model can represent; `table` caches it on the ball.
#[derive(Clone)]
pub struct GroupAction {
    name: String,
    ball: Arc<GroupBall>,
    space: Arc<FiniteMetricSpace>,
    act: ActFn,
    table: Vec<u32>,
}

impl std::fmt::Debug for GroupAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GroupAction")
            .field("name", &self.name)
            .field("group points", &self.ball.len())
            .field("space points", &self.space.len())
            .finish()
    }
}

impl GroupAction {
    /// Tabulates the action on the ball and checks the identity and
    /// compatibility laws on every stored composable triple with a
    /// generator on the left.
    pub fn new(name: impl Into<String>, ball: Arc<GroupBall>, space: Arc<FiniteMetricSpace>, act: ActFn) -> Result<Self> {
        let n = space.len();
        let table: Vec<u32> = (0..ball.len())
            .into_par_iter()
            .flat_map_iter(|g| {
                let (ball, act) = (&ball, &act);
                (0..n).map(move |x| act(ball.element(g), x).map_or(NONE, |y| y as u32))
            })
            .collect();
        if let Some(y) = table.iter().find(|&&y| y != NONE && y as usize >= n) {
            return Err(Error::Domain(format!("action sends a point to index {y}")));
        }
        let action = GroupAction {
            name: name.into(),
            ball,
            space,
            act,
            table,
        };
        action.check_laws()?;
        Ok(action)
    }

    fn check_laws(&self) -> Result<()> {
        let model = self.ball.model();
        let e = model.identity();
        for x in 0..self.space.len() {
            if (self.act)(&e, x) != Some(x) {
                return Err(Error::Domain(format!(
                    "{}: the identity moves {}",
                    self.name,
                    self.space.label(x)
                )));
            }
        }
        let gens = model.generators();
        (0..self.ball.len()).into_par_iter().try_for_each(|g| {
            for s in &gens {
                let sg = model.multiply(s, self.ball.element(g));
                for x in 0..self.space.len() {
                    let Some(y) = self.act(g, x) else { continue };
                    let Some(z) = (self.act)(s, y) else { continue };
                    if let Some(w) = (self.act)(&sg, x) {
                        if w != z {
                            return Err(Error::Domain(format!(
                                "{}: s·(g·x) ≠ (sg)·x at s = {}, g = {}, x = {}",
                                self.name,
                                model.label(s),
                                self.ball.label(g),
                                self.space.label(x)
                            )));
                        }
                    }
                }
            }
            Ok(())
        })
    }

    pub fn from_spec(spec: &ActionSpec, ball: Arc<GroupBall>, caps: &Caps, seed: u64) -> Result<Self> {
        match spec {
            ActionSpec::Translation => Self::translation(ball),
            ActionSpec::Shift { coord, scale, window } => Self::shift(ball, *coord, *scale, *window, caps),
            ActionSpec::Cosets { subgroup } => {
                let h = Subgroup::from_spec(subgroup, ball.model())?;
                let cosets = Arc::new(quotient_space(&ball, &h, seed)?);
                Self::on_cosets(ball, cosets, h)
            }
            ActionSpec::Table { space, rows } => {
                let space = Arc::new(FiniteMetricSpace::from_json(space)?);
                Self::from_table(ball, space, rows.clone())
            }
        }
    }

    pub fn translation(ball: Arc<GroupBall>) -> Result<Self> {
        let space = ball.space().clone();
        let b = ball.clone();
        let act: ActFn = Arc::new(move |g, x| b.index_of(&b.model().multiply(g, b.element(x))));
        Self::new("translation", ball, space, act)
    }

    pub fn shift(ball: Arc<GroupBall>, coord: usize, scale: i64, window: u64, caps: &Caps) -> Result<Self> {
        if !matches!(**ball.model(), GroupModel::Lattice { rank } if coord < rank) {
            return Err(Error::Domain(format!("shift needs a lattice with coordinate {coord}")));
        }
        let line = Arc::new(cayley_ball(Arc::new(GroupModel::Lattice { rank: 1 }), window, caps)?);
        let space = line.space().clone();
        let act: ActFn = Arc::new(move |g, x| {
            let v = line.element(x).0[0].checked_add(scale.checked_mul(g.0[coord])?)?;
            line.index_of(&Elem(vec![v]))
        });
        Self::new(format!("shift x + {scale}·g[{coord}]"), ball, space, act)
    }

    /// `g·(rH) = (g r)H`, found through the ball when `g r` is stored and by
    /// a membership scan over representatives otherwise.
    pub fn on_cosets(ball: Arc<GroupBall>, cosets: Arc<CosetSpace>, subgroup: Subgroup) -> Result<Self> {
        let space = cosets.space().clone();
        let b = ball.clone();
        let rep_inverses: Vec<Elem> = (0..cosets.len())
            .map(|c| b.model().inverse(b.element(cosets.representative(c))))
            .collect();
        let name = format!("cosets of {}", subgroup.name());
        let act: ActFn = Arc::new(move |g, c| {
            let model = b.model();
            let gr = model.multiply(g, b.element(cosets.representative(c)));
            if let Some(i) = b.index_of(&gr) {
                return Some(cosets.coset_of(i));
            }
            rep_inverses
                .iter()
                .position(|r_inv| subgroup.contains(&model.multiply(r_inv, &gr)))
        });
        Self::new(name, ball, space, act)
    }

    pub fn from_table(ball: Arc<GroupBall>, space: Arc<FiniteMetricSpace>, rows: Vec<Vec<Option<usize>>>) -> Result<Self> {
        if rows.len() != ball.len() || rows.iter().any(|r| r.len() != space.len()) {
            return Err(Error::Domain(format!(
                "action table must be {} × {}",
                ball.len(),
                space.len()
            )));
        }
        let b = ball.clone();
        let act: ActFn = Arc::new(move |g, x| b.index_of(g).and_then(|i| rows[i][x]));
        Self::new("table", ball, space, act)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ball(&self) -> &Arc<GroupBall> {
        &self.ball
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    /// `g·x` for a ball element `g`.
    pub fn act(&self, g: usize, x: usize) -> Option<usize> {
        match self.table[g * self.space.len() + x] {
            NONE => None,
            y => Some(y as usize),
        }
    }

    /// `g·x` for any element the model represents.
    pub fn act_elem(&self, g: &Elem, x: usize) -> Option<usize> {
        (self.act)(g, x)
    }

    pub(crate) fn act_fn(&self) -> &ActFn {
        &self.act
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(radius: u64) -> Arc<GroupBall> {
        Arc::new(cayley_ball(Arc::new(GroupModel::Lattice { rank: 1 }), radius, &Caps::default()).unwrap())
    }

    #[test]
    fn translation_moves_points() {
        let a = GroupAction::translation(z(5)).unwrap();
        let g = a.ball().index_of(&Elem(vec![2])).unwrap();
        let x = a.space().index_of("-1").unwrap();
        assert_eq!(a.space().label(a.act(g, x).unwrap()), "1");
        let x = a.space().index_of("4").unwrap();
        assert_eq!(a.act(g, x), None);
    }

    #[test]
    fn a_non_action_is_rejected() {
        let ball = z(3);
        let space = ball.space().clone();
        let b = ball.clone();
        // x ↦ x + g², not a homomorphism
        let act: ActFn = Arc::new(move |g, x| {
            let v = b.element(x).0[0] + g.0[0] * g.0[0];
            b.index_of(&Elem(vec![v]))
        });
        assert!(matches!(GroupAction::new("bad", ball, space, act), Err(Error::Domain(_))));
    }

    #[test]
    fn cosets_of_the_even_integers() {
        let ball = z(6);
        let spec = ActionSpec::Cosets {
            subgroup: SubgroupSpec::Multiples { modulus: 2 },
        };
        let a = GroupAction::from_spec(&spec, ball, &Caps::default(), 0).unwrap();
        assert_eq!(a.space().len(), 2);
        let one = a.ball().index_of(&Elem(vec![1])).unwrap();
        assert_eq!(a.act(one, 0), Some(1));
        assert_eq!(a.act(one, 1), Some(0));
        // outside the ball the scan still finds the coset
        assert_eq!(a.act_elem(&Elem(vec![101]), 0), Some(1));
    }

    #[test]
    fn spec_round_trip() {
        let spec = ActionSpec::Shift {
            coord: 0,
            scale: 2,
            window: 10,
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"preset":"shift","coord":0,"scale":2,"window":10}"#);
        assert_eq!(serde_json::from_str::<ActionSpec>(&json).unwrap(), spec);
    }
}
