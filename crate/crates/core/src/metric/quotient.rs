//! Subgroups given by membership oracles, and coset spaces of Cayley balls.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::group::{Elem, GroupBall, GroupModel};
use crate::metric::space::FiniteMetricSpace;

/// Closure checks run exhaustively up to this many stored subgroup elements.
const EXHAUSTIVE_CLOSURE_LIMIT: usize = 300;
const SAMPLED_CLOSURE_CHECKS: usize = 20_000;

/// JSON subgroup presets.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SubgroupSpec {
    Trivial,
    Whole,
    /// Lattice elements vanishing in the listed coordinates, e.g. `{0}×Z`
    /// is `zero-coords` with `coords: [0]`.
    ZeroCoords { coords: Vec<usize> },
    /// Lattice elements with every coordinate divisible by `modulus`.
    Multiples { modulus: i64 },
    /// An explicit list of table indices of a finite group.
    Elements { elements: Vec<usize> },
}

type Membership = Arc<dyn Fn(&Elem) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct Subgroup {
    name: String,
    member: Membership,
}

impl fmt::Debug for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Subgroup").field("name", &self.name).finish()
    }
}

impl Subgroup {
    pub fn new(name: impl Into<String>, member: impl Fn(&Elem) -> bool + Send + Sync + 'static) -> Self {
        Subgroup {
            name: name.into(),
            member: Arc::new(member),
        }
    }

    pub fn from_spec(spec: &SubgroupSpec, model: &GroupModel) -> Result<Self> {
        let lattice = matches!(model, GroupModel::Lattice { .. });
        match spec {
            SubgroupSpec::Trivial => {
                let id = model.identity();
                Ok(Subgroup::new("trivial", move |g| *g == id))
            }
            SubgroupSpec::Whole => Ok(Subgroup::new("whole", |_| true)),
            SubgroupSpec::ZeroCoords { coords } if lattice => {
                let rank = model.identity().0.len();
                if coords.iter().any(|&c| c >= rank) {
                    return Err(Error::Domain("zero-coords index out of range".into()));
                }
                let coords = coords.clone();
                Ok(Subgroup::new(format!("zero-coords{coords:?}"), move |g| {
                    coords.iter().all(|&c| g.0[c] == 0)
                }))
            }
            SubgroupSpec::Multiples { modulus } if lattice && *modulus >= 1 => {
                let m = *modulus;
                Ok(Subgroup::new(format!("{m}Z"), move |g| {
                    g.0.iter().all(|x| x.rem_euclid(m) == 0)
                }))
            }
            SubgroupSpec::Elements { elements } => match model {
                GroupModel::Finite { table, .. } => {
                    if elements.iter().any(|&e| e >= table.len()) {
                        return Err(Error::Domain("subgroup element out of range".into()));
                    }
                    let set: std::collections::BTreeSet<i64> =
                        elements.iter().map(|&e| e as i64).collect();
                    Ok(Subgroup::new("elements", move |g| set.contains(&g.0[0])))
                }
                _ => Err(Error::Domain("element lists need a finite-table group".into())),
            },
            _ => Err(Error::Domain(format!("subgroup preset {spec:?} does not fit the group"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn contains(&self, g: &Elem) -> bool {
        (self.member)(g)
    }

    /// Identity membership plus closure under products and inverses,
    /// exhaustive on small windows and sampled otherwise.
    pub fn check_closure(&self, ball: &GroupBall, seed: u64) -> Result<()> {
        let model = ball.model();
        if !self.contains(&model.identity()) {
            return Err(Error::InvalidSubgroup(format!("{} does not contain the identity", self.name)));
        }
        let members: Vec<&Elem> = ball.elements().iter().filter(|g| self.contains(g)).collect();
        for g in &members {
            if !self.contains(&model.inverse(g)) {
                return Err(Error::InvalidSubgroup(format!(
                    "{} not closed under inverse at {}",
                    self.name,
                    model.label(g)
                )));
            }
        }
        let check = |a: &Elem, b: &Elem| -> Result<()> {
            if !self.contains(&model.multiply(a, b)) {
                return Err(Error::InvalidSubgroup(format!(
                    "{} not closed under product at ({}, {})",
                    self.name,
                    model.label(a),
                    model.label(b)
                )));
            }
            Ok(())
        };
        if members.len() <= EXHAUSTIVE_CLOSURE_LIMIT {
            for a in &members {
                for b in &members {
                    check(a, b)?;
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..SAMPLED_CLOSURE_CHECKS {
                let a = members[rng.gen_range(0..members.len())];
                let b = members[rng.gen_range(0..members.len())];
                check(a, b)?;
            }
        }
        Ok(())
    }

    /// Checks `s h s⁻¹ ∈ H` for every generator `s` and stored `h ∈ H`.
    pub fn check_normal(&self, ball: &GroupBall) -> Result<()> {
        let model = ball.model();
        for h in ball.elements().iter().filter(|g| self.contains(g)) {
            for s in model.generators() {
                let c = model.multiply(&model.multiply(&s, h), &model.inverse(&s));
                if !self.contains(&c) {
                    return Err(Error::InvalidSubgroup(format!(
                        "{} is not normal: conjugate of {} by {} leaves it",
                        self.name,
                        model.label(h),
                        model.label(&s)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The cosets `gH` met by a Cayley ball, with the quotient metric.
#[derive(Clone, Debug)]
pub struct CosetSpace {
    space: Arc<FiniteMetricSpace>,
    coset_of: Vec<usize>,
    representatives: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl CosetSpace {
    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// Coset index of a ball element.
    pub fn coset_of(&self, g: usize) -> usize {
        self.coset_of[g]
    }

    pub fn coset_map(&self) -> &[usize] {
        &self.coset_of
    }

    /// Ball index of the minimal representative of coset `c`.
    pub fn representative(&self, c: usize) -> usize {
        self.representatives[c]
    }

    /// Ball indices of the stored elements of coset `c`, in ball order.
    pub fn members(&self, c: usize) -> &[usize] {
        &self.members[c]
    }
}

/// Forms the coset space of `ball` by the subgroup. The first element met
/// in ball order (word length, then canonical form) represents its coset.
pub fn quotient_space(ball: &GroupBall, subgroup: &Subgroup, seed: u64) -> Result<CosetSpace> {
    subgroup.check_closure(ball, seed)?;
    let model = ball.model();
    let n = ball.len();
    let mut representatives: Vec<usize> = Vec::new();
    let mut rep_inverses: Vec<Elem> = Vec::new();
    let mut coset_of = vec![0usize; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for g in 0..n {
        let elem = ball.element(g);
        let found = rep_inverses
            .iter()
            .position(|r_inv| subgroup.contains(&model.multiply(r_inv, elem)));
        let c = match found {
            Some(c) => c,
            None => {
                representatives.push(g);
                rep_inverses.push(model.inverse(elem));
                members.push(Vec::new());
                representatives.len() - 1
            }
        };
        coset_of[g] = c;
        members[c].push(g);
    }
    let k = representatives.len();
    let gs = ball.space();
    let mut table = vec![u64::MAX; k * k];
    for i in 0..n {
        let ci = coset_of[i];
        let row = gs.row(i);
        for (j, &d) in row.iter().enumerate() {
            let slot = &mut table[ci * k + coset_of[j]];
            if d < *slot {
                *slot = d;
            }
        }
    }
    // On a truncated window the pairwise minimum can miss geodesics that
    // leave the window; path distance in the coset graph restores the
    // triangle inequality and never exceeds the pairwise minimum.
    let unit = gs.denom();
    let mut adjacent: Vec<Vec<usize>> = vec![Vec::new(); k];
    for c in 0..k {
        for e in 0..k {
            if c != e && table[c * k + e] == unit {
                adjacent[c].push(e);
            }
        }
    }
    for c in 0..k {
        let mut hops = vec![u64::MAX; k];
        hops[c] = 0;
        let mut queue = std::collections::VecDeque::from([c]);
        while let Some(x) = queue.pop_front() {
            for &y in &adjacent[x] {
                if hops[y] == u64::MAX {
                    hops[y] = hops[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        for e in 0..k {
            if hops[e] != u64::MAX {
                let slot = &mut table[c * k + e];
                *slot = (*slot).min(hops[e] * unit);
            }
        }
    }
    let labels: Vec<String> = representatives
        .iter()
        .map(|&r| format!("{}H", ball.label(r)))
        .collect();
    let mut space = FiniteMetricSpace::new(labels, gs.denom(), table)?;
    if !ball.is_complete() {
        space = space.with_validity(
            representatives
                .iter()
                .map(|&r| ball.radius() - ball.word_length(r))
                .collect(),
        )?;
    }
    Ok(CosetSpace {
        space: Arc::new(space),
        coset_of,
        representatives,
        members,
    })
}
