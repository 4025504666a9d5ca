//! Group models with decidable canonical forms, and Cayley balls.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Caps;
use crate::error::{Error, Result};
use crate::metric::space::FiniteMetricSpace;

/// Canonical form of a group element. The encoding depends on the model:
/// lattice coordinates, reduced free-group letters (`±1..±rank`), a table
/// index, or `[s, v…]` for `Zⁿ ⋊ Z/2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Elem(pub Vec<i64>);

/// JSON group presets.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "preset")]
pub enum GroupSpec {
    #[serde(rename = "Z")]
    Z,
    #[serde(rename = "Zn")]
    Zn { n: usize },
    #[serde(rename = "free")]
    Free { rank: usize },
    /// Multiplication table over `0..k` with identity at the index whose
    /// row is the identity permutation.
    #[serde(rename = "finite-table")]
    FiniteTable {
        table: Vec<Vec<usize>>,
        generators: Vec<usize>,
    },
    /// `Zⁿ ⋊ Z/2` with the flip acting by `v ↦ -v`.
    #[serde(rename = "semidirect")]
    Semidirect { n: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupModel {
    Lattice {
        rank: usize,
    },
    Free {
        rank: usize,
    },
    Finite {
        table: Vec<Vec<usize>>,
        generators: Vec<usize>,
        identity: usize,
        inverses: Vec<usize>,
    },
    Dihedral {
        rank: usize,
    },
}

impl GroupModel {
    pub fn from_spec(spec: &GroupSpec) -> Result<Self> {
        match spec {
            GroupSpec::Z => Ok(GroupModel::Lattice { rank: 1 }),
            GroupSpec::Zn { n } if *n >= 1 => Ok(GroupModel::Lattice { rank: *n }),
            GroupSpec::Free { rank } if *rank >= 1 => Ok(GroupModel::Free { rank: *rank }),
            GroupSpec::Semidirect { n } if *n >= 1 => Ok(GroupModel::Dihedral { rank: *n }),
            GroupSpec::FiniteTable { table, generators } => {
                Self::finite(table.clone(), generators.clone())
            }
            _ => Err(Error::Domain(format!("bad group preset {spec:?}"))),
        }
    }

    pub fn finite(table: Vec<Vec<usize>>, generators: Vec<usize>) -> Result<Self> {
        let k = table.len();
        if k == 0 || table.iter().any(|r| r.len() != k || r.iter().any(|&v| v >= k)) {
            return Err(Error::Domain("multiplication table must be square over 0..k".into()));
        }
        let identity = (0..k)
            .find(|&e| (0..k).all(|g| table[e][g] == g && table[g][e] == g))
            .ok_or_else(|| Error::Domain("multiplication table has no identity".into()))?;
        let mut inverses = Vec::with_capacity(k);
        for g in 0..k {
            let inv = (0..k)
                .find(|&h| table[g][h] == identity && table[h][g] == identity)
                .ok_or_else(|| Error::Domain(format!("element {g} has no inverse")))?;
            inverses.push(inv);
        }
        if generators.is_empty() || generators.iter().any(|&g| g >= k) {
            return Err(Error::Domain("bad generating set".into()));
        }
        for &s in &generators {
            if !generators.contains(&inverses[s]) {
                return Err(Error::Domain(format!(
                    "generating set not closed under inversion (missing inverse of {s})"
                )));
            }
        }
        Ok(GroupModel::Finite {
            table,
            generators,
            identity,
            inverses,
        })
    }

    /// `Z/k` with generators `{±1}`.
    pub fn cyclic(k: usize) -> Self {
        let table = (0..k).map(|a| (0..k).map(|b| (a + b) % k).collect()).collect();
        let gens = if k <= 2 { vec![1 % k] } else { vec![1, k - 1] };
        Self::finite(table, gens).expect("cyclic table is a group")
    }

    pub fn identity(&self) -> Elem {
        match self {
            GroupModel::Lattice { rank } => Elem(vec![0; *rank]),
            GroupModel::Free { .. } => Elem(Vec::new()),
            GroupModel::Finite { identity, .. } => Elem(vec![*identity as i64]),
            GroupModel::Dihedral { rank } => Elem(vec![0; rank + 1]),
        }
    }

    /// The symmetric generating set.
    pub fn generators(&self) -> Vec<Elem> {
        match self {
            GroupModel::Lattice { rank } => (0..*rank)
                .flat_map(|i| {
                    [1i64, -1].map(|s| {
                        let mut v = vec![0; *rank];
                        v[i] = s;
                        Elem(v)
                    })
                })
                .collect(),
            GroupModel::Free { rank } => (1..=*rank as i64)
                .flat_map(|l| [Elem(vec![l]), Elem(vec![-l])])
                .collect(),
            GroupModel::Finite { generators, .. } => {
                generators.iter().map(|&g| Elem(vec![g as i64])).collect()
            }
            GroupModel::Dihedral { rank } => {
                let mut out: Vec<Elem> = (0..*rank)
                    .flat_map(|i| {
                        [1i64, -1].map(|s| {
                            let mut v = vec![0; rank + 1];
                            v[i + 1] = s;
                            Elem(v)
                        })
                    })
                    .collect();
                let mut flip = vec![0; rank + 1];
                flip[0] = 1;
                out.push(Elem(flip));
                out
            }
        }
    }

    pub fn multiply(&self, a: &Elem, b: &Elem) -> Elem {
        match self {
            GroupModel::Lattice { .. } => {
                Elem(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect())
            }
            GroupModel::Free { .. } => {
                let mut w = a.0.clone();
                for &l in &b.0 {
                    if w.last() == Some(&-l) {
                        w.pop();
                    } else {
                        w.push(l);
                    }
                }
                Elem(w)
            }
            GroupModel::Finite { table, .. } => {
                Elem(vec![table[a.0[0] as usize][b.0[0] as usize] as i64])
            }
            GroupModel::Dihedral { .. } => {
                let s = a.0[0];
                let sign = if s == 0 { 1 } else { -1 };
                let mut v = vec![(s + b.0[0]) % 2];
                v.extend(a.0[1..].iter().zip(&b.0[1..]).map(|(x, y)| x + sign * y));
                Elem(v)
            }
        }
    }

    pub fn inverse(&self, a: &Elem) -> Elem {
        match self {
            GroupModel::Lattice { .. } => Elem(a.0.iter().map(|x| -x).collect()),
            GroupModel::Free { .. } => Elem(a.0.iter().rev().map(|x| -x).collect()),
            GroupModel::Finite { inverses, .. } => Elem(vec![inverses[a.0[0] as usize] as i64]),
            GroupModel::Dihedral { .. } => {
                let s = a.0[0];
                let mut v = vec![s];
                if s == 0 {
                    v.extend(a.0[1..].iter().map(|x| -x));
                } else {
                    v.extend_from_slice(&a.0[1..]);
                }
                Elem(v)
            }
        }
    }

    /// Word length when a closed form is known for the standard generators.
    pub fn closed_form_length(&self, a: &Elem) -> Option<u64> {
        match self {
            GroupModel::Lattice { .. } => Some(a.0.iter().map(|x| x.unsigned_abs()).sum()),
            GroupModel::Free { .. } => Some(a.0.len() as u64),
            _ => None,
        }
    }

    pub fn label(&self, a: &Elem) -> String {
        match self {
            GroupModel::Lattice { rank: 1 } => a.0[0].to_string(),
            GroupModel::Lattice { .. } => format!(
                "({})",
                a.0.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            ),
            GroupModel::Free { .. } => {
                if a.0.is_empty() {
                    "e".into()
                } else {
                    a.0.iter()
                        .map(|&l| {
                            let c = (b'a' + (l.unsigned_abs() - 1) as u8) as char;
                            if l > 0 {
                                c
                            } else {
                                c.to_ascii_uppercase()
                            }
                        })
                        .collect()
                }
            }
            GroupModel::Finite { .. } => format!("g{}", a.0[0]),
            GroupModel::Dihedral { .. } => {
                let v = a.0[1..].iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
                if a.0[0] == 0 {
                    format!("({v})")
                } else {
                    format!("t({v})")
                }
            }
        }
    }

    /// Spot-checks the group laws on elements of `ball`.
    pub fn check_laws(&self, ball: &GroupBall, seed: u64, samples: usize) -> Result<()> {
        let e = self.identity();
        for s in self.generators() {
            if !self.generators().contains(&self.inverse(&s)) {
                return Err(Error::Domain("generating set not symmetric".into()));
            }
        }
        for g in ball.elements() {
            if self.multiply(&e, g) != *g || self.multiply(g, &e) != *g {
                return Err(Error::Domain(format!("identity law fails at {}", self.label(g))));
            }
            if self.multiply(g, &self.inverse(g)) != e {
                return Err(Error::Domain(format!("inverse law fails at {}", self.label(g))));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = ball.len();
        for _ in 0..samples {
            let (a, b, c) = (
                ball.element(rng.gen_range(0..n)),
                ball.element(rng.gen_range(0..n)),
                ball.element(rng.gen_range(0..n)),
            );
            let left = self.multiply(&self.multiply(a, b), c);
            let right = self.multiply(a, &self.multiply(b, c));
            if left != right {
                return Err(Error::Domain(format!(
                    "associativity fails at ({}, {}, {})",
                    self.label(a),
                    self.label(b),
                    self.label(c)
                )));
            }
        }
        Ok(())
    }
}

/// All elements of word length ≤ `radius`, with the ambient word metric.
#[derive(Clone, Debug)]
pub struct GroupBall {
    model: Arc<GroupModel>,
    radius: u64,
    elements: Vec<Elem>,
    index: HashMap<Elem, usize>,
    word_length: Vec<u64>,
    complete: bool,
    space: Arc<FiniteMetricSpace>,
}

/// BFS layers of the Cayley graph out to `radius`. Returns the elements in
/// (length, canonical form) order, their lengths, and whether the whole
/// group was exhausted.
fn bfs_layers(
    model: &GroupModel,
    radius: u64,
    cap: usize,
) -> Result<(Vec<Elem>, Vec<u64>, bool)> {
    let gens = model.generators();
    let mut seen: HashMap<Elem, u64> = HashMap::new();
    let id = model.identity();
    seen.insert(id.clone(), 0);
    let mut elements = vec![id.clone()];
    let mut lengths = vec![0];
    let mut layer = vec![id];
    let mut complete = false;
    for r in 1..=radius {
        let mut next = BTreeSet::new();
        for g in &layer {
            for s in &gens {
                let h = model.multiply(g, s);
                if !seen.contains_key(&h) {
                    next.insert(h);
                }
            }
        }
        if next.is_empty() {
            complete = true;
            break;
        }
        for h in &next {
            seen.insert(h.clone(), r);
        }
        elements.extend(next.iter().cloned());
        lengths.extend(std::iter::repeat_n(r, next.len()));
        if elements.len() > cap {
            return Err(Error::Resource(format!(
                "Cayley ball exceeds {cap} elements at radius {r}"
            )));
        }
        layer = next.into_iter().collect();
    }
    if !complete {
        // the next layer may still be empty
        let grows = layer
            .iter()
            .any(|g| gens.iter().any(|s| !seen.contains_key(&model.multiply(g, s))));
        complete = !grows;
    }
    Ok((elements, lengths, complete))
}

/// Enumerates the ball of the given radius and its exact distance table.
pub fn cayley_ball(model: Arc<GroupModel>, radius: u64, caps: &Caps) -> Result<GroupBall> {
    if radius > caps.max_radius {
        return Err(Error::Resource(format!(
            "radius {radius} exceeds cap {}",
            caps.max_radius
        )));
    }
    if model.generators().is_empty() {
        return Err(Error::Domain("empty generating set".into()));
    }
    let (elements, word_length, complete) = bfs_layers(&model, radius, caps.max_points)?;
    let mut index = HashMap::with_capacity(elements.len());
    for (i, g) in elements.iter().enumerate() {
        if index.insert(g.clone(), i).is_some() {
            return Err(Error::Internal(format!(
                "canonical form collision at {}",
                model.label(g)
            )));
        }
    }
    let n = elements.len();

    // d(g,h) = |g⁻¹h| may reach 2·radius
    let far_lengths: Option<HashMap<Elem, u64>> =
        if model.closed_form_length(&elements[0]).is_some() {
            None
        } else {
            let (els, lens, _) =
                bfs_layers(&model, 2 * radius, caps.max_points.saturating_mul(16))?;
            Some(els.into_iter().zip(lens).collect())
        };
    let length_of = |e: &Elem| -> Result<u64> {
        match &far_lengths {
            None => Ok(model.closed_form_length(e).expect("closed form")),
            Some(map) => map.get(e).copied().ok_or_else(|| {
                Error::Internal(format!("{} missing from doubled ball", model.label(e)))
            }),
        }
    };
    let inverses: Vec<Elem> = elements.iter().map(|g| model.inverse(g)).collect();
    let rows: Vec<Vec<u64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| length_of(&model.multiply(&inverses[i], &elements[j])))
                .collect::<Result<Vec<u64>>>()
        })
        .collect::<Result<_>>()?;
    let table: Vec<u64> = rows.into_iter().flatten().collect();
    let labels: Vec<String> = elements.iter().map(|g| model.label(g)).collect();
    let mut space = FiniteMetricSpace::new(labels, 1, table)?;
    if !complete {
        space = space.with_validity(word_length.iter().map(|&l| radius - l).collect())?;
    }
    Ok(GroupBall {
        model,
        radius,
        elements,
        index,
        word_length,
        complete,
        space: Arc::new(space),
    })
}

impl GroupBall {
    pub fn model(&self) -> &Arc<GroupModel> {
        &self.model
    }

    pub fn radius(&self) -> u64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Elem] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &Elem {
        &self.elements[i]
    }

    pub fn index_of(&self, g: &Elem) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn word_length(&self, i: usize) -> u64 {
        self.word_length[i]
    }

    /// True when the ball is the whole (finite) group.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn label(&self, i: usize) -> &str {
        self.space.label(i)
    }

    /// Index of `g·h` when the product lies in the ball.
    pub fn product_index(&self, g: usize, h: usize) -> Option<usize> {
        self.index_of(&self.model.multiply(&self.elements[g], &self.elements[h]))
    }
}
