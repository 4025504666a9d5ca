//! Families of set maps `φ_i : X → Y_i` and their fibers.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exact::Q;
use crate::metric::group::GroupBall;
use crate::metric::quotient::CosetSpace;
use crate::metric::space::FiniteMetricSpace;

#[derive(Clone, Debug)]
pub struct Component {
    pub label: String,
    pub codomain: Vec<String>,
    /// `map[x]` indexes `codomain`.
    pub map: Vec<usize>,
}

/// A finite family of set maps with the disjoint union `𝒴 = ⊔ Y_i`
/// flattened to `0..|𝒴|`.
#[derive(Clone, Debug)]
pub struct SetMapFamily {
    domain: Arc<FiniteMetricSpace>,
    components: Vec<Component>,
    offsets: Vec<usize>,
    labels: Vec<String>,
    fibers: Vec<Vec<usize>>,
    /// `|X| × |𝒴|` raw distances from points to fibers; `u64::MAX` for empty fibers.
    fiber_dist: Vec<u64>,
}

impl SetMapFamily {
    pub fn new(domain: Arc<FiniteMetricSpace>, components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Domain("a set-map family needs a component".into()));
        }
        let n = domain.len();
        let mut offsets = Vec::with_capacity(components.len());
        let mut labels = Vec::new();
        let single = components.len() == 1;
        for c in &components {
            if c.map.len() != n {
                return Err(Error::Domain(format!("map {} is not total on X", c.label)));
            }
            if let Some(&bad) = c.map.iter().find(|&&w| w >= c.codomain.len()) {
                return Err(Error::Domain(format!(
                    "map {} sends a point outside its codomain (index {bad})",
                    c.label
                )));
            }
            offsets.push(labels.len());
            for w in &c.codomain {
                labels.push(if single {
                    w.clone()
                } else {
                    format!("{}:{}", c.label, w)
                });
            }
        }
        let m = labels.len();
        let mut fibers = vec![Vec::new(); m];
        for (c, &off) in components.iter().zip(&offsets) {
            for (x, &w) in c.map.iter().enumerate() {
                fibers[off + w].push(x);
            }
        }
        let mut fiber_dist = vec![u64::MAX; n * m];
        for (w, fiber) in fibers.iter().enumerate() {
            for &s in fiber {
                for (x, &d) in domain.row(s).iter().enumerate() {
                    let slot = &mut fiber_dist[x * m + w];
                    if d < *slot {
                        *slot = d;
                    }
                }
            }
        }
        Ok(SetMapFamily {
            domain,
            components,
            offsets,
            labels,
            fibers,
            fiber_dist,
        })
    }

    /// `{Id : X → X}`.
    pub fn identity(domain: Arc<FiniteMetricSpace>) -> Result<Self> {
        let comp = Component {
            label: "id".into(),
            codomain: domain.labels().to_vec(),
            map: (0..domain.len()).collect(),
        };
        Self::new(domain, vec![comp])
    }

    /// The quotient map `π : G → G/H` on a window.
    pub fn quotient_map(ball: &GroupBall, cosets: &CosetSpace) -> Result<Self> {
        let comp = Component {
            label: "pi".into(),
            codomain: cosets.space().labels().to_vec(),
            map: cosets.coset_map().to_vec(),
        };
        Self::new(ball.space().clone(), vec![comp])
    }

    /// Projection of a lattice window onto one coordinate; `Y` is the set of
    /// values taken, sorted.
    pub fn projection(ball: &GroupBall, coord: usize) -> Result<Self> {
        let values: Vec<i64> = ball
            .elements()
            .iter()
            .map(|g| {
                g.0.get(coord)
                    .copied()
                    .ok_or_else(|| Error::Domain(format!("no coordinate {coord}")))
            })
            .collect::<Result<_>>()?;
        let mut codomain: Vec<i64> = values.clone();
        codomain.sort_unstable();
        codomain.dedup();
        let map = values
            .iter()
            .map(|v| codomain.binary_search(v).expect("value present"))
            .collect();
        let comp = Component {
            label: format!("p{coord}"),
            codomain: codomain.iter().map(|v| v.to_string()).collect(),
            map,
        };
        Self::new(ball.space().clone(), vec![comp])
    }

    pub fn domain(&self) -> &Arc<FiniteMetricSpace> {
        &self.domain
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Size of `𝒴`.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, w: usize) -> &str {
        &self.labels[w]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Domain(format!("unknown element of 𝒴: {label:?}")))
    }

    /// Flat index of `(i, w)`.
    pub fn flat(&self, i: usize, w: usize) -> usize {
        self.offsets[i] + w
    }

    /// Component of a flat index.
    pub fn component_of(&self, w: usize) -> usize {
        self.offsets.partition_point(|&o| o <= w) - 1
    }

    /// `φ_i(x)` as a flat index.
    pub fn image(&self, i: usize, x: usize) -> usize {
        self.offsets[i] + self.components[i].map[x]
    }

    pub fn fiber(&self, w: usize) -> &[usize] {
        &self.fibers[w]
    }

    pub fn fibers(&self) -> &[Vec<usize>] {
        &self.fibers
    }

    /// Raw `d(x, φ_i⁻¹(w))`; `u64::MAX` for an empty fiber.
    #[inline]
    pub fn fiber_dist_raw(&self, x: usize, w: usize) -> u64 {
        self.fiber_dist[x * self.labels.len() + w]
    }

    pub fn dist_to_fiber(&self, x: usize, w: usize) -> Result<Q> {
        if x >= self.domain.len() || w >= self.len() {
            return Err(Error::Domain(format!("bad point/fiber index ({x}, {w})")));
        }
        if self.fibers[w].is_empty() {
            return Err(Error::Domain(format!("empty fiber over {}", self.labels[w])));
        }
        Ok(self.domain.raw_to_q(self.fiber_dist_raw(x, w)))
    }

    /// Nearest fiber point, ties to the smallest point index.
    pub fn nearest_in_fiber(&self, x: usize, w: usize) -> Option<usize> {
        let row = self.domain.row(x);
        self.fibers[w].iter().copied().min_by_key(|&s| (row[s], s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Caps;
    use crate::exact::qi;
    use crate::metric::group::{cayley_ball, Elem, GroupModel};

    #[test]
    fn projection_fiber_distances() {
        let b = cayley_ball(Arc::new(GroupModel::Lattice { rank: 2 }), 10, &Caps::default()).unwrap();
        let fam = SetMapFamily::projection(&b, 0).unwrap();
        let x = b.index_of(&Elem(vec![3, 0])).unwrap();
        let w5 = fam.index_of("5").unwrap();
        assert_eq!(fam.dist_to_fiber(x, w5).unwrap(), qi(2));
        let y = b.index_of(&Elem(vec![0, 4])).unwrap();
        let w0 = fam.index_of("0").unwrap();
        assert_eq!(fam.dist_to_fiber(y, w0).unwrap(), qi(0));
        // fibers partition X
        let total: usize = fam.fibers().iter().map(|f| f.len()).sum();
        assert_eq!(total, b.len());
    }

    #[test]
    fn empty_fiber_is_a_domain_error() {
        let space = Arc::new(FiniteMetricSpace::new(vec!["p".into(), "q".into()], 1, vec![0, 1, 1, 0]).unwrap());
        let comp = Component {
            label: "f".into(),
            codomain: vec!["a".into(), "b".into()],
            map: vec![0, 0],
        };
        let fam = SetMapFamily::new(space, vec![comp]).unwrap();
        assert!(fam.dist_to_fiber(0, 1).is_err());
        assert_eq!(fam.nearest_in_fiber(1, 0), Some(1));
    }
}
