use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{fmt_q, parse_q, Q};

/// Spaces up to this size get an exhaustive triangle-inequality check.
pub const EXHAUSTIVE_TRIANGLE_LIMIT: usize = 500;

/// A finite metric space with an exact distance table.
///
/// Distances are `table[i·n + j] / denom`. Graph metrics have `denom = 1`.
/// A space carved out of an infinite one (a Cayley ball) also carries a
/// validity radius per point: the largest `S` such that the ambient ball
/// `B_S(x)` lies entirely inside the stored window.
#[derive(Clone, Debug)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    lookup: HashMap<String, usize>,
    denom: u64,
    table: Vec<u64>,
    validity: Option<Vec<u64>>,
}

impl FiniteMetricSpace {
    pub fn new(labels: Vec<String>, denom: u64, table: Vec<u64>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Domain("empty metric space".into()));
        }
        if denom == 0 {
            return Err(Error::Domain("zero distance denominator".into()));
        }
        if table.len() != n * n {
            return Err(Error::Domain(format!(
                "distance table has {} entries, expected {}",
                table.len(),
                n * n
            )));
        }
        let mut lookup = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if lookup.insert(l.clone(), i).is_some() {
                return Err(Error::Domain(format!("duplicate point id {l:?}")));
            }
        }
        for i in 0..n {
            if table[i * n + i] != 0 {
                return Err(Error::Domain(format!("d({0},{0}) ≠ 0", labels[i])));
            }
            for j in 0..i {
                if table[i * n + j] != table[j * n + i] {
                    return Err(Error::Domain(format!(
                        "asymmetric distance between {} and {}",
                        labels[i], labels[j]
                    )));
                }
                if table[i * n + j] == 0 {
                    return Err(Error::Domain(format!(
                        "distinct points {} and {} at distance 0",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        Ok(FiniteMetricSpace {
            labels,
            lookup,
            denom,
            table,
            validity: None,
        })
    }

    /// Builds a space from strict lower-triangular rows of rationals.
    pub fn from_lower_triangle(labels: Vec<String>, rows: &[Vec<Q>]) -> Result<Self> {
        let n = labels.len();
        if rows.len() != n || rows.iter().enumerate().any(|(i, r)| r.len() != i) {
            return Err(Error::Domain(
                "dist must be a strict lower triangle with one row per point".into(),
            ));
        }
        let mut denom = BigInt::from(1);
        for v in rows.iter().flatten() {
            if v.is_negative() {
                return Err(Error::Domain(format!("negative distance {}", fmt_q(v))));
            }
            denom = denom.lcm(v.denom());
        }
        let denom_u = denom
            .to_u64()
            .ok_or_else(|| Error::Resource("distance denominators too large".into()))?;
        let mut table = vec![0u64; n * n];
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let raw = (v * Q::from_integer(denom.clone()))
                    .to_integer()
                    .to_u64()
                    .ok_or_else(|| Error::Resource("distance too large".into()))?;
                table[i * n + j] = raw;
                table[j * n + i] = raw;
            }
        }
        Self::new(labels, denom_u, table)
    }

    pub fn with_validity(mut self, radii: Vec<u64>) -> Result<Self> {
        if radii.len() != self.len() {
            return Err(Error::Domain("validity radii length mismatch".into()));
        }
        self.validity = Some(radii);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.lookup
            .get(label)
            .copied()
            .ok_or_else(|| Error::Domain(format!("unknown point id {label:?}")))
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    #[inline]
    pub fn raw(&self, x: usize, y: usize) -> u64 {
        self.table[x * self.labels.len() + y]
    }

    pub fn row(&self, x: usize) -> &[u64] {
        let n = self.labels.len();
        &self.table[x * n..(x + 1) * n]
    }

    pub fn dist(&self, x: usize, y: usize) -> Q {
        Q::new(BigInt::from(self.raw(x, y)), BigInt::from(self.denom))
    }

    pub fn raw_to_q(&self, raw: u64) -> Q {
        Q::new(BigInt::from(raw), BigInt::from(self.denom))
    }

    /// Largest raw distance `≤ r`, or `None` when `r < 0`.
    pub fn raw_at_most(&self, r: &Q) -> Option<u64> {
        if r.is_negative() {
            return None;
        }
        Some(
            (r * Q::from_integer(BigInt::from(self.denom)))
                .floor()
                .to_integer()
                .to_u64()
                .unwrap_or(u64::MAX),
        )
    }

    /// Smallest raw distance `≥ r`.
    pub fn raw_at_least(&self, r: &Q) -> u64 {
        if r.is_negative() || r.is_zero() {
            return 0;
        }
        (r * Q::from_integer(BigInt::from(self.denom)))
            .ceil()
            .to_integer()
            .to_u64()
            .unwrap_or(u64::MAX)
    }

    /// The closed ball `{ y : d(x,y) ≤ S }`.
    pub fn ball(&self, x: usize, s: &Q) -> Result<Vec<usize>> {
        if x >= self.len() {
            return Err(Error::Domain(format!("unknown point index {x}")));
        }
        Ok(match self.raw_at_most(s) {
            None => Vec::new(),
            Some(r) => self.ball_raw(x, r).collect(),
        })
    }

    pub fn ball_raw(&self, x: usize, r: u64) -> impl Iterator<Item = usize> + '_ {
        self.row(x)
            .iter()
            .enumerate()
            .filter(move |(_, &d)| d <= r)
            .map(|(y, _)| y)
    }

    /// Raw validity radius, `None` when the space is not a window.
    pub fn validity(&self, x: usize) -> Option<u64> {
        self.validity.as_ref().map(|v| v[x])
    }

    pub fn is_window(&self) -> bool {
        self.validity.is_some()
    }

    pub fn validity_radii(&self) -> Option<&[u64]> {
        self.validity.as_deref()
    }

    /// Whether the ambient ball of raw radius `r` around `x` is in the window.
    pub fn valid_at(&self, x: usize, r: u64) -> bool {
        self.validity(x).is_none_or(|v| v >= r)
    }

    pub fn diameter_raw(&self) -> u64 {
        self.table.iter().copied().max().unwrap_or(0)
    }

    pub fn min_gap_raw(&self) -> Option<u64> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| self.raw(i, j))
            .min()
    }

    /// Sorted distinct raw distances.
    pub fn distance_values(&self) -> Vec<u64> {
        let set: BTreeSet<u64> = self.table.iter().copied().collect();
        set.into_iter().collect()
    }

    /// Smallest stored distance strictly greater than `raw`.
    pub fn next_distance_above(&self, raw: u64) -> Option<u64> {
        self.table.iter().copied().filter(|&d| d > raw).min()
    }

    /// Restriction to `points`, in the given order.
    pub fn subspace(&self, points: &[usize]) -> Result<FiniteMetricSpace> {
        let labels: Vec<String> = points.iter().map(|&p| self.labels[p].clone()).collect();
        let m = points.len();
        let mut table = vec![0u64; m * m];
        for (a, &p) in points.iter().enumerate() {
            for (b, &r) in points.iter().enumerate() {
                table[a * m + b] = self.raw(p, r);
            }
        }
        let mut sub = FiniteMetricSpace::new(labels, self.denom, table)?;
        if let Some(v) = &self.validity {
            sub.validity = Some(points.iter().map(|&p| v[p]).collect());
        }
        Ok(sub)
    }

    /// Checks the metric axioms, uniform discreteness and reports ball sizes.
    pub fn check(&self, seed: u64) -> MetricCheck {
        let n = self.len();
        let mut violations = Vec::new();
        let exhaustive = n <= EXHAUSTIVE_TRIANGLE_LIMIT;
        let mut triples = 0u64;
        let check_triple = |x: usize, y: usize, z: usize, violations: &mut Vec<String>| {
            if self.raw(x, z) > self.raw(x, y) + self.raw(y, z) && violations.len() < 16 {
                violations.push(format!(
                    "triangle: d({},{}) > d({},{}) + d({},{})",
                    self.labels[x],
                    self.labels[z],
                    self.labels[x],
                    self.labels[y],
                    self.labels[y],
                    self.labels[z]
                ));
            }
        };
        if exhaustive {
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        check_triple(x, y, z, &mut violations);
                        triples += 1;
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..2_000_000 {
                let (x, y, z) = (
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                );
                check_triple(x, y, z, &mut violations);
                triples += 1;
            }
        }
        let min_gap = self.min_gap_raw().map(|g| self.raw_to_q(g));
        let uniformly_discrete = self.min_gap_raw().is_none_or(|g| g >= self.denom);
        let mut ball_sizes = BTreeMap::new();
        let diam_int = self.diameter_raw().div_ceil(self.denom);
        for r in 0..=diam_int {
            let raw = r * self.denom;
            let max = (0..n).map(|x| self.ball_raw(x, raw).count()).max().unwrap_or(0);
            ball_sizes.insert(r, max);
        }
        MetricCheck {
            points: n,
            triangle_exhaustive: exhaustive,
            triples_checked: triples,
            seed,
            violations,
            min_gap: min_gap.map(|g| fmt_q(&g)),
            uniformly_discrete,
            max_ball_cardinality: ball_sizes,
        }
    }

    pub fn to_json(&self) -> SpaceJson {
        let n = self.len();
        SpaceJson {
            points: self.labels.clone(),
            dist: (0..n)
                .map(|i| (0..i).map(|j| fmt_q(&self.dist(i, j))).collect())
                .collect(),
        }
    }

    pub fn from_json(json: &SpaceJson) -> Result<Self> {
        let rows = json
            .dist
            .iter()
            .map(|r| r.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_lower_triangle(json.points.clone(), &rows)
    }
}

/// Inline JSON space: point ids and the strict lower triangle of `"p/q"` distances.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpaceJson {
    pub points: Vec<String>,
    pub dist: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricCheck {
    pub points: usize,
    pub triangle_exhaustive: bool,
    pub triples_checked: u64,
    pub seed: u64,
    pub violations: Vec<String>,
    pub min_gap: Option<String>,
    pub uniformly_discrete: bool,
    pub max_ball_cardinality: BTreeMap<u64, usize>,
}

impl MetricCheck {
    pub fn ok(&self) -> bool {
        self.violations.is_empty() && self.uniformly_discrete
    }
}
