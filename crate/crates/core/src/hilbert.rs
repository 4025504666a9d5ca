//! Finitely supported vectors in `ℓ²` of a finite index set.
//!
//! A [`SparseVector`] keeps its support sorted and its coefficients as a
//! palette of distinct [`Scalar`] values plus a value id per entry. The
//! constructions in this crate produce vectors with very few distinct
//! coefficients (normalized indicators and their products), so inner
//! products reduce to counting co-occurring value pairs and a handful of
//! exact surd products.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{Real, Scalar, Q};

/// The index set of an `ℓ²` space. `location`, when present, sends each
/// index to a point of the space the field lives over (or, for families, to
/// an element of `𝒴`).
#[derive(Clone, Debug)]
pub struct Universe {
    tag: Arc<str>,
    labels: Vec<String>,
    lookup: HashMap<String, u32>,
    location: Option<Vec<usize>>,
}

impl Universe {
    pub fn new(tag: impl Into<Arc<str>>, labels: Vec<String>, location: Option<Vec<usize>>) -> Result<Self> {
        if labels.len() > u32::MAX as usize {
            return Err(Error::Resource("universe too large".into()));
        }
        if let Some(loc) = &location {
            if loc.len() != labels.len() {
                return Err(Error::Domain("location map length differs from universe".into()));
            }
        }
        let mut lookup = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if lookup.insert(l.clone(), i as u32).is_some() {
                return Err(Error::Domain(format!("duplicate universe index {l:?}")));
            }
        }
        Ok(Universe {
            tag: tag.into(),
            labels,
            lookup,
            location,
        })
    }

    pub fn tag(&self) -> &Arc<str> {
        &self.tag
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

    pub fn label(&self, k: u32) -> &str {
        &self.labels[k as usize]
    }

    pub fn index_of(&self, label: &str) -> Result<u32> {
        self.lookup
            .get(label)
            .copied()
            .ok_or_else(|| Error::Domain(format!("unknown index {label:?} in universe {}", self.tag)))
    }

    pub fn location(&self) -> Option<&[usize]> {
        self.location.as_deref()
    }

    pub fn is_located(&self) -> bool {
        self.location.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseVector {
    tag: Arc<str>,
    idx: Vec<u32>,
    vid: Vec<u32>,
    values: Vec<Scalar>,
}

impl SparseVector {
    /// Builds a vector from `(index, coefficient)` pairs. Zero coefficients
    /// are dropped; a repeated index is an error.
    pub fn from_entries(tag: Arc<str>, mut entries: Vec<(u32, Scalar)>) -> Result<Self> {
        entries.retain(|(_, c)| !c.is_zero());
        entries.sort_by_key(|(k, _)| *k);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Domain(format!("index {} given twice", w[0].0)));
        }
        let mut palette: HashMap<Scalar, u32> = HashMap::new();
        let mut values = Vec::new();
        let mut idx = Vec::with_capacity(entries.len());
        let mut vid = Vec::with_capacity(entries.len());
        for (k, c) in entries {
            let id = *palette.entry(c.clone()).or_insert_with(|| {
                values.push(c);
                (values.len() - 1) as u32
            });
            idx.push(k);
            vid.push(id);
        }
        Ok(SparseVector { tag, idx, vid, values })
    }

    pub fn zero(tag: Arc<str>) -> Self {
        SparseVector {
            tag,
            idx: Vec::new(),
            vid: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn delta(tag: Arc<str>, k: u32) -> Self {
        SparseVector {
            tag,
            idx: vec![k],
            vid: vec![0],
            values: vec![Scalar::one()],
        }
    }

    /// `1_A / √|A|`.
    pub fn uniform(tag: Arc<str>, support: &[u32]) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::Domain("uniform vector on an empty set".into()));
        }
        let mut idx = support.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if idx.len() != support.len() {
            return Err(Error::Domain("uniform vector support has repeats".into()));
        }
        let c = Scalar::sqrt_of(&Q::new(BigInt::one(), BigInt::from(idx.len())))?;
        let n = idx.len();
        Ok(SparseVector {
            tag,
            idx,
            vid: vec![0; n],
            values: vec![c],
        })
    }

    pub fn tag(&self) -> &Arc<str> {
        &self.tag
    }

    pub fn support(&self) -> &[u32] {
        &self.idx
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn is_zero(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, &Scalar)> + '_ {
        self.idx
            .iter()
            .zip(&self.vid)
            .map(move |(&k, &v)| (k, &self.values[v as usize]))
    }

    pub fn get(&self, k: u32) -> Scalar {
        match self.idx.binary_search(&k) {
            Ok(p) => self.values[self.vid[p] as usize].clone(),
            Err(_) => Scalar::zero(),
        }
    }

    /// Distinct coefficient values.
    pub fn palette(&self) -> &[Scalar] {
        &self.values
    }

    fn same_universe(&self, other: &SparseVector) -> Result<()> {
        if self.tag != other.tag {
            return Err(Error::Domain(format!(
                "universe mismatch: {} vs {}",
                self.tag, other.tag
            )));
        }
        Ok(())
    }

    /// `‖u‖²`, exact.
    pub fn norm_sq(&self) -> Q {
        self.weighted_sum(|_| true)
    }

    fn weighted_sum(&self, keep: impl Fn(u32) -> bool) -> Q {
        let mut counts = vec![0u64; self.values.len()];
        for (&k, &v) in self.idx.iter().zip(&self.vid) {
            if keep(k) {
                counts[v as usize] += 1;
            }
        }
        let mut total = Q::zero();
        for (c, val) in counts.iter().zip(&self.values) {
            if *c > 0 {
                total += val.square() * Q::from_integer(BigInt::from(*c));
            }
        }
        total
    }

    /// Counts co-occurring value pairs over the common support, restricted
    /// to indices where `keep` holds.
    fn cooccurrence(&self, other: &SparseVector, keep: impl Fn(u32) -> bool) -> Vec<((u32, u32), u64)> {
        let (ku, kv) = (self.values.len(), other.values.len());
        let dense = ku * kv <= 1 << 16;
        let mut grid = if dense { vec![0u64; ku * kv] } else { Vec::new() };
        let mut sparse: HashMap<(u32, u32), u64> = HashMap::new();
        let (mut i, mut j) = (0, 0);
        while i < self.idx.len() && j < other.idx.len() {
            let (a, b) = (self.idx[i], other.idx[j]);
            if a < b {
                i += 1;
            } else if b < a {
                j += 1;
            } else {
                if keep(a) {
                    let (p, q) = (self.vid[i], other.vid[j]);
                    if dense {
                        grid[p as usize * kv + q as usize] += 1;
                    } else {
                        *sparse.entry((p, q)).or_default() += 1;
                    }
                }
                i += 1;
                j += 1;
            }
        }
        let mut out: Vec<((u32, u32), u64)> = if dense {
            grid.iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(slot, &c)| (((slot / kv) as u32, (slot % kv) as u32), c))
                .collect()
        } else {
            sparse.into_iter().collect()
        };
        out.sort_unstable();
        out
    }

    /// Whether the supports meet.
    pub fn overlaps(&self, other: &SparseVector) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.idx.len() && j < other.idx.len() {
            match self.idx[i].cmp(&other.idx[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// `⟨u, v⟩`, exact.
    pub fn inner(&self, other: &SparseVector) -> Result<Real> {
        self.same_universe(other)?;
        let mut total = Real::zero();
        for ((p, q), c) in self.cooccurrence(other, |_| true) {
            let prod = self.values[p as usize].mul(&other.values[q as usize]);
            total.add_scalar(&prod.mul(&Scalar::rational(Q::from_integer(BigInt::from(c)))));
        }
        Ok(total)
    }

    /// `‖u − v‖² = ‖u‖² − 2⟨u,v⟩ + ‖v‖²`.
    pub fn dist_norm_sq(&self, other: &SparseVector) -> Result<Real> {
        let ip = self.inner(other)?;
        let mut sq = Real::from(self.norm_sq() + other.norm_sq());
        sq = sq.sub(&ip.mul_q(&Q::from_integer(BigInt::from(2))));
        Ok(sq)
    }

    /// `‖u − v‖` when its square is rational.
    pub fn dist_norm(&self, other: &SparseVector) -> Result<Real> {
        let sq = self.dist_norm_sq(other)?;
        match sq.as_rational() {
            Some(v) => Real::sqrt_of(&v),
            None => Err(Error::Refused(format!(
                "‖u−v‖² = {sq} is irrational; use the squared distance"
            ))),
        }
    }

    /// `Σ_{k ∉ allowed} |u(k)|²`.
    pub fn tail_mass(&self, allowed: impl Fn(u32) -> bool) -> Q {
        self.weighted_sum(|k| !allowed(k))
    }

    /// `Σ_{k ∉ allowed} |u(k) v(k)|`.
    pub fn mixed_tail(&self, other: &SparseVector, allowed: impl Fn(u32) -> bool) -> Result<Real> {
        self.same_universe(other)?;
        let mut total = Real::zero();
        for ((p, q), c) in self.cooccurrence(other, |k| !allowed(k)) {
            let prod = self.values[p as usize].abs().mul(&other.values[q as usize].abs());
            total.add_scalar(&prod.mul(&Scalar::rational(Q::from_integer(BigInt::from(c)))));
        }
        Ok(total)
    }

    /// Multiplies every coefficient by `s`.
    pub fn scaled(&self, s: &Scalar) -> SparseVector {
        if s.is_zero() {
            return SparseVector::zero(self.tag.clone());
        }
        SparseVector {
            tag: self.tag.clone(),
            idx: self.idx.clone(),
            vid: self.vid.clone(),
            values: self.values.iter().map(|v| v.mul(s)).collect(),
        }
    }

    /// Moves the vector to another universe through an index map; entries
    /// mapped to `None` are dropped.
    pub fn reindex(&self, tag: Arc<str>, f: impl Fn(u32) -> Option<u32>) -> Result<SparseVector> {
        let entries = self
            .entries()
            .filter_map(|(k, c)| f(k).map(|k2| (k2, c.clone())))
            .collect();
        SparseVector::from_entries(tag, entries)
    }

    /// Rescales to norm 1. Fails on the zero vector.
    pub fn normalized(&self) -> Result<SparseVector> {
        let n = self.norm_sq();
        if n.is_zero() {
            return Err(Error::Domain("cannot normalize the zero vector".into()));
        }
        if n.is_one() {
            return Ok(self.clone());
        }
        Ok(self.scaled(&Scalar::sqrt_of(&n.recip())?))
    }
}

/// A map from the points of a space to vectors over one universe.
#[derive(Clone, Debug)]
pub struct UnitField {
    universe: Arc<Universe>,
    vectors: Vec<SparseVector>,
}

impl UnitField {
    pub fn new(universe: Arc<Universe>, vectors: Vec<SparseVector>) -> Result<Self> {
        for (x, v) in vectors.iter().enumerate() {
            if v.tag() != universe.tag() {
                return Err(Error::Domain(format!(
                    "vector at point {x} lives over {} instead of {}",
                    v.tag(),
                    universe.tag()
                )));
            }
            if let Some(&k) = v.support().last() {
                if k as usize >= universe.len() {
                    return Err(Error::Domain(format!("vector at point {x} leaves its universe")));
                }
            }
        }
        Ok(UnitField { universe, vectors })
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn vectors(&self) -> &[SparseVector] {
        &self.vectors
    }

    pub fn vector(&self, x: usize) -> &SparseVector {
        &self.vectors[x]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Points whose vector is not exactly of norm 1, with `‖v‖²`.
    pub fn non_unit(&self) -> Vec<(usize, Q)> {
        self.vectors
            .iter()
            .enumerate()
            .filter_map(|(x, v)| {
                let n = v.norm_sq();
                (!n.is_one()).then_some((x, n))
            })
            .collect()
    }

    /// Inverted index: for each universe index, the points whose support
    /// contains it.
    pub fn support_index(&self) -> SupportIndex {
        let mut postings = vec![Vec::new(); self.universe.len()];
        for (x, v) in self.vectors.iter().enumerate() {
            for &k in v.support() {
                postings[k as usize].push(x as u32);
            }
        }
        SupportIndex {
            postings,
            points: self.vectors.len(),
        }
    }
}

pub struct SupportIndex {
    postings: Vec<Vec<u32>>,
    points: usize,
}

impl SupportIndex {
    /// Points `y` (sorted) whose vector's support meets `v`'s support. All
    /// other points have `⟨v, β_y⟩ = 0` exactly.
    pub fn partners(&self, v: &SparseVector) -> Vec<usize> {
        let mut mark = vec![false; self.points];
        for &k in v.support() {
            for &y in &self.postings[k as usize] {
                mark[y as usize] = true;
            }
        }
        mark.iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(y, _)| y)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q, qi};
    use proptest::prelude::*;

    fn tag() -> Arc<str> {
        Arc::from("U")
    }

    fn rat(entries: &[(u32, i64, i64)]) -> SparseVector {
        SparseVector::from_entries(
            tag(),
            entries.iter().map(|&(k, n, d)| (k, Scalar::rational(q(n, d)))).collect(),
        )
        .unwrap()
    }

    #[test]
    fn deltas() {
        let a = SparseVector::delta(tag(), 0);
        let b = SparseVector::delta(tag(), 1);
        assert_eq!(a.inner(&a).unwrap(), Real::one());
        assert!(a.inner(&b).unwrap().is_zero());
        assert_eq!(a.dist_norm(&b).unwrap(), Real::sqrt_of(&qi(2)).unwrap());
        assert!(a.dist_norm(&a).unwrap().is_zero());
    }

    #[test]
    fn uniform_vectors() {
        let u = SparseVector::uniform(tag(), &[0, 1, 2, 3]).unwrap();
        assert_eq!(u.inner(&u).unwrap(), Real::one());
        assert_eq!(u.tail_mass(|_| true), qi(0));
        assert_eq!(u.tail_mass(|_| false), qi(1));
        assert_eq!(u.tail_mass(|k| k < 2), q(1, 2));
        assert_eq!(u.mixed_tail(&u, |k| k == 0).unwrap(), Real::from(q(3, 4)));
        assert_eq!(u.mixed_tail(&u, |k| k < 2).unwrap(), Real::from(u.tail_mass(|k| k < 2)));
    }

    #[test]
    fn folner_overlap_is_nineteen_over_twenty_one() {
        let a: Vec<u32> = (0..21).collect();
        let b: Vec<u32> = (2..23).collect();
        let u = SparseVector::uniform(tag(), &a).unwrap();
        let v = SparseVector::uniform(tag(), &b).unwrap();
        assert_eq!(u.inner(&v).unwrap(), Real::from(q(19, 21)));
        assert_eq!(u.dist_norm_sq(&v).unwrap(), Real::from(q(4, 21)));
    }

    #[test]
    fn irrational_inner_product() {
        let u = SparseVector::uniform(tag(), &[0, 1]).unwrap();
        let v = SparseVector::uniform(tag(), &[1, 2, 3]).unwrap();
        // 1/√6
        let expect: Real = Scalar::sqrt_of(&q(1, 6)).unwrap().into();
        assert_eq!(u.inner(&v).unwrap(), expect);
        assert!(u.dist_norm(&v).is_err());
    }

    #[test]
    fn universe_mismatch() {
        let a = SparseVector::delta(tag(), 0);
        let b = SparseVector::delta(Arc::from("V"), 0);
        assert!(matches!(a.inner(&b), Err(Error::Domain(_))));
    }

    #[test]
    fn zeros_are_not_stored() {
        let v = rat(&[(0, 0, 1), (3, 1, 2)]);
        assert_eq!(v.support(), &[3]);
        assert!(SparseVector::from_entries(tag(), vec![(1, Scalar::one()), (1, Scalar::one())]).is_err());
    }

    #[test]
    fn support_index_partners() {
        let uni = Arc::new(Universe::new("U", (0..5).map(|i| i.to_string()).collect(), None).unwrap());
        let vs = vec![
            SparseVector::uniform(tag(), &[0, 1]).unwrap(),
            SparseVector::uniform(tag(), &[1, 2]).unwrap(),
            SparseVector::uniform(tag(), &[3, 4]).unwrap(),
        ];
        let f = UnitField::new(uni, vs).unwrap();
        let idx = f.support_index();
        assert_eq!(idx.partners(f.vector(0)), vec![0, 1]);
        assert_eq!(idx.partners(f.vector(2)), vec![2]);
        assert!(f.non_unit().is_empty());
    }

    fn small_vec() -> impl Strategy<Value = Vec<(u32, i64, i64)>> {
        prop::collection::btree_map(0u32..12, (-6i64..=6, 1i64..=4), 0..8)
            .prop_map(|m| m.into_iter().map(|(k, (n, d))| (k, n, d)).collect())
    }

    fn surd_vec() -> impl Strategy<Value = SparseVector> {
        prop::collection::btree_map(0u32..12, (-3i64..=3, 1i64..=3, 1i64..=7), 0..8).prop_map(|m| {
            SparseVector::from_entries(
                Arc::from("U"),
                m.into_iter()
                    .map(|(k, (n, d, r))| {
                        let root = Scalar::sqrt_of(&qi(r)).unwrap();
                        (k, root.mul(&Scalar::rational(q(n, d))))
                    })
                    .collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn cauchy_schwarz(u in surd_vec(), v in surd_vec()) {
            let ip = u.inner(&v).unwrap();
            // ⟨u,v⟩² ≤ ‖u‖²‖v‖²
            prop_assert!(ip.mul(&ip) <= Real::from(u.norm_sq() * v.norm_sq()));
        }

        #[test]
        fn polarization(u in small_vec(), v in small_vec()) {
            let (su, sv) = (rat(&u), rat(&v));
            let diff: Vec<(u32, Scalar)> = (0..12u32)
                .map(|k| (k, Scalar::rational(su.get(k).coeff() - sv.get(k).coeff())))
                .collect();
            let diff = SparseVector::from_entries(Arc::from("U"), diff).unwrap();
            prop_assert_eq!(su.dist_norm_sq(&sv).unwrap(), Real::from(diff.norm_sq()));
        }

        #[test]
        fn mixed_tail_bounded_by_root_tails(u in small_vec(), v in small_vec(), a in 0u32..12, b in 0u32..12) {
            let u = rat(&u).normalized();
            let v = rat(&v).normalized();
            if let (Ok(u), Ok(v)) = (u, v) {
                let allowed_u = |k: u32| k < a;
                let allowed_v = |k: u32| k < b;
                let mixed = u.mixed_tail(&v, |k| allowed_u(k) && allowed_v(k)).unwrap();
                let bound = Real::sqrt_of(&u.tail_mass(allowed_u)).unwrap()
                    .add(&Real::sqrt_of(&v.tail_mass(allowed_v)).unwrap());
                prop_assert!(mixed <= bound);
            }
        }
    }

    #[test]
    fn mixed_tail_can_exceed_the_sum_of_squared_tails() {
        // u = (3/5, 4/5), v = (0, 1), only index 0 allowed for u, everything for v
        let u = rat(&[(0, 3, 5), (1, 4, 5)]);
        let v = rat(&[(1, 1, 1)]);
        let mixed = u.mixed_tail(&v, |k| k == 0).unwrap();
        let additive = Real::from(u.tail_mass(|k| k == 0) + v.tail_mass(|_| true));
        assert_eq!(mixed, Real::from(q(4, 5)));
        assert!(mixed > additive);
    }
}
