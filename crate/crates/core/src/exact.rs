//! Exact arithmetic for the coefficient field.
//!
//! Unit vectors such as `1_A / √|A|` have irrational coefficients, so a
//! coefficient is stored as `r·√m` with `r` rational and `m` a squarefree
//! integer ([`Scalar`]). Products of scalars stay scalars. Sums of scalars
//! (inner products, mixed tails) are kept in the canonical form
//! `Σ c_m √m` ([`Real`]); square roots of distinct squarefree integers are
//! linearly independent over ℚ, so the canonical form is zero iff the value
//! is zero, and signs are decided exactly.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Formats a rational as `p/q` (always with a denominator).
pub fn fmt_q(v: &Q) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Q::new(n, d))
        }
        None => Ok(Q::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

/// Smallest integer ≥ v.
pub fn ceil_q(v: &Q) -> BigInt {
    v.ceil().to_integer()
}

/// serde adapter for rationals as `"p/q"` strings.
pub mod qser {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).map_err(serde::de::Error::custom)
    }
}

const TRIAL_LIMIT: u128 = 2_000_000;

/// Writes `n = s² · m` with `m` squarefree.
fn squarefree_split(n: &BigUint) -> Result<(BigUint, u128)> {
    let mut rem = n
        .to_u128()
        .ok_or_else(|| Error::Resource(format!("radicand {n} exceeds 128 bits")))?;
    if rem == 0 {
        return Ok((BigUint::zero(), 1));
    }
    let mut square = BigUint::one();
    let mut free: u128 = 1;
    let mut p: u128 = 2;
    while p <= TRIAL_LIMIT && p * p <= rem {
        if rem % p == 0 {
            let mut e = 0u32;
            while rem % p == 0 {
                rem /= p;
                e += 1;
            }
            square *= BigUint::from(p).pow(e / 2);
            if e % 2 == 1 {
                free *= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rem > 1 {
        let r = BigUint::from(rem).sqrt();
        if &r * &r == BigUint::from(rem) {
            square *= r;
        } else if p * p > rem || rem < TRIAL_LIMIT.pow(3) {
            // either prime, or a product of two distinct primes above the
            // trial limit; squarefree in both cases
            free = free
                .checked_mul(rem)
                .ok_or_else(|| Error::Resource("radicand overflow".into()))?;
        } else {
            return Err(Error::Resource(format!(
                "cannot factor radicand cofactor {rem}"
            )));
        }
    }
    Ok((square, free))
}

/// `r · √m` with `m` squarefree. Zero is stored as `0 · √1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Scalar {
    coeff: Q,
    radicand: u128,
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar {
            coeff: Q::zero(),
            radicand: 1,
        }
    }

    pub fn one() -> Self {
        Self::rational(Q::one())
    }

    pub fn rational(coeff: Q) -> Self {
        Scalar { coeff, radicand: 1 }
    }

    /// The non-negative square root of a non-negative rational.
    pub fn sqrt_of(v: &Q) -> Result<Self> {
        if v.is_negative() {
            return Err(Error::Domain(format!("square root of {}", fmt_q(v))));
        }
        if v.is_zero() {
            return Ok(Self::zero());
        }
        // √(a/b) = √(ab) / b
        let a = v.numer().magnitude();
        let b = v.denom().magnitude();
        let (s, m) = squarefree_split(&(a * b))?;
        let coeff = Q::new(
            BigInt::from_biguint(Sign::Plus, s),
            BigInt::from_biguint(Sign::Plus, b.clone()),
        );
        Ok(Scalar { coeff, radicand: m })
    }

    pub fn coeff(&self) -> &Q {
        &self.coeff
    }

    pub fn radicand(&self) -> u128 {
        self.radicand
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    /// The exact square, always rational.
    pub fn square(&self) -> Q {
        &self.coeff * &self.coeff * Q::from_integer(BigInt::from(self.radicand))
    }

    pub fn abs(&self) -> Self {
        Scalar {
            coeff: self.coeff.abs(),
            radicand: self.radicand,
        }
    }

    pub fn neg(&self) -> Self {
        Scalar {
            coeff: -&self.coeff,
            radicand: self.radicand,
        }
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        if self.is_zero() || other.is_zero() {
            return Scalar::zero();
        }
        let g = self.radicand.gcd(&other.radicand);
        let m = (self.radicand / g)
            .checked_mul(other.radicand / g)
            .expect("radicand overflow in scalar product");
        Scalar {
            coeff: &self.coeff * &other.coeff * Q::from_integer(BigInt::from(g)),
            radicand: m,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.coeff.to_f64().unwrap_or(f64::NAN) * (self.radicand as f64).sqrt()
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.radicand == 1 {
            write!(f, "{}", fmt_q(&self.coeff))
        } else {
            write!(f, "{}*sqrt({})", fmt_q(&self.coeff), self.radicand)
        }
    }
}

impl FromStr for Scalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("sqrt(") {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| Error::Parse(format!("bad scalar {s:?}")))?;
            return Scalar::sqrt_of(&parse_q(inner)?);
        }
        match s.split_once("*sqrt(") {
            Some((c, rest)) => {
                let inner = rest
                    .strip_suffix(')')
                    .ok_or_else(|| Error::Parse(format!("bad scalar {s:?}")))?;
                let root = Scalar::sqrt_of(&parse_q(inner)?)?;
                Ok(Scalar::rational(parse_q(c)?).mul(&root))
            }
            None => Ok(Scalar::rational(parse_q(s)?)),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite sum `Σ c_m √m` over distinct squarefree `m`, in canonical form.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Real {
    terms: BTreeMap<u128, Q>,
}

impl Real {
    pub fn zero() -> Self {
        Real::default()
    }

    pub fn one() -> Self {
        Real::from(Q::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_scalar(&mut self, s: &Scalar) {
        if s.is_zero() {
            return;
        }
        let slot = self.terms.entry(s.radicand).or_insert_with(Q::zero);
        *slot += &s.coeff;
        if slot.is_zero() {
            self.terms.remove(&s.radicand);
        }
    }

    pub fn add_q(&mut self, v: &Q) {
        self.add_scalar(&Scalar::rational(v.clone()));
    }

    pub fn add(&self, other: &Real) -> Real {
        let mut out = self.clone();
        for (&m, c) in &other.terms {
            out.add_scalar(&Scalar {
                coeff: c.clone(),
                radicand: m,
            });
        }
        out
    }

    pub fn neg(&self) -> Real {
        Real {
            terms: self.terms.iter().map(|(&m, c)| (m, -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Real) -> Real {
        self.add(&other.neg())
    }

    pub fn mul_q(&self, v: &Q) -> Real {
        if v.is_zero() {
            return Real::zero();
        }
        Real {
            terms: self.terms.iter().map(|(&m, c)| (m, c * v)).collect(),
        }
    }

    pub fn mul(&self, other: &Real) -> Real {
        let mut out = Real::zero();
        for (&a, ca) in &self.terms {
            for (&b, cb) in &other.terms {
                let sa = Scalar {
                    coeff: ca.clone(),
                    radicand: a,
                };
                let sb = Scalar {
                    coeff: cb.clone(),
                    radicand: b,
                };
                out.add_scalar(&sa.mul(&sb));
            }
        }
        out
    }

    /// The value as a rational, when it is one.
    pub fn as_rational(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => self.terms.get(&1).cloned(),
            _ => None,
        }
    }

    pub fn signum(&self) -> Ordering {
        let mut iter = self.terms.iter();
        let Some((_, first)) = iter.next() else {
            return Ordering::Equal;
        };
        let first_sign = first.is_positive();
        if self.terms.values().all(|c| c.is_positive() == first_sign) {
            return if first_sign {
                Ordering::Greater
            } else {
                Ordering::Less
            };
        }
        if self.terms.len() == 2 {
            // a√m + b√n with opposite signs: compare a²m with b²n
            let mut it = self.terms.iter();
            let (&m, a) = it.next().unwrap();
            let (&n, b) = it.next().unwrap();
            let lhs = a * a * Q::from_integer(BigInt::from(m));
            let rhs = b * b * Q::from_integer(BigInt::from(n));
            return match lhs.cmp(&rhs) {
                Ordering::Greater => sign_of(a),
                Ordering::Less => sign_of(b),
                Ordering::Equal => unreachable!("distinct squarefree radicands"),
            };
        }
        self.signum_by_refinement()
    }

    fn signum_by_refinement(&self) -> Ordering {
        let mut bits: u64 = 32;
        loop {
            let (lo, hi) = self.enclosure(bits);
            if lo.is_positive() {
                return Ordering::Greater;
            }
            if hi.is_negative() {
                return Ordering::Less;
            }
            bits *= 2;
        }
    }

    /// Rational bounds `lo ≤ self ≤ hi` from `bits`-bit square root brackets.
    fn enclosure(&self, bits: u64) -> (Q, Q) {
        let scale = BigUint::one() << bits;
        let denom = BigInt::from_biguint(Sign::Plus, scale.clone());
        let mut lo = Q::zero();
        let mut hi = Q::zero();
        for (&m, c) in &self.terms {
            let (r_lo, r_hi) = if m == 1 {
                (Q::one(), Q::one())
            } else {
                let s = (BigUint::from(m) * &scale * &scale).sqrt();
                let s = BigInt::from_biguint(Sign::Plus, s);
                (
                    Q::new(s.clone(), denom.clone()),
                    Q::new(s + 1, denom.clone()),
                )
            };
            if c.is_positive() {
                lo += c * &r_lo;
                hi += c * &r_hi;
            } else {
                lo += c * &r_hi;
                hi += c * &r_lo;
            }
        }
        (lo, hi)
    }

    /// A rational upper bound within `2^-bits` relative slack of the value.
    pub fn upper_rational(&self, bits: u64) -> Q {
        if let Some(v) = self.as_rational() {
            return v;
        }
        self.enclosure(bits).1
    }

    pub fn abs(&self) -> Real {
        if self.signum() == Ordering::Less {
            self.neg()
        } else {
            self.clone()
        }
    }

    pub fn max(self, other: Real) -> Real {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Real) -> Real {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(&m, c)| c.to_f64().unwrap_or(f64::NAN) * (m as f64).sqrt())
            .sum()
    }

    /// Square root of a rational, as a real.
    pub fn sqrt_of(v: &Q) -> Result<Real> {
        Ok(Real::from(Scalar::sqrt_of(v)?))
    }

    /// `√v` exactly when `v` is rational, otherwise a rational upper bound
    /// with denominator `2³²`.
    pub fn sqrt_upper(&self) -> Result<Real> {
        if let Some(q) = self.as_rational() {
            return Real::sqrt_of(&q);
        }
        let u = self.upper_rational(64);
        if u.is_negative() {
            return Err(Error::Domain(format!("square root of {self}")));
        }
        let scale = BigInt::one() << 64u32;
        let scaled = (u * Q::from_integer(scale)).ceil().to_integer();
        let root = scaled.magnitude().sqrt() + BigUint::one();
        Ok(Real::from(Q::new(
            BigInt::from_biguint(Sign::Plus, root),
            BigInt::one() << 32u32,
        )))
    }
}

fn sign_of(v: &Q) -> Ordering {
    if v.is_positive() {
        Ordering::Greater
    } else if v.is_negative() {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

impl From<Q> for Real {
    fn from(v: Q) -> Self {
        let mut r = Real::zero();
        r.add_q(&v);
        r
    }
}

impl From<Scalar> for Real {
    fn from(s: Scalar) -> Self {
        let mut r = Real::zero();
        r.add_scalar(&s);
        r
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sub(other).signum()
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0/1");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(&m, c)| {
                Scalar {
                    coeff: c.clone(),
                    radicand: m,
                }
                .to_string()
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl FromStr for Real {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Real::zero();
        for part in s.split(" + ") {
            out.add_scalar(&part.parse::<Scalar>()?);
        }
        Ok(out)
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_non_square_is_surd() {
        let s = Scalar::sqrt_of(&q(1, 21)).unwrap();
        assert_eq!(s.radicand(), 21);
        assert_eq!(s.coeff(), &q(1, 21));
        assert_eq!(s.square(), q(1, 21));
    }

    #[test]
    fn sqrt_of_square_is_rational() {
        let s = Scalar::sqrt_of(&q(4, 121)).unwrap();
        assert_eq!(s, Scalar::rational(q(2, 11)));
    }

    #[test]
    fn product_of_equal_surds_is_rational() {
        let a = Scalar::sqrt_of(&q(1, 21)).unwrap();
        assert_eq!(a.mul(&a), Scalar::rational(q(1, 21)));
        let b = Scalar::sqrt_of(&q(1, 6)).unwrap();
        let c = Scalar::sqrt_of(&q(1, 10)).unwrap();
        // √(1/60) = √15 / 30
        let bc = b.mul(&c);
        assert_eq!(bc.radicand(), 15);
        assert_eq!(bc.coeff(), &q(1, 30));
    }

    #[test]
    fn signs_of_mixed_sums() {
        // 1 - √(21/31) > 0
        let mut r = Real::one();
        r.add_scalar(&Scalar::sqrt_of(&q(21, 31)).unwrap().neg());
        assert_eq!(r.signum(), Ordering::Greater);
        // √2 + √3 - √10 < 0  (3.146 < 3.162)
        let mut t = Real::zero();
        t.add_scalar(&Scalar::sqrt_of(&qi(2)).unwrap());
        t.add_scalar(&Scalar::sqrt_of(&qi(3)).unwrap());
        t.add_scalar(&Scalar::sqrt_of(&qi(10)).unwrap().neg());
        assert_eq!(t.signum(), Ordering::Less);
    }

    #[test]
    fn display_roundtrip() {
        let mut r = Real::from(q(-3, 7));
        r.add_scalar(&Scalar::sqrt_of(&q(2, 9)).unwrap());
        let text = r.to_string();
        assert_eq!(text, "-3/7 + 1/3*sqrt(2)");
        assert_eq!(text.parse::<Real>().unwrap(), r);
        assert_eq!(Real::zero().to_string(), "0/1");
    }

    #[test]
    fn squarefree_split_large_prime_pair() {
        let n = BigUint::from(1_000_003u64) * BigUint::from(999_983u64);
        let (s, m) = squarefree_split(&n).unwrap();
        assert_eq!(s, BigUint::one());
        assert_eq!(m, 1_000_003u128 * 999_983);
    }
}
