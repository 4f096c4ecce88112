//! Numbers of the form `q / sqrt(m)` with `q` rational and `m` squarefree.
//!
//! Normalized convolution powers divide the lattice pitch by `sqrt(m)`. Keeping
//! that factor symbolic lets lattice arithmetic and quadratic costs stay exact.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::Rational;

/// Exact value `coeff / sqrt(radicand)`; `radicand` is squarefree and zero is
/// always stored with radicand 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Surd {
    coeff: Rational,
    radicand: u64,
}

/// Writes `m = s^2 * f` with `f` squarefree and returns `(s, f)`.
fn split_square(m: u64) -> (u64, u64) {
    let mut rem = m;
    let mut s = 1u64;
    let mut f = 1u64;
    let mut p = 2u64;
    while p.saturating_mul(p) <= rem {
        let mut e = 0u32;
        while rem % p == 0 {
            rem /= p;
            e += 1;
        }
        s *= p.pow(e / 2);
        if e % 2 == 1 {
            f *= p;
        }
        p += 1;
    }
    (s, f * rem)
}

impl Surd {
    pub fn new(coeff: Rational, radicand: u64) -> Result<Self> {
        if radicand == 0 {
            return Err(Error::InvalidMeasure("radicand must be positive".into()));
        }
        if coeff.is_zero() {
            return Ok(Self::zero());
        }
        let (s, f) = split_square(radicand);
        Ok(Self {
            coeff: coeff / Rational::from_integer(BigInt::from(s)),
            radicand: f,
        })
    }

    pub fn zero() -> Self {
        Self {
            coeff: Rational::zero(),
            radicand: 1,
        }
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn from_rational(q: Rational) -> Self {
        Self { coeff: q, radicand: 1 }
    }

    pub fn from_integer(x: i64) -> Self {
        Self::from_rational(Rational::from_integer(BigInt::from(x)))
    }

    /// `1 / sqrt(m)`.
    pub fn inv_sqrt(m: u64) -> Result<Self> {
        Self::new(Rational::from_integer(BigInt::from(1)), m)
    }

    pub fn coeff(&self) -> &Rational {
        &self.coeff
    }

    pub fn radicand(&self) -> u64 {
        self.radicand
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.radicand == 1
    }

    pub fn is_negative(&self) -> bool {
        self.coeff.is_negative()
    }

    pub fn abs(&self) -> Self {
        Self {
            coeff: self.coeff.abs(),
            radicand: self.radicand,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            coeff: -self.coeff.clone(),
            radicand: self.radicand,
        }
    }

    pub fn mul(&self, other: &Surd) -> Result<Surd> {
        let g = self.radicand.gcd(&other.radicand);
        let a = self.radicand / g;
        let b = other.radicand / g;
        let radicand = a.checked_mul(b).ok_or_else(|| {
            Error::Unsupported(format!(
                "radicand overflow multiplying sqrt({}) by sqrt({})",
                self.radicand, other.radicand
            ))
        })?;
        let coeff = &self.coeff * &other.coeff / Rational::from_integer(BigInt::from(g));
        if coeff.is_zero() {
            return Ok(Self::zero());
        }
        Ok(Self { coeff, radicand })
    }

    /// The rational `self^2`.
    pub fn square(&self) -> Rational {
        &self.coeff * &self.coeff / Rational::from_integer(BigInt::from(self.radicand))
    }

    /// Sum of two surds, defined when they share a radicand or one is zero.
    pub fn checked_add(&self, other: &Surd) -> Option<Surd> {
        if other.is_zero() {
            return Some(self.clone());
        }
        if self.is_zero() {
            return Some(other.clone());
        }
        if self.radicand != other.radicand {
            return None;
        }
        let coeff = &self.coeff + &other.coeff;
        if coeff.is_zero() {
            return Some(Self::zero());
        }
        Some(Self {
            coeff,
            radicand: self.radicand,
        })
    }

    pub fn to_f64(&self) -> f64 {
        self.coeff.to_f64().unwrap_or(f64::NAN) / (self.radicand as f64).sqrt()
    }
}

impl PartialOrd for Surd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Surd {
    fn cmp(&self, other: &Self) -> Ordering {
        // Compare signs first, then squares: x/sqrt(a) vs y/sqrt(b) for x, y >= 0
        // is x^2 b vs y^2 a.
        let sa = self.coeff.signum();
        let sb = other.coeff.signum();
        if sa != sb {
            return sa.cmp(&sb);
        }
        let lhs = &self.coeff * &self.coeff * Rational::from_integer(BigInt::from(other.radicand));
        let rhs = &other.coeff * &other.coeff * Rational::from_integer(BigInt::from(self.radicand));
        let mag = lhs.cmp(&rhs);
        if sa.is_negative() {
            mag.reverse()
        } else {
            mag
        }
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.radicand == 1 {
            write!(f, "{}", self.coeff)
        } else {
            write!(f, "({})/sqrt({})", self.coeff, self.radicand)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::frac;

    #[test]
    fn canonical_radicand() {
        let s = Surd::new(frac(3, 1), 12).unwrap();
        assert_eq!(s.radicand(), 3);
        assert_eq!(s.coeff(), &frac(3, 2));
        assert_eq!(Surd::new(frac(0, 1), 7).unwrap(), Surd::zero());
        assert_eq!(split_square(72), (6, 2));
        assert_eq!(split_square(1), (1, 1));
        assert_eq!(split_square(97), (1, 97));
    }

    #[test]
    fn products_and_squares() {
        let a = Surd::inv_sqrt(2).unwrap();
        let b = a.mul(&a).unwrap();
        assert_eq!(b, Surd::from_rational(frac(1, 2)));
        assert_eq!(a.square(), frac(1, 2));
        let c = Surd::inv_sqrt(6).unwrap().mul(&Surd::inv_sqrt(3).unwrap()).unwrap();
        assert_eq!(c, Surd::new(frac(1, 3), 2).unwrap());
        assert!((c.to_f64() - 1.0 / 18f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ordering_across_radicands() {
        let a = Surd::inv_sqrt(2).unwrap();
        let b = Surd::from_rational(frac(7, 10));
        assert!(a > b);
        assert!(a.neg() < b.neg());
        assert!(Surd::zero() < a);
        assert!(a.neg() < Surd::zero());
    }

    #[test]
    fn addition_requires_shared_radicand() {
        let a = Surd::inv_sqrt(2).unwrap();
        assert_eq!(a.checked_add(&a).unwrap(), Surd::new(frac(2, 1), 2).unwrap());
        assert!(a.checked_add(&Surd::one()).is_none());
        assert_eq!(a.checked_add(&Surd::zero()).unwrap(), a);
    }
}
