//! Exact rational helpers with fast paths for dyadic denominators.
//!
//! Almost every weight in this crate is of the form `k / 2^e`. Reducing such
//! fractions through a general gcd is the dominant cost at large supports, so
//! the helpers below shift instead of dividing whenever the denominator is a
//! power of two.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Exact rational number, always held in lowest terms with a positive denominator.
pub type Rational = BigRational;

/// Exponent `e` if `x == 2^e`.
pub fn pow2_exponent(x: &BigInt) -> Option<u64> {
    if x.sign() != Sign::Plus {
        return None;
    }
    let tz = x.trailing_zeros()?;
    (tz + 1 == x.bits()).then_some(tz)
}

pub fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    match (pow2_exponent(a), pow2_exponent(b)) {
        (Some(ea), Some(eb)) => {
            if ea >= eb {
                a.clone()
            } else {
                b.clone()
            }
        }
        _ => {
            if a == b {
                a.clone()
            } else {
                a.lcm(b)
            }
        }
    }
}

/// Least common denominator of a collection of rationals.
pub fn common_denominator<'a, I>(values: I) -> BigInt
where
    I: IntoIterator<Item = &'a Rational>,
{
    values
        .into_iter()
        .fold(BigInt::one(), |acc, w| lcm(&acc, w.denom()))
}

/// `value * den`, where `den` must be a multiple of `value.denom()`.
pub fn numerator_over(value: &Rational, den: &BigInt) -> BigInt {
    if value.denom() == den {
        return value.numer().clone();
    }
    match (pow2_exponent(value.denom()), pow2_exponent(den)) {
        (Some(ev), Some(ed)) if ed >= ev => value.numer() << (ed - ev),
        _ => value.numer() * (den / value.denom()),
    }
}

/// `num / den` reduced to lowest terms; `den` must be positive.
pub fn ratio(num: BigInt, den: BigInt) -> Rational {
    debug_assert!(den.sign() == Sign::Plus);
    if num.is_zero() {
        return Rational::zero();
    }
    if let Some(e) = pow2_exponent(&den) {
        let shift = num.trailing_zeros().unwrap_or(0).min(e);
        return Rational::new_raw(num >> shift, den >> shift);
    }
    Rational::new(num, den)
}

pub fn from_i64(x: i64) -> Rational {
    Rational::from_integer(BigInt::from(x))
}

pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Running sum of rationals that postpones reduction until [`RationalSum::finish`].
#[derive(Clone, Debug)]
pub struct RationalSum {
    num: BigInt,
    den: BigInt,
    den_pow2: Option<u64>,
}

impl Default for RationalSum {
    fn default() -> Self {
        Self {
            num: BigInt::zero(),
            den: BigInt::one(),
            den_pow2: Some(0),
        }
    }
}

impl RationalSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: &Rational) {
        if value.is_zero() {
            return;
        }
        if value.denom() == &self.den {
            self.num += value.numer();
            return;
        }
        if let (Some(ed), Some(ev)) = (self.den_pow2, pow2_exponent(value.denom())) {
            if ev <= ed {
                self.num += value.numer() << (ed - ev);
            } else {
                self.num <<= ev - ed;
                self.num += value.numer();
                self.den = value.denom().clone();
                self.den_pow2 = Some(ev);
            }
            return;
        }
        let l = self.den.lcm(value.denom());
        self.num = &self.num * (&l / &self.den) + value.numer() * (&l / value.denom());
        self.den_pow2 = pow2_exponent(&l);
        self.den = l;
    }

    pub fn add_product(&mut self, a: &Rational, b: &Rational) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        let prod = Rational::new_raw(a.numer() * b.numer(), a.denom() * b.denom());
        if pow2_exponent(prod.denom()).is_some() {
            self.add(&prod);
        } else {
            self.add(&ratio(prod.numer().clone(), prod.denom().clone()));
        }
    }

    pub fn finish(self) -> Rational {
        ratio(self.num, self.den)
    }
}

impl<'a> std::iter::Sum<&'a Rational> for RationalSum {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Self {
        let mut acc = RationalSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Sum of rationals in lowest terms.
pub fn sum<'a, I>(values: I) -> Rational
where
    I: IntoIterator<Item = &'a Rational>,
{
    values.into_iter().sum::<RationalSum>().finish()
}

/// Exact `C(n, k)` for `0 <= k <= n`, zero otherwise.
pub fn binomial(n: u64, k: i64) -> BigInt {
    if k < 0 || k as u64 > n {
        return BigInt::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// The full row `C(n, 0), ..., C(n, n)`.
pub fn binomial_row(n: u64) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigInt::one();
    row.push(c.clone());
    for j in 0..n {
        c = c * (n - j) / (j + 1);
        row.push(c.clone());
    }
    row
}
