//! Finitely supported probability measures on scaled integer lattices.
//!
//! A [`LatticeMeasure`] places exact rational mass on the points
//! `(offset + step * k) / sqrt(radicand)` for a strictly increasing list of
//! integers `k`. Convolution, scaling and normalized powers never leave this
//! representation, so every weight stays an exact rational.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::{self, binomial_row, common_denominator, numerator_over, ratio, Rational, RationalSum};
use crate::surd::Surd;

/// Largest support for which exact rational weights are required; larger
/// instances may fall back to `f64` weights when the caller asks for it.
pub const EXACT_SUPPORT_LIMIT: usize = 1 << 15;

#[derive(Clone, Debug)]
pub struct LatticeMeasure {
    step: Rational,
    offset: Rational,
    radicand: u64,
    points: Vec<i64>,
    weights: Vec<Rational>,
}

/// First and second moments of a measure, exact.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSummary {
    pub mean: Surd,
    pub second_moment: Rational,
    pub variance: Rational,
}

impl MomentSummary {
    pub fn mean_f64(&self) -> f64 {
        self.mean.to_f64()
    }

    pub fn variance_f64(&self) -> f64 {
        self.variance.to_f64().unwrap_or(f64::NAN)
    }
}

/// Coefficient of `s` over `sqrt(radicand)`, if `s` lives on that radicand.
fn coeff_on(s: &Surd, radicand: u64) -> Option<Rational> {
    if s.is_zero() {
        Some(Rational::zero())
    } else if s.radicand() == radicand {
        Some(s.coeff().clone())
    } else {
        None
    }
}

impl LatticeMeasure {
    /// Builds a measure from explicit lattice data. Points may come in any
    /// order but must be distinct; zero weights are dropped and the rest must
    /// be positive and sum to exactly one.
    pub fn new(step: Surd, offset: Surd, points: Vec<i64>, weights: Vec<Rational>) -> Result<Self> {
        let mut m = Self::unnormalized(step, offset, points, weights)?;
        let total = exact::sum(&m.weights);
        if !total.is_one() {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, expected 1")));
        }
        m.weights.shrink_to_fit();
        Ok(m)
    }

    /// Like [`LatticeMeasure::new`] but rescales the weights to total mass one.
    pub fn from_unnormalized(
        step: Surd,
        offset: Surd,
        points: Vec<i64>,
        weights: Vec<Rational>,
    ) -> Result<Self> {
        let mut m = Self::unnormalized(step, offset, points, weights)?;
        let total = exact::sum(&m.weights);
        if !total.is_one() {
            for w in &mut m.weights {
                *w = &*w / &total;
            }
        }
        Ok(m)
    }

    fn unnormalized(step: Surd, offset: Surd, points: Vec<i64>, weights: Vec<Rational>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if !step.coeff().is_positive() {
            return Err(Error::InvalidMeasure(format!("step must be positive, got {step}")));
        }
        let radicand = step.radicand();
        let offset = coeff_on(&offset, radicand).ok_or_else(|| {
            Error::InvalidMeasure(format!("offset {offset} is not on the radicand of step {step}"))
        })?;
        let mut pairs: Vec<(i64, Rational)> = Vec::with_capacity(points.len());
        for (p, w) in points.into_iter().zip(weights) {
            if w.is_negative() {
                return Err(Error::InvalidMeasure(format!("negative weight {w} at point {p}")));
            }
            if !w.is_zero() {
                pairs.push((p, w));
            }
        }
        pairs.sort_by_key(|(p, _)| *p);
        if let Some(win) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidMeasure(format!("duplicate point {}", win[0].0)));
        }
        if pairs.is_empty() {
            return Err(Error::InvalidMeasure("measure has no mass".into()));
        }
        let (points, weights) = pairs.into_iter().unzip();
        Ok(Self {
            step: step.coeff().clone(),
            offset,
            radicand,
            points,
            weights,
        })
    }

    /// Measure with unit step and zero offset.
    pub fn on_integers(points: Vec<i64>, weights: Vec<Rational>) -> Result<Self> {
        Self::new(Surd::one(), Surd::zero(), points, weights)
    }

    /// Point mass at the integer `x` on the unit lattice.
    pub fn dirac(x: i64) -> Self {
        Self {
            step: Rational::one(),
            offset: Rational::zero(),
            radicand: 1,
            points: vec![x],
            weights: vec![Rational::one()],
        }
    }

    /// Point mass at zero on this measure's lattice; the identity for [`convolve`](Self::convolve).
    pub fn identity(&self) -> Self {
        Self {
            step: self.step.clone(),
            offset: Rational::zero(),
            radicand: self.radicand,
            points: vec![0],
            weights: vec![Rational::one()],
        }
    }

    /// Law of a sum of `steps` i.i.d. variables equal to `up` with probability
    /// `p_up` and to `down` otherwise. Unit step, zero offset.
    pub fn binomial_walk(steps: u64, up: i64, down: i64, p_up: &Rational) -> Result<Self> {
        if up <= down {
            return Err(Error::InvalidMeasure(format!("walk needs up > down, got {up} <= {down}")));
        }
        if p_up.is_negative() || p_up > &Rational::one() {
            return Err(Error::InvalidMeasure(format!("probability {p_up} outside [0, 1]")));
        }
        let n = i64::try_from(steps).map_err(|_| Error::Unsupported("too many steps".into()))?;
        let top = n
            .checked_mul(up)
            .ok_or_else(|| Error::Unsupported("walk support overflows i64".into()))?;
        let width = up - down;
        // weight(j downs) = C(n, j) a^(n-j) (b-a)^j / b^n for p_up = a / b
        let a = p_up.numer().clone();
        let b = p_up.denom().clone();
        let c = &b - &a;
        let den = num_traits::pow(b, steps as usize);
        let row = binomial_row(steps);
        let mut up_pows = Vec::with_capacity(row.len());
        let mut acc = BigInt::one();
        for _ in 0..=steps {
            up_pows.push(acc.clone());
            acc *= &a;
        }
        let mut points = Vec::with_capacity(row.len());
        let mut weights = Vec::with_capacity(row.len());
        let mut down_pow = BigInt::one();
        for (j, coef) in row.iter().enumerate() {
            let num = coef * &up_pows[steps as usize - j] * &down_pow;
            down_pow *= &c;
            let point = top - width * j as i64;
            points.push(point);
            weights.push(ratio(num, den.clone()));
        }
        Self::new(Surd::one(), Surd::zero(), points, weights)
    }

    /// Law of `Z_1 + ... + Z_m` for i.i.d. fair signs; `m = 0` gives the point mass at zero.
    pub fn rademacher_sum(m: u64) -> Self {
        Self::binomial_walk(m, 1, -1, &exact::frac(1, 2)).expect("fair sign walk is always valid")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[i64] {
        &self.points
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn step(&self) -> Surd {
        Surd::new(self.step.clone(), self.radicand).expect("radicand is positive")
    }

    pub fn offset(&self) -> Surd {
        Surd::new(self.offset.clone(), self.radicand).expect("radicand is positive")
    }

    /// Rational step coefficient; the actual pitch is this over `sqrt(radicand)`.
    pub fn step_coeff(&self) -> &Rational {
        &self.step
    }

    pub fn offset_coeff(&self) -> &Rational {
        &self.offset
    }

    pub fn radicand(&self) -> u64 {
        self.radicand
    }

    /// Rational numerator of the i-th support value (`offset + step * k`).
    pub fn value_coeff(&self, i: usize) -> Rational {
        &self.offset + &self.step * Rational::from_integer(BigInt::from(self.points[i]))
    }

    pub fn value(&self, i: usize) -> Surd {
        Surd::new(self.value_coeff(i), self.radicand).expect("radicand is positive")
    }

    pub fn value_f64(&self, i: usize) -> f64 {
        self.value_coeff(i).to_f64().unwrap_or(f64::NAN) / (self.radicand as f64).sqrt()
    }

    pub fn support_values(&self) -> Vec<Surd> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    /// Weight at lattice coordinate `k` (zero off the support).
    pub fn weight_at(&self, k: i64) -> Rational {
        match self.points.binary_search(&k) {
            Ok(i) => self.weights[i].clone(),
            Err(_) => Rational::zero(),
        }
    }

    pub fn same_lattice(&self, other: &Self) -> bool {
        self.radicand == other.radicand && self.step == other.step
    }

    /// Law of `X + Y` for independent `X ~ self`, `Y ~ other` on the same lattice.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        if !self.same_lattice(other) {
            return Err(Error::LatticeMismatch(format!(
                "steps {} and {} differ",
                self.step(),
                other.step()
            )));
        }
        let den_a = common_denominator(&self.weights);
        let den_b = common_denominator(&other.weights);
        let na: Vec<BigInt> = self.weights.iter().map(|w| numerator_over(w, &den_a)).collect();
        let nb: Vec<BigInt> = other.weights.iter().map(|w| numerator_over(w, &den_b)).collect();
        let overflow = || Error::Unsupported("convolution support overflows i64".into());
        let lo = self.points[0].checked_add(other.points[0]).ok_or_else(overflow)?;
        let hi = self.points[self.len() - 1]
            .checked_add(other.points[other.len() - 1])
            .ok_or_else(overflow)?;
        let span = (hi as i128 - lo as i128 + 1) as u128;
        let pairs = (self.len() * other.len()) as u128;
        let den = den_a * den_b;
        let offset = &self.offset + &other.offset;

        let (points, weights): (Vec<i64>, Vec<Rational>) = if span <= 4 * pairs + 1024 {
            let mut acc = vec![BigInt::zero(); span as usize];
            for (pa, wa) in self.points.iter().zip(&na) {
                let base = (pa + other.points[0] - lo) as usize;
                let first = other.points[0];
                for (pb, wb) in other.points.iter().zip(&nb) {
                    acc[base + (pb - first) as usize] += wa * wb;
                }
            }
            acc.into_iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| (lo + i as i64, ratio(c, den.clone())))
                .unzip()
        } else {
            let mut acc: BTreeMap<i64, BigInt> = BTreeMap::new();
            for (pa, wa) in self.points.iter().zip(&na) {
                for (pb, wb) in other.points.iter().zip(&nb) {
                    *acc.entry(pa + pb).or_default() += wa * wb;
                }
            }
            acc.into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|(p, c)| (p, ratio(c, den.clone())))
                .unzip()
        };
        Ok(Self {
            step: self.step.clone(),
            offset,
            radicand: self.radicand,
            points,
            weights,
        })
    }

    /// `m`-fold self-convolution; `m = 0` yields [`identity`](Self::identity).
    pub fn convolution_power(&self, m: u64) -> Result<Self> {
        let mut result = self.identity();
        let mut base = self.clone();
        let mut e = m;
        while e > 0 {
            if e & 1 == 1 {
                result = result.convolve(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.convolve(&base)?;
            }
        }
        Ok(result)
    }

    /// Law of `(X_1 + ... + X_m) / sqrt(m)` for i.i.d. `X_i ~ self`.
    pub fn normalized_power(&self, m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Precondition("normalized power needs m >= 1".into()));
        }
        let power = self.convolution_power(m)?;
        if m == 1 {
            return Ok(power);
        }
        power.scale(&Surd::inv_sqrt(m)?)
    }

    /// Law of `c X`; the point mass at zero must be built explicitly.
    pub fn scale(&self, c: &Surd) -> Result<Self> {
        if c.is_zero() {
            return Err(Error::DegenerateScale);
        }
        let step = self.step().mul(c)?;
        let offset = self.offset().mul(c)?;
        let radicand = step.radicand();
        let offset = coeff_on(&offset, radicand).expect("offset and step share a radicand");
        if step.is_negative() {
            Ok(Self {
                step: -step.coeff().clone(),
                offset,
                radicand,
                points: self.points.iter().rev().map(|p| -p).collect(),
                weights: self.weights.iter().rev().cloned().collect(),
            })
        } else {
            Ok(Self {
                step: step.coeff().clone(),
                offset,
                radicand,
                points: self.points.clone(),
                weights: self.weights.clone(),
            })
        }
    }

    /// Law of `X + t`; `t` must be expressible over this measure's radicand.
    pub fn translate(&self, t: &Surd) -> Result<Self> {
        let shift = coeff_on(t, self.radicand).ok_or_else(|| {
            Error::LatticeMismatch(format!("shift {t} is not on radicand {}", self.radicand))
        })?;
        let mut out = self.clone();
        out.offset += shift;
        Ok(out)
    }

    /// Same measure re-expressed on a pitch `factor` times finer.
    pub fn refine(&self, factor: u64) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Precondition("refinement factor must be positive".into()));
        }
        let f = i64::try_from(factor).map_err(|_| Error::Unsupported("factor too large".into()))?;
        let points = self
            .points
            .iter()
            .map(|p| p.checked_mul(f))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Unsupported("refined support overflows i64".into()))?;
        Ok(Self {
            step: &self.step / Rational::from_integer(BigInt::from(factor)),
            offset: self.offset.clone(),
            radicand: self.radicand,
            points,
            weights: self.weights.clone(),
        })
    }

    /// Re-expresses both measures on their coarsest common lattice.
    pub fn align(a: &Self, b: &Self) -> Result<(Self, Self)> {
        if a.radicand != b.radicand {
            return Err(Error::LatticeMismatch(format!(
                "radicands {} and {} cannot share a lattice",
                a.radicand, b.radicand
            )));
        }
        if a.step == b.step {
            return Ok((a.clone(), b.clone()));
        }
        // gcd(p1/q1, p2/q2) = gcd(p1, p2) / lcm(q1, q2) for reduced fractions
        let g = Rational::new(
            a.step.numer().gcd(b.step.numer()),
            a.step.denom().lcm(b.step.denom()),
        );
        let fa = (&a.step / &g).to_integer().to_u64();
        let fb = (&b.step / &g).to_integer().to_u64();
        match (fa, fb) {
            (Some(fa), Some(fb)) => Ok((a.refine(fa)?, b.refine(fb)?)),
            _ => Err(Error::Unsupported("common lattice refinement too fine".into())),
        }
    }

    pub fn moments(&self) -> MomentSummary {
        let mut first = RationalSum::new();
        let mut second = RationalSum::new();
        for (i, w) in self.weights.iter().enumerate() {
            let v = self.value_coeff(i);
            first.add_product(w, &v);
            second.add_product(w, &(&v * &v));
        }
        let first = first.finish();
        let r = Rational::from_integer(BigInt::from(self.radicand));
        let second_moment = second.finish() / &r;
        let variance = &second_moment - &first * &first / &r;
        MomentSummary {
            mean: Surd::new(first, self.radicand).expect("radicand is positive"),
            second_moment,
            variance,
        }
    }

    /// Cumulative weights `F(x_0), F(x_1), ...`; the last entry is exactly one.
    pub fn cumulative(&self) -> Vec<Rational> {
        let mut acc = RationalSum::new();
        self.weights
            .iter()
            .map(|w| {
                acc.add(w);
                acc.clone().finish()
            })
            .collect()
    }

    /// Lossy conversion to `f64` values and weights.
    pub fn to_float(&self) -> FloatMeasure {
        FloatMeasure {
            values: (0..self.len()).map(|i| self.value_f64(i)).collect(),
            weights: self.weights.iter().map(|w| w.to_f64().unwrap_or(0.0)).collect(),
        }
    }
}

impl PartialEq for LatticeMeasure {
    fn eq(&self, other: &Self) -> bool {
        if self.len() != other.len() || self.weights != other.weights {
            return false;
        }
        if self.same_lattice(other) && self.offset == other.offset {
            return self.points == other.points;
        }
        (0..self.len()).all(|i| self.value(i) == other.value(i))
    }
}

impl fmt::Display for LatticeMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for i in 0..self.len() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}: {}", self.value(i), self.weights[i])?;
        }
        write!(f, "}}")
    }
}

/// Exact `p_{n,k}`: the mass that `rademacher_sum(4n - 2)` puts on `2k`,
/// `C(4n-2, k+2n-1) / 2^(4n-2)`, and zero for `|k| >= 2n`.
pub fn binomial_sigma_weight(n: u64, k: i64) -> Rational {
    let trials = 4 * n - 2;
    let idx = k + 2 * n as i64 - 1;
    let c = exact::binomial(trials, idx);
    ratio(c, BigInt::one() << trials)
}

/// Measure with `f64` values and weights, used past the exact-support limit.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatMeasure {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl FloatMeasure {
    /// Values must be strictly increasing, weights positive and summing to one
    /// within `1e-9`.
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() || values.is_empty() {
            return Err(Error::InvalidMeasure("values and weights must be nonempty and equal length".into()));
        }
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidMeasure("values must be strictly increasing".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidMeasure("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(Self { values, weights })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Law of `Z_1 + ... + Z_m` for fair signs with `f64` weights, via log-binomials.
    pub fn rademacher_sum(m: u64) -> Self {
        let mf = m as f64;
        let ln_norm = libm::lgamma(mf + 1.0) - mf * std::f64::consts::LN_2;
        let mut values = Vec::with_capacity(m as usize + 1);
        let mut weights = Vec::with_capacity(m as usize + 1);
        for j in 0..=m {
            let jf = j as f64;
            let lw = ln_norm - libm::lgamma(jf + 1.0) - libm::lgamma(mf - jf + 1.0);
            values.push(2.0 * jf - mf);
            weights.push(lw.exp());
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self { values, weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::frac;

    fn measure(points: &[i64], weights: &[(i64, i64)]) -> LatticeMeasure {
        LatticeMeasure::on_integers(
            points.to_vec(),
            weights.iter().map(|&(n, d)| frac(n, d)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn rademacher_small_cases() {
        assert_eq!(LatticeMeasure::rademacher_sum(1), measure(&[-1, 1], &[(1, 2), (1, 2)]));
        assert_eq!(
            LatticeMeasure::rademacher_sum(2),
            measure(&[-2, 0, 2], &[(1, 4), (1, 2), (1, 4)])
        );
        assert_eq!(LatticeMeasure::rademacher_sum(0), LatticeMeasure::dirac(0));
    }

    #[test]
    fn rejects_bad_measures() {
        assert!(LatticeMeasure::on_integers(vec![0, 1], vec![frac(1, 2), frac(1, 3)]).is_err());
        assert!(LatticeMeasure::on_integers(vec![0, 0], vec![frac(1, 2), frac(1, 2)]).is_err());
        assert!(LatticeMeasure::on_integers(vec![0, 1], vec![frac(3, 2), frac(-1, 2)]).is_err());
        assert!(LatticeMeasure::on_integers(vec![], vec![]).is_err());
        assert!(LatticeMeasure::new(Surd::zero(), Surd::zero(), vec![0], vec![frac(1, 1)]).is_err());
        assert!(LatticeMeasure::new(
            Surd::inv_sqrt(2).unwrap(),
            Surd::one(),
            vec![0],
            vec![frac(1, 1)]
        )
        .is_err());
    }

    #[test]
    fn zero_weights_are_dropped() {
        let m = LatticeMeasure::on_integers(vec![3, 0, 1], vec![frac(1, 2), frac(0, 1), frac(1, 2)]).unwrap();
        assert_eq!(m.points(), &[1, 3]);
    }

    #[test]
    fn convolution_identity_and_mismatch() {
        let mu = measure(&[-1, 2, 5], &[(1, 3), (1, 6), (1, 2)]);
        assert_eq!(mu.convolve(&mu.identity()).unwrap(), mu);
        let fine = mu.scale(&Surd::inv_sqrt(2).unwrap()).unwrap();
        assert!(matches!(mu.convolve(&fine), Err(Error::LatticeMismatch(_))));
    }

    #[test]
    fn sparse_convolution_path() {
        let a = measure(&[0, 1_000_000], &[(1, 2), (1, 2)]);
        let b = a.convolve(&a).unwrap();
        assert_eq!(b, measure(&[0, 1_000_000, 2_000_000], &[(1, 4), (1, 2), (1, 4)]));
    }

    #[test]
    fn normalized_power_of_signs() {
        let np = LatticeMeasure::rademacher_sum(1).normalized_power(2).unwrap();
        assert_eq!(np.points(), &[-2, 0, 2]);
        assert_eq!(np.step(), Surd::inv_sqrt(2).unwrap());
        assert_eq!(np.weights(), &[frac(1, 4), frac(1, 2), frac(1, 4)]);
        let mu = measure(&[-1, 2], &[(2, 3), (1, 3)]);
        assert_eq!(mu.normalized_power(1).unwrap(), mu);
        assert!(mu.normalized_power(0).is_err());
        for m in 1..6 {
            assert_eq!(mu.normalized_power(m).unwrap().moments().variance, mu.moments().variance);
        }
    }

    #[test]
    fn scaling() {
        let mu = measure(&[-1, 2, 5], &[(1, 3), (1, 6), (1, 2)]);
        assert_eq!(mu.scale(&Surd::one()).unwrap(), mu);
        let r1 = LatticeMeasure::rademacher_sum(1);
        assert_eq!(r1.scale(&Surd::from_integer(-1)).unwrap(), r1);
        assert_eq!(LatticeMeasure::dirac(1).scale(&Surd::from_integer(3)).unwrap(), LatticeMeasure::dirac(3));
        assert!(matches!(mu.scale(&Surd::zero()), Err(Error::DegenerateScale)));
        let flipped = mu.scale(&Surd::from_integer(-2)).unwrap();
        assert_eq!(flipped, measure(&[-10, -4, 2], &[(1, 2), (1, 6), (1, 3)]));
    }

    #[test]
    fn moments_of_basic_measures() {
        for m in 0..10 {
            let s = LatticeMeasure::rademacher_sum(m).moments();
            assert!(s.mean.is_zero());
            assert_eq!(s.variance, frac(m as i64, 1));
        }
        let d = LatticeMeasure::dirac(3).moments();
        assert_eq!(d.mean, Surd::from_integer(3));
        assert!(d.variance.is_zero());
        let s = LatticeMeasure::rademacher_sum(3).normalized_power(3).unwrap().moments();
        assert_eq!(s.variance, frac(3, 1));
        assert_eq!(s.second_moment, frac(3, 1));
    }

    #[test]
    fn sigma_weight_matches_direct_binomial() {
        assert_eq!(binomial_sigma_weight(2, 0), frac(5, 16));
        assert!(binomial_sigma_weight(3, 6).is_zero());
        assert!(binomial_sigma_weight(3, -7).is_zero());
        let sigma = LatticeMeasure::rademacher_sum(6);
        for k in -3..=3 {
            assert_eq!(sigma.weight_at(2 * k), binomial_sigma_weight(2, k));
        }
    }

    #[test]
    fn alignment_onto_common_lattice() {
        let a = LatticeMeasure::rademacher_sum(1).scale(&Surd::from_rational(frac(2, 3))).unwrap();
        let b = LatticeMeasure::rademacher_sum(2).scale(&Surd::from_rational(frac(1, 2))).unwrap();
        let (a2, b2) = LatticeMeasure::align(&a, &b).unwrap();
        assert!(a2.same_lattice(&b2));
        assert_eq!(a2, a);
        assert_eq!(b2, b);
        assert_eq!(a2.step_coeff(), &frac(1, 6));
    }

    #[test]
    fn binomial_walk_general_probability() {
        let w = LatticeMeasure::binomial_walk(2, 1, -2, &frac(2, 3)).unwrap();
        assert_eq!(w, measure(&[-4, -1, 2], &[(1, 9), (4, 9), (4, 9)]));
        assert!(w.moments().mean.is_zero());
    }

    #[test]
    fn float_rademacher_matches_exact() {
        let exact = LatticeMeasure::rademacher_sum(40).to_float();
        let approx = FloatMeasure::rademacher_sum(40);
        for (a, b) in exact.weights().iter().zip(approx.weights()) {
            assert!((a - b).abs() < 1e-13);
        }
        assert_eq!(exact.values(), approx.values());
    }
}
