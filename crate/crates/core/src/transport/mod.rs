//! Optimal transport between lattice measures on the line for costs `|x - y|^r`.
//!
//! All reported costs are `r`-th power costs (never rooted), so `r = 2` gives
//! the quadratic transport cost `T(mu, nu) = inf E|X - Y|^2`.

mod bounds;
mod cyclic;
mod float;
mod lp;
mod plan;

use std::fmt;
use std::ops::{Add, Sub};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::Rational;
use crate::measure::LatticeMeasure;

pub use bounds::{halving_gap, support_distance_lower_bound, tanaka_gap};
pub use cyclic::{
    cyclic_monotonicity_check, cyclic_monotonicity_check_with_budget, CycleVerdict, CycleWitness,
    DEFAULT_CYCLE_BUDGET, DEFAULT_MAX_CYCLE_LEN,
};
pub use float::monotone_cost_f64;
pub use lp::{lp_oracle, CostMatrix, LP_CELL_LIMIT};
pub use plan::{monotone_coupling, transport_cost, Move, TransportPlan};

/// Cost `c(x, y) = |x - y|^r` with `r > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostSpec {
    exponent: f64,
}

impl CostSpec {
    pub fn new(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidExponent(exponent));
        }
        Ok(Self { exponent })
    }

    pub fn quadratic() -> Self {
        Self { exponent: 2.0 }
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn integer_exponent(&self) -> Option<u32> {
        (self.exponent.fract() == 0.0 && self.exponent <= 1024.0).then_some(self.exponent as u32)
    }

    /// Convex costs (`r >= 1`) are minimized by the monotone coupling.
    pub fn is_convex(&self) -> bool {
        self.exponent >= 1.0
    }

    pub fn eval_f64(&self, distance: f64) -> f64 {
        let d = distance.abs();
        match self.integer_exponent() {
            Some(1) => d,
            Some(2) => d * d,
            Some(p) => d.powi(p as i32),
            None => d.powf(self.exponent),
        }
    }
}

/// A transport cost: exact when the inputs allow it, `f64` otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum CostValue {
    Exact(Rational),
    Approx(f64),
}

impl CostValue {
    pub fn zero() -> Self {
        CostValue::Exact(Rational::zero())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, CostValue::Exact(_))
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            CostValue::Exact(q) => Some(q),
            CostValue::Approx(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            CostValue::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            CostValue::Approx(x) => *x,
        }
    }

    pub fn scale(&self, factor: &Rational) -> CostValue {
        match self {
            CostValue::Exact(q) => CostValue::Exact(q * factor),
            CostValue::Approx(x) => CostValue::Approx(x * factor.to_f64().unwrap_or(f64::NAN)),
        }
    }

    /// `true` when the value is nonnegative, exactly or up to `tol` for floats.
    pub fn is_nonnegative(&self, tol: f64) -> bool {
        match self {
            CostValue::Exact(q) => !q.is_negative(),
            CostValue::Approx(x) => *x >= -tol,
        }
    }
}

impl Add for CostValue {
    type Output = CostValue;

    fn add(self, rhs: CostValue) -> CostValue {
        match (self, rhs) {
            (CostValue::Exact(a), CostValue::Exact(b)) => CostValue::Exact(a + b),
            (a, b) => CostValue::Approx(a.to_f64() + b.to_f64()),
        }
    }
}

impl Sub for CostValue {
    type Output = CostValue;

    fn sub(self, rhs: CostValue) -> CostValue {
        match (self, rhs) {
            (CostValue::Exact(a), CostValue::Exact(b)) => CostValue::Exact(a - b),
            (a, b) => CostValue::Approx(a.to_f64() - b.to_f64()),
        }
    }
}

impl fmt::Display for CostValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostValue::Exact(q) => write!(f, "{q}"),
            CostValue::Approx(x) => write!(f, "{x}"),
        }
    }
}

/// Optimal cost together with a plan attaining it.
#[derive(Clone, Debug)]
pub struct OTResult {
    pub cost: CostValue,
    pub plan: TransportPlan,
}

/// Optimal transport cost between two lattice measures.
///
/// Convex costs use the monotone coupling; concave costs (`r < 1`) go through
/// the LP oracle and are limited to `LP_CELL_LIMIT` cells.
pub fn w_distance(mu: &LatticeMeasure, nu: &LatticeMeasure, cost: CostSpec) -> Result<OTResult> {
    if cost.is_convex() {
        let plan = monotone_coupling(mu, nu);
        let value = transport_cost(&plan, cost);
        return Ok(OTResult { cost: value, plan });
    }
    let cells = mu.len().saturating_mul(nu.len());
    if cells > LP_CELL_LIMIT {
        return Err(Error::InstanceTooLarge {
            rows: mu.len(),
            cols: nu.len(),
            limit: LP_CELL_LIMIT,
        });
    }
    lp_oracle(mu, nu, &CostMatrix::for_measures(mu, nu, cost))
}

/// Evaluates `c(x_i, y_j)` between the supports of two measures, exactly
/// when the exponent is an integer and the difference of support values is
/// rational (or the exponent is even).
pub(crate) struct PairCost {
    src: Vec<Rational>,
    dst: Vec<Rational>,
    src_f64: Vec<f64>,
    dst_f64: Vec<f64>,
    shared_sqrt: Option<f64>,
    cost: CostSpec,
    exact: Option<(u32, Rational)>,
}

impl PairCost {
    pub(crate) fn new(source: &LatticeMeasure, target: &LatticeMeasure, cost: CostSpec) -> Self {
        let src: Vec<Rational> = (0..source.len()).map(|i| source.value_coeff(i)).collect();
        let dst: Vec<Rational> = (0..target.len()).map(|i| target.value_coeff(i)).collect();
        let same = source.radicand() == target.radicand();
        let m = source.radicand();
        let exact = match cost.integer_exponent() {
            Some(p) if same && (m == 1 || p % 2 == 0) => {
                let denom = if m == 1 {
                    Rational::from_integer(BigInt::from(1))
                } else {
                    Rational::from_integer(num_traits::pow(BigInt::from(m), (p / 2) as usize))
                };
                Some((p, denom))
            }
            _ => None,
        };
        Self {
            src_f64: (0..source.len()).map(|i| source.value_f64(i)).collect(),
            dst_f64: (0..target.len()).map(|i| target.value_f64(i)).collect(),
            shared_sqrt: same.then(|| (m as f64).sqrt()),
            src,
            dst,
            cost,
            exact,
        }
    }

    pub(crate) fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub(crate) fn exact(&self, i: usize, j: usize) -> Option<Rational> {
        let (p, denom) = self.exact.as_ref()?;
        let d = (&self.src[i] - &self.dst[j]).abs();
        Some(num_traits::pow(d, *p as usize) / denom)
    }

    pub(crate) fn float(&self, i: usize, j: usize) -> f64 {
        let d = match self.shared_sqrt {
            Some(s) => (&self.src[i] - &self.dst[j]).to_f64().unwrap_or(f64::NAN) / s,
            None => self.src_f64[i] - self.dst_f64[j],
        };
        self.cost.eval_f64(d)
    }

    pub(crate) fn value(&self, i: usize, j: usize) -> CostValue {
        match self.exact(i, j) {
            Some(q) => CostValue::Exact(q),
            None => CostValue::Approx(self.float(i, j)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::frac;
    use crate::surd::Surd;

    #[test]
    fn cost_spec_validation() {
        assert!(CostSpec::new(0.0).is_err());
        assert!(CostSpec::new(-1.0).is_err());
        assert!(CostSpec::new(f64::NAN).is_err());
        assert!(CostSpec::new(f64::INFINITY).is_err());
        assert_eq!(CostSpec::new(2.0).unwrap().integer_exponent(), Some(2));
        assert_eq!(CostSpec::new(0.5).unwrap().integer_exponent(), None);
        assert!(!CostSpec::new(0.5).unwrap().is_convex());
    }

    #[test]
    fn self_distance_is_zero() {
        let mu = LatticeMeasure::on_integers(vec![-3, 0, 4], vec![frac(1, 5), frac(3, 5), frac(1, 5)]).unwrap();
        for r in [0.5, 1.0, 2.0, 3.0] {
            let res = w_distance(&mu, &mu, CostSpec::new(r).unwrap()).unwrap();
            assert_eq!(res.cost.to_f64(), 0.0);
        }
        assert_eq!(
            w_distance(&mu, &mu, CostSpec::quadratic()).unwrap().cost,
            CostValue::Exact(Rational::zero())
        );
    }

    #[test]
    fn sign_measures_cost_one() {
        let mu = LatticeMeasure::rademacher_sum(1);
        let nu = LatticeMeasure::rademacher_sum(2);
        let res = w_distance(&mu, &nu, CostSpec::quadratic()).unwrap();
        assert_eq!(res.cost, CostValue::Exact(frac(1, 1)));
    }

    #[test]
    fn quadratic_scaling() {
        let mu = LatticeMeasure::on_integers(vec![-2, 1, 3], vec![frac(1, 4), frac(1, 2), frac(1, 4)]).unwrap();
        let nu = LatticeMeasure::on_integers(vec![-1, 0, 5], vec![frac(1, 3), frac(1, 3), frac(1, 3)]).unwrap();
        let base = w_distance(&mu, &nu, CostSpec::quadratic()).unwrap().cost;
        for c in [Surd::from_rational(frac(3, 2)), Surd::from_integer(-2), Surd::inv_sqrt(5).unwrap()] {
            let scaled = w_distance(&mu.scale(&c).unwrap(), &nu.scale(&c).unwrap(), CostSpec::quadratic())
                .unwrap()
                .cost;
            assert_eq!(scaled, base.scale(&c.square()));
        }
    }

    #[test]
    fn irrational_pitch_odd_exponent_is_inexact() {
        let mu = LatticeMeasure::rademacher_sum(2).normalized_power(2).unwrap();
        let nu = LatticeMeasure::rademacher_sum(4).normalized_power(2).unwrap();
        assert!(w_distance(&mu, &nu, CostSpec::quadratic()).unwrap().cost.is_exact());
        let r1 = w_distance(&mu, &nu, CostSpec::new(1.0).unwrap()).unwrap().cost;
        assert!(!r1.is_exact());
        let rational = w_distance(
            &LatticeMeasure::rademacher_sum(4),
            &LatticeMeasure::rademacher_sum(8),
            CostSpec::new(1.0).unwrap(),
        )
        .unwrap()
        .cost;
        assert!((r1.to_f64() - rational.to_f64() / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn concave_cost_uses_lp() {
        let mu = LatticeMeasure::on_integers(vec![0, 1], vec![frac(1, 2), frac(1, 2)]).unwrap();
        let nu = LatticeMeasure::on_integers(vec![1, 2], vec![frac(1, 2), frac(1, 2)]).unwrap();
        // Concave cost prefers leaving the shared point 1 in place and moving 0 -> 2.
        let half = w_distance(&mu, &nu, CostSpec::new(0.5).unwrap()).unwrap();
        assert!((half.cost.to_f64() - 0.5 * 2f64.sqrt()).abs() < 1e-12);
        let mono = transport_cost(&monotone_coupling(&mu, &nu), CostSpec::new(0.5).unwrap());
        assert!(mono.to_f64() > half.cost.to_f64());
    }
}
