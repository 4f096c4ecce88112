//! Structural inequalities: support separation, Tanaka's inequality and the
//! halving inequality for normalized convolution powers.

use num_traits::Signed;

use super::{w_distance, CostSpec, CostValue, PairCost};
use crate::error::{Error, Result};
use crate::measure::LatticeMeasure;
use crate::surd::Surd;

/// `min c(x, y)` over `x` in the support of `mu` and `y` in the support of
/// `nu`; a lower bound for every transport cost between them.
pub fn support_distance_lower_bound(mu: &LatticeMeasure, nu: &LatticeMeasure, cost: CostSpec) -> CostValue {
    let pc = PairCost::new(mu, nu, cost);
    let (mut i, mut j) = (0, 0);
    let mut best = (0, 0);
    if mu.radicand() == nu.radicand() {
        let a: Vec<_> = (0..mu.len()).map(|k| mu.value_coeff(k)).collect();
        let b: Vec<_> = (0..nu.len()).map(|k| nu.value_coeff(k)).collect();
        let mut best_gap = (&a[0] - &b[0]).abs();
        while i < a.len() && j < b.len() {
            let gap = (&a[i] - &b[j]).abs();
            if gap < best_gap {
                best_gap = gap;
                best = (i, j);
            }
            if a[i] < b[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
    } else {
        let a = mu.to_float();
        let b = nu.to_float();
        let (a, b) = (a.values(), b.values());
        let mut best_gap = f64::INFINITY;
        while i < a.len() && j < b.len() {
            let gap = (a[i] - b[j]).abs();
            if gap < best_gap {
                best_gap = gap;
                best = (i, j);
            }
            if a[i] < b[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
    }
    pc.value(best.0, best.1)
}

/// Law of `a X + b Y` for independent `X ~ x`, `Y ~ y`; zero coefficients drop their term.
fn linear_combination(x: &LatticeMeasure, a: &Surd, y: &LatticeMeasure, b: &Surd) -> Result<Option<LatticeMeasure>> {
    match (a.is_zero(), b.is_zero()) {
        (true, true) => Ok(None),
        (false, true) => Ok(Some(x.scale(a)?)),
        (true, false) => Ok(Some(y.scale(b)?)),
        (false, false) => {
            let (ax, by) = LatticeMeasure::align(&x.scale(a)?, &y.scale(b)?)?;
            Ok(Some(ax.convolve(&by)?))
        }
    }
}

/// `a^2 T(mu, mu2) + b^2 T(nu, nu2) - T(law(aX + bY), law(aX' + bY'))` with
/// `X ~ mu`, `X' ~ mu2`, `Y ~ nu`, `Y' ~ nu2`, all components independent.
///
/// Requires `mean(mu) = mean(mu2)` or `mean(nu) = mean(nu2)`; under that
/// condition the result is nonnegative.
pub fn tanaka_gap(
    mu: &LatticeMeasure,
    mu2: &LatticeMeasure,
    nu: &LatticeMeasure,
    nu2: &LatticeMeasure,
    a: &Surd,
    b: &Surd,
) -> Result<CostValue> {
    let x_means = mu.moments().mean == mu2.moments().mean;
    let y_means = nu.moments().mean == nu2.moments().mean;
    if !x_means && !y_means {
        return Err(Error::Precondition(
            "either the X pair or the Y pair must share its mean".into(),
        ));
    }
    let t = CostSpec::quadratic();
    let mut bound = CostValue::zero();
    if !a.is_zero() {
        bound = bound + w_distance(mu, mu2, t)?.cost.scale(&a.square());
    }
    if !b.is_zero() {
        bound = bound + w_distance(nu, nu2, t)?.cost.scale(&b.square());
    }
    let lhs = linear_combination(mu, a, nu, b)?;
    let rhs = linear_combination(mu2, a, nu2, b)?;
    let combined = match (lhs, rhs) {
        (Some(l), Some(r)) => w_distance(&l, &r, t)?.cost,
        _ => CostValue::zero(),
    };
    Ok(bound - combined)
}

/// `T(mu^(m), nu^(m)) - T(mu^(2m), nu^(2m))` for centred `mu` and `nu`; nonnegative.
pub fn halving_gap(mu: &LatticeMeasure, nu: &LatticeMeasure, m: u64) -> Result<CostValue> {
    for (name, x) in [("mu", mu), ("nu", nu)] {
        let mean = x.moments().mean;
        if !mean.is_zero() {
            return Err(Error::NonzeroBarycenter(format!("{name}: {mean}")));
        }
    }
    if m == 0 {
        return Err(Error::Precondition("halving gap needs m >= 1".into()));
    }
    let t = CostSpec::quadratic();
    let single = w_distance(&mu.normalized_power(m)?, &nu.normalized_power(m)?, t)?.cost;
    let double = w_distance(&mu.normalized_power(2 * m)?, &nu.normalized_power(2 * m)?, t)?.cost;
    Ok(single - double)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{frac, Rational};

    #[test]
    fn support_distance_cases() {
        let q = CostSpec::quadratic();
        let mu = LatticeMeasure::rademacher_sum(3);
        assert_eq!(support_distance_lower_bound(&mu, &LatticeMeasure::rademacher_sum(5), q), CostValue::zero());
        assert_eq!(
            support_distance_lower_bound(&LatticeMeasure::dirac(0), &LatticeMeasure::dirac(3), q),
            CostValue::Exact(frac(9, 1))
        );
        assert_eq!(
            support_distance_lower_bound(&mu, &LatticeMeasure::rademacher_sum(4), q),
            CostValue::Exact(frac(1, 1))
        );
    }

    #[test]
    fn tanaka_degenerate_cases() {
        let mu = LatticeMeasure::rademacher_sum(2);
        let nu = LatticeMeasure::on_integers(vec![-1, 2], vec![frac(2, 3), frac(1, 3)]).unwrap();
        let gap = tanaka_gap(&mu, &mu, &nu, &nu, &Surd::from_integer(2), &Surd::from_integer(3)).unwrap();
        assert_eq!(gap, CostValue::zero());
        let other = LatticeMeasure::rademacher_sum(4);
        let gap = tanaka_gap(&mu, &other, &nu, &nu, &Surd::one(), &Surd::zero()).unwrap();
        assert_eq!(gap, CostValue::zero());
    }

    #[test]
    fn tanaka_signs_with_inverse_sqrt_two() {
        let h = Surd::inv_sqrt(2).unwrap();
        let gap = tanaka_gap(
            &LatticeMeasure::rademacher_sum(1),
            &LatticeMeasure::rademacher_sum(2),
            &LatticeMeasure::rademacher_sum(1),
            &LatticeMeasure::rademacher_sum(2),
            &h,
            &h,
        )
        .unwrap();
        assert!(gap.is_exact());
        assert!(!gap.exact().unwrap().is_negative());
    }

    #[test]
    fn tanaka_rejects_mismatched_means() {
        let a = LatticeMeasure::dirac(0);
        let b = LatticeMeasure::dirac(1);
        assert!(matches!(
            tanaka_gap(&a, &b, &a, &b, &Surd::one(), &Surd::one()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn halving_examples() {
        let mu = LatticeMeasure::rademacher_sum(3);
        let nu = LatticeMeasure::rademacher_sum(4);
        assert_eq!(halving_gap(&mu, &mu, 2).unwrap(), CostValue::zero());
        let gap = halving_gap(&mu, &nu, 1).unwrap();
        assert!(!gap.exact().unwrap().is_negative());
        let shifted = LatticeMeasure::dirac(1);
        assert!(matches!(halving_gap(&shifted, &mu, 1), Err(Error::NonzeroBarycenter(_))));
        let t2 = w_distance(&mu.normalized_power(2).unwrap(), &nu.normalized_power(2).unwrap(), CostSpec::quadratic())
            .unwrap()
            .cost;
        assert_eq!(t2, CostValue::Exact(Rational::new(5.into(), 16.into())));
    }
}
