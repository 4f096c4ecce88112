//! Sign-walk families whose quadratic transport cost is not monotone along
//! normalized convolution powers.
//!
//! With `mu_n` the law of `2n - 1` fair signs and `nu_n` the law of `2n` fair
//! signs, the two-fold convolutions `sigma_n`, `tau_n` live on the even
//! integers and are close, while every odd-fold convolution separates odd
//! from even integers and costs at least one. `sqrt(n) T(sigma_n, tau_n)`
//! tends to `2 / sqrt(2 pi)`.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{binomial_row, frac, ratio, Rational, RationalSum};
use crate::measure::{FloatMeasure, LatticeMeasure, EXACT_SUPPORT_LIMIT};
use crate::transport::{
    monotone_cost_f64, support_distance_lower_bound, w_distance, CostSpec, CostValue, Move, TransportPlan,
};

/// `2 / sqrt(2 pi)`, the limit of `sqrt(n) T(sigma_n, tau_n)`.
pub fn clt_limit() -> f64 {
    2.0 / (2.0 * std::f64::consts::PI).sqrt()
}

/// `mu_n`, `nu_n` and their two-fold convolutions.
#[derive(Clone, Debug)]
pub struct Family {
    pub n: u64,
    pub mu: LatticeMeasure,
    pub nu: LatticeMeasure,
    pub sigma: LatticeMeasure,
    pub tau: LatticeMeasure,
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Precondition("family index n must be >= 1".into()));
    }
    Ok(())
}

/// The family at index `n`. `sigma` and `tau` are built directly as sign
/// sums of length `4n - 2` and `4n`, which is the same law as `mu * mu` and
/// `nu * nu`.
pub fn family(n: u64) -> Result<Family> {
    check_n(n)?;
    Ok(Family {
        n,
        mu: LatticeMeasure::rademacher_sum(2 * n - 1),
        nu: LatticeMeasure::rademacher_sum(2 * n),
        sigma: LatticeMeasure::rademacher_sum(4 * n - 2),
        tau: LatticeMeasure::rademacher_sum(4 * n),
    })
}

/// Mass `1/4, 1/2, 1/4` on `-2, 0, 2`; `tau_n = sigma_n * rho`.
pub fn rho() -> LatticeMeasure {
    LatticeMeasure::rademacher_sum(2)
}

/// `p_{n,k}` for `k = 0..=2n-1`, i.e. the mass of `sigma_n` on `0, 2, 4, ...`.
fn sigma_right_half(n: u64) -> Vec<Rational> {
    let trials = 4 * n - 2;
    let row = binomial_row(trials);
    let den = BigInt::one() << trials;
    row[(2 * n - 1) as usize..]
        .iter()
        .map(|c| ratio(c.clone(), den.clone()))
        .collect()
}

/// Moves of the radiation plan from `sigma_n` to `tau_n` without verifying marginals.
///
/// The atom at `2k`, `k >= 1`, sends `p_{n,k} (2k + 1) / (4 (2n + k))` one
/// lattice step outward to `2k + 2`, mirrored on the negative side; the atom
/// at zero sends `p_{n,0} / (8n)` to each of `-2` and `2`. Everything else
/// stays in place.
pub fn radiation_plan_unchecked(n: u64) -> Result<TransportPlan> {
    let fam = family(n)?;
    let p = sigma_right_half(n);
    let ni = n as i64;
    let outgoing = |k: usize| -> Rational {
        let kk = k as i64;
        &p[k] * frac(2 * kk + 1, 4 * (2 * ni + kk))
    };
    let mut moves = Vec::with_capacity(2 * fam.sigma.len() + 1);
    for k in -(2 * ni - 1)..=(2 * ni - 1) {
        let from = (k + 2 * ni - 1) as usize;
        let here = (k + 2 * ni) as usize;
        let a = k.unsigned_abs() as usize;
        match k.signum() {
            0 => {
                let side = &p[0] / Rational::from_integer(BigInt::from(8 * n));
                let stay = &p[0] - &side - &side;
                moves.push(Move { from, to: here - 1, mass: side.clone() });
                moves.push(Move { from, to: here, mass: stay });
                moves.push(Move { from, to: here + 1, mass: side });
            }
            -1 => {
                let out = outgoing(a);
                moves.push(Move { from, to: here - 1, mass: out.clone() });
                moves.push(Move { from, to: here, mass: &p[a] - out });
            }
            _ => {
                let out = outgoing(a);
                moves.push(Move { from, to: here, mass: &p[a] - &out });
                moves.push(Move { from, to: here + 1, mass: out });
            }
        }
    }
    Ok(TransportPlan::new_unchecked(fam.sigma, fam.tau, moves))
}

/// The radiation plan, with both marginals checked exactly.
pub fn radiation_plan(n: u64) -> Result<TransportPlan> {
    let plan = radiation_plan_unchecked(n)?;
    plan.verify()?;
    Ok(plan)
}

/// Exact bounds around `T(sigma_n, tau_n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichBounds {
    pub n: u64,
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub lower: Rational,
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub upper: Rational,
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub exact_cost: Rational,
}

/// `(sum_{k=0}^{2n-2} p_{n,k+1} (2k+1) / n, sum_{k=0}^{2n-1} p_{n,k} (2k+1) / n)`.
pub fn sandwich_bounds(n: u64) -> Result<(Rational, Rational)> {
    check_n(n)?;
    let trials = 4 * n - 2;
    let row = binomial_row(trials);
    let mid = (2 * n - 1) as usize;
    let mut upper = BigInt::zero();
    let mut lower = BigInt::zero();
    for k in 0..(2 * n) as usize {
        let odd = BigInt::from(2 * k as u64 + 1);
        upper += &row[mid + k] * &odd;
        if k + 1 < (2 * n) as usize {
            lower += &row[mid + k + 1] * &odd;
        }
    }
    let den = BigInt::from(n) << trials;
    Ok((ratio(lower, den.clone()), ratio(upper, den)))
}

/// Sandwich bounds together with the exact optimal cost.
pub fn sandwich(n: u64) -> Result<SandwichBounds> {
    let (lower, upper) = sandwich_bounds(n)?;
    let fam = family(n)?;
    let exact_cost = w_distance(&fam.sigma, &fam.tau, CostSpec::quadratic())?
        .cost
        .exact()
        .cloned()
        .expect("integer lattice gives an exact quadratic cost");
    Ok(SandwichBounds {
        n,
        lower,
        upper,
        exact_cost,
    })
}

/// `k`-fold convolutions `mu_n^{*k}`, `nu_n^{*k}`.
pub fn fold(n: u64, k: u64) -> Result<(LatticeMeasure, LatticeMeasure)> {
    check_n(n)?;
    Ok((
        LatticeMeasure::rademacher_sum(k * (2 * n - 1)),
        LatticeMeasure::rademacher_sum(k * 2 * n),
    ))
}

/// Support-separation lower bound for `T(mu_n^{*k}, nu_n^{*k})` with `k` odd.
pub fn odd_separation(n: u64, k_odd: u64) -> Result<CostValue> {
    if k_odd % 2 == 0 {
        return Err(Error::Precondition(format!("fold count {k_odd} is not odd")));
    }
    let (a, b) = fold(n, k_odd)?;
    Ok(support_distance_lower_bound(&a, &b, CostSpec::quadratic()))
}

/// Comparison of the normalized two- and three-fold costs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationReport {
    pub n: u64,
    /// `T(mu_n^(2), nu_n^(2)) = T(sigma_n, tau_n) / 2`.
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub t2_normalized: Rational,
    /// Separation bound divided by three.
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub t3_normalized_lower: Rational,
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub t3_normalized_exact: Rational,
    pub violated: bool,
}

pub fn monotonicity_violation(n: u64) -> Result<ViolationReport> {
    if n < 2 {
        return Err(Error::Precondition("violation report needs n >= 2".into()));
    }
    let q = CostSpec::quadratic();
    let fam = family(n)?;
    let exact = |v: CostValue| v.exact().cloned().expect("integer lattice gives exact costs");
    let t2 = exact(w_distance(&fam.sigma, &fam.tau, q)?.cost) * frac(1, 2);
    let third = frac(1, 3);
    let t3_lower = exact(odd_separation(n, 3)?) * &third;
    let (a, b) = fold(n, 3)?;
    let t3_exact = exact(w_distance(&a, &b, q)?.cost) * &third;
    Ok(ViolationReport {
        n,
        violated: t3_exact > t2,
        t2_normalized: t2,
        t3_normalized_lower: t3_lower,
        t3_normalized_exact: t3_exact,
    })
}

/// `1 - p_{n,k+1} / p_{n,k}`, computed from the weights.
pub fn descent_ratio(n: u64, k: u64) -> Rational {
    let p = sigma_right_half(n);
    Rational::one() - weight_or_zero(&p, k + 1) / &p[k as usize]
}

/// `p_{n,k} / p_{n,k+1} - 1`, computed from the weights.
pub fn ascent_ratio(n: u64, k: u64) -> Rational {
    let p = sigma_right_half(n);
    &p[k as usize] / &p[k as usize + 1] - Rational::one()
}

fn weight_or_zero(p: &[Rational], k: u64) -> Rational {
    p.get(k as usize).cloned().unwrap_or_else(Rational::zero)
}

/// Checks `1 - p_{k+1}/p_k = (2k+1)/(2n+k)` for `0 <= k <= 2n-1` and
/// `p_k/p_{k+1} - 1 = (2k+1)/(2n-k-1)` for `0 <= k <= 2n-2`, plus the
/// monotonicity `p_{n,k} >= p_{n,k+1}`. Returns the first failing `k`.
pub fn check_ratio_identities(n: u64) -> std::result::Result<(), String> {
    if n == 0 {
        return Err("n must be >= 1".into());
    }
    let p = sigma_right_half(n);
    let (ni, top) = (n as i64, 2 * n);
    for k in 0..top {
        let ki = k as i64;
        let next = weight_or_zero(&p, k + 1);
        if p[k as usize] < next {
            return Err(format!("p_{{{n},{k}}} < p_{{{n},{}}}", k + 1));
        }
        let descent = Rational::one() - &next / &p[k as usize];
        if descent != frac(2 * ki + 1, 2 * ni + ki) {
            return Err(format!("descent identity fails at n={n}, k={k}: {descent}"));
        }
        if k + 1 < top {
            let ascent = &p[k as usize] / &next - Rational::one();
            if ascent != frac(2 * ki + 1, 2 * ni - ki - 1) {
                return Err(format!("ascent identity fails at n={n}, k={k}: {ascent}"));
            }
        }
    }
    Ok(())
}

/// One line of an asymptotic sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub n: u64,
    /// `T_r(sigma_n, tau_n)`, or the reason it could not be computed.
    pub cost: std::result::Result<CostValue, String>,
    pub sqrt_n_scaled: Option<f64>,
    /// Exact sandwich bounds, quadratic cost only.
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

impl SweepRow {
    pub fn is_exact(&self) -> bool {
        matches!(&self.cost, Ok(c) if c.is_exact())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub exponent: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// `sqrt(n) T` at the largest `n` that was computed.
    pub fn limit_estimate(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.sqrt_n_scaled.map(|s| (r.n, s)))
            .max_by_key(|(n, _)| *n)
            .map(|(_, s)| s)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    /// Supports larger than this use `f64` weights.
    pub exact_limit: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            exact_limit: EXACT_SUPPORT_LIMIT,
        }
    }
}

fn sweep_row(n: u64, cost: CostSpec, opts: SweepOptions) -> SweepRow {
    let bounds = if cost.integer_exponent() == Some(2) && n > 0 {
        sandwich_bounds(n).ok()
    } else {
        None
    };
    let value = if n == 0 {
        Err("n must be >= 1".to_string())
    } else if (4 * n + 1) as usize > opts.exact_limit {
        if cost.is_convex() {
            let s = FloatMeasure::rademacher_sum(4 * n - 2);
            let t = FloatMeasure::rademacher_sum(4 * n);
            Ok(CostValue::Approx(monotone_cost_f64(&s, &t, cost)))
        } else {
            Err(format!("support {} exceeds the exact limit and r < 1 needs the LP oracle", 4 * n + 1))
        }
    } else {
        family(n)
            .and_then(|f| w_distance(&f.sigma, &f.tau, cost))
            .map(|r| r.cost)
            .map_err(|e| e.to_string())
    };
    let scaled = value.as_ref().ok().map(|c| (n as f64).sqrt() * c.to_f64());
    let (lower, upper) = match bounds {
        Some((l, u)) => (Some(l), Some(u)),
        None => (None, None),
    };
    SweepRow {
        n,
        cost: value,
        sqrt_n_scaled: scaled,
        lower,
        upper,
    }
}

/// `T_r(sigma_n, tau_n)` and `sqrt(n) T_r` over a grid of `n`. Entries are
/// computed in parallel and returned in input order; a failing entry is
/// recorded and the sweep continues.
pub fn asymptotic_sweep(n_values: &[u64], cost: CostSpec, opts: SweepOptions) -> Result<SweepTable> {
    if n_values.is_empty() {
        return Err(Error::Precondition("sweep needs at least one n".into()));
    }
    let rows = n_values.par_iter().map(|&n| sweep_row(n, cost, opts)).collect();
    Ok(SweepTable {
        exponent: cost.exponent(),
        rows,
    })
}

/// Pair whose `k`-fold convolutions sit in different residue classes mod `p`
/// unless `p | k`.
///
/// The step variable is `Z = 1` with probability `(p-1)/p` and `Z = 1 - p`
/// with probability `1/p` (mean zero, `Z = 1 mod p`); `mu` is the law of
/// `pn + 1` such steps and `nu` the law of `pn` steps.
pub fn pfold_family(p: u64, n: u64) -> Result<(LatticeMeasure, LatticeMeasure)> {
    if p < 2 || n == 0 {
        return Err(Error::Precondition(format!("pfold family needs p >= 2 and n >= 1, got p={p}, n={n}")));
    }
    let down = 1 - p as i64;
    let prob = frac(p as i64 - 1, p as i64);
    Ok((
        LatticeMeasure::binomial_walk(p * n + 1, 1, down, &prob)?,
        LatticeMeasure::binomial_walk(p * n, 1, down, &prob)?,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PfoldSeparation {
    pub k: u64,
    pub support_bound: CostValue,
    pub cost: CostValue,
}

/// Separation of `k`-fold convolutions for every `k <= k_max` not divisible by `p`.
pub fn pfold_separations(p: u64, n: u64, k_max: u64) -> Result<Vec<PfoldSeparation>> {
    let (mu, nu) = pfold_family(p, n)?;
    let q = CostSpec::quadratic();
    (1..=k_max)
        .filter(|k| k % p != 0)
        .map(|k| {
            let a = mu.convolution_power(k)?;
            let b = nu.convolution_power(k)?;
            Ok(PfoldSeparation {
                k,
                support_bound: crate::transport::support_distance_lower_bound(&a, &b, q),
                cost: w_distance(&a, &b, q)?.cost,
            })
        })
        .collect()
}

/// `T(mu^(p), nu^(p))` for the p-fold family at index `n`.
pub fn pfold_normalized_cost(p: u64, n: u64) -> Result<CostValue> {
    let (mu, nu) = pfold_family(p, n)?;
    Ok(w_distance(&mu.normalized_power(p)?, &nu.normalized_power(p)?, CostSpec::quadratic())?.cost)
}

/// `sum mass` of the off-diagonal moves; handy for summaries.
pub fn moved_mass(plan: &TransportPlan) -> Rational {
    let mut acc = RationalSum::new();
    for mv in plan.moves() {
        if plan.source().value(mv.from) != plan.target().value(mv.to) {
            acc.add(&mv.mass);
        }
    }
    acc.finish()
}

impl SweepRow {
    pub fn cost_f64(&self) -> Option<f64> {
        self.cost.as_ref().ok().map(CostValue::to_f64)
    }

    pub fn lower_f64(&self) -> Option<f64> {
        self.lower.as_ref().and_then(|q| q.to_f64())
    }

    pub fn upper_f64(&self) -> Option<f64> {
        self.upper.as_ref().and_then(|q| q.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::binomial_sigma_weight;
    use crate::transport::{cyclic_monotonicity_check, transport_cost};

    #[test]
    fn family_basics() {
        let f1 = family(1).unwrap();
        assert_eq!(f1.sigma, rho());
        let f2 = family(2).unwrap();
        assert_eq!(f2.tau.weight_at(0), frac(70, 256));
        assert_eq!(f2.tau, f2.sigma.convolve(&rho()).unwrap());
        assert!(family(0).is_err());
    }

    #[test]
    fn radiation_plan_at_one() {
        let plan = radiation_plan(1).unwrap();
        let off: Vec<_> = plan
            .moves()
            .iter()
            .filter(|m| plan.source().value(m.from) != plan.target().value(m.to))
            .map(|m| (plan.source().points()[m.from], plan.target().points()[m.to], m.mass.clone()))
            .collect();
        // 1/8 of p_{1,0} = 1/2 split over both sides; (1/4) p_{1,1} (3/3) = 1/16 outward from +-2
        assert_eq!(
            off,
            vec![(-2, -4, frac(1, 16)), (0, -2, frac(1, 16)), (0, 2, frac(1, 16)), (2, 4, frac(1, 16))]
        );
    }

    #[test]
    fn radiation_plan_cost_at_two() {
        let plan = radiation_plan(2).unwrap();
        assert_eq!(transport_cost(&plan, CostSpec::quadratic()), CostValue::Exact(frac(5, 8)));
        assert!(cyclic_monotonicity_check(&plan, CostSpec::quadratic(), 3).unwrap().is_ok());
    }

    #[test]
    fn radiation_plan_is_reflection_symmetric() {
        for n in 1..8 {
            let plan = radiation_plan(n).unwrap();
            let (s, t) = (plan.source(), plan.target());
            let mut mirrored: Vec<Move> = plan
                .moves()
                .iter()
                .map(|m| Move {
                    from: s.len() - 1 - m.from,
                    to: t.len() - 1 - m.to,
                    mass: m.mass.clone(),
                })
                .collect();
            mirrored.sort();
            let mut original = plan.moves().to_vec();
            original.sort();
            assert_eq!(original, mirrored);
        }
    }

    #[test]
    fn sandwich_small() {
        let s = sandwich(2).unwrap();
        assert_eq!(s.exact_cost, frac(5, 8));
        assert!(s.lower <= s.exact_cost && s.exact_cost <= s.upper);
        let s1 = sandwich(1).unwrap();
        assert_eq!((s1.lower, s1.exact_cost, s1.upper), (frac(1, 4), frac(1, 1), frac(5, 4)));
    }

    #[test]
    fn sandwich_sums_match_weight_formula() {
        for n in 1..10u64 {
            let (lower, upper) = sandwich_bounds(n).unwrap();
            let ni = n as i64;
            let up = crate::exact::sum(
                &(0..2 * ni)
                    .map(|k| binomial_sigma_weight(n, k) * frac(2 * k + 1, ni))
                    .collect::<Vec<_>>(),
            );
            let lo = crate::exact::sum(
                &(0..2 * ni - 1)
                    .map(|k| binomial_sigma_weight(n, k + 1) * frac(2 * k + 1, ni))
                    .collect::<Vec<_>>(),
            );
            assert_eq!((lower, upper), (lo, up));
        }
    }

    #[test]
    fn separation_and_violation() {
        for n in 1..6 {
            assert_eq!(odd_separation(n, 1).unwrap(), CostValue::Exact(frac(1, 1)));
            assert_eq!(odd_separation(n, 3).unwrap(), CostValue::Exact(frac(1, 1)));
        }
        assert!(odd_separation(2, 2).is_err());
        let v = monotonicity_violation(2).unwrap();
        assert_eq!(v.t2_normalized, frac(5, 16));
        assert_eq!(v.t3_normalized_lower, frac(1, 3));
        assert!(v.t3_normalized_exact > frac(1, 3));
        assert!(v.violated);
        assert!(monotonicity_violation(1).is_err());
    }

    #[test]
    fn ratio_helpers() {
        assert_eq!(descent_ratio(3, 2), frac(5, 8));
        assert_eq!(ascent_ratio(3, 2), frac(5, 3));
        assert_eq!(descent_ratio(3, 5), frac(1, 1));
        for n in 1..12 {
            check_ratio_identities(n).unwrap();
        }
    }

    #[test]
    fn pfold_two_is_parity() {
        let (mu, nu) = pfold_family(2, 3).unwrap();
        assert_eq!(mu, LatticeMeasure::rademacher_sum(7));
        assert_eq!(nu, LatticeMeasure::rademacher_sum(6));
        assert!(pfold_family(1, 3).is_err());
    }

    #[test]
    fn pfold_three_residues() {
        let seps = pfold_separations(3, 4, 5).unwrap();
        assert_eq!(seps.iter().map(|s| s.k).collect::<Vec<_>>(), vec![1, 2, 4, 5]);
        for s in &seps {
            assert!(s.support_bound.to_f64() >= 1.0);
            assert!(s.cost.to_f64() >= s.support_bound.to_f64());
        }
    }

    #[test]
    fn float_sweep_path_matches_exact() {
        let q = CostSpec::quadratic();
        let exact = asymptotic_sweep(&[8, 16], q, SweepOptions::default()).unwrap();
        let approx = asymptotic_sweep(&[8, 16], q, SweepOptions { exact_limit: 10 }).unwrap();
        for (a, b) in exact.rows.iter().zip(&approx.rows) {
            assert!(a.is_exact() && !b.is_exact());
            assert!((a.cost_f64().unwrap() - b.cost_f64().unwrap()).abs() < 1e-12);
            assert_eq!(a.lower, b.lower);
        }
        assert!(asymptotic_sweep(&[], q, SweepOptions::default()).is_err());
    }
}
