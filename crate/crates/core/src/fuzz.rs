//! Seeded randomized checks of the transport inequalities.
//!
//! Trial `i` draws from a ChaCha8 stream keyed by `(seed, i)`, so results do
//! not depend on thread scheduling.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::exact::{frac, ratio, Rational};
use crate::measure::LatticeMeasure;
use crate::surd::Surd;
use crate::transport::{
    halving_gap, lp_oracle, monotone_coupling, tanaka_gap, transport_cost, CostMatrix, CostSpec, CostValue,
};

/// Float gaps above `-FLOAT_GAP_TOLERANCE` count as nonnegative.
pub const FLOAT_GAP_TOLERANCE: f64 = 1e-9;

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Measure on distinct integers in `[lo, hi]` with at most `max_support`
/// atoms and weights that are multiples of `2^-den_bits`.
pub fn random_dyadic_measure<R: Rng>(rng: &mut R, max_support: usize, lo: i64, hi: i64, den_bits: u32) -> LatticeMeasure {
    let width = (hi - lo + 1) as usize;
    let den = 1u64 << den_bits;
    let k = rng.gen_range(1..=max_support.min(width).min(den as usize));
    let mut points: Vec<i64> = sample(rng, width, k).into_iter().map(|i| lo + i as i64).collect();
    points.sort_unstable();
    // k - 1 distinct cuts in 1..den split den into k positive parts
    let mut cuts: Vec<u64> = sample(rng, den as usize - 1, k - 1).into_iter().map(|c| c as u64 + 1).collect();
    cuts.sort_unstable();
    cuts.push(den);
    let mut prev = 0;
    let weights = cuts
        .into_iter()
        .map(|c| {
            let w = ratio(BigInt::from(c - prev), BigInt::from(den));
            prev = c;
            w
        })
        .collect();
    LatticeMeasure::on_integers(points, weights).expect("valid random measure")
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuzzViolation {
    pub trial: u64,
    pub gap: CostValue,
    pub description: String,
}

/// Summary of a fuzz run; `min_gap` is over all trials.
#[derive(Clone, Debug, PartialEq)]
pub struct FuzzReport {
    pub name: &'static str,
    pub trials: u64,
    pub exact_trials: u64,
    pub min_gap: f64,
    pub min_exact_gap: Option<Rational>,
    pub violations: Vec<FuzzViolation>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn collect(name: &'static str, results: Vec<(u64, CostValue, String)>) -> Self {
        let mut report = FuzzReport {
            name,
            trials: results.len() as u64,
            exact_trials: 0,
            min_gap: f64::INFINITY,
            min_exact_gap: None,
            violations: Vec::new(),
        };
        for (trial, gap, description) in results {
            report.min_gap = report.min_gap.min(gap.to_f64());
            if let CostValue::Exact(q) = &gap {
                report.exact_trials += 1;
                if report.min_exact_gap.as_ref().map_or(true, |m| q < m) {
                    report.min_exact_gap = Some(q.clone());
                }
            }
            if !gap.is_nonnegative(FLOAT_GAP_TOLERANCE) {
                report.violations.push(FuzzViolation { trial, gap, description });
            }
        }
        report
    }
}

fn random_coefficient<R: Rng>(rng: &mut R, radicand: u64) -> Surd {
    let num = rng.gen_range(-3..=3);
    let den = rng.gen_range(1..=3);
    Surd::new(frac(num, den), radicand).expect("positive radicand")
}

/// Law of `x` shifted so its mean equals the mean of `target`.
fn match_mean(x: &LatticeMeasure, target: &LatticeMeasure) -> Result<LatticeMeasure> {
    let shift = target.moments().mean.coeff() - x.moments().mean.coeff();
    x.translate(&Surd::from_rational(shift))
}

fn tanaka_trial(seed: u64, trial: u64) -> Result<(u64, CostValue, String)> {
    let mut rng = trial_rng(seed, trial);
    let draw = |rng: &mut ChaCha8Rng| random_dyadic_measure(rng, 5, -6, 6, 4);
    let x = draw(&mut rng);
    let mut x2 = draw(&mut rng);
    let y = draw(&mut rng);
    let mut y2 = draw(&mut rng);
    if rng.gen_bool(0.5) {
        x2 = match_mean(&x2, &x)?;
    } else {
        y2 = match_mean(&y2, &y)?;
    }
    let radicand = [1, 2, 3][rng.gen_range(0..3)];
    let a = random_coefficient(&mut rng, radicand);
    let b = random_coefficient(&mut rng, radicand);
    let gap = tanaka_gap(&x, &x2, &y, &y2, &a, &b)?;
    Ok((trial, gap, format!("X={x} X'={x2} Y={y} Y'={y2} a={a} b={b}")))
}

/// Random instances of `T(aX + bY, aX' + bY') <= a^2 T(X, X') + b^2 T(Y, Y')`.
pub fn tanaka_fuzz(seed: u64, trials: u64) -> Result<FuzzReport> {
    let results = (0..trials)
        .into_par_iter()
        .map(|t| tanaka_trial(seed, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(FuzzReport::collect("tanaka", results))
}

fn centered<R: Rng>(rng: &mut R) -> Result<LatticeMeasure> {
    let x = random_dyadic_measure(rng, 4, -4, 4, 3);
    let mean = x.moments().mean;
    x.translate(&mean.neg())
}

fn halving_trial(seed: u64, trial: u64) -> Result<(u64, CostValue, String)> {
    // separate stream family from the Tanaka trials
    let mut rng = trial_rng(seed ^ 0x9e37_79b9_7f4a_7c15, trial);
    let mu = centered(&mut rng)?;
    let nu = centered(&mut rng)?;
    let m = rng.gen_range(1..=3);
    let gap = halving_gap(&mu, &nu, m)?;
    Ok((trial, gap, format!("mu={mu} nu={nu} m={m}")))
}

/// Random instances of `T(mu^(2m), nu^(2m)) <= T(mu^(m), nu^(m))` for centred measures.
pub fn halving_fuzz(seed: u64, trials: u64) -> Result<FuzzReport> {
    let results = (0..trials)
        .into_par_iter()
        .map(|t| halving_trial(seed, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(FuzzReport::collect("halving", results))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleMismatch {
    pub trial: u64,
    pub exponent: f64,
    pub monotone: CostValue,
    pub lp: CostValue,
}

/// Compares the monotone-coupling cost with the LP optimum on random pairs
/// (supports up to 8 on `[-10, 10]`, dyadic weights), for every exponent.
pub fn oracle_equivalence(seed: u64, pairs: u64, exponents: &[f64]) -> Result<Vec<OracleMismatch>> {
    let per_trial = (0..pairs)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let mu = random_dyadic_measure(&mut rng, 8, -10, 10, 6);
            let nu = random_dyadic_measure(&mut rng, 8, -10, 10, 6);
            let mut out = Vec::new();
            for &r in exponents {
                let cost = CostSpec::new(r)?;
                let monotone = transport_cost(&monotone_coupling(&mu, &nu), cost);
                let lp = lp_oracle(&mu, &nu, &CostMatrix::for_measures(&mu, &nu, cost))?.cost;
                if monotone != lp {
                    out.push(OracleMismatch { trial, exponent: r, monotone, lp });
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

/// Smallest gap as a short string: exact when every trial was exact.
pub fn describe_min_gap(report: &FuzzReport) -> String {
    match (&report.min_exact_gap, report.exact_trials == report.trials) {
        (Some(q), true) => format!("{} ({})", crate::io::rational_string(q), crate::io::fmt_sig12(q.to_f64().unwrap_or(f64::NAN))),
        _ => crate::io::fmt_sig12(report.min_gap),
    }
}

/// `true` when an exact gap is strictly negative.
pub fn has_negative_exact(report: &FuzzReport) -> bool {
    report.min_exact_gap.as_ref().is_some_and(|q| q.is_negative())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_measures_are_valid_and_seeded() {
        let a = random_dyadic_measure(&mut trial_rng(7, 3), 8, -10, 10, 6);
        let b = random_dyadic_measure(&mut trial_rng(7, 3), 8, -10, 10, 6);
        assert_eq!(a, b);
        assert!(a.len() <= 8);
        assert!(a.points().iter().all(|p| (-10..=10).contains(p)));
        assert!(a.weights().iter().all(|w| (w * Rational::from_integer(64.into())).is_integer()));
    }

    #[test]
    fn small_fuzz_runs_are_clean() {
        let t = tanaka_fuzz(42, 40).unwrap();
        assert!(t.passed() && t.trials == 40);
        assert!(t.exact_trials > 0);
        let h = halving_fuzz(42, 40).unwrap();
        assert!(h.passed(), "{:?}", h.violations);
        assert_eq!(tanaka_fuzz(42, 40).unwrap(), t);
        assert!(oracle_equivalence(1, 30, &[1.0, 2.0, 3.0]).unwrap().is_empty());
    }
}
