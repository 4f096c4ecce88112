//! Quadratic transport cost between a discrete measure and a Gaussian, and
//! traces of that cost along normalized convolution powers.

use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::Rational;
use crate::measure::{FloatMeasure, LatticeMeasure};
use crate::surd::Surd;
use crate::transport::{w_distance, CostSpec};

/// Ties within this tolerance count as nonincreasing.
pub const TRACE_TOLERANCE: f64 = 1e-12;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// `Phi(x)`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `1 - Phi(x)` without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// `Phi^{-1}(p)` by Wichura's AS241 (PPND16), relative accuracy about `1e-16`.
/// Returns `-inf` / `inf` at `p = 0` / `p = 1` and NaN outside `[0, 1]`.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_6,
        1.331_416_678_917_843_8e2,
        1.971_590_950_306_551_3e3,
        1.373_169_376_550_946_1e4,
        4.592_195_393_154_987_1e4,
        6.726_577_092_700_870_1e4,
        3.343_057_558_358_812_8e4,
        2.509_080_928_730_122_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091_1e1,
        6.871_870_074_920_579_1e2,
        5.394_196_021_424_751_1e3,
        2.121_379_430_158_659_6e4,
        3.930_789_580_009_271_1e4,
        2.872_908_573_572_194_3e4,
        5.226_495_278_852_854_6e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_6,
        4.630_337_846_156_545_3,
        5.769_497_221_460_691_4,
        3.647_848_324_763_204_6,
        1.270_458_252_452_368_4,
        2.417_807_251_774_506_1e-1,
        2.272_384_498_926_918_5e-2,
        7.745_450_142_783_414_1e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_8,
        1.676_384_830_183_803_8,
        6.897_673_349_851e-1,
        1.481_039_764_274_800_7e-1,
        1.519_866_656_361_645_7e-2,
        5.475_938_084_995_345e-4,
        1.050_750_071_644_416_8e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_8,
        5.463_784_911_164_114_4,
        1.784_826_539_917_291_3,
        2.965_605_718_285_048_9e-1,
        2.653_218_952_657_612_3e-2,
        1.242_660_947_388_078_4e-3,
        2.711_555_568_743_487_6e-5,
        2.010_334_399_292_288_1e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879_4e-1,
        1.369_298_809_227_358e-1,
        1.487_536_129_085_061_5e-2,
        7.868_691_311_456_132_6e-4,
        1.846_318_317_510_054_7e-5,
        1.421_511_758_316_445_9e-7,
        2.044_263_103_389_939_8e-15,
    ];
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    if tail == 0.0 {
        return if q < 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    let r = (-tail.ln()).sqrt();
    let z = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -z
    } else {
        z
    }
}

/// `x` with `1 - Phi(x) = q`, accurate for tiny `q`.
pub fn normal_upper_quantile(q: f64) -> f64 {
    -normal_quantile(q)
}

/// Gaussian law by mean and variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianSpec {
    mean: f64,
    variance: f64,
}

impl GaussianSpec {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::ZeroVariance);
        }
        Ok(Self { mean, variance })
    }

    pub fn standard() -> Self {
        Self {
            mean: 0.0,
            variance: 1.0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// `G^{-1}(u)`.
    pub fn quantile(&self, u: f64) -> f64 {
        self.mean + self.std_dev() * normal_quantile(u)
    }
}

/// Gaussian with the same mean and variance as `mu`.
pub fn matched_gaussian(mu: &LatticeMeasure) -> Result<GaussianSpec> {
    let m = mu.moments();
    if m.variance.is_zero() {
        return Err(Error::ZeroVariance);
    }
    GaussianSpec::new(m.mean_f64(), m.variance_f64())
}

/// `int_0^1 (F^{-1}(u) - G^{-1}(u))^2 du` from sorted atoms and the standard
/// normal quantiles `z_i` of their interior cumulative breakpoints.
///
/// Per atom, `int z du = -phi(z)` and `int z^2 du = u - z phi(z)`; summed over
/// all atoms this collapses to
/// `E(X - m)^2 + s^2 - 2 s sum_i phi(z_i) (x_{i+1} - x_i)`.
fn quantile_cost(values: &[f64], weights: &[f64], breaks: &[f64], g: &GaussianSpec) -> f64 {
    let s = g.std_dev();
    let mut spread = 0.0;
    for (x, w) in values.iter().zip(weights) {
        let d = x - g.mean;
        spread += w * d * d;
    }
    let cross: f64 = breaks
        .iter()
        .zip(values.windows(2))
        .map(|(z, pair)| normal_pdf(*z) * (pair[1] - pair[0]))
        .sum();
    (spread + g.variance - 2.0 * s * cross).max(0.0)
}

/// Quadratic transport cost `T(mu, g)` between `mu` and the Gaussian `g`.
///
/// Breakpoints above one half are evaluated from the exact upper tail
/// `1 - F(x_i)`, so the far quantiles keep full relative precision.
pub fn w2_to_gaussian(mu: &LatticeMeasure, g: &GaussianSpec) -> f64 {
    let n = mu.len();
    let values: Vec<f64> = (0..n).map(|i| mu.value_f64(i)).collect();
    let weights: Vec<f64> = mu.weights().iter().map(|w| w.to_f64().unwrap_or(0.0)).collect();
    let cum = mu.cumulative();
    let half = Rational::new(1.into(), 2.into());
    let breaks: Vec<f64> = cum[..n - 1]
        .iter()
        .map(|f| {
            if f <= &half {
                normal_quantile(f.to_f64().unwrap_or(0.0))
            } else {
                normal_upper_quantile((Rational::one() - f).to_f64().unwrap_or(0.0))
            }
        })
        .collect();
    quantile_cost(&values, &weights, &breaks, g)
}

/// [`w2_to_gaussian`] for `f64` measures; cumulative sums are taken from both ends.
pub fn w2_to_gaussian_f64(mu: &FloatMeasure, g: &GaussianSpec) -> f64 {
    let (values, weights) = (mu.values(), mu.weights());
    let n = values.len();
    let mut lower = vec![0.0; n];
    let mut acc = 0.0;
    for i in 0..n {
        acc += weights[i];
        lower[i] = acc;
    }
    let mut upper = vec![0.0; n];
    acc = 0.0;
    for i in (0..n).rev() {
        upper[i] = acc;
        acc += weights[i];
    }
    let breaks: Vec<f64> = (0..n - 1)
        .map(|i| {
            if lower[i] <= 0.5 {
                normal_quantile(lower[i])
            } else {
                normal_upper_quantile(upper[i])
            }
        })
        .collect();
    quantile_cost(values, weights, &breaks, g)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub n: u64,
    pub distance: f64,
}

/// A sequence of costs indexed by `n = 1, 2, ...` with both monotonicity verdicts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotoneTrace {
    pub entries: Vec<TraceEntry>,
    /// No step rises by more than [`TRACE_TOLERANCE`].
    pub nonincreasing: bool,
    /// Every step falls by more than [`TRACE_TOLERANCE`].
    pub strictly_decreasing: bool,
    /// First `n` whose value exceeds its predecessor beyond the tolerance.
    pub first_increase_at: Option<u64>,
}

impl MonotoneTrace {
    pub fn from_entries(entries: Vec<TraceEntry>) -> Self {
        let first_increase_at = entries
            .windows(2)
            .find(|w| w[1].distance > w[0].distance + TRACE_TOLERANCE)
            .map(|w| w[1].n);
        let strictly_decreasing = entries
            .windows(2)
            .all(|w| w[1].distance < w[0].distance - TRACE_TOLERANCE);
        Self {
            nonincreasing: first_increase_at.is_none(),
            strictly_decreasing,
            first_increase_at,
            entries,
        }
    }

    /// `(n, distance, distance - previous)`; the first delta is zero.
    pub fn deltas(&self) -> Vec<(u64, f64, f64)> {
        let mut prev = None;
        self.entries
            .iter()
            .map(|e| {
                let d = prev.map_or(0.0, |p| e.distance - p);
                prev = Some(e.distance);
                (e.n, e.distance, d)
            })
            .collect()
    }

    pub fn first(&self) -> Option<f64> {
        self.entries.first().map(|e| e.distance)
    }

    pub fn last(&self) -> Option<f64> {
        self.entries.last().map(|e| e.distance)
    }
}

/// `mu^{*1}, ..., mu^{*n_max}` built incrementally.
fn convolution_powers(mu: &LatticeMeasure, n_max: u64) -> Result<Vec<LatticeMeasure>> {
    let mut out = Vec::with_capacity(n_max as usize);
    let mut cur = mu.clone();
    out.push(cur.clone());
    for _ in 1..n_max {
        cur = cur.convolve(mu)?;
        out.push(cur.clone());
    }
    Ok(out)
}

fn normalize(power: &LatticeMeasure, n: u64) -> Result<LatticeMeasure> {
    if n == 1 {
        Ok(power.clone())
    } else {
        power.scale(&Surd::inv_sqrt(n)?)
    }
}

fn check_trace_args(mu: &LatticeMeasure, n_max: u64) -> Result<()> {
    if n_max < 2 {
        return Err(Error::Precondition("trace needs n_max >= 2".into()));
    }
    let mean = mu.moments().mean;
    if !mean.is_zero() {
        return Err(Error::NonzeroBarycenter(mean.to_string()));
    }
    Ok(())
}

/// `T(mu^(n), gamma)` for `n = 1..=n_max` against the Gaussian matched to `mu`.
/// The verdicts are reported, not enforced.
pub fn gaussian_monotone_trace(mu: &LatticeMeasure, n_max: u64) -> Result<MonotoneTrace> {
    check_trace_args(mu, n_max)?;
    let g = matched_gaussian(mu)?;
    let powers = convolution_powers(mu, n_max)?;
    let entries = powers
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let n = i as u64 + 1;
            Ok(TraceEntry {
                n,
                distance: w2_to_gaussian(&normalize(p, n)?, &g),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MonotoneTrace::from_entries(entries))
}

/// Why a measure failed the discrete log-concavity check.
#[derive(Clone, Debug, PartialEq)]
pub struct LogConcavityFailure {
    /// Lattice index (from the leftmost atom, in units of the covering pitch).
    pub index: u64,
    pub detail: String,
}

/// Checks `w_k^2 >= w_{k-1} w_{k+1}` on the coarsest lattice that covers the
/// support, with zero weight at uncovered points. A zero strictly between
/// positive weights therefore fails.
pub fn check_log_concave(mu: &LatticeMeasure) -> std::result::Result<(), LogConcavityFailure> {
    let pts = mu.points();
    if pts.len() < 3 {
        return Ok(());
    }
    let pitch = pts
        .windows(2)
        .map(|w| (w[1] - w[0]) as u64)
        .fold(0, num_integer::gcd);
    let span = ((pts[pts.len() - 1] - pts[0]) as u64 / pitch) as usize;
    let mut dense = vec![Rational::zero(); span + 1];
    for (p, w) in pts.iter().zip(mu.weights()) {
        dense[((p - pts[0]) as u64 / pitch) as usize] = w.clone();
    }
    for k in 1..span {
        if &dense[k] * &dense[k] < &dense[k - 1] * &dense[k + 1] {
            return Err(LogConcavityFailure {
                index: k as u64,
                detail: format!(
                    "w^2 = {} < {} = w_prev * w_next",
                    &dense[k] * &dense[k],
                    &dense[k - 1] * &dense[k + 1]
                ),
            });
        }
    }
    Ok(())
}

/// `T(mu^(n), nu^(n))` for `n = 1..=n_max` with `nu` discrete log-concave.
pub fn logconcave_variant_trace(mu: &LatticeMeasure, nu: &LatticeMeasure, n_max: u64) -> Result<MonotoneTrace> {
    if n_max < 2 {
        return Err(Error::Precondition("trace needs n_max >= 2".into()));
    }
    check_log_concave(nu).map_err(|f| Error::NotLogConcave(format!("index {}: {}", f.index, f.detail)))?;
    let mp = convolution_powers(mu, n_max)?;
    let np = convolution_powers(nu, n_max)?;
    let entries = mp
        .par_iter()
        .zip(np.par_iter())
        .enumerate()
        .map(|(i, (a, b))| {
            let n = i as u64 + 1;
            let cost = w_distance(&normalize(a, n)?, &normalize(b, n)?, CostSpec::quadratic())?.cost;
            Ok(TraceEntry {
                n,
                distance: cost.to_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MonotoneTrace::from_entries(entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::frac;

    #[test]
    fn quantile_known_values() {
        assert_eq!(normal_quantile(0.5), 0.0);
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-14);
        assert!((normal_quantile(1e-10) + 6.361_340_902_404_056).abs() < 1e-12);
        assert!((normal_quantile(1e-300) + 37.047_096_299_361_2).abs() < 1e-9);
        assert_eq!(normal_quantile(0.0), f64::NEG_INFINITY);
        assert!(normal_quantile(1.5).is_nan());
    }

    #[test]
    fn quantile_roundtrip() {
        // Phi(x) keeps only ~1e-16 absolute precision near one, so on the far
        // right the inversion goes through the upper tail instead
        for i in -600..=600 {
            let x = i as f64 / 100.0;
            if x <= 5.0 {
                assert!((normal_quantile(normal_cdf(x)) - x).abs() < 1e-9, "{x}");
            }
            if x >= -5.0 {
                assert!((normal_upper_quantile(normal_sf(x)) - x).abs() < 1e-9, "{x}");
            }
        }
    }

    fn riemann(mu: &LatticeMeasure, g: &GaussianSpec, panels: usize) -> f64 {
        let cum: Vec<f64> = mu.cumulative().iter().map(|c| c.to_f64().unwrap()).collect();
        let h = 1.0 / panels as f64;
        let mut idx = 0;
        let mut total = 0.0;
        for k in 0..panels {
            let u = (k as f64 + 0.5) * h;
            while u > cum[idx] {
                idx += 1;
            }
            let d = mu.value_f64(idx) - g.quantile(u);
            total += d * d * h;
        }
        total
    }

    #[test]
    fn rademacher_against_riemann() {
        let mu = LatticeMeasure::rademacher_sum(1);
        let v = w2_to_gaussian(&mu, &GaussianSpec::standard());
        // closed form 2 - 4 phi(0)
        assert!((v - (2.0 - 4.0 * INV_SQRT_2PI)).abs() < 1e-14);
        // the midpoint rule itself is off by about 1.08e-6 at 1e6 panels here
        // (endpoint singularity of the quantile), so this case uses 4e6 panels
        assert!((v - riemann(&mu, &GaussianSpec::standard(), 4_000_000)).abs() < 1e-6);
    }

    #[test]
    fn float_path_matches() {
        let mu = LatticeMeasure::rademacher_sum(9).normalized_power(3).unwrap();
        let g = matched_gaussian(&mu).unwrap();
        let a = w2_to_gaussian(&mu, &g);
        let b = w2_to_gaussian_f64(&mu.to_float(), &g);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn matched_gaussian_cases() {
        let g = matched_gaussian(&LatticeMeasure::rademacher_sum(1)).unwrap();
        assert_eq!((g.mean(), g.variance()), (0.0, 1.0));
        assert!(matches!(matched_gaussian(&LatticeMeasure::dirac(0)), Err(Error::ZeroVariance)));
        let mu = LatticeMeasure::on_integers(vec![-1, 2], vec![frac(2, 3), frac(1, 3)]).unwrap();
        let g1 = matched_gaussian(&mu).unwrap();
        let g4 = matched_gaussian(&mu.normalized_power(4).unwrap()).unwrap();
        assert!((g1.variance() - g4.variance()).abs() < 1e-15 && g4.mean().abs() < 1e-15);
    }

    #[test]
    fn discretized_gaussian_converges() {
        // atoms at the midpoint quantiles of m equal cells
        let mut prev = f64::INFINITY;
        for m in [4i64, 16, 64, 256] {
            let values: Vec<f64> = (0..m).map(|k| normal_quantile((k as f64 + 0.5) / m as f64)).collect();
            let fm = FloatMeasure::new(values, vec![1.0 / m as f64; m as usize]).unwrap();
            let v = w2_to_gaussian_f64(&fm, &GaussianSpec::standard());
            assert!(v > 0.0 && v < prev, "{m}: {v}");
            prev = v;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn traces() {
        let t = gaussian_monotone_trace(&LatticeMeasure::rademacher_sum(1), 12).unwrap();
        assert_eq!(t.entries.len(), 12);
        assert!(t.entries.iter().all(|e| e.distance.is_finite() && e.distance > 0.0));
        assert!(t.last().unwrap() < t.first().unwrap());
        let skew = LatticeMeasure::on_integers(vec![-1, 2], vec![frac(2, 3), frac(1, 3)]).unwrap();
        assert_eq!(gaussian_monotone_trace(&skew, 6).unwrap().entries.len(), 6);
        assert!(gaussian_monotone_trace(&LatticeMeasure::dirac(1), 4).is_err());
        assert!(gaussian_monotone_trace(&skew, 1).is_err());

        let same = logconcave_variant_trace(&skew, &skew, 5).unwrap();
        assert!(same.entries.iter().all(|e| e.distance == 0.0));
        assert!(same.nonincreasing && !same.strictly_decreasing);
    }

    #[test]
    fn log_concavity() {
        assert!(check_log_concave(&LatticeMeasure::rademacher_sum(7)).is_ok());
        assert!(check_log_concave(&LatticeMeasure::rademacher_sum(1)).is_ok());
        let gap = LatticeMeasure::on_integers(vec![0, 1, 3], vec![frac(1, 3); 3]).unwrap();
        assert_eq!(check_log_concave(&gap).unwrap_err().index, 2);
        let bimodal =
            LatticeMeasure::on_integers(vec![0, 1, 2], vec![frac(2, 5), frac(1, 5), frac(2, 5)]).unwrap();
        assert!(check_log_concave(&bimodal).is_err());
        let mu = LatticeMeasure::rademacher_sum(1);
        assert!(matches!(logconcave_variant_trace(&mu, &gap, 3), Err(Error::NotLogConcave(_))));
    }

    #[test]
    fn monotone_trace_flags() {
        let e = |v: &[f64]| {
            MonotoneTrace::from_entries(
                v.iter().enumerate().map(|(i, d)| TraceEntry { n: i as u64 + 1, distance: *d }).collect(),
            )
        };
        let t = e(&[3.0, 2.0, 2.5, 1.0]);
        assert_eq!((t.nonincreasing, t.first_increase_at), (false, Some(3)));
        assert!(e(&[3.0, 2.0, 1.0]).strictly_decreasing);
        let tie = e(&[1.0, 1.0 + 1e-13]);
        assert!(tie.nonincreasing && !tie.strictly_decreasing);
        assert_eq!(t.deltas()[2], (3, 2.5, 0.5));
    }
}
