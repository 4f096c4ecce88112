use super::CostSpec;
use crate::measure::FloatMeasure;

/// Monotone-coupling cost between two `f64` measures.
///
/// Mass is consumed from the remaining budget of each atom rather than from
/// cumulative sums, so rounding in the weights cannot create phantom moves
/// between distant atoms.
pub fn monotone_cost_f64(mu: &FloatMeasure, nu: &FloatMeasure, cost: CostSpec) -> f64 {
    let (xa, wa) = (mu.values(), mu.weights());
    let (xb, wb) = (nu.values(), nu.weights());
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (wa[0], wb[0]);
    let mut total = 0.0;
    let mut comp = 0.0;
    let mut add = |m: f64, i: usize, j: usize| {
        let y = m * cost.eval_f64(xa[i] - xb[j]) - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
    };
    loop {
        let last_a = i + 1 == xa.len();
        let last_b = j + 1 == xb.len();
        match (last_a, last_b) {
            (true, true) => {
                add(ra.max(rb).max(0.0), i, j);
                break;
            }
            // the last atom on one side absorbs whatever the other side still holds
            (true, false) => {
                add(rb, i, j);
                ra -= rb;
                j += 1;
                rb = wb[j];
            }
            (false, true) => {
                add(ra, i, j);
                rb -= ra;
                i += 1;
                ra = wa[i];
            }
            (false, false) => {
                let m = ra.min(rb);
                add(m, i, j);
                ra -= m;
                rb -= m;
                if ra <= 0.0 {
                    i += 1;
                    ra = wa[i];
                }
                if rb <= 0.0 {
                    j += 1;
                    rb = wb[j];
                }
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::LatticeMeasure;
    use crate::transport::{w_distance, CostSpec};

    #[test]
    fn agrees_with_exact_path() {
        for (a, b) in [(1, 2), (3, 8), (7, 8), (21, 24), (30, 5)] {
            let mu = LatticeMeasure::rademacher_sum(a);
            let nu = LatticeMeasure::rademacher_sum(b);
            for r in [1.0, 2.0, 3.0] {
                let cost = CostSpec::new(r).unwrap();
                let exact = w_distance(&mu, &nu, cost).unwrap().cost.to_f64();
                let approx = monotone_cost_f64(&mu.to_float(), &nu.to_float(), cost);
                assert!((exact - approx).abs() <= 1e-12 * exact.max(1.0), "{a} {b} {r}: {exact} vs {approx}");
            }
        }
    }
}
