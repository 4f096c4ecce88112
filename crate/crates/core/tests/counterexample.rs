use num_traits::ToPrimitive;

use w2lab::counterexample::{
    asymptotic_sweep, check_ratio_identities, clt_limit, family, monotonicity_violation, odd_separation,
    pfold_normalized_cost, radiation_plan, radiation_plan_unchecked, sandwich_bounds, SweepOptions,
};
use w2lab::exact::frac;
use w2lab::{binomial_sigma_weight, transport_cost, w_distance, CostSpec, CostValue, Move};

#[test]
fn family_convolution_identities() {
    let rho = w2lab::counterexample::rho();
    for n in 1..=24 {
        let f = family(n).unwrap();
        assert_eq!(f.sigma, f.mu.convolve(&f.mu).unwrap(), "n={n}");
        assert_eq!(f.tau, f.nu.convolve(&f.nu).unwrap(), "n={n}");
        assert_eq!(f.tau, f.sigma.convolve(&rho).unwrap(), "n={n}");
    }
}

#[test]
fn radiation_plan_marginals_and_optimality_up_to_64() {
    let q = CostSpec::quadratic();
    for n in 1..=64 {
        let plan = radiation_plan(n).unwrap();
        let f = family(n).unwrap();
        assert_eq!(plan.source_marginal().unwrap(), f.sigma.weights());
        assert_eq!(plan.target_marginal().unwrap(), f.tau.weights());
        assert_eq!(transport_cost(&plan, q), w_distance(&f.sigma, &f.tau, q).unwrap().cost, "n={n}");
    }
}

#[test]
fn corrupted_plan_is_rejected() {
    let plan = radiation_plan_unchecked(3).unwrap();
    let mut moves = plan.moves().to_vec();
    moves[0].mass = &moves[0].mass + frac(1, 1024);
    let broken = w2lab::TransportPlan::new(plan.source().clone(), plan.target().clone(), moves);
    assert!(broken.is_err());
    let swapped: Vec<Move> = plan.moves().iter().map(|m| Move { from: m.from, to: m.to.min(2), mass: m.mass.clone() }).collect();
    assert!(w2lab::TransportPlan::new(plan.source().clone(), plan.target().clone(), swapped).is_err());
}

#[test]
fn sandwich_holds_and_weights_decrease() {
    for n in 1..=64u64 {
        let (lower, upper) = sandwich_bounds(n).unwrap();
        assert!(lower <= upper);
        for k in 0..(2 * n as i64) {
            assert!(binomial_sigma_weight(n, k) >= binomial_sigma_weight(n, k + 1));
        }
        check_ratio_identities(n).unwrap();
    }
    for n in [1u64, 2, 5, 17, 40] {
        let s = w2lab::sandwich(n).unwrap();
        assert!(s.lower <= s.exact_cost && s.exact_cost <= s.upper, "n={n}");
    }
}

#[test]
fn violation_holds_for_small_n() {
    for n in 2..=20 {
        let v = monotonicity_violation(n).unwrap();
        assert!(v.violated, "n={n}");
        assert!(v.t3_normalized_exact >= v.t3_normalized_lower);
        assert_eq!(odd_separation(n, 3).unwrap(), CostValue::Exact(frac(1, 1)));
    }
}

#[test]
fn sweep_bounds_and_first_order_cost() {
    let grid = [4u64, 16, 64, 256];
    let t = asymptotic_sweep(&grid, CostSpec::quadratic(), SweepOptions::default()).unwrap();
    let mut widths = Vec::new();
    for row in &t.rows {
        let cost = row.cost.as_ref().unwrap().exact().unwrap().clone();
        let (lo, up) = (row.lower.clone().unwrap(), row.upper.clone().unwrap());
        assert!(lo <= cost && cost <= up);
        widths.push((&up - &lo).to_f64().unwrap() * (row.n as f64).sqrt());
    }
    assert!(widths.windows(2).all(|w| w[1] < w[0]));
    assert!((t.limit_estimate().unwrap() - clt_limit()).abs() < 0.01);

    let linear = asymptotic_sweep(&grid, CostSpec::new(1.0).unwrap(), SweepOptions::default()).unwrap();
    assert!(linear.rows.iter().all(|r| r.lower.is_none() && r.is_exact()));
    assert!(linear.limit_estimate().unwrap() > 0.0);

    // r < 1 falls back to the LP, which refuses huge instances; the row records it
    let concave = asymptotic_sweep(&[2, 300], CostSpec::new(0.5).unwrap(), SweepOptions::default()).unwrap();
    assert!(concave.rows[0].cost.is_ok());
    assert!(concave.rows[1].cost.is_err());
}

#[test]
fn pfold_cost_decreases() {
    let costs: Vec<f64> = [2u64, 4, 8].iter().map(|&n| pfold_normalized_cost(3, n).unwrap().to_f64()).collect();
    assert!(costs.windows(2).all(|w| w[1] < w[0]), "{costs:?}");
}
