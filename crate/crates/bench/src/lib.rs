//! Shared inputs for the criterion benches.

use w2lab::counterexample::family;
use w2lab::fuzz::{random_dyadic_measure, trial_rng};
use w2lab::LatticeMeasure;

/// `(sigma_n, tau_n)`.
pub fn sigma_tau(n: u64) -> (LatticeMeasure, LatticeMeasure) {
    let f = family(n).expect("n >= 1");
    (f.sigma, f.tau)
}

/// Seeded pair with supports of at most `support` atoms on `[-span, span]`.
pub fn random_pair(seed: u64, support: usize, span: i64) -> (LatticeMeasure, LatticeMeasure) {
    let mut rng = trial_rng(seed, 0);
    (
        random_dyadic_measure(&mut rng, support, -span, span, 10),
        random_dyadic_measure(&mut rng, support, -span, span, 10),
    )
}
