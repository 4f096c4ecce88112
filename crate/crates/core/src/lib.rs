//! Exact one-dimensional optimal transport between finitely supported
//! measures, with tools for studying quadratic transport costs along
//! normalized convolution powers.
//!
//! Measures live on scaled integer lattices with exact rational weights (see
//! [`LatticeMeasure`]). Costs `|x - y|^r` are solved by the monotone coupling
//! for `r >= 1` and by an exact transportation simplex otherwise.

pub mod counterexample;
pub mod error;
pub mod exact;
pub mod fuzz;
pub mod gaussian;
pub mod io;
pub mod measure;
pub mod surd;
pub mod transport;

pub use counterexample::{
    asymptotic_sweep, family, monotonicity_violation, odd_separation, pfold_family, radiation_plan, sandwich,
    Family, SandwichBounds, SweepOptions, SweepRow, SweepTable, ViolationReport,
};
pub use error::{Error, Result};
pub use exact::Rational;
pub use gaussian::{
    gaussian_monotone_trace, logconcave_variant_trace, matched_gaussian, w2_to_gaussian, GaussianSpec, MonotoneTrace,
};
pub use measure::{binomial_sigma_weight, FloatMeasure, LatticeMeasure, MomentSummary, EXACT_SUPPORT_LIMIT};
pub use surd::Surd;
pub use transport::{
    cyclic_monotonicity_check, halving_gap, lp_oracle, monotone_coupling, support_distance_lower_bound, tanaka_gap,
    transport_cost, w_distance, CostSpec, CostValue, CycleVerdict, Move, OTResult, TransportPlan,
};
