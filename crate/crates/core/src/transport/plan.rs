use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::{CostSpec, CostValue, PairCost};
use crate::error::{Error, Result};
use crate::exact::{common_denominator, numerator_over, ratio, Rational, RationalSum};
use crate::measure::LatticeMeasure;

/// `mass` travels from support index `from` of the source to index `to` of the target.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Move {
    pub from: usize,
    pub to: usize,
    pub mass: Rational,
}

/// Sparse coupling between two lattice measures.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    source: LatticeMeasure,
    target: LatticeMeasure,
    moves: Vec<Move>,
}

impl TransportPlan {
    /// Builds a plan and checks that its marginals are exactly `source` and `target`.
    pub fn new(source: LatticeMeasure, target: LatticeMeasure, moves: Vec<Move>) -> Result<Self> {
        let plan = Self::new_unchecked(source, target, moves);
        plan.verify()?;
        Ok(plan)
    }

    /// Builds a plan without checking it; see [`TransportPlan::verify`].
    pub fn new_unchecked(source: LatticeMeasure, target: LatticeMeasure, moves: Vec<Move>) -> Self {
        Self { source, target, moves }
    }

    pub fn source(&self) -> &LatticeMeasure {
        &self.source
    }

    pub fn target(&self) -> &LatticeMeasure {
        &self.target
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn into_moves(self) -> Vec<Move> {
        self.moves
    }

    /// Row sums of the coupling.
    pub fn source_marginal(&self) -> Result<Vec<Rational>> {
        self.marginal(self.source.len(), |m| m.from)
    }

    /// Column sums of the coupling.
    pub fn target_marginal(&self) -> Result<Vec<Rational>> {
        self.marginal(self.target.len(), |m| m.to)
    }

    fn marginal(&self, len: usize, key: impl Fn(&Move) -> usize) -> Result<Vec<Rational>> {
        let mut sums = vec![RationalSum::new(); len];
        for mv in &self.moves {
            let idx = key(mv);
            if idx >= len {
                return Err(Error::InvalidPlan(format!(
                    "move {} -> {} refers past the support (size {len})",
                    mv.from, mv.to
                )));
            }
            sums[idx].add(&mv.mass);
        }
        Ok(sums.into_iter().map(RationalSum::finish).collect())
    }

    /// Checks positivity of masses and exact equality of both marginals.
    pub fn verify(&self) -> Result<()> {
        if let Some(mv) = self.moves.iter().find(|m| !m.mass.is_positive()) {
            return Err(Error::InvalidPlan(format!(
                "nonpositive mass {} on move {} -> {}",
                mv.mass, mv.from, mv.to
            )));
        }
        let rows = self.source_marginal()?;
        if let Some(i) = (0..rows.len()).find(|&i| rows[i] != self.source.weights()[i]) {
            return Err(Error::InvalidPlan(format!(
                "source marginal at index {i} is {}, expected {}",
                rows[i],
                self.source.weights()[i]
            )));
        }
        let cols = self.target_marginal()?;
        if let Some(j) = (0..cols.len()).find(|&j| cols[j] != self.target.weights()[j]) {
            return Err(Error::InvalidPlan(format!(
                "target marginal at index {j} is {}, expected {}",
                cols[j],
                self.target.weights()[j]
            )));
        }
        Ok(())
    }
}

/// The monotone (quantile) coupling: both supports are walked in increasing
/// order and cumulative mass is matched greedily. When both remaining masses
/// run out together both indices advance, so no zero-mass move is emitted.
pub fn monotone_coupling(mu: &LatticeMeasure, nu: &LatticeMeasure) -> TransportPlan {
    let den = crate::exact::lcm(
        &common_denominator(mu.weights()),
        &common_denominator(nu.weights()),
    );
    let a: Vec<BigInt> = mu.weights().iter().map(|w| numerator_over(w, &den)).collect();
    let b: Vec<BigInt> = nu.weights().iter().map(|w| numerator_over(w, &den)).collect();
    let mut moves = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut ra = a[0].clone();
    let mut rb = b[0].clone();
    loop {
        let m = if ra < rb { ra.clone() } else { rb.clone() };
        ra -= &m;
        rb -= &m;
        moves.push(Move {
            from: i,
            to: j,
            mass: ratio(m, den.clone()),
        });
        let (a_done, b_done) = (ra.is_zero(), rb.is_zero());
        if a_done {
            i += 1;
            if i < a.len() {
                ra = a[i].clone();
            }
        }
        if b_done {
            j += 1;
            if j < b.len() {
                rb = b[j].clone();
            }
        }
        if i == a.len() || j == b.len() {
            break;
        }
    }
    debug_assert!(i == a.len() && j == b.len());
    TransportPlan::new_unchecked(mu.clone(), nu.clone(), moves)
}

/// `sum mass * |x_from - y_to|^r` over the plan's moves.
pub fn transport_cost(plan: &TransportPlan, cost: CostSpec) -> CostValue {
    let pc = PairCost::new(plan.source(), plan.target(), cost);
    if pc.is_exact() {
        let mut acc = RationalSum::new();
        for mv in plan.moves() {
            let c = pc.exact(mv.from, mv.to).expect("exact pair cost");
            acc.add_product(&mv.mass, &c);
        }
        CostValue::Exact(acc.finish())
    } else {
        let mut total = 0.0;
        let mut comp = 0.0;
        for mv in plan.moves() {
            // Kahan summation
            let term = num_traits::ToPrimitive::to_f64(&mv.mass).unwrap_or(f64::NAN) * pc.float(mv.from, mv.to);
            let y = term - comp;
            let t = total + y;
            comp = (t - total) - y;
            total = t;
        }
        CostValue::Approx(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::frac;

    fn mv(from: usize, to: usize, n: i64, d: i64) -> Move {
        Move { from, to, mass: frac(n, d) }
    }

    #[test]
    fn diagonal_self_coupling() {
        let mu = LatticeMeasure::on_integers(vec![-3, 1, 2], vec![frac(1, 6), frac(1, 2), frac(1, 3)]).unwrap();
        let plan = monotone_coupling(&mu, &mu);
        assert_eq!(plan.moves(), &[mv(0, 0, 1, 6), mv(1, 1, 1, 2), mv(2, 2, 1, 3)]);
        assert_eq!(transport_cost(&plan, CostSpec::quadratic()), CostValue::zero());
    }

    #[test]
    fn dirac_to_dirac() {
        let plan = monotone_coupling(&LatticeMeasure::dirac(-1), &LatticeMeasure::dirac(4));
        assert_eq!(plan.moves(), &[mv(0, 0, 1, 1)]);
        assert_eq!(transport_cost(&plan, CostSpec::quadratic()), CostValue::Exact(frac(25, 1)));
        assert_eq!(transport_cost(&plan, CostSpec::new(3.0).unwrap()), CostValue::Exact(frac(125, 1)));
    }

    #[test]
    fn signs_against_two_signs() {
        let plan = monotone_coupling(&LatticeMeasure::rademacher_sum(1), &LatticeMeasure::rademacher_sum(2));
        assert_eq!(plan.moves(), &[mv(0, 0, 1, 4), mv(0, 1, 1, 4), mv(1, 1, 1, 4), mv(1, 2, 1, 4)]);
        plan.verify().unwrap();
        assert_eq!(transport_cost(&plan, CostSpec::quadratic()), CostValue::Exact(frac(1, 1)));
    }

    #[test]
    fn verify_rejects_bad_plans() {
        let mu = LatticeMeasure::rademacher_sum(1);
        let nu = LatticeMeasure::rademacher_sum(1);
        let bad = TransportPlan::new(mu.clone(), nu.clone(), vec![mv(0, 0, 1, 2), mv(1, 1, 1, 4)]);
        assert!(matches!(bad, Err(Error::InvalidPlan(_))));
        let bad = TransportPlan::new(mu.clone(), nu.clone(), vec![mv(0, 0, 1, 2), mv(1, 2, 1, 2)]);
        assert!(matches!(bad, Err(Error::InvalidPlan(_))));
        let bad = TransportPlan::new(mu, nu, vec![mv(0, 0, 1, 2), mv(1, 1, 1, 2), mv(0, 1, 0, 1)]);
        assert!(matches!(bad, Err(Error::InvalidPlan(_))));
    }
}
