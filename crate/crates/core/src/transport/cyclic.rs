//! Cyclic monotonicity certificates for transport plans.
//!
//! A plan is `c`-cyclically monotone when no cyclic reassignment of targets
//! among its support pairs lowers the total cost. Cycles are enumerated up to
//! a fixed length; longer cycles are not inspected.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::{CostSpec, PairCost, TransportPlan};
use crate::error::{Error, Result};
use crate::exact::{common_denominator, numerator_over, Rational};

pub const DEFAULT_MAX_CYCLE_LEN: usize = 3;
pub const DEFAULT_CYCLE_BUDGET: u64 = 4_000_000_000;

/// A cycle of plan moves whose target permutation is strictly cheaper.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleWitness {
    /// Indices into `plan.moves()`; move `k` is reassigned the target of move `k + 1`.
    pub moves: Vec<usize>,
    pub plan_cost: f64,
    pub permuted_cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CycleVerdict {
    Ok { cycles_checked: u64 },
    Violation(CycleWitness),
    /// The budget ran out; every cycle shorter than `completed_len + 1` was checked.
    Partial {
        cycles_checked: u64,
        budget: u64,
        completed_len: usize,
    },
}

impl CycleVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, CycleVerdict::Ok { .. })
    }
}

trait CycleNum: Clone {
    fn zero() -> Self;
    fn plus(&self, other: &Self) -> Self;
    /// `self > other` beyond tolerance.
    fn exceeds(&self, other: &Self) -> bool;
    fn as_f64(&self) -> f64;
}

impl CycleNum for i128 {
    fn zero() -> Self {
        0
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn exceeds(&self, other: &Self) -> bool {
        self > other
    }
    fn as_f64(&self) -> f64 {
        *self as f64
    }
}

impl CycleNum for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn exceeds(&self, other: &Self) -> bool {
        self > other
    }
    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Copy)]
struct Tolerant(f64);

impl CycleNum for Tolerant {
    fn zero() -> Self {
        Tolerant(0.0)
    }
    fn plus(&self, other: &Self) -> Self {
        Tolerant(self.0 + other.0)
    }
    fn exceeds(&self, other: &Self) -> bool {
        self.0 > other.0 + 1e-12 * (1.0 + other.0.abs())
    }
    fn as_f64(&self) -> f64 {
        self.0
    }
}

pub fn cyclic_monotonicity_check(
    plan: &TransportPlan,
    cost: CostSpec,
    max_cycle_len: usize,
) -> Result<CycleVerdict> {
    cyclic_monotonicity_check_with_budget(plan, cost, max_cycle_len, DEFAULT_CYCLE_BUDGET)
}

/// Checks every cycle of at most `max_cycle_len` distinct plan moves, stopping
/// with [`CycleVerdict::Partial`] once `budget` cycles have been inspected.
pub fn cyclic_monotonicity_check_with_budget(
    plan: &TransportPlan,
    cost: CostSpec,
    max_cycle_len: usize,
    budget: u64,
) -> Result<CycleVerdict> {
    if max_cycle_len < 2 {
        return Err(Error::Precondition("cycle length must be at least 2".into()));
    }
    let moves = plan.moves();
    // compact ids for the rows and columns actually used
    let mut rows: Vec<usize> = moves.iter().map(|m| m.from).collect();
    let mut cols: Vec<usize> = moves.iter().map(|m| m.to).collect();
    rows.sort_unstable();
    rows.dedup();
    cols.sort_unstable();
    cols.dedup();
    let pairs: Vec<(usize, usize)> = moves
        .iter()
        .map(|m| {
            (
                rows.binary_search(&m.from).expect("row present"),
                cols.binary_search(&m.to).expect("col present"),
            )
        })
        .collect();
    let pc = PairCost::new(plan.source(), plan.target(), cost);
    let width = cols.len();

    if pc.is_exact() {
        let table: Vec<Rational> = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
            .map(|(i, j)| pc.exact(i, j).expect("exact"))
            .collect();
        let den = common_denominator(&table);
        let ints: Vec<BigInt> = table.iter().map(|c| numerator_over(c, &den)).collect();
        let bound = BigInt::from(i128::MAX) / BigInt::from(max_cycle_len as u64 + 1);
        if ints.iter().all(|x| x <= &bound) {
            let small: Vec<i128> = ints.iter().map(|x| x.to_i128().expect("bounded")).collect();
            let den = den.to_f64().unwrap_or(f64::NAN);
            Ok(run(&small, width, &pairs, max_cycle_len, budget, den))
        } else {
            let den = den.to_f64().unwrap_or(f64::NAN);
            Ok(run(&ints, width, &pairs, max_cycle_len, budget, den))
        }
    } else {
        let table: Vec<Tolerant> = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
            .map(|(i, j)| Tolerant(pc.float(i, j)))
            .collect();
        Ok(run(&table, width, &pairs, max_cycle_len, budget, 1.0))
    }
}

struct Search<'a, C> {
    table: &'a [C],
    width: usize,
    pairs: &'a [(usize, usize)],
    seq: Vec<usize>,
    used: Vec<bool>,
    checked: u64,
    budget: u64,
}

enum Stop {
    Budget,
    Violation(Vec<usize>, f64, f64),
}

impl<C: CycleNum> Search<'_, C> {
    fn cost(&self, a: usize, b: usize) -> &C {
        &self.table[self.pairs[a].0 * self.width + self.pairs[b].1]
    }

    /// Extends `seq` to cycles of exactly `len` moves whose first element is the smallest.
    fn extend(&mut self, len: usize, base: &C, shifted: &C) -> std::result::Result<(), Stop> {
        let last = *self.seq.last().expect("nonempty");
        if self.seq.len() == len {
            if self.checked >= self.budget {
                return Err(Stop::Budget);
            }
            self.checked += 1;
            let closed = shifted.plus(self.cost(last, self.seq[0]));
            if base.exceeds(&closed) {
                return Err(Stop::Violation(self.seq.clone(), base.as_f64(), closed.as_f64()));
            }
            return Ok(());
        }
        let first = self.seq[0];
        for next in first + 1..self.pairs.len() {
            if self.used[next] {
                continue;
            }
            let b = base.plus(self.cost(next, next));
            let s = shifted.plus(self.cost(last, next));
            self.used[next] = true;
            self.seq.push(next);
            let res = self.extend(len, &b, &s);
            self.seq.pop();
            self.used[next] = false;
            res?;
        }
        Ok(())
    }
}

fn run<C: CycleNum>(
    table: &[C],
    width: usize,
    pairs: &[(usize, usize)],
    max_len: usize,
    budget: u64,
    scale: f64,
) -> CycleVerdict {
    let mut search = Search {
        table,
        width,
        pairs,
        seq: Vec::with_capacity(max_len),
        used: vec![false; pairs.len()],
        checked: 0,
        budget,
    };
    for len in 2..=max_len.min(pairs.len()) {
        for start in 0..pairs.len() {
            search.seq.push(start);
            search.used[start] = true;
            let base = search.cost(start, start).clone();
            let res = search.extend(len, &base, &C::zero());
            search.seq.pop();
            search.used[start] = false;
            match res {
                Ok(()) => {}
                Err(Stop::Budget) => {
                    return CycleVerdict::Partial {
                        cycles_checked: search.checked,
                        budget,
                        completed_len: len - 1,
                    }
                }
                Err(Stop::Violation(moves, plan_cost, permuted_cost)) => {
                    return CycleVerdict::Violation(CycleWitness {
                        moves,
                        plan_cost: plan_cost / scale,
                        permuted_cost: permuted_cost / scale,
                    })
                }
            }
        }
    }
    CycleVerdict::Ok {
        cycles_checked: search.checked,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::frac;
    use crate::measure::LatticeMeasure;
    use crate::transport::{monotone_coupling, Move};

    #[test]
    fn diagonal_plan_is_monotone() {
        let mu = LatticeMeasure::on_integers(vec![-2, 0, 3, 4], vec![frac(1, 4); 4]).unwrap();
        let plan = monotone_coupling(&mu, &mu);
        for r in [0.5, 1.0, 2.0, 3.5] {
            let v = cyclic_monotonicity_check(&plan, CostSpec::new(r).unwrap(), 4).unwrap();
            assert!(v.is_ok(), "{r}: {v:?}");
        }
    }

    #[test]
    fn crossed_plan_has_violating_two_cycle() {
        let mu = LatticeMeasure::rademacher_sum(1);
        let nu = LatticeMeasure::rademacher_sum(2);
        // monotone coupling with the targets of its first and last moves swapped
        let moves = vec![
            Move { from: 0, to: 2, mass: frac(1, 4) },
            Move { from: 0, to: 1, mass: frac(1, 4) },
            Move { from: 1, to: 1, mass: frac(1, 4) },
            Move { from: 1, to: 0, mass: frac(1, 4) },
        ];
        let plan = TransportPlan::new(mu, nu, moves).unwrap();
        match cyclic_monotonicity_check(&plan, CostSpec::quadratic(), 3).unwrap() {
            CycleVerdict::Violation(w) => {
                assert_eq!(w.moves.len(), 2);
                assert!(w.plan_cost > w.permuted_cost);
                // (-1 -> 2) + (1 -> 0) costs 10, swapping targets costs 2
                assert_eq!(w.moves, vec![0, 2]);
                assert_eq!((w.plan_cost, w.permuted_cost), (10.0, 2.0));
            }
            other => panic!("expected a violation, got {other:?}"),
        }
    }

    #[test]
    fn budget_exhaustion_is_partial() {
        let mu = LatticeMeasure::rademacher_sum(6);
        let plan = monotone_coupling(&mu, &LatticeMeasure::rademacher_sum(8));
        let v = cyclic_monotonicity_check_with_budget(&plan, CostSpec::quadratic(), 3, 10).unwrap();
        assert!(matches!(v, CycleVerdict::Partial { cycles_checked: 10, .. }));
        assert!(cyclic_monotonicity_check(&plan, CostSpec::quadratic(), 1).is_err());
    }
}
