//! Exact transportation-problem solver used as an independent optimality oracle.
//!
//! Primal transportation simplex on the bipartite spanning-tree basis. Masses
//! are kept as integers over a common denominator so pivots are exact; costs
//! are either exact rationals or `f64`. Pricing is Dantzig's rule, falling
//! back to Bland's rule during runs of degenerate pivots.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use super::{CostSpec, CostValue, Move, OTResult, PairCost, TransportPlan};
use crate::error::{Error, Result};
use crate::exact::{common_denominator, lcm, numerator_over, ratio, Rational, RationalSum};
use crate::measure::LatticeMeasure;

/// Largest `|supp mu| * |supp nu|` accepted by [`lp_oracle`].
pub const LP_CELL_LIMIT: usize = 1_000_000;

const DEGENERATE_STREAK: usize = 64;

/// Dense cost matrix indexed `[source][target]`.
#[derive(Clone, Debug, PartialEq)]
pub enum CostMatrix {
    Exact(Vec<Vec<Rational>>),
    Real(Vec<Vec<f64>>),
}

impl CostMatrix {
    /// `c(x_i, y_j)` for every pair of support points, exact when possible.
    pub fn for_measures(mu: &LatticeMeasure, nu: &LatticeMeasure, cost: CostSpec) -> Self {
        let pc = PairCost::new(mu, nu, cost);
        if pc.is_exact() {
            CostMatrix::Exact(
                (0..mu.len())
                    .map(|i| (0..nu.len()).map(|j| pc.exact(i, j).expect("exact")).collect())
                    .collect(),
            )
        } else {
            CostMatrix::Real(
                (0..mu.len())
                    .map(|i| (0..nu.len()).map(|j| pc.float(i, j)).collect())
                    .collect(),
            )
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            CostMatrix::Exact(c) => c.len(),
            CostMatrix::Real(c) => c.len(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            CostMatrix::Exact(c) => c.first().map_or(0, Vec::len),
            CostMatrix::Real(c) => c.first().map_or(0, Vec::len),
        }
    }

    fn is_rectangular(&self) -> bool {
        let cols = self.cols();
        match self {
            CostMatrix::Exact(c) => c.iter().all(|r| r.len() == cols),
            CostMatrix::Real(c) => c.iter().all(|r| r.len() == cols),
        }
    }
}

trait SimplexCost: Clone {
    fn zero() -> Self;
    fn minus(&self, other: &Self) -> Self;
    /// Reduced cost strictly below zero, beyond `tol` for floats.
    fn improves(&self, tol: f64) -> bool;
    fn less_than(&self, other: &Self) -> bool;
}

impl SimplexCost for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn improves(&self, _tol: f64) -> bool {
        self.is_negative()
    }
    fn less_than(&self, other: &Self) -> bool {
        self < other
    }
}

impl SimplexCost for f64 {
    fn zero() -> Self {
        0.0
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn improves(&self, tol: f64) -> bool {
        *self < -tol
    }
    fn less_than(&self, other: &Self) -> bool {
        self < other
    }
}

/// Exact optimum of the transportation LP between `mu` and `nu` under `costs`.
pub fn lp_oracle(mu: &LatticeMeasure, nu: &LatticeMeasure, costs: &CostMatrix) -> Result<OTResult> {
    let (m, n) = (mu.len(), nu.len());
    if m.saturating_mul(n) > LP_CELL_LIMIT {
        return Err(Error::InstanceTooLarge {
            rows: m,
            cols: n,
            limit: LP_CELL_LIMIT,
        });
    }
    if costs.rows() != m || costs.cols() != n || !costs.is_rectangular() {
        return Err(Error::Precondition(format!(
            "cost matrix is {}x{}, measures need {m}x{n}",
            costs.rows(),
            costs.cols()
        )));
    }
    let den = lcm(&common_denominator(mu.weights()), &common_denominator(nu.weights()));
    let supply: Vec<BigInt> = mu.weights().iter().map(|w| numerator_over(w, &den)).collect();
    let demand: Vec<BigInt> = nu.weights().iter().map(|w| numerator_over(w, &den)).collect();

    let (cells, cost) = match costs {
        CostMatrix::Exact(c) => {
            let cells = solve(c, &supply, &demand, 0.0)?;
            let mut acc = RationalSum::new();
            for (i, j, f) in &cells {
                acc.add_product(&ratio(f.clone(), den.clone()), &c[*i][*j]);
            }
            (cells, CostValue::Exact(acc.finish()))
        }
        CostMatrix::Real(c) => {
            let scale = c.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
            let cells = solve(c, &supply, &demand, 1e-12 * scale.max(1e-300))?;
            let total = cells
                .iter()
                .map(|(i, j, f)| ratio(f.clone(), den.clone()).to_f64().unwrap_or(f64::NAN) * c[*i][*j])
                .sum();
            (cells, CostValue::Approx(total))
        }
    };
    let mut moves: Vec<Move> = cells
        .into_iter()
        .map(|(from, to, f)| Move {
            from,
            to,
            mass: ratio(f, den.clone()),
        })
        .collect();
    moves.sort();
    Ok(OTResult {
        cost,
        plan: TransportPlan::new_unchecked(mu.clone(), nu.clone(), moves),
    })
}

struct Basis {
    m: usize,
    n: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<BigInt>,
    slot: Vec<Option<usize>>,
}

impl Basis {
    /// North-west corner rule on the target order reversed, i.e. starting
    /// from the anti-monotone coupling.
    fn initial(supply: &[BigInt], demand: &[BigInt]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut basis = Basis {
            m,
            n,
            cells: Vec::with_capacity(m + n - 1),
            flow: Vec::with_capacity(m + n - 1),
            slot: vec![None; m * n],
        };
        let mut a = supply.to_vec();
        let mut b = demand.to_vec();
        let (mut i, mut jj) = (0usize, 0usize);
        loop {
            let j = n - 1 - jj;
            let q = if a[i] < b[j] { a[i].clone() } else { b[j].clone() };
            a[i] -= &q;
            b[j] -= &q;
            basis.push(i, j, q);
            if i == m - 1 && jj == n - 1 {
                break;
            }
            if a[i].is_zero() && i < m - 1 {
                i += 1;
            } else {
                jj += 1;
            }
        }
        basis
    }

    fn push(&mut self, i: usize, j: usize, f: BigInt) {
        self.slot[i * self.n + j] = Some(self.cells.len());
        self.cells.push((i, j));
        self.flow.push(f);
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (k, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push(k);
            adj[self.m + j].push(k);
        }
        adj
    }

    fn other_end(&self, k: usize, node: usize) -> usize {
        let (i, j) = self.cells[k];
        if node == i {
            self.m + j
        } else {
            i
        }
    }

    fn duals<C: SimplexCost>(&self, costs: &[Vec<C>], adj: &[Vec<usize>]) -> (Vec<C>, Vec<C>) {
        let mut pot: Vec<Option<C>> = vec![None; self.m + self.n];
        pot[0] = Some(C::zero());
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            let p = pot[node].clone().expect("visited");
            for &k in &adj[node] {
                let next = self.other_end(k, node);
                if pot[next].is_none() {
                    let (i, j) = self.cells[k];
                    // u_i + v_j = c_ij on basic cells
                    pot[next] = Some(costs[i][j].minus(&p));
                    queue.push_back(next);
                }
            }
        }
        let mut pot: Vec<C> = pot.into_iter().map(|p| p.expect("basis spans all nodes")).collect();
        let v = pot.split_off(self.m);
        (pot, v)
    }

    /// Basis cells on the tree path from row `i` to column `j`, in order.
    fn path(&self, adj: &[Vec<usize>], i: usize, j: usize) -> Vec<usize> {
        let target = self.m + j;
        let mut parent: Vec<Option<usize>> = vec![None; self.m + self.n];
        let mut seen = vec![false; self.m + self.n];
        seen[i] = true;
        let mut queue = VecDeque::from([i]);
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &k in &adj[node] {
                let next = self.other_end(k, node);
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some(k);
                    queue.push_back(next);
                }
            }
        }
        let mut edges = Vec::new();
        let mut node = target;
        while node != i {
            let k = parent[node].expect("tree is connected");
            edges.push(k);
            node = self.other_end(k, node);
        }
        edges.reverse();
        edges
    }
}

fn solve<C: SimplexCost>(
    costs: &[Vec<C>],
    supply: &[BigInt],
    demand: &[BigInt],
    tol: f64,
) -> Result<Vec<(usize, usize, BigInt)>> {
    let (m, n) = (supply.len(), demand.len());
    let mut basis = Basis::initial(supply, demand);
    let limit = 50 * (m + n) * (m + n) + 10_000;
    let mut degenerate_run = 0usize;
    for _ in 0..limit {
        let adj = basis.adjacency();
        let (u, v) = basis.duals(costs, &adj);
        let bland = degenerate_run >= DEGENERATE_STREAK;
        let mut entering: Option<(usize, usize, C)> = None;
        'scan: for i in 0..m {
            for j in 0..n {
                if basis.slot[i * n + j].is_some() {
                    continue;
                }
                let reduced = costs[i][j].minus(&u[i]).minus(&v[j]);
                if !reduced.improves(tol) {
                    continue;
                }
                if bland {
                    entering = Some((i, j, reduced));
                    break 'scan;
                }
                if entering.as_ref().map_or(true, |(_, _, best)| reduced.less_than(best)) {
                    entering = Some((i, j, reduced));
                }
            }
        }
        let Some((ei, ej, _)) = entering else {
            return Ok(basis
                .cells
                .iter()
                .zip(&basis.flow)
                .filter(|(_, f)| f.is_positive())
                .map(|(&(i, j), f)| (i, j, f.clone()))
                .collect());
        };
        let path = basis.path(&adj, ei, ej);
        // edges at odd positions along the cycle lose flow
        let leaving = path
            .iter()
            .step_by(2)
            .copied()
            .min_by(|&a, &b| {
                basis.flow[a]
                    .cmp(&basis.flow[b])
                    .then_with(|| basis.cells[a].cmp(&basis.cells[b]))
            })
            .expect("cycle has a decreasing edge");
        let theta = basis.flow[leaving].clone();
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis.flow[k] -= &theta;
            } else {
                basis.flow[k] += &theta;
            }
        }
        degenerate_run = if theta.is_zero() { degenerate_run + 1 } else { 0 };
        let (li, lj) = basis.cells[leaving];
        basis.slot[li * n + lj] = None;
        basis.cells[leaving] = (ei, ej);
        basis.flow[leaving] = theta;
        basis.slot[ei * n + ej] = Some(leaving);
    }
    Err(Error::PivotLimit(limit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::frac;
    use crate::transport::{monotone_coupling, transport_cost};

    #[test]
    fn dirac_pair() {
        let a = LatticeMeasure::dirac(2);
        let b = LatticeMeasure::dirac(-1);
        let res = lp_oracle(&a, &b, &CostMatrix::for_measures(&a, &b, CostSpec::quadratic())).unwrap();
        assert_eq!(res.cost, CostValue::Exact(frac(9, 1)));
        assert_eq!(res.plan.moves().len(), 1);
    }

    #[test]
    fn signs_against_two_signs() {
        let mu = LatticeMeasure::rademacher_sum(1);
        let nu = LatticeMeasure::rademacher_sum(2);
        let res = lp_oracle(&mu, &nu, &CostMatrix::for_measures(&mu, &nu, CostSpec::quadratic())).unwrap();
        assert_eq!(res.cost, CostValue::Exact(frac(1, 1)));
        res.plan.verify().unwrap();
        assert_eq!(res.cost, transport_cost(&monotone_coupling(&mu, &nu), CostSpec::quadratic()));
    }

    #[test]
    fn arbitrary_matrix_assignment() {
        // 3x3 uniform assignment; the optimum picks the permutation 0->1, 1->2, 2->0.
        let mu = LatticeMeasure::on_integers(vec![0, 1, 2], vec![frac(1, 3); 3]).unwrap();
        let c = |rows: [[i64; 3]; 3]| {
            CostMatrix::Exact(rows.iter().map(|r| r.iter().map(|&x| frac(x, 1)).collect()).collect())
        };
        let res = lp_oracle(&mu, &mu, &c([[5, 1, 5], [5, 5, 1], [1, 5, 5]])).unwrap();
        assert_eq!(res.cost, CostValue::Exact(frac(1, 1)));
        res.plan.verify().unwrap();
        let reals = CostMatrix::Real(vec![vec![5.0, 1.0, 5.0], vec![5.0, 5.0, 1.0], vec![1.0, 5.0, 5.0]]);
        assert!((lp_oracle(&mu, &mu, &reals).unwrap().cost.to_f64() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mu = LatticeMeasure::rademacher_sum(1);
        assert!(lp_oracle(&mu, &mu, &CostMatrix::Exact(vec![vec![frac(0, 1)]])).is_err());
    }
}
