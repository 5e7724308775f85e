//! Exact word mover's distance.
//!
//! The balanced transportation problem between two word distributions is
//! solved with the transportation simplex method (the network simplex
//! specialized to a complete bipartite graph): a northwest-corner starting
//! basis, node potentials from the basis tree, and Bland's lowest-index rule
//! for both the entering and leaving cell. For a fixed input the returned plan
//! is deterministic.

use std::collections::{BTreeMap, VecDeque};

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::textproc::WordDistribution;

/// Mass tolerance for marginals.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Exponent applied to the Euclidean distance between word vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    p: f64,
}

impl CostParams {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::Domain(format!(
                "cost exponent must be positive, got {p}"
            )));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

impl Default for CostParams {
    fn default() -> Self {
        Self { p: 2.0 }
    }
}

/// `‖u − v‖^p`, computed on the fly to avoid allocating the difference.
pub(crate) fn euclidean_pow<I>(diffs: I, p: f64) -> f64
where
    I: Iterator<Item = f64>,
{
    let squared: f64 = diffs.map(|d| d * d).sum();
    if p == 2.0 {
        squared
    } else {
        squared.sqrt().powf(p)
    }
}

/// Cost of moving one unit of mass from word vector `u` to word vector `v`.
pub fn word_travel_cost(u: &[f64], v: &[f64], params: CostParams) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Domain(format!(
            "travel cost between vectors of dimension {} and {}",
            u.len(),
            v.len()
        )));
    }
    Ok(euclidean_pow(u.iter().zip(v).map(|(a, b)| a - b), params.p))
}

/// A balanced transportation problem over a combined vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem {
    vocab: Vec<String>,
    supply: Vec<f64>,
    demand: Vec<f64>,
    cost: Array2<f64>,
}

impl TransportProblem {
    /// Checks shapes only; values are validated by [`solve`].
    pub fn new(
        vocab: Vec<String>,
        supply: Vec<f64>,
        demand: Vec<f64>,
        cost: Array2<f64>,
    ) -> Result<Self> {
        let n = vocab.len();
        if supply.len() != n || demand.len() != n || cost.dim() != (n, n) {
            return Err(Error::Domain(format!(
                "transport problem shapes disagree: vocab {n}, supply {}, demand {}, cost {:?}",
                supply.len(),
                demand.len(),
                cost.dim()
            )));
        }
        Ok(Self {
            vocab,
            supply,
            demand,
            cost,
        })
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn supply(&self) -> &[f64] {
        &self.supply
    }

    pub fn demand(&self) -> &[f64] {
        &self.demand
    }

    pub fn cost(&self) -> &Array2<f64> {
        &self.cost
    }
}

/// Optimal flows for a [`TransportProblem`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub vocab: Vec<String>,
    pub flows: Array2<f64>,
    pub objective: f64,
}

#[derive(Serialize)]
struct PlanDump<'a> {
    vocab: &'a [String],
    flows: Vec<(usize, usize, f64)>,
    objective: f64,
}

impl TransportPlan {
    /// Strictly positive flows as `(row, column, mass)` in row-major order.
    pub fn sparse_flows(&self) -> Vec<(usize, usize, f64)> {
        self.flows
            .indexed_iter()
            .filter(|(_, &f)| f > 0.0)
            .map(|((i, j), &f)| (i, j, f))
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(PlanDump {
            vocab: &self.vocab,
            flows: self.sparse_flows(),
            objective: self.objective,
        })
        .expect("plan serializes")
    }
}

/// Lays both distributions over their combined vocabulary (sorted) and fills
/// the cost matrix with `cost_fn(row_word, column_word)`, where each word is
/// passed as `(token, vector)`.
pub fn build_problem<F>(
    source: &WordDistribution,
    target: &WordDistribution,
    mut cost_fn: F,
) -> Result<TransportProblem>
where
    F: FnMut((&str, &[f64]), (&str, &[f64])) -> Result<f64>,
{
    if source.is_empty() {
        return Err(Error::EmptyDistribution("source"));
    }
    if target.is_empty() {
        return Err(Error::EmptyDistribution("target"));
    }
    let mut words: BTreeMap<&str, &[f64]> = BTreeMap::new();
    for (token, _, vector) in target.iter().chain(source.iter()) {
        // source vectors win when both sides carry the token
        words.insert(token, vector);
    }
    let n = words.len();
    let vocab: Vec<String> = words.keys().map(|t| t.to_string()).collect();
    let supply = vocab.iter().map(|t| source.weight(t)).collect();
    let demand = vocab.iter().map(|t| target.weight(t)).collect();
    let entries: Vec<(&str, &[f64])> = words.into_iter().collect();
    let mut cost = Array2::zeros((n, n));
    for (i, &a) in entries.iter().enumerate() {
        for (j, &b) in entries.iter().enumerate() {
            cost[[i, j]] = cost_fn(a, b)?;
        }
    }
    TransportProblem::new(vocab, supply, demand, cost)
}

/// Word mover's distance with the plain Euclidean-power travel cost.
///
/// Symmetric bit-for-bit: the pair is solved in a canonical orientation.
pub fn wmd(
    source: &WordDistribution,
    target: &WordDistribution,
    params: CostParams,
) -> Result<f64> {
    let (a, b) = canonical_order(source, target);
    let problem = build_problem(a, b, |(_, u), (_, v)| word_travel_cost(u, v, params))?;
    Ok(solve(&problem)?.objective)
}

pub(crate) fn canonical_order<'a>(
    a: &'a WordDistribution,
    b: &'a WordDistribution,
) -> (&'a WordDistribution, &'a WordDistribution) {
    let key = |d: &'a WordDistribution| {
        d.iter()
            .map(|(t, w, _)| (t, w.to_bits()))
            .collect::<Vec<_>>()
    };
    if key(a) <= key(b) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Solves the transportation problem exactly.
///
/// Supply and demand must each sum to one within [`MASS_TOLERANCE`]; they are
/// rescaled to unit mass before solving. Costs must be finite and nonnegative.
pub fn solve(problem: &TransportProblem) -> Result<TransportPlan> {
    let n = problem.len();
    for (name, side) in [("supply", &problem.supply), ("demand", &problem.demand)] {
        if let Some(bad) = side.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Domain(format!(
                "{name} weight {bad} is not a finite nonnegative number"
            )));
        }
    }
    if let Some(bad) = problem.cost.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        return Err(Error::Domain(format!(
            "cost {bad} is not a finite nonnegative number"
        )));
    }
    let supply_total: f64 = problem.supply.iter().sum();
    let demand_total: f64 = problem.demand.iter().sum();
    if (supply_total - 1.0).abs() > MASS_TOLERANCE
        || (demand_total - 1.0).abs() > MASS_TOLERANCE
        || (supply_total - demand_total).abs() > MASS_TOLERANCE
    {
        return Err(Error::Infeasible(format!(
            "supply sums to {supply_total}, demand sums to {demand_total}; both must be 1"
        )));
    }

    let rows: Vec<usize> = (0..n).filter(|&i| problem.supply[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n).filter(|&j| problem.demand[j] > 0.0).collect();
    let supply: Vec<f64> = rows
        .iter()
        .map(|&i| problem.supply[i] / supply_total)
        .collect();
    let demand: Vec<f64> = cols
        .iter()
        .map(|&j| problem.demand[j] / demand_total)
        .collect();
    let mut cost = Vec::with_capacity(rows.len() * cols.len());
    for &i in &rows {
        for &j in &cols {
            cost.push(problem.cost[[i, j]]);
        }
    }

    let reduced = TransportSimplex::new(supply, demand, cost).run()?;

    let mut flows = Array2::zeros((n, n));
    let mut objective = 0.0;
    for (r, &i) in rows.iter().enumerate() {
        for (c, &j) in cols.iter().enumerate() {
            let f = reduced[r * cols.len() + c];
            if f > 0.0 {
                flows[[i, j]] = f;
                objective += f * problem.cost[[i, j]];
            }
        }
    }
    Ok(TransportPlan {
        vocab: problem.vocab.clone(),
        flows,
        objective,
    })
}

/// Dense transportation simplex over `m` sources and `n` sinks, all with
/// strictly positive mass. The basis is always a spanning tree of the
/// bipartite graph with exactly `m + n - 1` cells (some possibly at zero flow).
struct TransportSimplex {
    m: usize,
    n: usize,
    cost: Vec<f64>,
    flow: Vec<f64>,
    basic: Vec<bool>,
    tolerance: f64,
}

impl TransportSimplex {
    fn new(supply: Vec<f64>, demand: Vec<f64>, cost: Vec<f64>) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let scale = cost.iter().fold(1.0f64, |acc, &c| acc.max(c));
        let mut simplex = Self {
            m,
            n,
            cost,
            flow: vec![0.0; m * n],
            basic: vec![false; m * n],
            tolerance: 1e-12 * scale,
        };
        simplex.northwest_corner(supply, demand);
        simplex
    }

    fn northwest_corner(&mut self, mut supply: Vec<f64>, mut demand: Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let (mut i, mut j) = (0, 0);
        loop {
            let amount = supply[i].min(demand[j]);
            let cell = i * n + j;
            self.flow[cell] = amount;
            self.basic[cell] = true;
            supply[i] -= amount;
            demand[j] -= amount;
            if i == m - 1 && j == n - 1 {
                break;
            } else if i == m - 1 {
                j += 1;
            } else if j == n - 1 || supply[i] <= demand[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    fn run(mut self) -> Result<Vec<f64>> {
        let max_pivots = 1_000_000usize.max(100 * self.m * self.n);
        for _ in 0..max_pivots {
            let tree = self.basis_tree();
            let (u, v) = self.potentials(&tree);
            let Some(entering) = self.entering_cell(&u, &v) else {
                return Ok(self.flow);
            };
            self.pivot(&tree, entering);
        }
        Err(Error::NoConvergence(max_pivots))
    }

    /// Adjacency lists over nodes `0..m` (rows) and `m..m+n` (columns); each
    /// neighbour is paired with the cell index of the connecting edge.
    fn basis_tree(&self) -> Vec<Vec<(usize, usize)>> {
        let (m, n) = (self.m, self.n);
        let mut adj = vec![Vec::new(); m + n];
        for (cell, _) in self.basic.iter().enumerate().filter(|(_, &b)| b) {
            let (i, j) = (cell / n, cell % n);
            adj[i].push((m + j, cell));
            adj[m + j].push((i, cell));
        }
        adj
    }

    /// Row and column potentials with `u[i] + v[j] = c[i][j]` on the basis and `u[0] = 0`.
    fn potentials(&self, tree: &[Vec<(usize, usize)>]) -> (Vec<f64>, Vec<f64>) {
        let m = self.m;
        let mut pot = vec![f64::NAN; tree.len()];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &(next, cell) in &tree[node] {
                if pot[next].is_nan() {
                    pot[next] = self.cost[cell] - pot[node];
                    queue.push_back(next);
                }
            }
        }
        let v = pot.split_off(m);
        (pot, v)
    }

    /// Lowest-index nonbasic cell with negative reduced cost.
    fn entering_cell(&self, u: &[f64], v: &[f64]) -> Option<usize> {
        let n = self.n;
        (0..self.m * n).find(|&cell| {
            !self.basic[cell] && self.cost[cell] - u[cell / n] - v[cell % n] < -self.tolerance
        })
    }

    fn pivot(&mut self, tree: &[Vec<(usize, usize)>], entering: usize) {
        let (m, n) = (self.m, self.n);
        let (row, col) = (entering / n, m + entering % n);

        // tree path from `row` to `col`, recorded as the cells along it
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; m + n];
        let mut visited = vec![false; m + n];
        visited[row] = true;
        let mut queue = VecDeque::from([row]);
        while let Some(node) = queue.pop_front() {
            if node == col {
                break;
            }
            for &(next, cell) in &tree[node] {
                if !visited[next] {
                    visited[next] = true;
                    parent[next] = Some((node, cell));
                    queue.push_back(next);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = col;
        while node != row {
            let (prev, cell) = parent[node].expect("basis is a spanning tree");
            path.push(cell);
            node = prev;
        }

        // walking back from the entering column, cells alternate -, +, -, ...
        let leaving = path
            .iter()
            .step_by(2)
            .copied()
            .min_by(|&a, &b| self.flow[a].total_cmp(&self.flow[b]).then(a.cmp(&b)))
            .expect("cycle has a decreasing cell");
        let theta = self.flow[leaving];
        for (k, &cell) in path.iter().enumerate() {
            if k % 2 == 0 {
                self.flow[cell] -= theta;
            } else {
                self.flow[cell] += theta;
            }
        }
        self.flow[entering] = theta;
        self.flow[leaving] = 0.0;
        self.basic[leaving] = false;
        self.basic[entering] = true;
    }
}
