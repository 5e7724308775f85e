//! Independent reference implementations used only by tests.
//!
//! None of this shares code with the library: the transport oracle is a dense
//! two-phase simplex over exact rationals on the general LP formulation, and
//! the rank oracle counts instead of sorting.

#![allow(dead_code)]

use num_rational::Rational64 as Q;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vifidel::{EmbeddingTable, TransportProblem};

/// A random balanced instance with exact rational data alongside its `f64`
/// image.
pub struct RationalInstance {
    pub supply: Vec<Q>,
    pub demand: Vec<Q>,
    pub cost: Vec<Vec<Q>>,
}

impl RationalInstance {
    /// Supply and demand are integer counts (some zero) normalized by their
    /// totals; costs are multiples of 1/100 in `[0, 10]`.
    pub fn random(rng: &mut ChaCha8Rng, n: usize) -> Self {
        let counts = |rng: &mut ChaCha8Rng| -> Vec<i64> {
            loop {
                let c: Vec<i64> = (0..n).map(|_| rng.random_range(0..4)).collect();
                if c.iter().sum::<i64>() > 0 {
                    return c;
                }
            }
        };
        let normalize = |c: Vec<i64>| -> Vec<Q> {
            let total: i64 = c.iter().sum();
            c.into_iter().map(|x| Q::new(x, total)).collect()
        };
        let supply = normalize(counts(rng));
        let demand = normalize(counts(rng));
        let cost = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| Q::new(rng.random_range(0..=1000), 100))
                    .collect()
            })
            .collect();
        Self {
            supply,
            demand,
            cost,
        }
    }

    pub fn to_problem(&self) -> TransportProblem {
        let n = self.supply.len();
        let f = |q: &Q| *q.numer() as f64 / *q.denom() as f64;
        let mut cost = ndarray::Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                cost[[i, j]] = f(&self.cost[i][j]);
            }
        }
        TransportProblem::new(
            (0..n).map(|i| format!("w{i}")).collect(),
            self.supply.iter().map(f).collect(),
            self.demand.iter().map(f).collect(),
            cost,
        )
        .unwrap()
    }

    pub fn lp_optimum(&self) -> Q {
        transport_lp(&self.supply, &self.demand, &self.cost)
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn q_to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Minimum of `sum c_ij x_ij` subject to row sums `supply`, column sums
/// `demand`, `x >= 0`, by two-phase tableau simplex with Bland's rule.
pub fn transport_lp(supply: &[Q], demand: &[Q], cost: &[Vec<Q>]) -> Q {
    let n = supply.len();
    let vars = n * n;
    let rows = 2 * n;
    let width = vars + rows + 1;
    let rhs = width - 1;

    let mut t = vec![vec![Q::zero(); width]; rows];
    for i in 0..n {
        for j in 0..n {
            t[i][i * n + j] = Q::one();
            t[n + j][i * n + j] = Q::one();
        }
        t[i][rhs] = supply[i];
        t[n + i][rhs] = demand[i];
    }
    let mut basis = Vec::with_capacity(rows);
    for (r, row) in t.iter_mut().enumerate() {
        row[vars + r] = Q::one();
        basis.push(vars + r);
    }

    let phase1: Vec<Q> = (0..vars + rows)
        .map(|k| if k < vars { Q::zero() } else { Q::one() })
        .collect();
    tableau_simplex(&mut t, &mut basis, &phase1, vars + rows);
    let infeasibility: Q = basis
        .iter()
        .zip(&t)
        .map(|(&b, row)| phase1[b] * row[rhs])
        .sum();
    assert!(
        infeasibility.is_zero(),
        "balanced instance must be feasible"
    );

    for r in 0..rows {
        if basis[r] >= vars {
            if let Some(k) = (0..vars).find(|&k| !t[r][k].is_zero()) {
                pivot(&mut t, &mut basis, r, k);
            }
        }
    }

    let mut phase2 = vec![Q::zero(); vars + rows];
    for i in 0..n {
        for j in 0..n {
            phase2[i * n + j] = cost[i][j];
        }
    }
    tableau_simplex(&mut t, &mut basis, &phase2, vars);
    basis
        .iter()
        .zip(&t)
        .map(|(&b, row)| phase2[b] * row[rhs])
        .sum()
}

fn tableau_simplex(t: &mut [Vec<Q>], basis: &mut [usize], c: &[Q], allowed: usize) {
    let rhs = t[0].len() - 1;
    loop {
        let entering = (0..allowed).find(|&k| {
            if basis.contains(&k) {
                return false;
            }
            let z: Q = basis
                .iter()
                .zip(t.iter())
                .map(|(&b, row)| c[b] * row[k])
                .sum();
            c[k] - z < Q::zero()
        });
        let Some(k) = entering else { return };
        let mut best: Option<(Q, usize, usize)> = None;
        for (r, row) in t.iter().enumerate() {
            if row[k].is_positive() {
                let ratio = row[rhs] / row[k];
                let better = match &best {
                    None => true,
                    Some((q, _, b)) => ratio < *q || (ratio == *q && basis[r] < *b),
                };
                if better {
                    best = Some((ratio, r, basis[r]));
                }
            }
        }
        let (_, r, _) = best.expect("transportation polytope is bounded");
        pivot(t, basis, r, k);
    }
}

fn pivot(t: &mut [Vec<Q>], basis: &mut [usize], r: usize, k: usize) {
    let p = t[r][k];
    for x in t[r].iter_mut() {
        *x /= p;
    }
    let pivot_row = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r && !row[k].is_zero() {
            let f = row[k];
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                *x -= f * *y;
            }
        }
    }
    basis[r] = k;
}

/// Brute-force vertex enumeration: every choice of `2n - 1` columns whose
/// basis matrix is nonsingular and whose solution is nonnegative is a vertex.
/// Exponential; only for n <= 3.
pub fn transport_vertices(supply: &[Q], demand: &[Q], cost: &[Vec<Q>]) -> Q {
    let n = supply.len();
    let vars = n * n;
    let rows = 2 * n - 1; // last column constraint is implied
    let column = |v: usize| -> Vec<Q> {
        let (i, j) = (v / n, v % n);
        let mut col = vec![Q::zero(); rows];
        col[i] = Q::one();
        if j < n - 1 {
            col[n + j] = Q::one();
        }
        col
    };
    let b: Vec<Q> = supply.iter().chain(&demand[..n - 1]).copied().collect();

    let mut best: Option<Q> = None;
    let mut subset: Vec<usize> = (0..rows).collect();
    loop {
        let mut m: Vec<Vec<Q>> = (0..rows)
            .map(|r| {
                let mut row: Vec<Q> = subset.iter().map(|&v| column(v)[r]).collect();
                row.push(b[r]);
                row
            })
            .collect();
        if let Some(x) = gauss_solve(&mut m) {
            if x.iter().all(|v| !v.is_negative()) {
                let obj: Q = subset
                    .iter()
                    .zip(&x)
                    .map(|(&v, xv)| cost[v / n][v % n] * xv)
                    .sum();
                if best.is_none_or(|b| obj < b) {
                    best = Some(obj);
                }
            }
        }
        // next combination
        let mut i = rows;
        loop {
            if i == 0 {
                return best.expect("polytope has a vertex");
            }
            i -= 1;
            if subset[i] < vars - rows + i {
                subset[i] += 1;
                for j in i + 1..rows {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn gauss_solve(m: &mut [Vec<Q>]) -> Option<Vec<Q>> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let p = m[col][col];
        for x in m[col].iter_mut() {
            *x /= p;
        }
        let prow = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let f = row[col];
                for (x, y) in row.iter_mut().zip(&prow) {
                    *x -= f * *y;
                }
            }
        }
    }
    Some(m.iter().map(|row| row[n]).collect())
}

/// Fractional rank of each value, by counting smaller and equal values.
pub fn counting_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|v| {
            let less = values.iter().filter(|w| *w < v).count() as f64;
            let equal = values.iter().filter(|w| *w == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Single-pass moment formula, deliberately different from a centred two-pass
/// computation. `None` when either side is constant.
pub fn pearson_moments(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let (sx, sy): (f64, f64) = (xs.iter().sum(), ys.iter().sum());
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some((n * sxy - sx * sy) / (vx * vy).sqrt())
}

pub fn rank_pearson_oracle(xs: &[f64], ys: &[f64]) -> Option<f64> {
    pearson_moments(&counting_ranks(xs), &counting_ranks(ys))
}

/// Random vectors in `[-1, 1]^dim` for each word.
pub fn random_table(words: &[&str], dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = rng(seed);
    let entries: Vec<(String, Vec<f64>)> = words
        .iter()
        .map(|w| {
            (
                w.to_string(),
                (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            )
        })
        .collect();
    EmbeddingTable::from_entries(dim, entries).unwrap()
}

/// Far from every vector of a [`random_table`] of the same dimension.
pub fn distant_vector(dim: usize) -> Vec<f64> {
    vec![40.0; dim]
}

/// A [`random_table`] of dimension 8 plus one `far` token placed well away
/// from all of the words.
pub fn synthetic_table(words: &[&str], far: &str, seed: u64) -> EmbeddingTable {
    let mut table = random_table(words, 8, seed);
    table.insert(far.to_string(), &distant_vector(8)).unwrap();
    table
}
