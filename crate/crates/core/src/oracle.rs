//! Exact expectations by enumerating every directed realization of a small
//! candidate graph, and comparison against the closed forms.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{exact_variance, expected_consensus_value};
use crate::error::{Error, Result};
use crate::graph::{CandidateGraph, ProbabilityCheck};
use crate::linalg::stationary_distribution;
use crate::moments::{inf_norm, kron_index, ExpectedOperators, KronBudget};
use crate::scalar::{from_usize, Scalar};

/// Largest number of directed candidate edges the oracle enumerates.
pub const MAX_DIRECTED_EDGES: usize = 20;

const CHUNK_BITS: u32 = 10;

/// Neumaier-compensated running sums over a flat buffer.
#[derive(Clone)]
struct Compensated<T> {
    sum: Vec<T>,
    comp: Vec<T>,
}

impl<T: Scalar> Compensated<T> {
    fn new(len: usize) -> Self {
        Compensated {
            sum: vec![T::zero(); len],
            comp: vec![T::zero(); len],
        }
    }

    fn add(&mut self, k: usize, x: T) {
        let s = self.sum[k];
        let t = s + x;
        if s.abs() >= x.abs() {
            self.comp[k] += (s - t) + x;
        } else {
            self.comp[k] += (x - t) + s;
        }
        self.sum[k] = t;
    }

    fn merge(&mut self, other: &Self) {
        for k in 0..self.sum.len() {
            self.add(k, other.sum[k]);
            self.add(k, other.comp[k]);
        }
    }

    fn total(&self, k: usize) -> T {
        self.sum[k] + self.comp[k]
    }
}

/// Exact first and second moments of the random weight matrix.
#[derive(Debug, Clone)]
pub struct Enumerated<T: Scalar> {
    /// `E W`.
    pub ew: DMatrix<T>,
    /// `E[W ⊗ W]`.
    pub r: DMatrix<T>,
    /// Sum of all realization probabilities.
    pub weight_sum: T,
    /// `2^{2|E|}`.
    pub cases: u64,
}

/// Sums `W` and `W ⊗ W` over every subset of directed candidate edges,
/// weighted by its probability. Bit `b` of the realization index switches
/// the `b`-th directed edge in lexicographic order.
pub fn enumerate_expectations<T: Scalar>(graph: &CandidateGraph<T>) -> Result<Enumerated<T>> {
    let directed = graph.directed_edges();
    let m = directed.len();
    if m > MAX_DIRECTED_EDGES {
        return Err(Error::TooLarge {
            directed_edges: m,
            max: MAX_DIRECTED_EDGES,
        });
    }
    let n = graph.n();
    let n2 = n * n;
    let cases = 1u64 << m;
    let chunk = 1u64 << CHUNK_BITS.min(m as u32);
    let chunks = cases / chunk;

    let partial: Vec<Compensated<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            // layout: [weight, E W (n²), E[W ⊗ W] (n⁴)]
            let mut acc = Compensated::new(1 + n2 + n2 * n2);
            let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
            let mut entries: Vec<(usize, usize, T)> = Vec::new();
            for mask in c * chunk..(c + 1) * chunk {
                let mut weight = T::one();
                for r in rows.iter_mut() {
                    r.clear();
                }
                for (b, &(u, v)) in directed.iter().enumerate() {
                    let p = graph.prob(v);
                    if mask >> b & 1 == 1 {
                        weight *= p;
                        rows[v].push(u);
                    } else {
                        weight *= T::one() - p;
                    }
                }
                if weight == T::zero() {
                    continue;
                }
                acc.add(0, weight);
                entries.clear();
                for (i, row) in rows.iter().enumerate() {
                    let x = T::one() / from_usize::<T>(row.len() + 1);
                    entries.push((i, i, x));
                    entries.extend(row.iter().map(|&u| (i, u, x)));
                }
                for &(i, j, x) in &entries {
                    acc.add(1 + i * n + j, weight * x);
                }
                for &(i, j, x) in &entries {
                    for &(r, s, y) in &entries {
                        let row = kron_index(n, i, r);
                        let col = kron_index(n, j, s);
                        acc.add(1 + n2 + row * n2 + col, weight * x * y);
                    }
                }
            }
            acc
        })
        .collect();

    let mut total = Compensated::new(1 + n2 + n2 * n2);
    for p in &partial {
        total.merge(p);
    }
    Ok(Enumerated {
        ew: DMatrix::from_fn(n, n, |i, j| total.total(1 + i * n + j)),
        r: DMatrix::from_fn(n2, n2, |i, j| total.total(1 + n2 + i * n2 + j)),
        weight_sum: total.total(0),
        cases,
    })
}

/// Worst closed-form vs enumeration discrepancies for one graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub graph_id: String,
    pub max_err_ew: f64,
    pub max_err_r: f64,
    pub max_err_delta: f64,
    /// Over every `S_i` against its row of the enumerated `Δ`, and
    /// `max_i S_i` against `‖Δ‖∞`.
    pub max_err_delta_norm: f64,
    pub max_err_mean: f64,
    pub max_err_variance: f64,
    pub weight_sum_error: f64,
    pub cases_checked: u64,
}

impl OracleReport {
    pub fn max_error(&self) -> f64 {
        [
            self.max_err_ew,
            self.max_err_r,
            self.max_err_delta,
            self.max_err_delta_norm,
            self.max_err_mean,
            self.max_err_variance,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn graph_id<T: Scalar>(graph: &CandidateGraph<T>) -> String {
    let edges: Vec<String> = graph.edges().iter().map(|(u, v)| format!("{u}-{v}")).collect();
    let probs: Vec<String> = graph.probs().iter().map(|p| format!("{p}")).collect();
    format!("n={} edges=[{}] p=[{}]", graph.n(), edges.join(","), probs.join(","))
}

/// Largest entrywise `|a - b|` with its position.
fn worst<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> (T, usize, usize, T, T) {
    let mut best = (T::zero(), 0, 0, T::zero(), T::zero());
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let e = (a[(i, j)] - b[(i, j)]).abs();
            if !(e <= best.0) {
                best = (e, i, j, a[(i, j)], b[(i, j)]);
            }
        }
    }
    best
}

fn fail<T: Scalar>(check: &'static str, row: usize, col: usize, closed: T, enumerated: T) -> Error {
    Error::VerificationFailure {
        check,
        row,
        col,
        closed: closed.as_f64(),
        enumerated: enumerated.as_f64(),
    }
}

/// Probe initial condition `x_i = (i + 1) / n`.
pub fn probe_initial<T: Scalar>(n: usize) -> Vec<T> {
    (0..n)
        .map(|i| from_usize::<T>(i + 1) / from_usize::<T>(n))
        .collect()
}

/// Checks the closed-form `E W`, `R`, `Δ`, `S_i`, mean and variance of
/// `graph` against enumeration.
pub fn verify_closed_forms<T: Scalar>(graph: &CandidateGraph<T>, tol: T) -> Result<OracleReport> {
    let m = graph.directed_edges().len();
    if m > MAX_DIRECTED_EDGES {
        return Err(Error::TooLarge {
            directed_edges: m,
            max: MAX_DIRECTED_EDGES,
        });
    }
    let ops = ExpectedOperators::new(graph, KronBudget::unlimited())?;
    verify_operators(graph, &ops, tol)
}

/// [`verify_closed_forms`] against caller-supplied operators.
pub fn verify_operators<T: Scalar>(
    graph: &CandidateGraph<T>,
    ops: &ExpectedOperators<T>,
    tol: T,
) -> Result<OracleReport> {
    let n = graph.n();
    let exact = enumerate_expectations(graph)?;
    let weight_sum_error = (exact.weight_sum - T::one()).abs();
    if !(weight_sum_error <= tol) {
        return Err(fail("weight_sum", 0, 0, T::one(), exact.weight_sum));
    }

    let (err_ew, i, j, c, e) = worst(&ops.ew, &exact.ew);
    if !(err_ew <= tol) {
        return Err(fail("expected_weight", i, j, c, e));
    }
    let (err_r, i, j, c, e) = worst(&ops.r_kron, &exact.r);
    if !(err_r <= tol) {
        return Err(fail("kron_second_moment", i, j, c, e));
    }
    let delta_enum = &exact.r - exact.ew.kronecker(&exact.ew);
    let (err_delta, i, j, c, e) = worst(&ops.delta, &delta_enum);
    if !(err_delta <= tol) {
        return Err(fail("delta", i, j, c, e));
    }

    let mut err_norm = T::zero();
    for (v, &s) in ops.s_values.iter().enumerate() {
        let row = kron_index(n, v, v);
        let enumerated = delta_enum.row(row).iter().fold(T::zero(), |a, x| a + x.abs());
        let e = (s - enumerated).abs();
        if !(e <= tol) {
            return Err(fail("delta_norm", row, 0, s, enumerated));
        }
        err_norm = err_norm.max(e);
    }
    let norm_enum = inf_norm(&delta_enum);
    for (closed, check) in [(ops.max_s(), "delta_norm"), (ops.delta_inf_norm, "delta_norm")] {
        let e = (closed - norm_enum).abs();
        if !(e <= tol) {
            return Err(fail(check, 0, 0, closed, norm_enum));
        }
        err_norm = err_norm.max(e);
    }

    let x0 = probe_initial::<T>(n);
    let x = DVector::from_column_slice(&x0);
    let mean_closed = expected_consensus_value(graph, &x0)?;
    let pi = stationary_distribution(&exact.ew, T::loose_tol())?;
    let mean_enum = pi.dot(&x);
    let err_mean = (mean_closed - mean_enum).abs();
    if !(err_mean <= tol) {
        return Err(fail("mean", 0, 0, mean_closed, mean_enum));
    }

    let var_closed = exact_variance(graph, &x0, KronBudget::unlimited())?.raw;
    let pi_r = stationary_distribution(&exact.r, T::loose_tol())?;
    let var_enum = x.kronecker(&x).dot(&pi_r) - mean_enum * mean_enum;
    let err_var = (var_closed - var_enum).abs();
    if !(err_var <= tol) {
        return Err(fail("variance", 0, 0, var_closed, var_enum));
    }

    Ok(OracleReport {
        graph_id: graph_id(graph),
        max_err_ew: err_ew.as_f64(),
        max_err_r: err_r.as_f64(),
        max_err_delta: err_delta.as_f64(),
        max_err_delta_norm: err_norm.as_f64(),
        max_err_mean: err_mean.as_f64(),
        max_err_variance: err_var.as_f64(),
        weight_sum_error: weight_sum_error.as_f64(),
        cases_checked: exact.cases,
    })
}

/// Every connected labeled graph on `n` nodes, as edge lists.
pub fn connected_edge_sets(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    (1u64..1 << pairs.len())
        .map(|mask| {
            pairs
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &e)| e)
                .collect::<Vec<_>>()
        })
        .filter(|edges| {
            let probe = vec![0.5f64; n];
            CandidateGraph::new(edges, &probe, ProbabilityCheck::Strict).is_ok()
        })
        .collect()
}

/// Probability grid of the verification corpus.
pub const PROB_GRID: [f64; 3] = [0.25, 0.5, 0.75];

/// Every connected graph with `2 ≤ n ≤ max_n` nodes, each with the three
/// uniform grid assignments and three cyclically mixed ones
/// (`p_i = grid[(i + s) mod 3]`).
pub fn oracle_corpus<T: Scalar>(max_n: usize) -> Vec<CandidateGraph<T>> {
    let mut out = Vec::new();
    for n in 2..=max_n {
        for edges in connected_edge_sets(n) {
            for uniform in PROB_GRID {
                let probs = vec![T::lit(uniform); n];
                out.push(CandidateGraph::new(&edges, &probs, ProbabilityCheck::Strict).expect("corpus graph"));
            }
            for shift in 0..3 {
                let probs: Vec<T> = (0..n).map(|i| T::lit(PROB_GRID[(i + shift) % 3])).collect();
                out.push(CandidateGraph::new(&edges, &probs, ProbabilityCheck::Strict).expect("corpus graph"));
            }
        }
    }
    out
}

/// Runs [`verify_closed_forms`] over the whole corpus in order, stopping at
/// the first failure.
pub fn verify_corpus(max_n: usize, tol: f64) -> Result<Vec<OracleReport>> {
    oracle_corpus::<f64>(max_n)
        .iter()
        .map(|g| verify_closed_forms(g, tol))
        .collect()
}
