//! Closed-form first and second moments of the random weight matrices.
//!
//! With `z_i = 1/(d̃_i + 1)` and `d̃_i ~ Bin(d_i, p_i)`, everything below is
//! built from `M1_i = E z_i` and `M2_i = E z_i²`:
//!
//! * `E W = Σ + (I - Σ) D⁻¹ Aᵀ` with `Σ = diag(M1)`;
//! * `Q = E W ⊗ E W` and `R = E[W ⊗ W]`, assembled entry by entry from the
//!   seven index patterns of `E(w_ij) E(w_rs)` and `E(w_ij w_rs)`;
//! * `Δ = R - Q`, whose only nonzero rows are the `(i, i)` rows, with
//!   absolute row sums `S_i`.
//!
//! Kronecker index convention: row/column `i * n + r` (0-based) is the pair
//! `(i, r)`, the first factor picking the coarse block. [`kron_index`] is the
//! only place this lives.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::CandidateGraph;
use crate::scalar::{from_usize, Scalar};

/// Limit on the node count for which `n² × n²` operators are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KronBudget {
    pub max_nodes: usize,
}

impl Default for KronBudget {
    fn default() -> Self {
        KronBudget { max_nodes: 45 }
    }
}

impl KronBudget {
    pub fn unlimited() -> Self {
        KronBudget { max_nodes: usize::MAX }
    }

    pub fn check(&self, n: usize) -> Result<()> {
        if n > self.max_nodes {
            Err(Error::BudgetExceeded { n, cap: self.max_nodes })
        } else {
            Ok(())
        }
    }
}

/// Position of the pair `(a, b)` in a Kronecker square of `n × n` matrices.
#[inline]
pub fn kron_index(n: usize, a: usize, b: usize) -> usize {
    a * n + b
}

fn check_domain<T: Scalar>(p: T) -> Result<()> {
    if !(p > T::zero() && p <= T::one()) {
        return Err(Error::DomainError(format!(
            "listen probability must lie in (0, 1], got {p}"
        )));
    }
    Ok(())
}

/// `E[1/(1 + d̃)^power]` for `d̃ ~ Bin(d, p)` as a finite sum. The pmf is
/// evaluated in log space so large degrees do not underflow `q^d`.
pub(crate) fn binomial_inverse_moment<T: Scalar>(p: T, d: usize, power: i32) -> T {
    if p == T::one() {
        return T::one() / from_usize::<T>(d + 1).powi(power);
    }
    let (lp, lq) = (p.ln(), (T::one() - p).ln());
    let mut log_choose = T::zero();
    let mut total = T::zero();
    for k in 0..=d {
        if k > 0 {
            log_choose += from_usize::<T>(d - k + 1).ln() - from_usize::<T>(k).ln();
        }
        let log_pmf = log_choose + from_usize::<T>(k) * lp + from_usize::<T>(d - k) * lq;
        total += log_pmf.exp() / from_usize::<T>(k + 1).powi(power);
    }
    total
}

/// `M1 = E[1/(1 + Bin(d, p))] = (1 - q^{d+1}) / (p (d + 1))`.
pub fn moment_m1<T: Scalar>(p: T, d: usize) -> Result<T> {
    check_domain(p)?;
    // the closed form cancels catastrophically for tiny p
    if p < T::lit(1e-3) {
        return Ok(binomial_inverse_moment(p, d, 1));
    }
    let q = T::one() - p;
    let d1 = from_usize::<T>(d + 1);
    Ok((T::one() - q.powi(d as i32 + 1)) / (p * d1))
}

/// `M2 = E[1/(1 + Bin(d, p))²]`, by the explicit binomial sum.
pub fn moment_m2<T: Scalar>(p: T, d: usize) -> Result<T> {
    check_domain(p)?;
    Ok(binomial_inverse_moment(p, d, 2))
}

/// Per-node `M1_i`, `M2_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable<T> {
    pub m1: Vec<T>,
    pub m2: Vec<T>,
}

impl<T: Scalar> MomentTable<T> {
    pub fn new(graph: &CandidateGraph<T>) -> Self {
        let (m1, m2) = (0..graph.n())
            .map(|i| {
                let (p, d) = (graph.prob(i), graph.degree(i));
                // graph probabilities are validated, so the domain holds
                (
                    moment_m1(p, d).expect("validated probability"),
                    moment_m2(p, d).expect("validated probability"),
                )
            })
            .unzip();
        MomentTable { m1, m2 }
    }
}

/// `E W`: diagonal `M1_i`, off-diagonal `a_ji (1 - M1_i) / d_i`.
pub fn expected_weight_matrix<T: Scalar>(graph: &CandidateGraph<T>) -> DMatrix<T> {
    expected_weight_matrix_from(graph, &MomentTable::new(graph))
}

fn expected_weight_matrix_from<T: Scalar>(graph: &CandidateGraph<T>, m: &MomentTable<T>) -> DMatrix<T> {
    let n = graph.n();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            m.m1[i]
        } else if graph.has_edge(j, i) {
            (T::one() - m.m1[i]) / from_usize::<T>(graph.degree(i))
        } else {
            T::zero()
        }
    })
}

/// Index pattern of a Kronecker entry `(i, r), (j, s)`, i.e. of the product
/// `w_ij w_rs`. Same row node (`i == r`) gives the correlated cases 1, 3, 4
/// and 6; distinct row nodes give 2, 5 and 7.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntryCase {
    /// `w_ii w_ii`
    SameDiagonal,
    /// `w_ii w_rr`, `i != r`
    TwoDiagonals,
    /// `w_ii w_is` or `w_ij w_ii`, `j, s != i`
    DiagonalAndOffDiagonal,
    /// `w_ij w_ij`, `j != i`
    SameOffDiagonal,
    /// one diagonal and one off-diagonal weight on distinct rows
    DiagonalAndForeignRow,
    /// `w_ij w_is`, `j != s`, both `!= i`
    TwoOffDiagonalsSameRow,
    /// two off-diagonal weights on distinct rows
    OffDiagonalsDistinctRows,
}

impl EntryCase {
    pub fn classify(i: usize, j: usize, r: usize, s: usize) -> Self {
        use EntryCase::*;
        if i == r {
            match (j == i, s == i) {
                (true, true) => SameDiagonal,
                (true, false) | (false, true) => DiagonalAndOffDiagonal,
                (false, false) if j == s => SameOffDiagonal,
                (false, false) => TwoOffDiagonalsSameRow,
            }
        } else {
            match (j == i, s == r) {
                (true, true) => TwoDiagonals,
                (true, false) | (false, true) => DiagonalAndForeignRow,
                (false, false) => OffDiagonalsDistinctRows,
            }
        }
    }

    /// Case number 1..=7 in the customary numbering.
    pub fn number(self) -> u8 {
        use EntryCase::*;
        match self {
            SameDiagonal => 1,
            TwoDiagonals => 2,
            DiagonalAndOffDiagonal => 3,
            SameOffDiagonal => 4,
            DiagonalAndForeignRow => 5,
            TwoOffDiagonalsSameRow => 6,
            OffDiagonalsDistinctRows => 7,
        }
    }
}

struct Ctx<'a, T> {
    graph: &'a CandidateGraph<T>,
    m: &'a MomentTable<T>,
}

impl<T: Scalar> Ctx<'_, T> {
    fn a(&self, u: usize, v: usize) -> T {
        if self.graph.has_edge(u, v) {
            T::one()
        } else {
            T::zero()
        }
    }

    fn d(&self, i: usize) -> T {
        from_usize(self.graph.degree(i))
    }

    /// `E(w_ij) E(w_rs)` from the case formulas.
    fn q_entry(&self, i: usize, j: usize, r: usize, s: usize) -> T {
        use EntryCase::*;
        let one = T::one();
        let m1 = &self.m.m1;
        match EntryCase::classify(i, j, r, s) {
            SameDiagonal => m1[i] * m1[i],
            TwoDiagonals => m1[i] * m1[r],
            DiagonalAndOffDiagonal => {
                let k = if j == i { s } else { j };
                self.a(k, i) / self.d(i) * m1[i] * (one - m1[i])
            }
            SameOffDiagonal => self.a(j, i) / (self.d(i) * self.d(i)) * (one - m1[i]).powi(2),
            DiagonalAndForeignRow => {
                // diagonal weight on row `dr`, off-diagonal w_{oc} on row `or`
                let (dr, or, oc) = if j == i { (i, r, s) } else { (r, i, j) };
                self.a(oc, or) / self.d(or) * m1[dr] * (one - m1[or])
            }
            TwoOffDiagonalsSameRow => {
                self.a(j, i) * self.a(s, i) / (self.d(i) * self.d(i)) * (one - m1[i]).powi(2)
            }
            OffDiagonalsDistinctRows => {
                self.a(j, i) * self.a(s, r) / (self.d(i) * self.d(r)) * (one - m1[i]) * (one - m1[r])
            }
        }
    }

    /// `E(w_ij w_rs)`. Rows of distinct nodes depend on disjoint edge sets,
    /// so cases 2, 5 and 7 factor and coincide with `Q` exactly. So does
    /// every entry of a deterministic row (`p_i = 1`).
    fn r_entry(&self, i: usize, j: usize, r: usize, s: usize) -> T {
        use EntryCase::*;
        let (m1, m2) = (&self.m.m1, &self.m.m2);
        if i == r && self.graph.prob(i) == T::one() {
            return self.q_entry(i, j, r, s);
        }
        match EntryCase::classify(i, j, r, s) {
            SameDiagonal => m2[i],
            DiagonalAndOffDiagonal => {
                let k = if j == i { s } else { j };
                self.a(k, i) * (m1[i] - m2[i]) / self.d(i)
            }
            SameOffDiagonal => self.a(j, i) * (m1[i] - m2[i]) / self.d(i),
            TwoOffDiagonalsSameRow => {
                let d = self.graph.degree(i);
                if d > 1 {
                    let df = self.d(i);
                    self.a(j, i) * self.a(s, i) * (T::one() + T::lit(2.0) * m2[i] - T::lit(3.0) * m1[i])
                        / (df * (df - T::one()))
                } else {
                    T::zero()
                }
            }
            TwoDiagonals | DiagonalAndForeignRow | OffDiagonalsDistinctRows => self.q_entry(i, j, r, s),
        }
    }
}

fn assemble<T: Scalar>(n: usize, entry: impl Fn(usize, usize, usize, usize) -> T) -> DMatrix<T> {
    let nn = n * n;
    let mut out = DMatrix::zeros(nn, nn);
    for j in 0..n {
        for s in 0..n {
            let col = kron_index(n, j, s);
            for i in 0..n {
                for r in 0..n {
                    out[(kron_index(n, i, r), col)] = entry(i, j, r, s);
                }
            }
        }
    }
    out
}

/// `Q = E W ⊗ E W` from the case formulas.
pub fn kron_expected_product<T: Scalar>(graph: &CandidateGraph<T>, budget: KronBudget) -> Result<DMatrix<T>> {
    budget.check(graph.n())?;
    let m = MomentTable::new(graph);
    let ctx = Ctx { graph, m: &m };
    Ok(assemble(graph.n(), |i, j, r, s| ctx.q_entry(i, j, r, s)))
}

/// `R = E[W ⊗ W]` from the case formulas.
pub fn kron_expected_square<T: Scalar>(graph: &CandidateGraph<T>, budget: KronBudget) -> Result<DMatrix<T>> {
    budget.check(graph.n())?;
    let m = MomentTable::new(graph);
    let ctx = Ctx { graph, m: &m };
    Ok(assemble(graph.n(), |i, j, r, s| ctx.r_entry(i, j, r, s)))
}

/// Closed-form absolute row sum of `Δ` on row `(i, i)`:
/// `S_i = 2 (1 - M1_i) [M1_i + (M1_i - 1) / d_i]`.
pub fn s_values<T: Scalar>(graph: &CandidateGraph<T>, moments: &MomentTable<T>) -> Vec<T> {
    (0..graph.n())
        .map(|i| {
            if graph.prob(i) == T::one() {
                return T::zero();
            }
            let m1 = moments.m1[i];
            let d = from_usize::<T>(graph.degree(i));
            T::lit(2.0) * (T::one() - m1) * (m1 + (m1 - T::one()) / d)
        })
        .collect()
}

/// Max absolute row sum.
pub fn inf_norm<T: Scalar>(m: &DMatrix<T>) -> T {
    m.row_iter()
        .map(|row| row.iter().fold(T::zero(), |acc, x| acc + x.abs()))
        .fold(T::zero(), |a, b| a.max(b))
}

/// All closed-form first and second moment operators of a graph.
#[derive(Debug, Clone)]
pub struct ExpectedOperators<T: Scalar> {
    pub moments: MomentTable<T>,
    pub ew: DMatrix<T>,
    /// Diagonal of `Σ`, i.e. `M1`.
    pub sigma: DVector<T>,
    pub q_kron: DMatrix<T>,
    pub r_kron: DMatrix<T>,
    pub delta: DMatrix<T>,
    pub s_values: Vec<T>,
    /// `‖Δ‖∞` computed directly as the largest absolute row sum of `delta`.
    pub delta_inf_norm: T,
}

impl<T: Scalar> ExpectedOperators<T> {
    pub fn new(graph: &CandidateGraph<T>, budget: KronBudget) -> Result<Self> {
        budget.check(graph.n())?;
        let moments = MomentTable::new(graph);
        let ew = expected_weight_matrix_from(graph, &moments);
        let ctx = Ctx { graph, m: &moments };
        let n = graph.n();
        let q_kron = assemble(n, |i, j, r, s| ctx.q_entry(i, j, r, s));
        let r_kron = assemble(n, |i, j, r, s| ctx.r_entry(i, j, r, s));
        let delta = &r_kron - &q_kron;
        let s_values = s_values(graph, &moments);
        let delta_inf_norm = inf_norm(&delta);
        Ok(ExpectedOperators {
            sigma: DVector::from_vec(moments.m1.clone()),
            moments,
            ew,
            q_kron,
            r_kron,
            delta,
            s_values,
            delta_inf_norm,
        })
    }

    /// `max_i S_i`.
    pub fn max_s(&self) -> T {
        self.s_values.iter().fold(T::zero(), |a, &b| a.max(b))
    }
}

/// `(Δ, S, ‖Δ‖∞)`.
pub fn delta_and_norm<T: Scalar>(
    graph: &CandidateGraph<T>,
    budget: KronBudget,
) -> Result<(DMatrix<T>, Vec<T>, T)> {
    let ops = ExpectedOperators::new(graph, budget)?;
    Ok((ops.delta, ops.s_values, ops.delta_inf_norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, complete_graph, random_connected_graph, CandidateGraph, ProbabilityCheck};
    use crate::random_net::trial_stream;
    use proptest::prelude::*;

    /// Independent oracle: binomial pmf by direct products, no logs.
    fn pmf_sum(p: f64, d: usize, power: i32) -> f64 {
        let mut total = 0.0;
        for k in 0..=d {
            let mut c = 1.0;
            for t in 0..k {
                c = c * (d - t) as f64 / (t + 1) as f64;
            }
            total += c * p.powi(k as i32) * (1.0 - p).powi((d - k) as i32) / ((k + 1) as f64).powi(power);
        }
        total
    }

    #[test]
    fn m1_examples() {
        assert_eq!(moment_m1(1.0, 3).unwrap(), 0.25);
        assert!((moment_m1(0.5f64, 1).unwrap() - 0.75).abs() < 1e-15);
        assert!((moment_m1(0.5f64, 2).unwrap() - 7.0 / 12.0).abs() < 1e-15);
        assert!((pmf_sum(0.5, 2, 1) - 7.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn m2_examples() {
        assert_eq!(moment_m2(1.0, 3).unwrap(), 0.0625);
        assert!((moment_m2(0.5f64, 1).unwrap() - 0.625).abs() < 1e-15);
        // 1/4 + 2/4 * 1/4 + 1/4 * 1/9 = 29/72
        let want = 29.0 / 72.0;
        assert!((pmf_sum(0.5, 2, 2) - want).abs() < 1e-15);
        assert!((moment_m2(0.5, 2).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.402778).abs() < 1e-6);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(moment_m1(0.0, 2), Err(Error::DomainError(_))));
        assert!(matches!(moment_m1(-0.1, 2), Err(Error::DomainError(_))));
        assert!(matches!(moment_m2(1.5, 2), Err(Error::DomainError(_))));
        assert!(matches!(moment_m2(f64::NAN, 2), Err(Error::DomainError(_))));
    }

    #[test]
    fn closed_forms_match_binomial_sums_on_grid() {
        for k in 1..=9 {
            let p = k as f64 / 10.0;
            for d in 0..=12 {
                let m1 = moment_m1(p, d).unwrap();
                let m2 = moment_m2(p, d).unwrap();
                assert!((m1 - pmf_sum(p, d, 1)).abs() <= 1e-14, "m1 p={p} d={d}");
                assert!((m2 - pmf_sum(p, d, 2)).abs() <= 1e-14, "m2 p={p} d={d}");
                assert!(m1 * m1 <= m2 * (1.0 + 1e-14) && m2 <= m1 * (1.0 + 1e-14));
                assert!(m1 >= 1.0 / (d + 1) as f64 - 1e-15 && m1 <= 1.0 + 1e-15, "p={p} d={d} m1={m1}");
            }
        }
    }

    #[test]
    fn small_p_and_large_degree() {
        let m1 = moment_m1(1e-6, 5).unwrap();
        assert!((m1 - pmf_sum(1e-6, 5, 1)).abs() < 1e-14);
        // log-space pmf survives q^d underflow
        let m2 = moment_m2(0.9f64, 400).unwrap();
        assert!(m2 > 0.0 && m2.is_finite());
    }

    #[test]
    fn f32_moments() {
        let a: f32 = moment_m1(0.5f32, 2).unwrap();
        let b: f32 = moment_m2(0.5f32, 2).unwrap();
        assert!((a - 7.0 / 12.0).abs() < 1e-6);
        assert!((b - 29.0 / 72.0).abs() < 1e-6);
    }

    #[test]
    fn expected_w_single_edge() {
        let g = build_graph(&[(0, 1)], &[0.5f64, 0.5]).unwrap();
        let ew = expected_weight_matrix(&g);
        assert_eq!(ew, nalgebra::dmatrix![0.75, 0.25; 0.25, 0.75]);
    }

    #[test]
    fn expected_w_deterministic_triangle() {
        let g = complete_graph(3, 1.0f64, ProbabilityCheck::Relaxed).unwrap();
        let ew = expected_weight_matrix(&g);
        assert!(ew.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn classify_cases() {
        use EntryCase::*;
        assert_eq!(EntryCase::classify(0, 0, 0, 0), SameDiagonal);
        assert_eq!(EntryCase::classify(0, 0, 1, 1), TwoDiagonals);
        assert_eq!(EntryCase::classify(0, 0, 0, 2), DiagonalAndOffDiagonal);
        assert_eq!(EntryCase::classify(0, 2, 0, 0), DiagonalAndOffDiagonal);
        assert_eq!(EntryCase::classify(0, 1, 0, 1), SameOffDiagonal);
        assert_eq!(EntryCase::classify(0, 0, 1, 2), DiagonalAndForeignRow);
        assert_eq!(EntryCase::classify(1, 2, 0, 0), DiagonalAndForeignRow);
        assert_eq!(EntryCase::classify(0, 1, 0, 2), TwoOffDiagonalsSameRow);
        assert_eq!(EntryCase::classify(0, 1, 1, 0), OffDiagonalsDistinctRows);
        assert_eq!(EntryCase::classify(0, 1, 2, 3), OffDiagonalsDistinctRows);
        assert_eq!(EntryCase::classify(0, 1, 2, 1), OffDiagonalsDistinctRows);
        assert_eq!(TwoOffDiagonalsSameRow.number(), 6);
    }

    #[test]
    fn q_cases_single_edge() {
        let g = build_graph(&[(0, 1)], &[0.5f64, 0.5]).unwrap();
        let q = kron_expected_product(&g, KronBudget::default()).unwrap();
        let (ii, ij) = (kron_index(2, 0, 0), kron_index(2, 1, 1));
        assert!((q[(ii, ii)] - 0.5625).abs() < 1e-15);
        // (0,0),(1,1): w_01 w_01
        assert!((q[(ii, ij)] - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn r_cases_degree_two() {
        // node 1 of the path 0-1-2 has d = 2
        let g = build_graph(&[(0, 1), (1, 2)], &[0.5f64; 3]).unwrap();
        let r = kron_expected_square(&g, KronBudget::default()).unwrap();
        let row = kron_index(3, 1, 1);
        assert!((r[(row, row)] - 29.0 / 72.0).abs() < 1e-15);
        // w_10 w_12: (1 + 2 M2 - 3 M1) / 2 = 1/36
        let r6 = r[(row, kron_index(3, 0, 2))];
        assert!((r6 - 1.0 / 36.0).abs() < 1e-15, "{r6}");
        assert!((r6 - 0.027778).abs() < 1e-6);
    }

    #[test]
    fn delta_single_edge() {
        let g = build_graph(&[(0, 1)], &[0.5f64, 0.5]).unwrap();
        let ops = ExpectedOperators::new(&g, KronBudget::default()).unwrap();
        let row = kron_index(2, 0, 0);
        let d = |j, s| ops.delta[(row, kron_index(2, j, s))];
        assert!((d(0, 0) - 0.0625).abs() < 1e-15);
        assert!((d(0, 1) + 0.0625).abs() < 1e-15);
        assert!((d(1, 0) + 0.0625).abs() < 1e-15);
        assert!((d(1, 1) - 0.0625).abs() < 1e-15);
        assert!((ops.s_values[0] - 0.25).abs() < 1e-15);
        assert!((ops.delta_inf_norm - 0.25).abs() < 1e-15);
    }

    #[test]
    fn delta_degree_two_row() {
        let g = build_graph(&[(0, 1), (1, 2)], &[0.5f64; 3]).unwrap();
        let ops = ExpectedOperators::new(&g, KronBudget::default()).unwrap();
        assert!((ops.s_values[1] - 0.3125).abs() < 1e-15);
        let row = kron_index(3, 1, 1);
        let abs_sum: f64 = ops.delta.row(row).iter().map(|x| x.abs()).sum();
        assert!((abs_sum - 0.3125).abs() < 1e-15);
    }

    #[test]
    fn deterministic_graph_has_zero_delta() {
        let g = complete_graph(4, 1.0f64, ProbabilityCheck::Relaxed).unwrap();
        let ops = ExpectedOperators::new(&g, KronBudget::default()).unwrap();
        assert!(ops.delta.iter().all(|&x| x == 0.0));
        assert!(ops.s_values.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn budget_is_enforced() {
        let g = complete_graph(5, 0.5, ProbabilityCheck::Strict).unwrap();
        let err = kron_expected_square(&g, KronBudget { max_nodes: 4 }).unwrap_err();
        assert_eq!(err, Error::BudgetExceeded { n: 5, cap: 4 });
    }

    fn row_sum_defect(m: &DMatrix<f64>) -> f64 {
        m.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn operator_invariants(seed in any::<u64>(), n in 2usize..7) {
            let mut rng = trial_stream(seed, 0);
            let g: CandidateGraph<f64> = random_connected_graph(n, 0.4, 0.05, 0.95, &mut rng).unwrap();
            let ops = ExpectedOperators::new(&g, KronBudget::default()).unwrap();
            prop_assert!(row_sum_defect(&ops.ew) <= 1e-12);
            prop_assert!(row_sum_defect(&ops.q_kron) <= 1e-12);
            prop_assert!(row_sum_defect(&ops.r_kron) <= 1e-12);

            let direct = ops.ew.kronecker(&ops.ew);
            prop_assert!((&direct - &ops.q_kron).amax() <= 1e-14);

            for i in 0..n {
                for r in 0..n {
                    let row = ops.delta.row(kron_index(n, i, r));
                    prop_assert!(row.sum().abs() <= 1e-12);
                    if i != r {
                        prop_assert!(row.iter().all(|&x| x == 0.0));
                    }
                }
                let var_z = ops.delta[(kron_index(n, i, i), kron_index(n, i, i))];
                prop_assert!(var_z >= 0.0);
            }
            prop_assert!((ops.max_s() - ops.delta_inf_norm).abs() <= 1e-12);
        }
    }
}
