//! Mean, exact variance and the spectral variance bound of the asymptotic
//! consensus value `x*`.
//!
//! The mean is `x(0)ᵀ v₁(E W)` where the dominant left eigenvector of `E W`
//! has the closed form `v₁ ∝ d_i / (1 - M1_i)`. The variance is
//! `[x(0) ⊗ x(0)]ᵀ v₁(R) - (x(0)ᵀ v₁(E W))²` with `R = E[W ⊗ W]`, and is
//! bounded by the product of three factors:
//!
//! * `A = ‖x(0) ⊗ x(0)‖₁` (initial condition),
//! * `B = max_i S_i = ‖R - Q‖∞` (node properties),
//! * `C = 2(n² - 1) / ∏_{(i,j) ≠ (1,1)} (1 - λ_i λ_j)` (topology, via the
//!   spectrum of `E W`).

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::CandidateGraph;
use crate::linalg::{group_inverse, stationary_distribution};
use crate::moments::{expected_weight_matrix, s_values, ExpectedOperators, KronBudget, MomentTable};
use crate::scalar::{from_usize, Scalar};

fn check_len<T>(graph_n: usize, x0: &[T]) -> Result<()> {
    if x0.len() != graph_n {
        return Err(Error::DimensionMismatch {
            expected: graph_n,
            found: x0.len(),
        });
    }
    Ok(())
}

/// Both parameterizations of the dominant left eigenvector of `E W`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanWeights<T: Scalar> {
    /// `w_i = p_i (d_i + 1) d_i / (p_i (d_i + 1) - 1 + q_i^{d_i + 1})`.
    pub w: Vec<T>,
    /// `ρ = 1 / Σ w_i`.
    pub rho: T,
    /// `σ d_i / (1 - M1_i)`, L1-normalized.
    pub v1_ew: DVector<T>,
    /// `σ = 1 / Σ_i d_i / (1 - M1_i)`.
    pub sigma_norm: T,
}

impl<T: Scalar> MeanWeights<T> {
    /// `ρ w_i`.
    pub fn normalized(&self) -> Vec<T> {
        self.w.iter().map(|&w| self.rho * w).collect()
    }
}

pub fn dominant_left_eigvec_closed<T: Scalar>(graph: &CandidateGraph<T>) -> MeanWeights<T> {
    let n = graph.n();
    let m = MomentTable::new(graph);
    let w: Vec<T> = (0..n)
        .map(|i| {
            let (p, d) = (graph.prob(i), graph.degree(i));
            let pd1 = p * from_usize::<T>(d + 1);
            let q = T::one() - p;
            pd1 * from_usize::<T>(d) / (pd1 - T::one() + q.powi(d as i32 + 1))
        })
        .collect();
    let rho = T::one() / w.iter().fold(T::zero(), |a, &b| a + b);
    let raw: Vec<T> = (0..n)
        .map(|i| from_usize::<T>(graph.degree(i)) / (T::one() - m.m1[i]))
        .collect();
    let sigma_norm = T::one() / raw.iter().fold(T::zero(), |a, &b| a + b);
    let v1_ew = DVector::from_iterator(n, raw.into_iter().map(|x| sigma_norm * x));
    MeanWeights {
        w,
        rho,
        v1_ew,
        sigma_norm,
    }
}

/// `E x* = Σ ρ w_i x_i(0)`.
pub fn expected_consensus_value<T: Scalar>(graph: &CandidateGraph<T>, x0: &[T]) -> Result<T> {
    check_len(graph.n(), x0)?;
    let mw = dominant_left_eigvec_closed(graph);
    Ok(mw.v1_ew.iter().zip(x0).fold(T::zero(), |acc, (&v, &x)| acc + v * x))
}

/// Initial condition `y_i = x_i / (n ρ w_i)` whose expected consensus value is
/// the average of `x`.
pub fn reweight_initial<T: Scalar>(graph: &CandidateGraph<T>, x0: &[T]) -> Result<Vec<T>> {
    check_len(graph.n(), x0)?;
    let n = from_usize::<T>(graph.n());
    let mw = dominant_left_eigvec_closed(graph);
    Ok(x0
        .iter()
        .zip(&mw.w)
        .map(|(&x, &w)| x / (n * mw.rho * w))
        .collect())
}

/// Eigenvalues of `E W` ordered by distance to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary<T: Scalar> {
    pub eigenvalues: Vec<Complex<T>>,
    /// Largest modulus among all eigenvalues but the first.
    pub slem: T,
}

fn by_distance_to_one<T: Scalar>(a: &Complex<T>, b: &Complex<T>) -> std::cmp::Ordering {
    let one = Complex::new(T::one(), T::zero());
    let (da, db) = ((one - a).modulus(), (one - b).modulus());
    da.partial_cmp(&db)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then_with(|| b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal))
        .then_with(|| b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
}

/// Eigenvalues of a dense real matrix, ordered by `|1 - λ|` ascending; ties
/// go to the larger real part, then the larger imaginary part.
pub fn ordered_eigenvalues<T: Scalar>(m: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    // deflating at exactly one ulp stalls on clustered spectra
    let eps = T::default_epsilon() * from_usize::<T>(m.nrows().max(4));
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), eps, 100_000).ok_or(Error::EigensolveFailure)?;
    let mut eig: Vec<Complex<T>> = schur.complex_eigenvalues().iter().cloned().collect();
    eig.sort_by(by_distance_to_one);
    Ok(eig)
}

/// Spectrum of `E W`, ordered as in [`ordered_eigenvalues`].
///
/// `E W` is reversible with respect to `v₁`, so it is similar to the
/// symmetric `D^{1/2} E W D^{-1/2}` with `D = diag(v₁)` and its spectrum is
/// real. The symmetric eigensolver is used on that form.
pub fn spectral_summary<T: Scalar>(graph: &CandidateGraph<T>) -> Result<SpectralSummary<T>> {
    let n = graph.n();
    let ew = expected_weight_matrix(graph);
    let v = dominant_left_eigvec_closed(graph).v1_ew;
    let sym = DMatrix::from_fn(n, n, |i, j| ew[(i, j)] * (v[i] / v[j]).sqrt());
    let sym = (&sym + sym.transpose()) * T::lit(0.5);
    let mut eigenvalues: Vec<Complex<T>> = sym
        .try_symmetric_eigen(T::default_epsilon(), 100_000)
        .ok_or(Error::EigensolveFailure)?
        .eigenvalues
        .iter()
        .map(|&l| Complex::new(l, T::zero()))
        .collect();
    eigenvalues.sort_by(by_distance_to_one);
    let slem = eigenvalues
        .iter()
        .skip(1)
        .map(|l| l.modulus())
        .fold(T::zero(), |a, b| a.max(b));
    Ok(SpectralSummary { eigenvalues, slem })
}

/// `2(n² - 1) / ∏_{(i,j) ≠ (1,1)} (1 - λ_i λ_j)`. The result is `+inf` if
/// it overflows `T`; [`meyer_bound_log10`] does not.
pub fn meyer_bound<T: Scalar>(spectral: &SpectralSummary<T>) -> Result<T> {
    Ok(T::lit(10.0).powf(meyer_bound_log10(spectral)?))
}

/// `log10` of [`meyer_bound`], accumulated in log space with complex
/// logarithms.
pub fn meyer_bound_log10<T: Scalar>(spectral: &SpectralSummary<T>) -> Result<T> {
    let lambda = &spectral.eigenvalues;
    let n = lambda.len();
    let one = Complex::new(T::one(), T::zero());
    if n == 0 || (lambda[0] - one).modulus() > T::lit(1e-10) {
        return Err(Error::DegenerateSpectrum(
            "leading eigenvalue is not 1".into(),
        ));
    }
    let mut log_sum = Complex::new(T::zero(), T::zero());
    for i in 0..n {
        for j in 0..n {
            if i == 0 && j == 0 {
                continue;
            }
            let factor = one - lambda[i] * lambda[j];
            if factor.modulus() < T::lit(1e-12) {
                return Err(Error::DegenerateSpectrum(format!(
                    "λ_{} λ_{} = 1, the bound is infinite",
                    i + 1,
                    j + 1
                )));
            }
            log_sum += ComplexField::ln(factor);
        }
    }
    let phase = log_sum.im.as_f64().rem_euclid(std::f64::consts::TAU);
    if phase.sin().abs() > 1e-9 || phase.cos() <= 0.0 {
        return Err(Error::DegenerateSpectrum(format!(
            "eigenvalue product is not real and positive (phase {phase:e})"
        )));
    }
    let nn = from_usize::<T>(n * n - 1);
    Ok((T::lit(2.0) * nn).log10() - log_sum.re / T::ln_10())
}

/// `κ_s = max |g#_ij|` for the group inverse of `I - Q`.
pub fn exact_condition_number<T: Scalar>(graph: &CandidateGraph<T>, budget: KronBudget) -> Result<T> {
    let ops = ExpectedOperators::new(graph, budget)?;
    condition_number_of(&ops.q_kron)
}

/// `max |g#_ij|` of `I - P` for any stochastic `P` with a unique stationary
/// distribution.
pub fn condition_number_of<T: Scalar>(p: &DMatrix<T>) -> Result<T> {
    let pi = stationary_distribution(p, T::loose_tol())?;
    Ok(group_inverse(p, &pi)?.amax())
}

/// Residuals of the defining identities `G G# G = G`, `G# G G# = G#` and
/// `G G# = G# G`.
pub fn group_inverse_residuals<T: Scalar>(p: &DMatrix<T>) -> Result<[T; 3]> {
    let pi = stationary_distribution(p, T::loose_tol())?;
    let gs = group_inverse(p, &pi)?;
    let g = DMatrix::identity(p.nrows(), p.nrows()) - p;
    let ggs = &g * &gs;
    Ok([
        (&ggs * &g - &g).amax(),
        (&gs * &g * &gs - &gs).amax(),
        (&ggs - &gs * &g).amax(),
    ])
}

/// Exact second-order quantities of `x*` from the stationary distributions of
/// `R` and `Q`.
#[derive(Debug, Clone)]
pub struct ExactVariance<T: Scalar> {
    pub mean: T,
    /// `max(raw, 0)`.
    pub variance: T,
    pub raw: T,
    /// `π̃ = v₁(R)`.
    pub v1_r: DVector<T>,
    /// `π = v₁(Q)`.
    pub v1_q: DVector<T>,
}

fn kron_square<T: Scalar>(x0: &[T]) -> DVector<T> {
    let x = DVector::from_column_slice(x0);
    x.kronecker(&x)
}

pub fn exact_variance<T: Scalar>(
    graph: &CandidateGraph<T>,
    x0: &[T],
    budget: KronBudget,
) -> Result<ExactVariance<T>> {
    check_len(graph.n(), x0)?;
    let ops = ExpectedOperators::new(graph, budget)?;
    exact_variance_from(graph, x0, &ops)
}

fn exact_variance_from<T: Scalar>(
    graph: &CandidateGraph<T>,
    x0: &[T],
    ops: &ExpectedOperators<T>,
) -> Result<ExactVariance<T>> {
    let mean = expected_consensus_value(graph, x0)?;
    let v1_r = stationary_distribution(&ops.r_kron, T::loose_tol())?;
    let v1_q = stationary_distribution(&ops.q_kron, T::loose_tol())?;
    let raw = kron_square(x0).dot(&v1_r) - mean * mean;
    Ok(ExactVariance {
        mean,
        variance: raw.max(T::zero()),
        raw,
        v1_r,
        v1_q,
    })
}

/// The three factors of the variance bound and their product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerms<T> {
    /// `‖x(0) ⊗ x(0)‖₁`
    pub a: T,
    /// `max_i S_i`
    pub b: T,
    /// spectral factor
    pub c: T,
    pub total: T,
    /// `log10 C`, finite even when `C` overflows.
    pub c_log10: T,
    /// `log10(A B C)`; `-inf` when the bound is 0.
    pub total_log10: T,
}

/// `A · B · C`. Needs no Kronecker-sized operator.
pub fn variance_bound_terms<T: Scalar>(graph: &CandidateGraph<T>, x0: &[T]) -> Result<BoundTerms<T>> {
    check_len(graph.n(), x0)?;
    let l1 = x0.iter().fold(T::zero(), |acc, x| acc + x.abs());
    let a = l1 * l1;
    let s = s_values(graph, &MomentTable::new(graph));
    let b = s.iter().fold(T::zero(), |acc, &x| acc.max(x));
    let c_log10 = meyer_bound_log10(&spectral_summary(graph)?)?;
    let c = T::lit(10.0).powf(c_log10);
    // 0 · inf stays 0: no initial spread or no randomness means no variance
    let total = if a == T::zero() || b == T::zero() {
        T::zero()
    } else {
        a * b * c
    };
    let total_log10 = if total == T::zero() {
        T::lit(f64::NEG_INFINITY)
    } else {
        a.log10() + b.log10() + c_log10
    };
    Ok(BoundTerms {
        a,
        b,
        c,
        total,
        c_log10,
        total_log10,
    })
}

/// Bound terms plus, within the Kronecker budget, the exact variance and
/// the condition number.
#[derive(Debug, Clone)]
pub struct VarianceReport<T: Scalar> {
    pub mean: T,
    pub exact: Option<ExactVariance<T>>,
    pub bound: BoundTerms<T>,
    pub kappa_exact: Option<T>,
}

pub fn variance_upper_bound<T: Scalar>(
    graph: &CandidateGraph<T>,
    x0: &[T],
    budget: KronBudget,
    with_condition_number: bool,
) -> Result<VarianceReport<T>> {
    let bound = variance_bound_terms(graph, x0)?;
    let mean = expected_consensus_value(graph, x0)?;
    let (exact, kappa_exact) = match ExpectedOperators::new(graph, budget) {
        Ok(ops) => {
            let exact = exact_variance_from(graph, x0, &ops)?;
            let kappa = if with_condition_number {
                Some(condition_number_of(&ops.q_kron)?)
            } else {
                None
            };
            (Some(exact), kappa)
        }
        Err(Error::BudgetExceeded { .. }) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(VarianceReport {
        mean,
        exact,
        bound,
        kappa_exact,
    })
}

/// Every link of `var ≤ A‖π̃ - π‖∞ ≤ A κ_s ‖Δ‖∞ ≤ A B C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundChain<T> {
    pub variance: T,
    pub perturbation: T,
    pub condition: T,
    pub spectral: T,
    pub kappa: T,
    pub delta_inf_norm: T,
    pub terms: BoundTerms<T>,
}

impl<T: Scalar> BoundChain<T> {
    /// Whether each link holds up to `slack`.
    pub fn holds(&self, slack: T) -> bool {
        self.variance <= self.perturbation + slack
            && self.perturbation <= self.condition + slack
            && self.condition <= self.spectral + slack
    }
}

pub fn bound_chain<T: Scalar>(graph: &CandidateGraph<T>, x0: &[T], budget: KronBudget) -> Result<BoundChain<T>> {
    check_len(graph.n(), x0)?;
    let ops = ExpectedOperators::new(graph, budget)?;
    let exact = exact_variance_from(graph, x0, &ops)?;
    let kappa = condition_number_of(&ops.q_kron)?;
    let terms = variance_bound_terms(graph, x0)?;
    let gap = (&exact.v1_r - &exact.v1_q).amax();
    Ok(BoundChain {
        variance: exact.variance,
        perturbation: terms.a * gap,
        condition: terms.a * kappa * ops.delta_inf_norm,
        spectral: terms.total,
        kappa,
        delta_inf_norm: ops.delta_inf_norm,
        terms,
    })
}

/// Options for [`analyze`].
#[derive(Debug, Clone, Copy)]
pub struct AnalyzeOptions {
    pub budget: KronBudget,
    pub condition_number: bool,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            budget: KronBudget::default(),
            condition_number: true,
        }
    }
}

/// Serializable summary of all analytic results for one graph and initial
/// condition.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub nodes: usize,
    pub probs: Vec<f64>,
    pub mean: f64,
    pub exact_variance: Option<f64>,
    pub exact_variance_raw: Option<f64>,
    pub bound_term_a: f64,
    pub bound_term_b: f64,
    /// `null` when `C` overflows; see `bound_term_c_log10`.
    pub bound_term_c: f64,
    pub bound_term_c_log10: f64,
    pub bound_total: f64,
    pub bound_total_log10: f64,
    pub kappa_exact: Option<f64>,
    pub slem: f64,
    /// `[re, im]`, ordered by distance to 1.
    pub eigenvalues: Vec<[f64; 2]>,
    /// `ρ w_i`.
    pub weights: Vec<f64>,
}

pub fn analyze<T: Scalar>(graph: &CandidateGraph<T>, x0: &[T], opts: AnalyzeOptions) -> Result<AnalysisReport> {
    let report = variance_upper_bound(graph, x0, opts.budget, opts.condition_number)?;
    let spectral = spectral_summary(graph)?;
    let weights = dominant_left_eigvec_closed(graph).normalized();
    Ok(AnalysisReport {
        nodes: graph.n(),
        probs: graph.probs().iter().map(|p| p.as_f64()).collect(),
        mean: report.mean.as_f64(),
        exact_variance: report.exact.as_ref().map(|e| e.variance.as_f64()),
        exact_variance_raw: report.exact.as_ref().map(|e| e.raw.as_f64()),
        bound_term_a: report.bound.a.as_f64(),
        bound_term_b: report.bound.b.as_f64(),
        bound_term_c: report.bound.c.as_f64(),
        bound_term_c_log10: report.bound.c_log10.as_f64(),
        bound_total: report.bound.total.as_f64(),
        bound_total_log10: report.bound.total_log10.as_f64(),
        kappa_exact: report.kappa_exact.map(|k| k.as_f64()),
        slem: spectral.slem.as_f64(),
        eigenvalues: spectral
            .eigenvalues
            .iter()
            .map(|l| [l.re.as_f64(), l.im.as_f64()])
            .collect(),
        weights: weights.iter().map(|w| w.as_f64()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, complete_graph, path_graph, random_connected_graph, ProbabilityCheck};
    use crate::random_net::trial_stream;
    use proptest::prelude::*;

    fn path3() -> CandidateGraph<f64> {
        build_graph(&[(0, 1), (1, 2)], &[0.5; 3]).unwrap()
    }

    /// Power iteration on `E Wᵀ` as an iterative stationary solve, independent
    /// of both the closed form and the LU route.
    fn power_stationary(p: &DMatrix<f64>) -> DVector<f64> {
        let n = p.nrows();
        let mut v = DVector::from_element(n, 1.0 / n as f64);
        for _ in 0..100_000 {
            let next = p.tr_mul(&v);
            let done = (&next - &v).amax() < 1e-16;
            v = next;
            if done {
                break;
            }
        }
        let s = v.sum();
        v / s
    }

    #[test]
    fn single_edge_weights() {
        let g = build_graph(&[(0, 1)], &[0.5, 0.5]).unwrap();
        let mw = dominant_left_eigvec_closed(&g);
        assert!((mw.v1_ew[0] - 0.5).abs() < 1e-15 && (mw.v1_ew[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn path_weights() {
        let mw = dominant_left_eigvec_closed(&path3());
        let want = [0.3125, 0.375, 0.3125];
        for i in 0..3 {
            assert!((mw.v1_ew[i] - want[i]).abs() < 1e-15);
        }
        assert!((mw.w[0] - 4.0).abs() < 1e-14 && (mw.w[1] - 4.8).abs() < 1e-14);
        let it = power_stationary(&expected_weight_matrix(&path3()));
        assert!((&it - &mw.v1_ew).amax() < 1e-9);
        let lu = stationary_distribution(&expected_weight_matrix(&path3()), 1e-14).unwrap();
        assert!((&lu - &mw.v1_ew).amax() < 1e-10);
    }

    #[test]
    fn mean_of_constant_and_symmetric() {
        let g = path3();
        assert!((expected_consensus_value(&g, &[2.5; 3]).unwrap() - 2.5).abs() < 1e-14);
        let k = complete_graph(5, 0.3, ProbabilityCheck::Strict).unwrap();
        let x = [1.0, -2.0, 0.5, 7.0, 3.0];
        let want = x.iter().sum::<f64>() / 5.0;
        assert!((expected_consensus_value(&k, &x).unwrap() - want).abs() < 1e-14);
        assert!(matches!(
            expected_consensus_value(&g, &[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn reweighting() {
        let k = complete_graph(4, 0.4, ProbabilityCheck::Strict).unwrap();
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = reweight_initial(&k, &x).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-14);
        }
        let g = path3();
        let y = reweight_initial(&g, &[1.0, 2.0, 3.0]).unwrap();
        assert!((expected_consensus_value(&g, &y).unwrap() - 2.0).abs() < 1e-12);
        let y = reweight_initial(&g, &[1.0, 0.0, 0.0]).unwrap();
        assert!((expected_consensus_value(&g, &y).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(reweight_initial(&g, &[1.0]).is_err());
    }

    #[test]
    fn two_node_spectrum_and_meyer() {
        let g = build_graph(&[(0, 1)], &[0.5, 0.5]).unwrap();
        let s = spectral_summary(&g).unwrap();
        assert!((s.eigenvalues[0].re - 1.0).abs() < 1e-12);
        assert!((s.eigenvalues[1].re - 0.5).abs() < 1e-12);
        assert!((s.slem - 0.5).abs() < 1e-12);
        // 2·3 / ((1 - 0.5)² (1 - 0.25))
        assert!((meyer_bound(&s).unwrap() - 32.0).abs() < 1e-9);
    }

    fn summary(ls: &[f64]) -> SpectralSummary<f64> {
        SpectralSummary {
            eigenvalues: ls.iter().map(|&l| Complex::new(l, 0.0)).collect(),
            slem: ls[1..].iter().fold(0.0, |a: f64, b| a.max(b.abs())),
        }
    }

    #[test]
    fn meyer_limits() {
        assert!(matches!(
            meyer_bound(&summary(&[1.0, 1.0 - 1e-14])),
            Err(Error::DegenerateSpectrum(_))
        ));
        assert_eq!(meyer_bound(&summary(&[1.0, 0.0])).unwrap(), 6.0);
        assert_eq!(meyer_bound(&summary(&[1.0, 0.0, 0.0])).unwrap(), 16.0);
        // complex pair: product stays real
        let s = SpectralSummary {
            eigenvalues: vec![
                Complex::new(1.0, 0.0),
                Complex::new(0.3, 0.4),
                Complex::new(0.3, -0.4),
            ],
            slem: 0.5,
        };
        let direct: Complex<f64> = {
            let l = &s.eigenvalues;
            let mut prod = Complex::new(1.0, 0.0);
            for i in 0..3 {
                for j in 0..3 {
                    if i + j > 0 {
                        prod *= Complex::new(1.0, 0.0) - l[i] * l[j];
                    }
                }
            }
            prod
        };
        assert!(direct.im.abs() < 1e-12);
        assert!((meyer_bound(&s).unwrap() - 16.0 / direct.re).abs() < 1e-10);
    }

    #[test]
    fn clustered_spectrum_both_solvers() {
        // 28 followers share a handful of eigenvalues
        let g: CandidateGraph<f64> =
            crate::graph::leader_follower_chain([4, 8, 16], 0.5, crate::graph::LeaderProb::inverse_degree()).unwrap();
        let sym = spectral_summary(&g).unwrap().eigenvalues;
        let schur = ordered_eigenvalues(&expected_weight_matrix(&g)).unwrap();
        assert_eq!(sym.len(), 31);
        for (a, b) in sym.iter().zip(&schur) {
            assert!((a - b).modulus() < 1e-9, "{a} {b}");
        }
        assert!((sym[3].re - 0.75).abs() < 1e-12);
    }

    #[test]
    fn eigen_ordering_ties() {
        let m = nalgebra::dmatrix![1.0, 0.0, 0.0; 0.0, 0.5, 0.0; 0.0, 0.0, 1.5];
        let e = ordered_eigenvalues(&m).unwrap();
        assert_eq!(e[0].re, 1.0);
        // |1 - 1.5| == |1 - 0.5|: larger real part first
        assert_eq!(e[1].re, 1.5);
        assert_eq!(e[2].re, 0.5);
    }

    #[test]
    fn exact_variance_degenerate_cases() {
        let g = path3();
        let v = exact_variance(&g, &[3.0; 3], KronBudget::default()).unwrap();
        assert!(v.variance.abs() < 1e-12);
        let k = complete_graph(3, 1.0, ProbabilityCheck::Relaxed).unwrap();
        let v = exact_variance(&k, &[0.0, 1.0, 5.0], KronBudget::default()).unwrap();
        assert!(v.raw.abs() < 1e-12);
    }

    #[test]
    fn single_edge_variance_and_bound() {
        let g = build_graph(&[(0, 1)], &[0.5, 0.5]).unwrap();
        let x0 = [0.0, 1.0];
        let r = variance_upper_bound(&g, &x0, KronBudget::default(), true).unwrap();
        assert_eq!(r.bound.a, 1.0);
        assert!((r.bound.b - 0.25).abs() < 1e-15);
        assert!((r.bound.c - 32.0).abs() < 1e-9);
        assert!((r.bound.total - 8.0).abs() < 1e-9);
        let exact = r.exact.unwrap();
        assert!(exact.variance <= r.bound.total);
        assert!((exact.mean - 0.5).abs() < 1e-15);
        // v₁(Q) = v₁(EW) ⊗ v₁(EW)
        assert!(exact.v1_q.iter().all(|&x| (x - 0.25).abs() < 1e-14));
    }

    #[test]
    fn zero_initial_condition_or_no_randomness() {
        let g = path3();
        let t = variance_bound_terms(&g, &[0.0; 3]).unwrap();
        assert_eq!(t.total, 0.0);
        let k = complete_graph(3, 1.0, ProbabilityCheck::Relaxed).unwrap();
        let t = variance_bound_terms(&k, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(t.b, 0.0);
        assert_eq!(t.total, 0.0);
    }

    #[test]
    fn bound_term_a_is_double_sum() {
        let x = [1.0, -2.0, 0.5];
        let t = variance_bound_terms(&path3(), &x).unwrap();
        let double: f64 = x.iter().flat_map(|a| x.iter().map(move |b| (a * b).abs())).sum();
        assert!((t.a - double).abs() < 1e-14);
    }

    #[test]
    fn deterministic_two_node_condition_number() {
        let g = CandidateGraph::new(&[(0, 1)], &[1.0, 1.0], ProbabilityCheck::Relaxed).unwrap();
        let ops = ExpectedOperators::new(&g, KronBudget::default()).unwrap();
        let kappa = condition_number_of(&ops.q_kron).unwrap();
        let res = group_inverse_residuals(&ops.q_kron).unwrap();
        assert!(res.iter().all(|&r| r <= 1e-8));
        // E W = [[1/2, 1/2], [1/2, 1/2]]: eigenvalues {1, 0}
        let c = meyer_bound(&spectral_summary(&g).unwrap()).unwrap();
        assert!((c - 6.0).abs() < 1e-9);
        assert!(kappa < c, "{kappa} vs {c}");
    }

    #[test]
    fn reducible_q_is_singular() {
        let p = DMatrix::<f64>::identity(4, 4);
        assert!(matches!(condition_number_of(&p), Err(Error::SingularChain(_))));
    }

    #[test]
    fn budget_skips_exact_parts() {
        let g = path_graph(6, 0.5, ProbabilityCheck::Strict).unwrap();
        let x: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let r = variance_upper_bound(&g, &x, KronBudget { max_nodes: 5 }, true).unwrap();
        assert!(r.exact.is_none() && r.kappa_exact.is_none());
        assert!(r.bound.total > 0.0);
    }

    #[test]
    fn f32_agrees_with_f64() {
        let g64 = path_graph(5, 0.35, ProbabilityCheck::Strict).unwrap();
        let g32 = path_graph(5, 0.35f32, ProbabilityCheck::Strict).unwrap();
        let x64 = [0.1, 0.9, 0.3, 0.5, 0.2];
        let x32 = x64.map(|x| x as f32);
        let m64 = expected_consensus_value(&g64, &x64).unwrap();
        let m32 = expected_consensus_value(&g32, &x32).unwrap();
        assert!((m64 - m32 as f64).abs() < 1e-5);
        let s64 = spectral_summary(&g64).unwrap();
        let s32 = spectral_summary(&g32).unwrap();
        for (a, b) in s64.eigenvalues.iter().zip(&s32.eigenvalues) {
            assert!((a.re - b.re as f64).abs() < 1e-4);
        }
        let v32 = exact_variance(&g32, &x32, KronBudget::default()).unwrap();
        let v64 = exact_variance(&g64, &x64, KronBudget::default()).unwrap();
        assert!((v64.variance - v32.variance as f64).abs() < 1e-4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn mean_weight_identities(seed in any::<u64>(), n in 2usize..8) {
            let mut rng = trial_stream(seed, 1);
            let g: CandidateGraph<f64> = random_connected_graph(n, 0.4, 0.1, 0.9, &mut rng).unwrap();
            let mw = dominant_left_eigvec_closed(&g);
            prop_assert!((mw.v1_ew.sum() - 1.0).abs() < 1e-12);
            prop_assert!(mw.v1_ew.iter().all(|&v| v > 0.0));
            for (v, rw) in mw.v1_ew.iter().zip(mw.normalized()) {
                prop_assert!((v - rw).abs() < 1e-12);
            }
            let ew = expected_weight_matrix(&g);
            prop_assert!((ew.tr_mul(&mw.v1_ew) - &mw.v1_ew).amax() < 1e-10);
            let lu = stationary_distribution(&ew, 1e-12).unwrap();
            prop_assert!((&lu - &mw.v1_ew).amax() < 1e-9);

            let s = spectral_summary(&g).unwrap();
            prop_assert!((s.eigenvalues[0] - Complex::new(1.0, 0.0)).norm() < 1e-10);
            prop_assert!(s.eigenvalues.iter().all(|l| l.norm() <= 1.0 + 1e-10));
            for w in s.eigenvalues.windows(2) {
                let one = Complex::new(1.0, 0.0);
                prop_assert!((one - w[0]).norm() <= (one - w[1]).norm());
            }

            let x: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
            let y = reweight_initial(&g, &x).unwrap();
            let avg = x.iter().sum::<f64>() / n as f64;
            prop_assert!((expected_consensus_value(&g, &y).unwrap() - avg).abs() < 1e-12);
        }

        #[test]
        fn symmetric_spectrum_matches_schur(seed in any::<u64>(), n in 2usize..8) {
            let mut rng = trial_stream(seed, 2);
            let g: CandidateGraph<f64> = random_connected_graph(n, 0.4, 0.1, 0.9, &mut rng).unwrap();
            let schur = ordered_eigenvalues(&expected_weight_matrix(&g)).unwrap();
            let mut want: Vec<f64> = schur.iter().map(|l| l.re).collect();
            prop_assert!(schur.iter().all(|l| l.im.abs() < 1e-9));
            want.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let mut got: Vec<f64> = spectral_summary(&g).unwrap().eigenvalues.iter().map(|l| l.re).collect();
            got.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for (a, b) in want.iter().zip(&got) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn bound_chain_holds(seed in any::<u64>(), n in 2usize..5) {
            let mut rng = trial_stream(seed, 3);
            let g: CandidateGraph<f64> = random_connected_graph(n, 0.4, 0.15, 0.85, &mut rng).unwrap();
            let x: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
            let chain = bound_chain(&g, &x, KronBudget::default()).unwrap();
            prop_assert!(chain.holds(1e-10), "{:?}", chain);
            prop_assert!(chain.kappa < chain.terms.c);
            let ops = ExpectedOperators::new(&g, KronBudget::default()).unwrap();
            let res = group_inverse_residuals(&ops.q_kron).unwrap();
            prop_assert!(res.iter().all(|&r| r <= 1e-8), "{:?}", res);
        }
    }
}
