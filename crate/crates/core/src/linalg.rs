//! Stationary distributions and group inverses of dense stochastic matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, Scalar};

/// Largest `|row sum - 1|`, or infinity if some entry is negative.
pub fn stochasticity_defect<T: Scalar>(p: &DMatrix<T>) -> T {
    let mut worst = T::zero();
    for row in p.row_iter() {
        if row.iter().any(|&x| x < T::zero()) {
            return T::max_value().unwrap_or_else(T::one);
        }
        worst = worst.max((row.sum() - T::one()).abs());
    }
    worst
}

/// Residual `‖πᵀ P - πᵀ‖∞`.
pub fn balance_residual<T: Scalar>(p: &DMatrix<T>, pi: &DVector<T>) -> T {
    (p.tr_mul(pi) - pi).amax()
}

/// Stationary distribution `π` with `πᵀ P = πᵀ`, `Σ π = 1`.
///
/// Solves `(I - P)ᵀ π = 0` with the last balance equation replaced by the
/// normalization, using a fully pivoted LU. Up to three rounds of iterative
/// refinement run if the residual exceeds `tol`. A pivot below
/// `100 · n · eps` relative to the largest one means the chain has more
/// than one stationary distribution.
pub fn stationary_distribution<T: Scalar>(p: &DMatrix<T>, tol: T) -> Result<DVector<T>> {
    let n = p.nrows();
    if n == 0 || p.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.ncols(),
        });
    }
    if stochasticity_defect(p) > T::loose_tol() {
        return Err(Error::DomainError("matrix is not row-stochastic".into()));
    }
    let mut a = (DMatrix::identity(n, n) - p).transpose();
    a.row_mut(n - 1).fill(T::one());
    let mut b = DVector::zeros(n);
    b[n - 1] = T::one();

    let lu = a.clone().full_piv_lu();
    let diag = lu.u().diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((T::max_value().unwrap_or_else(T::one), T::zero()), |(lo, hi), x| {
            (lo.min(x.abs()), hi.max(x.abs()))
        });
    let threshold = T::lit(100.0) * from_usize::<T>(n) * T::default_epsilon() * hi;
    if !(lo > threshold) {
        return Err(Error::SingularChain(format!(
            "balance system is rank-deficient (pivot ratio {:e})",
            (lo / hi).as_f64()
        )));
    }
    let mut pi = lu
        .solve(&b)
        .ok_or_else(|| Error::SingularChain("LU solve failed".into()))?;
    for _ in 0..3 {
        if balance_residual(p, &pi) <= tol {
            break;
        }
        let r = &b - &a * &pi;
        if let Some(delta) = lu.solve(&r) {
            pi += delta;
        }
    }
    let residual = balance_residual(p, &pi);
    if !(residual <= tol) {
        return Err(Error::SingularChain(format!(
            "balance residual {:e} above tolerance {:e}",
            residual.as_f64(),
            tol.as_f64()
        )));
    }
    Ok(pi)
}

/// Group inverse `G#` of `G = I - P` for a chain with stationary
/// distribution `pi`: `(I - P + 1πᵀ)⁻¹ - 1πᵀ`.
pub fn group_inverse<T: Scalar>(p: &DMatrix<T>, pi: &DVector<T>) -> Result<DMatrix<T>> {
    let n = p.nrows();
    if pi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: pi.len(),
        });
    }
    let ones_pi = DMatrix::from_fn(n, n, |_, j| pi[j]);
    let z = DMatrix::identity(n, n) - p + &ones_pi;
    let inv = z
        .full_piv_lu()
        .try_inverse()
        .ok_or_else(|| Error::SingularChain("I - P + 1πᵀ is singular".into()))?;
    Ok(inv - ones_pi)
}
