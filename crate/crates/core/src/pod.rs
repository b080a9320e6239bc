//! Proper-orthogonal-decomposition baseline: basis construction from the
//! training split, truncation-error curves, minimal-rank queries, and the
//! rank-one extension example.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, relative_l2, snapshot_svd, truncation_error_frobenius, Matrix, SvdResult};
use crate::problems::SnapshotSet;
use crate::scalar::Scalar;

/// Orthonormal reduction basis with the spectrum it was cut from.
#[derive(Debug, Clone)]
pub struct PodBasis<T> {
    /// Leading left singular vectors of the training matrix, one per column.
    pub basis: Matrix<T>,
    /// Full singular-value spectrum of the training matrix.
    pub singular_values: Vec<T>,
    pub r: usize,
}

fn basis_from_svd<T: Scalar>(svd: &SvdResult<T>, r: usize) -> Result<PodBasis<T>> {
    if r == 0 || r > svd.rank() {
        return Err(Error::InvalidInput(format!(
            "rank {r} not available; achievable rank is {}",
            svd.rank()
        )));
    }
    let basis = Matrix::from_fn(svd.left_vectors.rows(), r, |i, j| svd.left_vectors.get(i, j));
    Ok(PodBasis {
        basis,
        singular_values: svd.singular_values.clone(),
        r,
    })
}

/// Leading-`r` basis of the training snapshots.
pub fn pod_basis<T: Scalar>(train: &SnapshotSet<T>, r: usize) -> Result<PodBasis<T>> {
    let svd = snapshot_svd(&train.states)?;
    basis_from_svd(&svd, r)
}

impl<T: Scalar> PodBasis<T> {
    /// Orthogonal projection `V Vᵀ x`.
    pub fn project(&self, x: &[T]) -> Vec<T> {
        let coefficients: Vec<T> = (0..self.r)
            .map(|k| {
                let col = self.basis.col(k);
                dot(&col, x)
            })
            .collect();
        let mut out = vec![T::zero(); self.basis.rows()];
        for (k, &c) in coefficients.iter().enumerate() {
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.basis.get(i, k) * c;
            }
        }
        out
    }

    /// Frobenius norm of the projection residual over a set of columns.
    pub fn residual_frobenius(&self, states: &Matrix<T>) -> T {
        let mut total = T::zero();
        for j in 0..states.cols() {
            let x = states.col(j);
            let p = self.project(&x);
            for (xi, pi) in x.iter().zip(&p) {
                let d = *xi - *pi;
                total += d * d;
            }
        }
        total.sqrt()
    }
}

/// Relative test error of the projection `V Vᵀ x`, averaged over the test
/// columns; identically-zero reference columns are excluded.
pub fn pod_test_error<T: Scalar>(basis: &PodBasis<T>, test: &SnapshotSet<T>) -> Result<T> {
    if basis.basis.rows() != test.n() {
        return Err(Error::InvalidInput(format!(
            "basis dimension {} does not match test dimension {}",
            basis.basis.rows(),
            test.n()
        )));
    }
    let mut total = T::zero();
    let mut counted = 0usize;
    for j in 0..test.len() {
        let x = test.states.col(j);
        if norm2(&x) == T::zero() {
            continue;
        }
        total += relative_l2(&x, &basis.project(&x))?;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::DegenerateSnapshot(
            "every test column has zero norm".into(),
        ));
    }
    Ok(total / T::of(counted as f64))
}

/// Smallest rank whose relative test error drops below `tolerance`
/// (linear scan from r = 1).
pub fn min_rank_for_error<T: Scalar>(
    train: &SnapshotSet<T>,
    test: &SnapshotSet<T>,
    tolerance: T,
) -> Result<usize> {
    if tolerance <= T::zero() || tolerance >= T::one() {
        return Err(Error::InvalidInput(format!(
            "tolerance must lie in (0, 1), got {tolerance}"
        )));
    }
    let svd = snapshot_svd(&train.states)?;
    let mut best = T::infinity();
    for r in 1..=svd.rank() {
        let basis = basis_from_svd(&svd, r)?;
        let err = pod_test_error(&basis, test)?;
        if err < tolerance {
            return Ok(r);
        }
        best = best.min(err);
    }
    Err(Error::NotAchievable {
        tolerance: tolerance.as_f64(),
        best: best.as_f64(),
        rank: svd.rank(),
    })
}

/// Error-vs-rank curve up to the numerical rank of the training matrix.
pub fn pod_error_curve<T: Scalar>(
    train: &SnapshotSet<T>,
    test: &SnapshotSet<T>,
) -> Result<Vec<(usize, T)>> {
    let svd = snapshot_svd(&train.states)?;
    (1..=svd.rank())
        .map(|r| {
            let basis = basis_from_svd(&svd, r)?;
            Ok((r, pod_test_error(&basis, test)?))
        })
        .collect()
}

/// Rank-one worked example on the snapshot pair
/// `x₁ = (α, 0)`, `x₂ = (0, β)` with times 1 and 2.
///
/// Returns, in order:
/// 1. the best rank-1 Frobenius error of the state matrix `[x₁ x₂]`;
/// 2. the best rank-1 Frobenius error of the extended matrix `[z₁ z₂]`;
/// 3. the state-restricted error of the extended projection, i.e.
///    `√(Σᵢ ‖xᵢ − V_x V_xᵀ xᵢ‖²)` where `V_x` is the state block of the
///    extended matrix's leading left singular vector.
pub fn extended_projection_errors<T: Scalar>(alpha: T, beta: T) -> Result<(T, T, T)> {
    if alpha <= T::zero() || beta <= T::zero() {
        return Err(Error::InvalidInput(
            "extension example expects positive alpha and beta".into(),
        ));
    }
    let zero = T::zero();
    let state = Matrix::from_columns(&[vec![alpha, zero], vec![zero, beta]])?;
    let extended = Matrix::from_columns(&[
        vec![T::one(), alpha, zero],
        vec![T::of(2.0), zero, beta],
    ])?;

    let state_svd = snapshot_svd(&state)?;
    let state_err = truncation_error_frobenius(&state_svd, 1);

    let extended_svd = snapshot_svd(&extended)?;
    let extended_err = truncation_error_frobenius(&extended_svd, 1);

    // State block of the leading extended singular vector; note the block of
    // a unit vector is not itself normalized.
    let leading = extended_svd.left_vectors.col(0);
    let v_x = &leading[1..];
    let mut total = T::zero();
    for j in 0..2 {
        let x = state.col(j);
        let coefficient = dot(v_x, &x);
        for (xi, vi) in x.iter().zip(v_x) {
            let d = *xi - *vi * coefficient;
            total += d * d;
        }
    }
    let state_block_err = total.sqrt();

    Ok((state_err, extended_err, state_block_err))
}
