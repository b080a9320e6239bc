//! Dense real matrix/vector arithmetic and the singular-value machinery used
//! by the reduction baselines.
//!
//! Matrices are row-major. The SVD is computed by the method of snapshots:
//! an eigendecomposition of the small Gram matrix `SᵀS` (symmetric Jacobi
//! sweeps) followed by `u_i = S v_i / σ_i`, which is adequate because the
//! snapshot count is far below the state dimension in every experiment here.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative threshold below which singular directions count as numerically zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Jacobi sweep convergence threshold, relative to the Frobenius norm.
const JACOBI_TOLERANCE: f64 = 1e-12;

/// Hard cap on Jacobi sweeps before reporting a convergence failure.
const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    /// Builds a matrix from row-major data; the length must be `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Stacks column vectors of equal length into a matrix.
    pub fn from_columns(columns: &[Vec<T>]) -> Result<Self> {
        let cols = columns.len();
        if cols == 0 {
            return Err(Error::InvalidInput("no columns given".into()));
        }
        let rows = columns[0].len();
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::InvalidInput("column lengths differ".into()));
        }
        Ok(Matrix::from_fn(rows, cols, |i, j| columns[j][i]))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn transpose(&self) -> Matrix<T> {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn col_norm(&self, j: usize) -> T {
        (0..self.rows)
            .map(|i| {
                let x = self.get(i, j);
                x * x
            })
            .sum::<T>()
            .sqrt()
    }

    /// `self * other`, accumulated row-wise so the inner loop vectorizes.
    pub fn matmul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &a_ik) in a_row.iter().enumerate() {
                let b_row = other.row(k);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a_ik * b;
                }
            }
        }
        out
    }

    /// `selfᵀ * other` without materializing the transpose.
    pub fn matmul_transpose_left(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.rows, other.rows, "matmul_transpose_left mismatch");
        let mut out = Matrix::zeros(self.cols, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let b_row = other.row(i);
            for (k, &a_ik) in a_row.iter().enumerate() {
                let out_row = out.row_mut(k);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a_ik * b;
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }
}

/// Dot product.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Relative Euclidean distance `‖a − b‖₂ / ‖a‖₂`.
///
/// A zero reference norm is an error: it signals a zero snapshot, and callers
/// evaluating relative-error averages must exclude such columns.
pub fn relative_l2<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "relative_l2 length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let ref_norm = norm2(a);
    if ref_norm == T::zero() {
        return Err(Error::DegenerateReference(
            "relative_l2 reference vector has zero norm".into(),
        ));
    }
    let diff = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum::<T>()
        .sqrt();
    Ok(diff / ref_norm)
}

/// Result of [`snapshot_svd`].
///
/// `singular_values` holds the full non-increasing spectrum; `left_vectors`
/// holds only the columns whose singular value exceeds
/// `rank_tolerance * σ₁`, i.e. the numerically resolvable directions.
#[derive(Debug, Clone)]
pub struct SvdResult<T> {
    pub singular_values: Vec<T>,
    pub left_vectors: Matrix<T>,
    pub rank_tolerance: T,
}

impl<T: Scalar> SvdResult<T> {
    /// Number of directions above the rank tolerance.
    pub fn rank(&self) -> usize {
        self.left_vectors.cols()
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
///
/// Returns the eigenvalues and the matrix whose columns are the matching
/// eigenvectors, both unsorted. Convergence is declared when every
/// off-diagonal magnitude drops below `1e-12 * ‖A‖_F`; failure to get there
/// within 100 sweeps is an error.
pub fn symmetric_eigen<T: Scalar>(matrix: &Matrix<T>) -> Result<(Vec<T>, Matrix<T>)> {
    let n = matrix.rows();
    if n != matrix.cols() {
        return Err(Error::InvalidInput(format!(
            "symmetric_eigen expects a square matrix, got {}x{}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    let mut a = matrix.clone();
    let mut v = Matrix::identity(n);
    let threshold = T::of(JACOBI_TOLERANCE) * matrix.frobenius_norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off_max = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off_max = off_max.max(a.get(p, q).abs());
            }
        }
        if off_max <= threshold {
            let eigenvalues = (0..n).map(|i| a.get(i, i)).collect();
            return Ok((eigenvalues, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= threshold {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (T::of(2.0) * apq);
                // Smaller-root tangent keeps the rotation angle below 45°.
                let t = {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (T::one() + theta * theta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    Err(Error::ConvergenceFailure {
        sweeps: JACOBI_MAX_SWEEPS,
    })
}

/// Singular values and left singular vectors via the method of snapshots.
///
/// The Gram matrix `SᵀS` is diagonalized with Jacobi sweeps; left vectors are
/// recovered as `u_i = S v_i / σ_i` for every direction above the rank
/// tolerance, re-orthonormalized, and sign-fixed so the entry of largest
/// magnitude is positive.
pub fn snapshot_svd<T: Scalar>(snapshots: &Matrix<T>) -> Result<SvdResult<T>> {
    if snapshots.rows() == 0 || snapshots.cols() == 0 {
        return Err(Error::InvalidInput("snapshot matrix is empty".into()));
    }
    if !snapshots.is_finite() {
        return Err(Error::InvalidInput(
            "snapshot matrix contains non-finite entries".into(),
        ));
    }

    let gram = snapshots.matmul_transpose_left(snapshots);
    let (eigenvalues, eigenvectors) = symmetric_eigen(&gram)?;

    let m = gram.rows();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        eigenvalues[j]
            .partial_cmp(&eigenvalues[i])
            .expect("finite eigenvalues")
    });

    let singular_values: Vec<T> = order
        .iter()
        .map(|&i| eigenvalues[i].max(T::zero()).sqrt())
        .collect();

    let tolerance = T::of(RANK_TOLERANCE);
    let sigma_max = singular_values[0];
    let rank = singular_values
        .iter()
        .take_while(|&&s| s > tolerance * sigma_max)
        .count();

    let mut columns: Vec<Vec<T>> = Vec::with_capacity(rank);
    for (k, &idx) in order.iter().take(rank).enumerate() {
        let v_col = eigenvectors.col(idx);
        let mut u = snapshots.matvec_cols(&v_col);
        let inv = T::one() / singular_values[k];
        for x in &mut u {
            *x *= inv;
        }
        // One Gram-Schmidt pass against the previous columns removes the
        // O(ε·κ) cross-talk the Gram route leaves in trailing directions.
        for prev in &columns {
            let coeff = dot(prev, &u);
            for (ui, &pi) in u.iter_mut().zip(prev) {
                *ui -= coeff * pi;
            }
        }
        let norm = norm2(&u);
        if norm > T::zero() {
            let inv = T::one() / norm;
            for x in &mut u {
                *x *= inv;
            }
        }
        sign_fix(&mut u);
        columns.push(u);
    }

    let left_vectors = if columns.is_empty() {
        Matrix::zeros(snapshots.rows(), 0)
    } else {
        Matrix::from_columns(&columns)?
    };

    Ok(SvdResult {
        singular_values,
        left_vectors,
        rank_tolerance: tolerance,
    })
}

impl<T: Scalar> Matrix<T> {
    /// Linear combination of the columns of `self` with coefficients `w`.
    fn matvec_cols(&self, w: &[T]) -> Vec<T> {
        debug_assert_eq!(self.cols, w.len());
        let mut out = vec![T::zero(); self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), w);
        }
        out
    }
}

/// Makes the entry of largest magnitude positive, for reproducible vectors.
fn sign_fix<T: Scalar>(v: &mut [T]) {
    let mut best = 0;
    let mut best_abs = T::zero();
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if v.get(best).map_or(false, |&x| x < T::zero()) {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Frobenius error of the best rank-`r` approximation, `√(Σ_{j>r} σ_j²)`.
pub fn truncation_error_frobenius<T: Scalar>(svd: &SvdResult<T>, r: usize) -> T {
    svd.singular_values
        .iter()
        .skip(r)
        .map(|&s| s * s)
        .sum::<T>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_matrix() -> Matrix<f64> {
        // Columns (1,1,0) and (2,0,0.9).
        Matrix::from_vec(3, 2, vec![1.0, 2.0, 1.0, 0.0, 0.0, 0.9]).unwrap()
    }

    /// Closed-form eigenvalues of a symmetric 2x2 matrix, as an independent
    /// check on the Jacobi route.
    fn eig2x2(a: f64, b: f64, c: f64) -> (f64, f64) {
        let tr = a + c;
        let disc = ((a - c).powi(2) + 4.0 * b * b).sqrt();
        ((tr + disc) / 2.0, (tr - disc) / 2.0)
    }

    #[test]
    fn toy_second_singular_value_matches_closed_form() {
        let svd = snapshot_svd(&toy_matrix()).unwrap();
        // Gram of the toy columns is [[2, 2], [2, 4.81]].
        let (_, lam2) = eig2x2(2.0, 2.0, 4.81);
        let expected = lam2.sqrt();
        assert!((svd.singular_values[1] - expected).abs() < 1e-12);
        assert!((svd.singular_values[1] - 0.9802).abs() < 1e-3);
    }

    #[test]
    fn identity_svd() {
        let svd = snapshot_svd(&Matrix::<f64>::identity(3)).unwrap();
        for &s in &svd.singular_values {
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_eq!(svd.rank(), 3);
        // Left vectors are a signed permutation of identity columns; the sign
        // convention makes them plain unit vectors.
        for k in 0..3 {
            let col = svd.left_vectors.col(k);
            let ones = col.iter().filter(|&&x| (x - 1.0).abs() < 1e-12).count();
            let zeros = col.iter().filter(|&&x| x.abs() < 1e-12).count();
            assert_eq!((ones, zeros), (1, 2));
        }
    }

    /// Brute-force oracle: eigenvalues of the Gram matrix found as roots of
    /// the characteristic polynomial, bracketed by sampling and refined by
    /// bisection. Independent of the Jacobi path.
    fn charpoly_eigenvalues(g: &Matrix<f64>, count: usize) -> Vec<f64> {
        let n = g.rows();
        let det_shifted = |lam: f64| -> f64 {
            // LU with partial pivoting on (G - lam I).
            let mut a: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| g.get(i, j) - if i == j { lam } else { 0.0 })
                        .collect()
                })
                .collect();
            let mut det = 1.0;
            for k in 0..n {
                let mut piv = k;
                for i in (k + 1)..n {
                    if a[i][k].abs() > a[piv][k].abs() {
                        piv = i;
                    }
                }
                if a[piv][k] == 0.0 {
                    return 0.0;
                }
                if piv != k {
                    a.swap(piv, k);
                    det = -det;
                }
                det *= a[k][k];
                for i in (k + 1)..n {
                    let f = a[i][k] / a[k][k];
                    for j in k..n {
                        a[i][j] -= f * a[k][j];
                    }
                }
            }
            det
        };
        let upper = (0..n).map(|i| g.get(i, i)).sum::<f64>() + 1.0;
        let samples = 200_000;
        let mut roots = Vec::new();
        let mut prev_x = -1e-9;
        let mut prev_f = det_shifted(prev_x);
        for s in 1..=samples {
            let x = -1e-9 + (upper + 1e-9) * (s as f64) / (samples as f64);
            let f = det_shifted(x);
            if prev_f == 0.0 {
                roots.push(prev_x);
            } else if f.signum() != prev_f.signum() {
                let (mut lo, mut hi) = (prev_x, x);
                let (mut flo, _) = (prev_f, f);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = det_shifted(mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev_x = x;
            prev_f = f;
        }
        assert_eq!(roots.len(), count, "oracle must isolate all eigenvalues");
        roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
        roots
    }

    #[test]
    fn random_matrix_matches_charpoly_bisection_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s: Matrix<f64> = Matrix::from_fn(6, 4, |_, _| rng.gen_range(-1.0..1.0));
        let svd = snapshot_svd(&s).unwrap();
        let gram = s.matmul_transpose_left(&s);
        let roots = charpoly_eigenvalues(&gram, 4);
        for (k, &lam) in roots.iter().enumerate() {
            let sigma = lam.max(0.0).sqrt();
            assert!(
                (svd.singular_values[k] - sigma).abs() < 1e-8,
                "sigma_{k}: {} vs oracle {}",
                svd.singular_values[k],
                sigma
            );
        }
    }

    #[test]
    fn gram_route_consistency_with_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s: Matrix<f64> = Matrix::from_fn(7, 5, |_, _| rng.gen_range(-1.0..1.0));
        let a = snapshot_svd(&s).unwrap();
        let b = snapshot_svd(&s.transpose()).unwrap();
        for k in 0..5 {
            assert!((a.singular_values[k] - b.singular_values[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn truncation_error_examples() {
        let svd = snapshot_svd(&toy_matrix()).unwrap();
        let (_, lam2) = eig2x2(2.0, 2.0, 4.81);
        assert!((truncation_error_frobenius(&svd, 1) - lam2.sqrt()).abs() < 1e-12);
        assert!((truncation_error_frobenius(&svd, 1) - 0.9802).abs() < 1e-3);

        // x-only toy matrix [[1,0],[0,0.9]].
        let x: Matrix<f64> = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 0.9]).unwrap();
        let svd = snapshot_svd(&x).unwrap();
        assert!((truncation_error_frobenius(&svd, 1) - 0.9).abs() < 1e-12);

        // Full rank leaves nothing behind.
        assert_eq!(truncation_error_frobenius(&svd, 2), 0.0);
        assert_eq!(truncation_error_frobenius(&svd, 5), 0.0);
    }

    #[test]
    fn relative_l2_examples() {
        let a = [3.0_f64, 4.0];
        assert_eq!(relative_l2(&a, &a).unwrap(), 0.0);
        assert!((relative_l2(&a, &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let r = relative_l2(&[1.0_f64, 0.0], &[0.0, 1.0]).unwrap();
        assert!((r - 2.0_f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            relative_l2(&[0.0_f64, 0.0], &[1.0, 0.0]),
            Err(Error::DegenerateReference(_))
        ));
        assert!(matches!(
            relative_l2(&[1.0_f64], &[1.0, 2.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn svd_rejects_bad_input() {
        assert!(matches!(
            snapshot_svd(&Matrix::<f64>::zeros(0, 3)),
            Err(Error::InvalidInput(_))
        ));
        let bad = Matrix::from_vec(1, 2, vec![1.0, f64::NAN]).unwrap();
        assert!(matches!(snapshot_svd(&bad), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn zero_matrix_has_empty_basis() {
        let svd = snapshot_svd(&Matrix::<f64>::zeros(4, 3)).unwrap();
        assert_eq!(svd.rank(), 0);
        assert!(svd.singular_values.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn jacobi_reconstructs_symmetric_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 8;
        let mut a: Matrix<f64> = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x = rng.gen_range(-1.0..1.0);
                a.set(i, j, x);
                a.set(j, i, x);
            }
        }
        let (lam, v) = symmetric_eigen(&a).unwrap();
        // A v_k = lam_k v_k
        for k in 0..n {
            let vk = v.col(k);
            let av = a.matvec(&vk);
            for i in 0..n {
                assert!((av[i] - lam[k] * vk[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn left_vectors_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let s: Matrix<f64> = Matrix::from_fn(24, 10, |_, _| rng.gen_range(-1.0..1.0));
        let svd = snapshot_svd(&s).unwrap();
        let u = &svd.left_vectors;
        let gram = u.matmul_transpose_left(u);
        for i in 0..u.cols() {
            for j in 0..u.cols() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((gram.get(i, j) - expected).abs() < 1e-10);
            }
        }
    }
}
