//! Dense linear algebra sized for alphabets up to the low hundreds:
//! one-sided Jacobi SVD, inverse and Moore-Penrose pseudo-inverse, the
//! M matrix of leading right singular vectors, projections and null-space
//! bases.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative threshold under which singular values count as zero.
pub const RANK_TOL: f64 = 1e-12;

/// Jacobi sweep cap.
const MAX_SWEEPS: usize = 100;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<R: Real> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Real> Matrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![R::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = R::one();
        }
        m
    }

    /// Build from row-major data. Fails on a size mismatch or non-finite entry.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<R>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "matrix data length",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::DimensionMismatch {
                what: "finite matrix entries",
                expected: rows * cols,
                actual: data.iter().filter(|x| x.is_finite()).count(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<R>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    what: "row length",
                    expected: c,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Matrix::from_vec(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<R> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix<R> {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[R]) -> Vec<R> {
        assert_eq!(v.len(), self.cols, "mul_vec dimension");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a * b)
                    .sum::<R>()
            })
            .collect()
    }

    pub fn mul_mat(&self, other: &Matrix<R>) -> Matrix<R> {
        assert_eq!(self.cols, other.rows, "mul_mat dimension");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == R::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Submatrix keeping the given columns, in the given order.
    pub fn select_cols(&self, cols: &[usize]) -> Matrix<R> {
        let mut out = Matrix::zeros(self.rows, cols.len());
        for (jj, &j) in cols.iter().enumerate() {
            for i in 0..self.rows {
                out[(i, jj)] = self[(i, j)];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> R {
        self.data.iter().map(|&x| x * x).sum::<R>().sqrt()
    }

    pub fn max_abs(&self) -> R {
        self.data
            .iter()
            .fold(R::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn scale(&self, s: R) -> Matrix<R> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix<R>) -> Matrix<R> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    /// Left-multiply by a diagonal matrix: diag(d) * self.
    pub fn scale_rows(&self, d: &[R]) -> Matrix<R> {
        assert_eq!(d.len(), self.rows);
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = out[(i, j)] * d[i];
            }
        }
        out
    }

    /// Right-multiply by a diagonal matrix: self * diag(d).
    pub fn scale_cols(&self, d: &[R]) -> Matrix<R> {
        assert_eq!(d.len(), self.cols);
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = out[(i, j)] * d[j];
            }
        }
        out
    }

    pub fn data(&self) -> &[R] {
        &self.data
    }
}

impl<R: Real> std::ops::Index<(usize, usize)> for Matrix<R> {
    type Output = R;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &R {
        &self.data[i * self.cols + j]
    }
}

impl<R: Real> std::ops::IndexMut<(usize, usize)> for Matrix<R> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut R {
        &mut self.data[i * self.cols + j]
    }
}

/// Economy SVD: `a = u * diag(sigma) * v^T` with `u: m x k`, `v: n x k`,
/// `k = min(m, n)`, both with orthonormal columns, `sigma` non-increasing.
#[derive(Debug, Clone)]
pub struct SvdResult<R: Real> {
    pub u: Matrix<R>,
    pub sigma: Vec<R>,
    pub v: Matrix<R>,
}

impl<R: Real> SvdResult<R> {
    /// Numerical rank at the relative threshold [`RANK_TOL`].
    pub fn rank(&self) -> usize {
        let cutoff = self.sigma.first().copied().unwrap_or(R::zero()) * R::of(RANK_TOL);
        self.sigma.iter().filter(|&&s| s > cutoff).count()
    }

    pub fn reconstruct(&self) -> Matrix<R> {
        let k = self.sigma.len();
        let mut scaled = self.u.clone();
        for j in 0..k {
            for i in 0..scaled.rows() {
                scaled[(i, j)] = scaled[(i, j)] * self.sigma[j];
            }
        }
        scaled.mul_mat(&self.v.transpose())
    }
}

/// One-sided Jacobi SVD. Deterministic: fixed sweep order, singular values
/// sorted non-increasing, and each right singular vector's first
/// significant component made positive.
pub fn svd<R: Real>(a: &Matrix<R>) -> Result<SvdResult<R>> {
    if a.rows() < a.cols() {
        let t = svd(&a.transpose())?;
        return Ok(SvdResult {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    let (m, n) = (a.rows(), a.cols());
    let mut work = a.clone(); // columns orthogonalized in place
    let mut v = Matrix::identity(n);
    // 1e-12 per the small-dense design point; scaled up only when the scalar
    // type cannot resolve it (f32).
    let thresh = R::of(1e-12).max(R::epsilon() * R::of(4.0));

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = R::zero();
                let mut aqq = R::zero();
                let mut apq = R::zero();
                for i in 0..m {
                    let x = work[(i, p)];
                    let y = work[(i, q)];
                    app = app + x * x;
                    aqq = aqq + y * y;
                    apq = apq + x * y;
                }
                if apq.abs() <= thresh * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let two = R::of(2.0);
                let zeta = (aqq - app) / (two * apq);
                let t = if zeta >= R::zero() {
                    R::one() / (zeta + (R::one() + zeta * zeta).sqrt())
                } else {
                    -R::one() / (-zeta + (R::one() + zeta * zeta).sqrt())
                };
                let c = R::one() / (R::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let x = work[(i, p)];
                    let y = work[(i, q)];
                    work[(i, p)] = c * x - s * y;
                    work[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let x = v[(i, p)];
                    let y = v[(i, q)];
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut sigma: Vec<R> = (0..n)
        .map(|j| (0..m).map(|i| work[(i, j)] * work[(i, j)]).sum::<R>().sqrt())
        .collect();

    // Sort non-increasing; stable order on ties keeps determinism.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap_or(std::cmp::Ordering::Equal));
    let work = work.select_cols(&order);
    let mut v = v.select_cols(&order);
    sigma = order.iter().map(|&j| sigma[j]).collect();

    // Normalize U columns; complete columns for zero singular values so
    // U^T U = I holds even for rank-deficient input.
    let mut u = Matrix::zeros(m, n);
    let cutoff = sigma.first().copied().unwrap_or(R::zero()) * R::of(RANK_TOL);
    let mut basis: Vec<Vec<R>> = Vec::with_capacity(n);
    for j in 0..n {
        if sigma[j] > cutoff && sigma[j] > R::zero() {
            let col: Vec<R> = (0..m).map(|i| work[(i, j)] / sigma[j]).collect();
            basis.push(col);
        } else {
            basis.push(orthonormal_completion(&basis, m));
        }
    }
    for (j, col) in basis.iter().enumerate() {
        for i in 0..m {
            u[(i, j)] = col[i];
        }
    }

    // Sign convention: first significant component of each right singular
    // vector positive; flip U's column in step so u*sigma*v^T is unchanged.
    for j in 0..n {
        let vcol = v.col(j);
        let scale = vcol.iter().fold(R::zero(), |acc, x| acc.max(x.abs()));
        let tiny = scale * R::epsilon().sqrt();
        if let Some(&lead) = vcol.iter().find(|x| x.abs() > tiny) {
            if lead < R::zero() {
                for i in 0..n {
                    v[(i, j)] = -v[(i, j)];
                }
                for i in 0..m {
                    u[(i, j)] = -u[(i, j)];
                }
            }
        }
    }

    Ok(SvdResult { u, sigma, v })
}

/// Gram-Schmidt a fresh unit vector orthogonal to the ones collected so far.
/// Takes the coordinate seed with the largest residual; the trace identity
/// guarantees that residual's norm is at least 1/sqrt(dim) whenever the
/// basis is short of the full dimension.
fn orthonormal_completion<R: Real>(basis: &[Vec<R>], dim: usize) -> Vec<R> {
    let mut best: Option<(R, Vec<R>)> = None;
    for seed in 0..dim {
        let mut cand = vec![R::zero(); dim];
        cand[seed] = R::one();
        for b in basis {
            let dot: R = cand.iter().zip(b).map(|(&x, &y)| x * y).sum();
            for (c, &bb) in cand.iter_mut().zip(b) {
                *c = *c - dot * bb;
            }
        }
        let norm: R = cand.iter().map(|&x| x * x).sum::<R>().sqrt();
        if best.as_ref().map_or(true, |(bn, _)| norm > *bn) {
            best = Some((norm, cand));
        }
    }
    let (norm, mut cand) = best.expect("dimension is positive");
    assert!(
        norm > R::of(1e-8),
        "orthonormal completion requires the basis to be short of dim"
    );
    for c in cand.iter_mut() {
        *c = *c / norm;
    }
    // second Gram-Schmidt pass tightens orthogonality lost to cancellation
    let mut refined = cand;
    for b in basis {
        let dot: R = refined.iter().zip(b).map(|(&x, &y)| x * y).sum();
        for (c, &bb) in refined.iter_mut().zip(b) {
            *c = *c - dot * bb;
        }
    }
    let norm: R = refined.iter().map(|&x| x * x).sum::<R>().sqrt();
    for c in refined.iter_mut() {
        *c = *c / norm;
    }
    refined
}

/// Inverse of a square matrix through its SVD; rejects condition numbers
/// beyond [`RANK_TOL`].
pub fn invert<R: Real>(a: &Matrix<R>) -> Result<Matrix<R>> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch {
            what: "square matrix",
            expected: a.rows(),
            actual: a.cols(),
        });
    }
    let dec = svd(a)?;
    let smax = dec.sigma.first().copied().unwrap_or(R::zero());
    let smin = dec.sigma.last().copied().unwrap_or(R::zero());
    if smax == R::zero() || smin / smax < R::of(RANK_TOL) {
        return Err(Error::Singular {
            cond: (smin / smax).as_f64(),
        });
    }
    let inv_sigma: Vec<R> = dec.sigma.iter().map(|&s| R::one() / s).collect();
    Ok(dec.v.scale_cols(&inv_sigma).mul_mat(&dec.u.transpose()))
}

/// Moore-Penrose pseudo-inverse. Always defined; rank decided at [`RANK_TOL`].
pub fn pseudo_inverse<R: Real>(a: &Matrix<R>) -> Result<Matrix<R>> {
    let dec = svd(a)?;
    let cutoff = dec.sigma.first().copied().unwrap_or(R::zero()) * R::of(RANK_TOL);
    let inv_sigma: Vec<R> = dec
        .sigma
        .iter()
        .map(|&s| if s > cutoff { R::one() / s } else { R::zero() })
        .collect();
    Ok(dec.v.scale_cols(&inv_sigma).mul_mat(&dec.u.transpose()))
}

/// The M matrix: transpose of the first `rows(a)` right singular vectors of
/// `a`, so `m` is `rows(a) x cols(a)` with orthonormal rows. Returns the
/// numerical rank alongside; errors with `RankDeficient` when a full row
/// rank is required but absent.
pub fn build_m_matrix<R: Real>(a: &Matrix<R>, require_full_row_rank: bool) -> Result<(Matrix<R>, usize)> {
    let (x, y) = (a.rows(), a.cols());
    if x > y {
        return Err(Error::DimensionMismatch {
            what: "leakage matrix with |X| <= |Y|",
            expected: y,
            actual: x,
        });
    }
    let dec = svd(a)?;
    let rank = dec.rank();
    if require_full_row_rank && rank < x {
        return Err(Error::RankDeficient { rank, required: x });
    }
    let mut m = Matrix::zeros(x, y);
    for i in 0..x {
        for j in 0..y {
            m[(i, j)] = dec.v[(j, i)];
        }
    }
    Ok((m, rank))
}

/// `w * (I - d d^T / ||d||^2)`: the operator restricted to the orthogonal
/// complement of `direction`. The product annihilates `direction`.
pub fn projected_operator<R: Real>(w: &Matrix<R>, direction: &[R]) -> Matrix<R> {
    assert_eq!(w.cols(), direction.len(), "projector dimension");
    let norm2: R = direction.iter().map(|&x| x * x).sum();
    assert!(norm2 > R::zero(), "projector direction must be nonzero");
    let n = direction.len();
    let mut proj = Matrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            proj[(i, j)] = proj[(i, j)] - direction[i] * direction[j] / norm2;
        }
    }
    w.mul_mat(&proj)
}

/// Orthonormal basis of the null space of `a` (possibly empty).
pub fn null_space<R: Real>(a: &Matrix<R>) -> Result<Vec<Vec<R>>> {
    let n = a.cols();
    let dec = svd(a)?;
    let cutoff = dec.sigma.first().copied().unwrap_or(R::zero()) * R::of(RANK_TOL);
    // Range-of-A^T directions: right singular vectors with nonzero sigma.
    let mut range: Vec<Vec<R>> = Vec::new();
    for (j, &s) in dec.sigma.iter().enumerate() {
        if s > cutoff {
            range.push(dec.v.col(j));
        }
    }
    let rank = range.len();
    let mut basis = range;
    let mut null = Vec::with_capacity(n - rank);
    for _ in rank..n {
        let fresh = orthonormal_completion(&basis, n);
        basis.push(fresh.clone());
        null.push(fresh);
    }
    Ok(null)
}
