//! Small dense linear algebra over `f64`: solving, rank, SVD and the
//! spectral norm.
//!
//! Matrices here are tiny (weights of desk-scale networks, at most a few
//! dozen rows), so everything is plain row-major `Vec<f64>` and the SVD is
//! a one-sided Jacobi iteration. Accuracy, not throughput, is the design
//! goal: the enumeration modules lean on these routines for feasibility
//! margins near 1e-9.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("matrix dimensions must be nonzero")]
    EmptyDimension,
}

/// Dense vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    entries: Vec<f64>,
}

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self, LinalgError> {
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite("vector"));
        }
        Ok(Self { entries })
    }

    /// Internal constructor for values produced by our own arithmetic.
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        debug_assert!(entries.iter().all(|x| x.is_finite()));
        Self { entries }
    }

    pub fn zeros(n: usize) -> Self {
        Self { entries: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.len(), other.len(), "dot of unequal lengths");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector::from_raw(self.entries.iter().map(|x| c * x).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        assert_eq!(self.len(), other.len());
        Vector::from_raw(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        assert_eq!(self.len(), other.len());
        Vector::from_raw(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &Vector) -> f64 {
        self.sub(other).norm()
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.entries[i]
    }
}

/// Dense row-major matrix with finite entries and nonzero dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyDimension);
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        if rows.is_empty() {
            return Err(LinalgError::EmptyDimension);
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::DimensionMismatch(
                "ragged row lengths".to_string(),
            ));
        }
        Matrix::new(rows.len(), cols, rows.concat())
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        debug_assert!(data.iter().all(|x| x.is_finite()));
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vector(&self, i: usize) -> Vector {
        Vector::from_raw(self.row(i).to_vec())
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector::from_raw((0..self.rows).map(|i| self.get(i, j)).collect())
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn matvec(&self, x: &Vector) -> Vector {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.row(i);
            *o = row.iter().zip(x.as_slice()).map(|(a, b)| a * b).sum();
        }
        Vector::from_raw(out)
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * out.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix::from_raw(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix::from_raw(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|x| c * x).collect(),
        )
    }

    /// Largest absolute entry; used for scale-relative tolerances.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Thin singular value decomposition `A = U diag(sigma) V^T`.
///
/// `sigma` is non-increasing and non-negative; `u` is rows(A) x r and `v`
/// is cols(A) x r with orthonormal columns, where `r = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vector,
    pub v: Matrix,
}

/// One-sided Jacobi SVD.
///
/// Rotations are applied to column pairs until all pairs are numerically
/// orthogonal; singular values are the resulting column norms. For wide
/// matrices the transpose is factored and the factors swapped.
pub fn svd(a: &Matrix) -> Svd {
    if a.rows() >= a.cols() {
        svd_tall(a)
    } else {
        let f = svd_tall(&a.transpose());
        Svd { u: f.v, sigma: f.sigma, v: f.u }
    }
}

fn svd_tall(a: &Matrix) -> Svd {
    let m = a.rows();
    let n = a.cols();
    debug_assert!(m >= n);

    // Column-major working copies of A and V.
    let mut ac: Vec<Vec<f64>> = (0..n).map(|j| a.column(j).as_slice().to_vec()).collect();
    let mut vc: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let max_sweeps = 64;
    let tol = 1e-15;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = ac[p].iter().map(|x| x * x).sum();
                let beta: f64 = ac[q].iter().map(|x| x * x).sum();
                let gamma: f64 = ac[p].iter().zip(&ac[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= tol * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut ac, p, q, c, s);
                rotate_pair(&mut vc, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = ac.iter().map(|col| norm_of(col)).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut v_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let sigma_max = norms[order[0]];
    for &j in &order {
        sigma.push(norms[j]);
        v_cols.push(vc[j].clone());
        if norms[j] > sigma_max * 1e-300 && norms[j] > 0.0 {
            u_cols.push(ac[j].iter().map(|x| x / norms[j]).collect());
        } else {
            u_cols.push(vec![0.0; m]);
        }
    }

    // Zero singular values leave holes in U; fill them with an orthonormal
    // completion so U always has orthonormal columns.
    complete_orthonormal(&mut u_cols, m);

    Svd {
        u: cols_to_matrix(m, &u_cols),
        sigma: Vector::from_raw(sigma),
        v: cols_to_matrix(n, &v_cols),
    }
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (xp, xq) in cp.iter_mut().zip(cq.iter_mut()) {
        let a = *xp;
        let b = *xq;
        *xp = c * a - s * b;
        *xq = s * a + c * b;
    }
}

fn norm_of(col: &[f64]) -> f64 {
    col.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn complete_orthonormal(cols: &mut [Vec<f64>], dim: usize) {
    for j in 0..cols.len() {
        if norm_of(&cols[j]) > 0.5 {
            continue;
        }
        // Gram-Schmidt a standard basis vector against the other columns.
        'candidates: for e in 0..dim {
            let mut cand = vec![0.0; dim];
            cand[e] = 1.0;
            for (k, other) in cols.iter().enumerate() {
                if k == j {
                    continue;
                }
                let proj: f64 = cand.iter().zip(other).map(|(a, b)| a * b).sum();
                for (c, o) in cand.iter_mut().zip(other) {
                    *c -= proj * o;
                }
            }
            let nrm = norm_of(&cand);
            if nrm > 0.5 {
                for c in cand.iter_mut() {
                    *c /= nrm;
                }
                cols[j] = cand;
                break 'candidates;
            }
        }
    }
}

fn cols_to_matrix(rows: usize, cols: &[Vec<f64>]) -> Matrix {
    let mut m = Matrix::zeros(rows, cols.len());
    for (j, col) in cols.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            m.set(i, j, x);
        }
    }
    m
}

/// Spectral norm (operator 2-norm): the largest singular value.
pub fn spectral_norm(a: &Matrix) -> f64 {
    svd(a).sigma[0]
}

/// Numerical rank: singular values above `tol` relative to the largest
/// one (or to 1 when the matrix is zero).
pub fn rank(a: &Matrix, tol: f64) -> usize {
    assert!(tol > 0.0, "rank tolerance must be positive");
    let sigma = svd(a).sigma;
    let scale = if sigma[0] > 0.0 { sigma[0] } else { 1.0 };
    sigma.as_slice().iter().filter(|&&s| s > tol * scale).count()
}

/// Outcome of [`solve_linear`].
#[derive(Debug, Clone)]
pub enum LinearSolve {
    /// The system has a unique solution.
    Unique(Vector),
    /// The matrix is singular at the working tolerance.
    Singular {
        /// Whether `b` lies in the range of `A` (within 1e-8 relative), in
        /// which case the solution set is the affine subspace
        /// `least_squares + span(nullspace)`.
        consistent: bool,
        least_squares: Vector,
        nullspace: Vec<Vector>,
    },
}

const SINGULAR_RTOL: f64 = 1e-8;

/// Solve the square system `A x = b` via the SVD.
///
/// Singular systems report consistency separately because per-cell
/// fixed-point solves can legitimately hit identity maps, whose fixed set
/// is a continuum rather than a point.
pub fn solve_linear(a: &Matrix, b: &Vector) -> Result<LinearSolve, LinalgError> {
    if a.rows() != a.cols() {
        return Err(LinalgError::DimensionMismatch(format!(
            "solve_linear needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() != b.len() {
        return Err(LinalgError::DimensionMismatch(format!(
            "matrix is {0}x{0} but rhs has length {1}",
            a.rows(),
            b.len()
        )));
    }

    let f = svd(a);
    let sigma = f.sigma.as_slice();
    let sigma_max = sigma[0];
    let thresh = SINGULAR_RTOL * sigma_max;
    let singular = sigma_max == 0.0 || sigma[sigma.len() - 1] <= thresh;

    // x = V diag(1/sigma) U^T b over the numerically nonzero part.
    let n = a.rows();
    let mut x = vec![0.0; n];
    for (k, &s) in sigma.iter().enumerate() {
        if s <= thresh {
            continue;
        }
        let coeff = f.u.column(k).dot(b) / s;
        for (xi, vi) in x.iter_mut().zip(f.v.column(k).as_slice()) {
            *xi += coeff * vi;
        }
    }
    let x = Vector::from_raw(x);

    if !singular {
        return Ok(LinearSolve::Unique(x));
    }

    let residual = a.matvec(&x).sub(b).norm();
    let consistent = residual <= 1e-8 * (1.0 + b.norm());
    let nullspace = sigma
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= thresh)
        .map(|(k, _)| f.v.column(k))
        .collect();
    Ok(LinearSolve::Singular { consistent, least_squares: x, nullspace })
}
