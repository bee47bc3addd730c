//! Dense real linear algebra at desk scale.
//!
//! Row-major [`DenseMatrix`], a finite-valued [`Vector`], a Cholesky-type
//! factorization for symmetric positive-definite systems, a cyclic Jacobi
//! eigensolver for symmetric matrices, and norm / condition estimates built
//! on top of them. Everything is `f64`.

use std::ops::{Deref, Index};

use crate::error::{Error, Result};

/// Off-diagonal stopping threshold for Jacobi, relative to the Frobenius norm.
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 10_000;

/// Relative asymmetry accepted by the symmetric routines.
const SYMMETRY_TOL: f64 = 1e-12;

/// A real vector whose entries are all finite.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if let Some(index) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Vector(data))
    }

    pub fn zeros(len: usize) -> Self {
        Vector(vec![0.0; len])
    }

    /// Unit vector `e_k` of length `len`.
    pub fn unit(len: usize, k: usize) -> Self {
        let mut v = vec![0.0; len];
        v[k] = 1.0;
        Vector(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.len(), other.len(), "dot: length mismatch");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        // scaled to avoid overflow/underflow on extreme entries
        let scale = self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let ss: f64 = self.0.iter().map(|x| (x / scale) * (x / scale)).sum();
        scale * ss.sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> Vector {
        Vector(self.0.iter().map(|x| alpha * x).collect())
    }

    /// `self + alpha * other`
    pub fn add_scaled(&self, alpha: f64, other: &Vector) -> Vector {
        assert_eq!(self.len(), other.len(), "add_scaled: length mismatch");
        Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        self.add_scaled(-1.0, other)
    }

    pub fn add(&self, other: &Vector) -> Vector {
        self.add_scaled(1.0, other)
    }

    pub fn max_abs_diff(&self, other: &Vector) -> f64 {
        assert_eq!(self.len(), other.len(), "max_abs_diff: length mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Vector {
    fn from(data: Vec<f64>) -> Self {
        debug_assert!(data.iter().all(|x| x.is_finite()));
        Vector(data)
    }
}

impl From<&[f64]> for Vector {
    fn from(data: &[f64]) -> Self {
        Vector::from(data.to_vec())
    }
}

/// Which Gram product to form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GramSide {
    /// `M^T M` (cols x cols)
    Columns,
    /// `M M^T` (rows x rows)
    Rows,
}

/// Real dense matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::BadShape {
                rows,
                cols,
                found: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = *d;
        }
        m
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    op: if i == 0 { "from_rows" } else { "from_rows (row length)" },
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Builds a matrix entry by entry. `f` must return finite values.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        debug_assert!(data.iter().all(|x| x.is_finite()));
        DenseMatrix { rows, cols, data }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vector]) -> Result<Self> {
        let rows = cols.first().map_or(0, |c| c.len());
        if let Some(bad) = cols.iter().find(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch {
                op: "from_columns",
                expected: rows,
                found: bad.len(),
            });
        }
        Ok(Self::from_fn(rows, cols.len(), |i, j| cols[j][i]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector((0..self.rows).map(|i| self.get(i, j)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        Vector(self.data.clone()).norm()
    }

    pub fn scaled(&self, alpha: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| alpha * x).collect(),
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other, "sub")?;
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    fn check_same_shape(&self, other: &DenseMatrix, op: &'static str) -> Result<()> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                op,
                expected: self.rows,
                found: other.rows,
            });
        }
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                op,
                expected: self.cols,
                found: other.cols,
            });
        }
        Ok(())
    }

    /// `M + alpha I` for square `M`.
    pub fn add_scaled_identity(&self, alpha: f64) -> Result<DenseMatrix> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                op: "add_scaled_identity",
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            out.data[i * self.cols + i] += alpha;
        }
        Ok(out)
    }

    /// `M x`
    pub fn matvec(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                op: "matvec",
                expected: self.cols,
                found: x.len(),
            });
        }
        if self.cols == 0 {
            return Ok(Vector::zeros(self.rows));
        }
        Ok(Vector(
            self.data
                .chunks_exact(self.cols)
                .take(self.rows)
                .map(|row| row.iter().zip(x.iter()).map(|(a, b)| a * b).sum())
                .collect(),
        ))
    }

    /// `M^T y`
    pub fn matvec_transpose(&self, y: &Vector) -> Result<Vector> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch {
                op: "matvec_transpose",
                expected: self.rows,
                found: y.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            if *yi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        Ok(Vector(out))
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(other.row(k)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `M^T M` or `M M^T`. The upper triangle is computed and mirrored, so the
    /// result is exactly symmetric.
    pub fn gram(&self, side: GramSide) -> DenseMatrix {
        let (n, inner) = match side {
            GramSide::Columns => (self.cols, self.rows),
            GramSide::Rows => (self.rows, self.cols),
        };
        let entry = |p: usize, k: usize| match side {
            GramSide::Columns => self.get(k, p),
            GramSide::Rows => self.get(p, k),
        };
        let mut g = DenseMatrix::zeros(n, n);
        for p in 0..n {
            for q in p..n {
                let s: f64 = (0..inner).map(|k| entry(p, k) * entry(q, k)).sum();
                g.data[p * n + q] = s;
                g.data[q * n + p] = s;
            }
        }
        g
    }

    /// Errors unless `|M_ij - M_ji| <= 1e-12 * max|M|` for all pairs.
    pub fn check_symmetric(&self, op: &'static str) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                op,
                rows: self.rows,
                cols: self.cols,
            });
        }
        let tol = SYMMETRY_TOL * self.max_abs();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let gap = (self.get(i, j) - self.get(j, i)).abs();
                if gap > tol {
                    return Err(Error::NotSymmetric { op, i, j, gap });
                }
            }
        }
        Ok(())
    }

    /// `(M + M^T) / 2`
    pub fn symmetrized(&self) -> Result<DenseMatrix> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                op: "symmetrized",
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(Self::from_fn(self.rows, self.cols, |i, j| {
            0.5 * (self.get(i, j) + self.get(j, i))
        }))
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor `L` with `M = L L^T`.
#[derive(Clone, Debug)]
pub struct SpdFactorization {
    dim: usize,
    lower: Vec<f64>,
}

impl SpdFactorization {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `M x = b` by forward and back substitution.
    pub fn solve(&self, b: &Vector) -> Result<Vector> {
        let n = self.dim;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                op: "spd_solve",
                expected: n,
                found: b.len(),
            });
        }
        let l = |i: usize, j: usize| self.lower[i * n + j];
        let mut x = b.0.clone();
        for i in 0..n {
            let s: f64 = (0..i).map(|k| l(i, k) * x[k]).sum();
            x[i] = (x[i] - s) / l(i, i);
        }
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|k| l(k, i) * x[k]).sum();
            x[i] = (x[i] - s) / l(i, i);
        }
        Ok(Vector(x))
    }

    pub fn lower(&self) -> DenseMatrix {
        DenseMatrix {
            rows: self.dim,
            cols: self.dim,
            data: self.lower.clone(),
        }
    }

    /// `L L^T`
    pub fn reconstruct(&self) -> DenseMatrix {
        let l = self.lower();
        l.matmul(&l.transpose()).expect("square factor")
    }
}

/// Cholesky factorization of a symmetric positive-definite matrix.
pub fn spd_factor(m: &DenseMatrix) -> Result<SpdFactorization> {
    m.check_symmetric("spd_factor")?;
    let n = m.rows();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    Ok(SpdFactorization { dim: n, lower: l })
}

pub fn spd_solve(f: &SpdFactorization, b: &Vector) -> Result<Vector> {
    f.solve(b)
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors of a
/// symmetric matrix.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    vectors: DenseMatrix,
}

impl EigenDecomposition {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &DenseMatrix {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Coordinates of `x` in the eigenbasis, `V^T x`.
    pub fn to_eigenbasis(&self, x: &Vector) -> Result<Vector> {
        self.vectors.matvec_transpose(x)
    }

    /// `V c`
    pub fn from_eigenbasis(&self, c: &Vector) -> Result<Vector> {
        self.vectors.matvec(c)
    }

    /// `V diag(g(λ)) V^T x` for a scalar spectral function `g`.
    pub fn apply_fn(&self, x: &Vector, g: impl Fn(f64) -> f64) -> Result<Vector> {
        let c = self.to_eigenbasis(x)?;
        let scaled = Vector(c.iter().zip(&self.values).map(|(ci, l)| g(*l) * ci).collect());
        self.from_eigenbasis(&scaled)
    }

    /// `V diag(λ) V^T`
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.dim();
        DenseMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| self.vectors.get(i, k) * self.values[k] * self.vectors.get(j, k))
                .sum()
        })
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eigen(m: &DenseMatrix) -> Result<EigenDecomposition> {
    m.check_symmetric("sym_eigen")?;
    let n = m.rows();
    let mut a = m.symmetrized()?.data;
    let mut v = DenseMatrix::identity(n).data;
    let threshold = JACOBI_TOL * m.frobenius_norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&k| a[k * n + k]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| v[i * n + order[j]]);
    Ok(EigenDecomposition { values, vectors })
}

/// Largest singular value by power iteration on `M^T M`.
///
/// Starts from the normalized all-ones vector and stops once the Rayleigh
/// quotient changes by less than `1e-10` relative.
pub fn op_norm(m: &DenseMatrix) -> f64 {
    let n = m.cols();
    if n == 0 || m.rows() == 0 {
        return 0.0;
    }
    let mut x = Vector(vec![1.0 / (n as f64).sqrt(); n]);
    let mut rq_prev = f64::NAN;
    let mut rq = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let mx = m.matvec(&x).expect("square shapes");
        rq = mx.dot(&mx);
        let y = m.matvec_transpose(&mx).expect("shapes");
        let ny = y.norm();
        if ny == 0.0 {
            // x is in the null space; the one-vector start missed the range
            break;
        }
        if (rq - rq_prev).abs() <= POWER_TOL * rq {
            break;
        }
        rq_prev = rq;
        x = y.scaled(1.0 / ny);
    }
    rq.sqrt()
}

/// Ratio of extreme singular values from the Gram eigenvalues; `+inf` when
/// the smallest computed Gram eigenvalue is not positive.
pub fn cond_estimate(m: &DenseMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            op: "cond_estimate",
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let eig = sym_eigen(&m.gram(GramSide::Columns))?;
    let lo = eig.min_value();
    if lo <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((eig.max_value() / lo).sqrt())
}
