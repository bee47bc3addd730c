//! The preconditioner `P = (A^T A + aI)^{-1} A^T` and the derived operators
//! `T = PA` and `Q = AP`.
//!
//! `P` is never formed as a matrix: the Gram matrix `A^T A + aI` is factored
//! once and every application is one `A^T` product plus a triangular solve
//! pair. Explicit assembly of `T` and `Q` exists for the spectral oracles and
//! costs one application per column.

use crate::error::{Error, Result};
use crate::linalg::{spd_factor, DenseMatrix, GramSide, SpdFactorization, Vector};

#[derive(Clone, Debug)]
pub struct Preconditioner<'m> {
    a: f64,
    gram_factor: SpdFactorization,
    matrix: &'m DenseMatrix,
}

impl<'m> Preconditioner<'m> {
    /// Factors `A^T A + aI`. Changing `a` means building a new preconditioner.
    pub fn new(matrix: &'m DenseMatrix, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "regularization a must be positive and finite, got {a}"
            )));
        }
        let shifted = matrix.gram(GramSide::Columns).add_scaled_identity(a)?;
        let gram_factor = spd_factor(&shifted)?;
        Ok(Preconditioner {
            a,
            gram_factor,
            matrix,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn matrix(&self) -> &'m DenseMatrix {
        self.matrix
    }

    /// `(A^T A + aI)^{-1} A^T r`
    pub fn apply_p(&self, r: &Vector) -> Result<Vector> {
        if r.len() != self.matrix.rows() {
            return Err(Error::DimensionMismatch {
                op: "apply_p",
                expected: self.matrix.rows(),
                found: r.len(),
            });
        }
        self.gram_factor.solve(&self.matrix.matvec_transpose(r)?)
    }

    /// `T x = P(Ax)`
    pub fn apply_t(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.matrix.cols() {
            return Err(Error::DimensionMismatch {
                op: "apply_t",
                expected: self.matrix.cols(),
                found: x.len(),
            });
        }
        self.apply_p(&self.matrix.matvec(x)?)
    }

    /// `Q y = A(Py)`
    pub fn apply_q(&self, y: &Vector) -> Result<Vector> {
        if y.len() != self.matrix.rows() {
            return Err(Error::DimensionMismatch {
                op: "apply_q",
                expected: self.matrix.rows(),
                found: y.len(),
            });
        }
        self.matrix.matvec(&self.apply_p(y)?)
    }

    /// `‖T‖ = ‖A‖² / (‖A‖² + a)`, given `‖A‖`.
    pub fn t_norm_from(&self, a_norm: f64) -> f64 {
        let s = a_norm * a_norm;
        s / (s + self.a)
    }

    /// Explicit `T`, symmetrized. Oracle scale only (one solve per column).
    pub fn assemble_t(&self) -> DenseMatrix {
        let n = self.matrix.cols();
        let cols: Vec<Vector> = (0..n)
            .map(|j| self.apply_t(&Vector::unit(n, j)).expect("unit vector has matching length"))
            .collect();
        DenseMatrix::from_columns(&cols)
            .and_then(|t| t.symmetrized())
            .expect("square by construction")
    }

    /// Explicit `Q`, symmetrized. Oracle scale only.
    pub fn assemble_q(&self) -> DenseMatrix {
        let m = self.matrix.rows();
        let cols: Vec<Vector> = (0..m)
            .map(|j| self.apply_q(&Vector::unit(m, j)).expect("unit vector has matching length"))
            .collect();
        DenseMatrix::from_columns(&cols)
            .and_then(|q| q.symmetrized())
            .expect("square by construction")
    }
}
