//! Stable solution of ill-conditioned and rank-deficient linear systems with
//! noisy data by the preconditioned dynamical systems method (DSM).
//!
//! The iteration `u_{n+1} = u_n - (A^T A + aI)^{-1}(A^T A u_n - A^T f_δ)`
//! reuses one factorization of `A^T A + aI` and is stopped by the
//! discrepancy principle `‖Au_n - f_δ‖ <= Cδ` or by an a-priori step budget.
//! Alongside it live an exact spectral realization of the continuous flow,
//! regularization-parameter selection, variational-regularization and
//! Landweber baselines, and an inverse heat conduction benchmark.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod continuous;
pub mod error;
pub mod linalg;
pub mod operators;
pub mod params;
pub mod problems;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, Vector};
pub use operators::Preconditioner;
pub use solver::{SolveConfig, SolveResult, StopReason, Stopping};
