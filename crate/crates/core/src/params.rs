//! Regularization-parameter machinery.
//!
//! `φ(a) = ‖A(A^T A + aI)^{-1}A^T f_δ - f_δ‖` is the discrepancy of the
//! variational (Tikhonov) solution and is nondecreasing in `a`.
//! [`choose_a`] brackets `a` so that `δ <= φ(a) <= 2δ` with the
//! shrink/triple strategy; [`vr_newton`] solves `φ(a) = Cδ` by safeguarded
//! Newton iteration.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{op_norm, spd_factor, DenseMatrix, GramSide, Vector};
use crate::operators::Preconditioner;

const CHOOSE_A_MAX_EVALS: usize = 100;
const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-8;
/// Lower end of the Newton bracket, relative to `‖A‖²`.
const NEWTON_LO_REL: f64 = 1e-16;

/// `φ(a)`, via one factorization of `A^T A + aI`.
pub fn phi(a_mat: &DenseMatrix, f_delta: &Vector, a: f64) -> Result<f64> {
    let p = Preconditioner::new(a_mat, a)?;
    phi_with(&p, f_delta)
}

/// `φ(a)` for the `a` that `p` was built with.
pub fn phi_with(p: &Preconditioner<'_>, f_delta: &Vector) -> Result<f64> {
    let u = p.apply_p(f_delta)?;
    Ok(p.matrix().matvec(&u)?.sub(f_delta).norm())
}

/// Variational solution `u_a = (A^T A + aI)^{-1} A^T f_δ`.
pub fn vr_solve(a_mat: &DenseMatrix, f_delta: &Vector, a: f64) -> Result<Vector> {
    Preconditioner::new(a_mat, a)?.apply_p(f_delta)
}

/// Which branch of the shrink rule fired; both apply `a / (2(c - 1))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShrinkBand {
    AboveThree,
    TwoToThree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamAction {
    Accept,
    Shrink(ShrinkBand),
    Triple,
    /// `c < 1` for the second time: stop and use `3a`.
    FallbackTriple,
}

impl fmt::Display for ParamAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamAction::Accept => "accept",
            ParamAction::Shrink(ShrinkBand::AboveThree) => "shrink(c>3)",
            ParamAction::Shrink(ShrinkBand::TwoToThree) => "shrink(2<c<=3)",
            ParamAction::Triple => "triple",
            ParamAction::FallbackTriple => "fallback_triple",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamStep {
    pub a: f64,
    pub phi: f64,
    /// `φ(a) / δ`
    pub c: f64,
    pub action: ParamAction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamTrace {
    pub chosen_a: f64,
    pub steps: Vec<ParamStep>,
    pub evaluations: usize,
}

impl ParamTrace {
    pub fn initial_a(&self) -> f64 {
        self.steps[0].a
    }

    pub fn fell_back(&self) -> bool {
        matches!(
            self.steps.last().map(|s| s.action),
            Some(ParamAction::FallbackTriple)
        )
    }
}

/// Picks `a` with `δ <= φ(a) <= 2δ`.
///
/// Starts from `a = δ‖A‖² / (3‖f_δ‖)`. When `c = φ(a)/δ > 2` the guess is
/// replaced by `a / (2(c - 1))`; when `c < 1` it is tripled, and a second
/// `c < 1` ends the search with `3a`.
pub fn choose_a(a_mat: &DenseMatrix, f_delta: &Vector, delta: f64) -> Result<ParamTrace> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "parameter choice needs delta > 0, got {delta}"
        )));
    }
    let f_norm = f_delta.norm();
    if f_norm == 0.0 {
        return Err(Error::InvalidParameter("data vector is zero".into()));
    }
    let a_norm = op_norm(a_mat);
    if a_norm == 0.0 {
        return Err(Error::InvalidParameter("operator is zero".into()));
    }

    let mut a = delta * a_norm * a_norm / (3.0 * f_norm);
    let mut steps = Vec::new();
    let mut seen_small = false;
    while steps.len() < CHOOSE_A_MAX_EVALS {
        let phi_a = phi(a_mat, f_delta, a)?;
        let c = phi_a / delta;
        let (action, next) = if (delta..=2.0 * delta).contains(&phi_a) {
            (ParamAction::Accept, a)
        } else if c > 2.0 {
            let band = if c > 3.0 {
                ShrinkBand::AboveThree
            } else {
                ShrinkBand::TwoToThree
            };
            (ParamAction::Shrink(band), a / (2.0 * (c - 1.0)))
        } else if seen_small {
            (ParamAction::FallbackTriple, 3.0 * a)
        } else {
            seen_small = true;
            (ParamAction::Triple, 3.0 * a)
        };
        steps.push(ParamStep {
            a,
            phi: phi_a,
            c,
            action,
        });
        if matches!(action, ParamAction::Accept | ParamAction::FallbackTriple) {
            let evaluations = steps.len();
            return Ok(ParamTrace {
                chosen_a: next,
                steps,
                evaluations,
            });
        }
        a = next;
    }
    Err(Error::IterationCap {
        op: "choose_a",
        cap: CHOOSE_A_MAX_EVALS,
    })
}

#[derive(Clone, Debug)]
pub struct VrNewtonResult {
    pub a: f64,
    pub solution: Vector,
    /// Number of discrepancy evaluations, the converged one included.
    pub iterations: usize,
    /// Every `a` at which the discrepancy was evaluated.
    pub a_history: Vec<f64>,
    /// `φ(a)` at the returned `a`.
    pub phi: f64,
}

/// Discrepancy `G(a) = φ(a)² - target²` and `G'(a)` from one factorization
/// of `AA^T + aI`: with `z = (AA^T + aI)^{-1} f_δ`, `φ(a) = a‖z‖` and
/// `G'(a) = 2a⟨z,z⟩ - 2a²⟨z,(AA^T + aI)^{-1} z⟩`.
fn discrepancy_and_slope(
    row_gram: &DenseMatrix,
    f_delta: &Vector,
    a: f64,
    target: f64,
) -> Result<(f64, f64, f64)> {
    let factor = spd_factor(&row_gram.add_scaled_identity(a)?)?;
    let z = factor.solve(f_delta)?;
    let w = factor.solve(&z)?;
    let zz = z.dot(&z);
    let phi = a * z.norm();
    let g = phi * phi - target * target;
    let slope = 2.0 * a * zz - 2.0 * a * a * z.dot(&w);
    Ok((phi, g, slope))
}

/// Variational regularization with `a` tuned so that `φ(a) = Cδ`.
///
/// Newton on `G(a) = φ(a)² - (Cδ)²` from `δ‖A‖²/(3‖f_δ‖)`, kept inside a
/// bracket that starts as `[1e-16‖A‖², max(‖A‖², 2‖A‖² r/(1-r))]` with
/// `r = Cδ/‖f_δ‖` (the upper end is guaranteed to have `φ >= Cδ`); any step
/// leaving the current bracket is replaced by its geometric midpoint.
pub fn vr_newton(a_mat: &DenseMatrix, f_delta: &Vector, delta: f64, c: f64) -> Result<VrNewtonResult> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "discrepancy rule needs delta > 0, got {delta}"
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "discrepancy constant must be positive, got {c}"
        )));
    }
    if f_delta.len() != a_mat.rows() {
        return Err(Error::DimensionMismatch {
            op: "vr_newton",
            expected: a_mat.rows(),
            found: f_delta.len(),
        });
    }
    let target = c * delta;
    let f_norm = f_delta.norm();
    let a_norm = op_norm(a_mat);
    if target >= f_norm || a_norm == 0.0 {
        return Err(Error::NoRoot { target });
    }

    let scale = a_norm * a_norm;
    let ratio = target / f_norm;
    let mut lo = NEWTON_LO_REL * scale;
    let mut hi = scale.max(2.0 * scale * ratio / (1.0 - ratio));
    let row_gram = a_mat.gram(GramSide::Rows);

    let mut a = (delta * scale / (3.0 * f_norm)).clamp(lo, hi);
    let mut a_history = Vec::new();
    for _ in 0..NEWTON_MAX_ITER {
        let (phi_a, g, slope) = discrepancy_and_slope(&row_gram, f_delta, a, target)?;
        a_history.push(a);
        if (phi_a - target).abs() <= NEWTON_TOL * target {
            let solution = vr_solve(a_mat, f_delta, a)?;
            return Ok(VrNewtonResult {
                a,
                solution,
                iterations: a_history.len(),
                a_history,
                phi: phi_a,
            });
        }
        if g > 0.0 {
            hi = a;
        } else {
            lo = a;
        }
        if hi <= lo * (1.0 + 1e-14) {
            // bracket collapsed onto its lower end: φ stays above target
            return Err(Error::NoRoot { target });
        }
        let newton = a - g / slope;
        a = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            (lo * hi).sqrt()
        };
    }
    Err(Error::IterationCap {
        op: "vr_newton",
        cap: NEWTON_MAX_ITER,
    })
}
