//! Exact spectral solution of the continuous flow `u' = -P(Au - f_δ)`.
//!
//! `T` (or `Q`) is assembled explicitly and eigendecomposed, so everything
//! here is O(n³) and meant for verification scale (n up to a couple hundred).
//! The propagator is
//!
//! ```text
//! u(t) = e^{-tT} u0 + φ_t(T) Pf,    φ_t(λ) = (1 - e^{-tλ}) / λ,  φ_t(0) = t
//! ```
//!
//! and the residual along the flow is `‖e^{-tQ}(Au0 - f_δ)‖`.

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, DenseMatrix, EigenDecomposition, Vector};
use crate::operators::Preconditioner;

/// Eigenvalues below this fraction of the largest use the `λ -> 0` limit.
const ZERO_EIGEN_REL: f64 = 1e-14;
const MAX_DOUBLINGS: usize = 200;
const T_DELTA_TOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 400;

#[derive(Clone, Debug)]
pub struct SpectralOperator {
    eigen: EigenDecomposition,
    zero_cutoff: f64,
}

impl SpectralOperator {
    pub fn new(symmetric: &DenseMatrix) -> Result<Self> {
        let eigen = sym_eigen(symmetric)?;
        let zero_cutoff = ZERO_EIGEN_REL * eigen.max_value().max(0.0);
        Ok(SpectralOperator { eigen, zero_cutoff })
    }

    /// Spectral form of `T = PA`.
    pub fn of_t(p: &Preconditioner<'_>) -> Result<Self> {
        Self::new(&p.assemble_t())
    }

    /// Spectral form of `Q = AP`.
    pub fn of_q(p: &Preconditioner<'_>) -> Result<Self> {
        Self::new(&p.assemble_q())
    }

    pub fn dim(&self) -> usize {
        self.eigen.dim()
    }

    pub fn eigen(&self) -> &EigenDecomposition {
        &self.eigen
    }

    fn is_zero(&self, lambda: f64) -> bool {
        lambda <= self.zero_cutoff
    }

    fn decay(&self, lambda: f64, t: f64) -> f64 {
        if self.is_zero(lambda) {
            1.0
        } else {
            (-t * lambda).exp()
        }
    }

    /// `∫_0^t e^{-sλ} ds`, cancellation-free.
    fn integrated_decay(&self, lambda: f64, t: f64) -> f64 {
        if self.is_zero(lambda) {
            t
        } else {
            -(-t * lambda).exp_m1() / lambda
        }
    }

    /// `u(t) = e^{-tT} u0 + ∫_0^t e^{-(t-s)T} ds Pf`.
    pub fn propagate(&self, u0: &Vector, pf: &Vector, t: f64) -> Result<Vector> {
        check_time(t)?;
        self.check_len(u0)?;
        self.check_len(pf)?;
        let c0 = self.eigen.to_eigenbasis(u0)?;
        let g = self.eigen.to_eigenbasis(pf)?;
        let coeffs: Vec<f64> = self
            .eigen
            .values()
            .iter()
            .zip(c0.iter().zip(g.iter()))
            .map(|(&l, (&c, &gk))| self.decay(l, t) * c + self.integrated_decay(l, t) * gk)
            .collect();
        self.eigen.from_eigenbasis(&Vector::from(coeffs))
    }

    /// `‖e^{-tQ} r0‖` where `r0 = Au0 - f_δ`.
    pub fn residual_t(&self, r0: &Vector, t: f64) -> Result<f64> {
        check_time(t)?;
        self.check_len(r0)?;
        let c = self.eigen.to_eigenbasis(r0)?;
        let decayed: Vec<f64> = self
            .eigen
            .values()
            .iter()
            .zip(c.iter())
            .map(|(&l, &ck)| self.decay(l, t) * ck)
            .collect();
        Ok(Vector::from(decayed).norm())
    }

    /// Time `t_δ` at which `‖e^{-tQ} r0‖ = Cδ`, by bracket doubling from
    /// `1/λ_max` followed by bisection.
    pub fn find_t_delta(&self, r0: &Vector, c: f64, delta: f64) -> Result<f64> {
        let target = c * delta;
        if !(target > 0.0 && target.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "discrepancy level C*delta must be positive, got {target}"
            )));
        }
        let r_init = self.residual_t(r0, 0.0)?;
        if r_init <= target {
            return Err(Error::AlreadyBelowTarget {
                residual: r_init,
                target,
            });
        }
        let lmax = self.eigen.max_value();
        if !(lmax > 0.0) {
            return Err(Error::NoCrossing {
                target,
                reached: r_init,
            });
        }

        let mut lo = 0.0;
        let mut hi = 1.0 / lmax;
        let mut r_hi = self.residual_t(r0, hi)?;
        let mut doublings = 0;
        while r_hi > target {
            if doublings == MAX_DOUBLINGS {
                return Err(Error::NoCrossing {
                    target,
                    reached: r_hi,
                });
            }
            lo = hi;
            hi *= 2.0;
            r_hi = self.residual_t(r0, hi)?;
            doublings += 1;
        }

        let mut t = hi;
        let mut r = r_hi;
        for _ in 0..MAX_BISECTIONS {
            if (r - target).abs() <= T_DELTA_TOL * target {
                return Ok(t);
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            t = mid;
            r = self.residual_t(r0, mid)?;
            if r > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // interval exhausted at floating-point resolution
        Ok(t)
    }

    fn check_len(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                op: "spectral operator",
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || t.is_nan() {
        return Err(Error::InvalidParameter(format!("time must be nonnegative, got {t}")));
    }
    Ok(())
}

/// Continuous solution stopped at the discrepancy time.
#[derive(Clone, Debug)]
pub struct ContinuousSolution {
    pub t_delta: f64,
    pub solution: Vector,
}

/// Runs the continuous flow from `u0` and stops it at `t_δ`.
pub fn solve_continuous(
    p: &Preconditioner<'_>,
    u0: &Vector,
    f_delta: &Vector,
    c: f64,
    delta: f64,
) -> Result<ContinuousSolution> {
    let a = p.matrix();
    let r0 = a.matvec(u0)?.sub(f_delta);
    let q = SpectralOperator::of_q(p)?;
    let t_delta = q.find_t_delta(&r0, c, delta)?;
    let t = SpectralOperator::of_t(p)?;
    let pf = p.apply_p(f_delta)?;
    let solution = t.propagate(u0, &pf, t_delta)?;
    Ok(ContinuousSolution { t_delta, solution })
}
