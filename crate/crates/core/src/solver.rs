//! Discrete DSM iteration `u_{n+1} = u_n - hP(Au_n - f_δ)` with discrepancy
//! and a-priori stopping, plus the unpreconditioned Landweber baseline
//! `u_{n+1} = u_n - hA^T(Au_n - f_δ)` under the same stopping contracts.
//!
//! The residual `‖Au_n - f_δ‖` is recomputed from `A u_n` at every step and
//! recorded, including the initial one, in [`SolveResult::residual_history`].

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{op_norm, DenseMatrix, Vector};
use crate::operators::Preconditioner;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stopping {
    /// Stop at the first `n` with `‖Au_n - f_δ‖ <= Cδ`.
    Discrepancy,
    /// Run `ceil(apriori_c / (h δ^γ))` steps.
    APriori,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveConfig {
    pub h: f64,
    /// Discrepancy constant, `1 < c < 2`.
    pub c: f64,
    /// A-priori exponent, `0 < gamma < 1`.
    pub gamma: f64,
    pub apriori_c: f64,
    pub stopping: Stopping,
    pub max_iter: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            h: 1.0,
            c: 1.01,
            gamma: 0.5,
            apriori_c: 1.0,
            stopping: Stopping::Discrepancy,
            max_iter: 10_000,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 1.0 && self.c < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "discrepancy constant C must lie in (1, 2), got {}",
                self.c
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step h must be positive, got {}",
                self.h
            )));
        }
        if !(self.apriori_c > 0.0 && self.apriori_c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "a-priori constant must be positive, got {}",
                self.apriori_c
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    DiscrepancyMet,
    AprioriReached,
    MaxIter,
    InitialAlreadySmall,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::DiscrepancyMet => "discrepancy_met",
            StopReason::AprioriReached => "apriori_reached",
            StopReason::MaxIter => "max_iter",
            StopReason::InitialAlreadySmall => "initial_already_small",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub solution: Vector,
    pub iterations: usize,
    /// `‖Au_n - f_δ‖` for `n = 0..=iterations`.
    pub residual_history: Vec<f64>,
    pub stop_reason: StopReason,
    /// Regularization parameter of the preconditioner; 0 for Landweber.
    pub a_used: f64,
}

impl SolveResult {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history holds the initial residual")
    }

    /// Whether the residual history is nonincreasing up to `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.residual_history.windows(2).all(|w| w[1] <= w[0] + slack)
    }
}

/// One DSM step: `u - hP(Au - f_δ)`.
pub fn dsm_step(p: &Preconditioner<'_>, h: f64, u: &Vector, f_delta: &Vector) -> Result<Vector> {
    let r = p.matrix().matvec(u)?;
    if r.len() != f_delta.len() {
        return Err(Error::DimensionMismatch {
            op: "dsm_step",
            expected: r.len(),
            found: f_delta.len(),
        });
    }
    let correction = p.apply_p(&r.sub(f_delta))?;
    Ok(u.add_scaled(-h, &correction))
}

/// Number of steps of the a-priori rule, `ceil(apriori_c / (h δ^γ))`.
pub fn apriori_steps(delta: f64, h: f64, apriori_c: f64, gamma: f64) -> Result<usize> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "a-priori stopping needs delta > 0, got {delta}"
        )));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step h must be positive, got {h}")));
    }
    let raw = apriori_c / (h * delta.powf(gamma));
    // snap to an integer that `raw` misses only by rounding
    let nearest = raw.round();
    let steps = if (raw - nearest).abs() <= 1e-12 * nearest.max(1.0) {
        nearest
    } else {
        raw.ceil()
    };
    Ok(steps.max(0.0) as usize)
}

/// Successive DSM iterates `u_1, u_2, ...` from `u0` (no stopping rule).
pub fn dsm_iterates<'a>(
    p: &'a Preconditioner<'a>,
    h: f64,
    u0: Vector,
    f_delta: &'a Vector,
) -> Result<impl Iterator<Item = Vector> + 'a> {
    check_dims(p.matrix(), &u0, f_delta)?;
    Ok(std::iter::successors(Some(u0), move |u| {
        Some(dsm_step(p, h, u, f_delta).expect("dimensions checked up front"))
    })
    .skip(1))
}

/// DSM from `u0 = 0`.
pub fn solve_dsm(
    p: &Preconditioner<'_>,
    f_delta: &Vector,
    delta: f64,
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    solve_dsm_from(p, Vector::zeros(p.matrix().cols()), f_delta, delta, cfg)
}

/// DSM from a caller-supplied `u0`. Any component of `u0` in the null space
/// of `A` is carried through unchanged; keeping it out is up to the caller.
pub fn solve_dsm_from(
    p: &Preconditioner<'_>,
    u0: Vector,
    f_delta: &Vector,
    delta: f64,
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    let a = p.matrix();
    check_dims(a, &u0, f_delta)?;
    let t_norm = p.t_norm_from(op_norm(a));
    if cfg.h * t_norm >= 2.0 {
        return Err(Error::StepTooLarge {
            norm_name: "||T||",
            value: cfg.h * t_norm,
        });
    }
    run(a, u0, f_delta, delta, cfg, p.a(), |r| {
        p.apply_p(r).map(|c| c.scaled(cfg.h))
    })
}

/// Landweber from `u0 = 0`. Requires `h < 2 / ‖A‖²`.
pub fn landweber_solve(
    a: &DenseMatrix,
    f_delta: &Vector,
    delta: f64,
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    landweber_solve_from(a, Vector::zeros(a.cols()), f_delta, delta, cfg)
}

pub fn landweber_solve_from(
    a: &DenseMatrix,
    u0: Vector,
    f_delta: &Vector,
    delta: f64,
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    check_dims(a, &u0, f_delta)?;
    let norm = op_norm(a);
    if cfg.h * norm * norm >= 2.0 {
        return Err(Error::StepTooLarge {
            norm_name: "||A||^2",
            value: cfg.h * norm * norm,
        });
    }
    run(a, u0, f_delta, delta, cfg, 0.0, |r| {
        a.matvec_transpose(r).map(|g| g.scaled(cfg.h))
    })
}

fn check_dims(a: &DenseMatrix, u0: &Vector, f_delta: &Vector) -> Result<()> {
    if u0.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            op: "initial guess",
            expected: a.cols(),
            found: u0.len(),
        });
    }
    if f_delta.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            op: "right-hand side",
            expected: a.rows(),
            found: f_delta.len(),
        });
    }
    Ok(())
}

/// Shared driver: `correction(r)` returns the step to subtract, given the
/// residual vector `r = Au - f_δ`.
fn run(
    a: &DenseMatrix,
    u0: Vector,
    f_delta: &Vector,
    delta: f64,
    cfg: &SolveConfig,
    a_used: f64,
    mut correction: impl FnMut(&Vector) -> Result<Vector>,
) -> Result<SolveResult> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise level must be finite and nonnegative, got {delta}"
        )));
    }
    let budget = match cfg.stopping {
        Stopping::Discrepancy => {
            if delta == 0.0 {
                return Err(Error::InvalidParameter(
                    "discrepancy stopping needs delta > 0".into(),
                ));
            }
            None
        }
        Stopping::APriori => Some(apriori_steps(delta, cfg.h, cfg.apriori_c, cfg.gamma)?),
    };
    let target = cfg.c * delta;

    let mut u = u0;
    let mut r = a.matvec(&u)?.sub(f_delta);
    let mut history = vec![r.norm()];
    let mut n = 0;
    let stop_reason = loop {
        match budget {
            None if history[n] <= target => {
                break if n == 0 {
                    StopReason::InitialAlreadySmall
                } else {
                    StopReason::DiscrepancyMet
                };
            }
            Some(steps) if n >= steps => break StopReason::AprioriReached,
            _ => {}
        }
        if n >= cfg.max_iter {
            break StopReason::MaxIter;
        }
        u = u.sub(&correction(&r)?);
        r = a.matvec(&u)?.sub(f_delta);
        history.push(r.norm());
        n += 1;
    };

    Ok(SolveResult {
        solution: u,
        iterations: n,
        residual_history: history,
        stop_reason,
        a_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from(x)
    }

    #[test]
    fn step_examples() {
        let a = DenseMatrix::identity(2);
        let p = Preconditioner::new(&a, 1.0).unwrap();
        let u1 = dsm_step(&p, 1.0, &Vector::zeros(2), &v(&[1.0, 0.0])).unwrap();
        assert!(u1.max_abs_diff(&v(&[0.5, 0.0])) < 1e-15);

        let u = v(&[0.3, -0.7]);
        assert_eq!(dsm_step(&p, 1.0, &u, &u).unwrap(), u);

        let z = DenseMatrix::zeros(2, 2);
        let pz = Preconditioner::new(&z, 1.0).unwrap();
        assert_eq!(dsm_step(&pz, 1.0, &u, &v(&[4.0, 2.0])).unwrap(), u);

        assert!(dsm_step(&p, 1.0, &u, &v(&[1.0])).is_err());
    }

    #[test]
    fn apriori_examples() {
        assert_eq!(apriori_steps(0.01, 1.0, 1.0, 0.5).unwrap(), 10);
        assert_eq!(apriori_steps(0.04, 0.5, 1.0, 0.5).unwrap(), 10);
        for gamma in [0.1, 0.5, 0.9] {
            assert_eq!(apriori_steps(1.0, 1.0, 1.0, gamma).unwrap(), 1);
        }
        assert!(apriori_steps(0.0, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn identity_discrepancy_stops_at_seven() {
        // residual after n steps is 2^{-n}; first <= 0.0101 at n = 7
        let a = DenseMatrix::identity(2);
        let p = Preconditioner::new(&a, 1.0).unwrap();
        let res = solve_dsm(&p, &v(&[1.0, 0.0]), 0.01, &SolveConfig::default()).unwrap();
        assert_eq!(res.iterations, 7);
        assert_eq!(res.stop_reason, StopReason::DiscrepancyMet);
        for (n, r) in res.residual_history.iter().enumerate() {
            assert!((r - 0.5f64.powi(n as i32)).abs() < 1e-15);
        }
        assert!(res.residual_history[6] > 0.0101);
        assert_eq!(res.a_used, 1.0);
    }

    #[test]
    fn zero_data_is_already_small() {
        let a = DenseMatrix::identity(2);
        let p = Preconditioner::new(&a, 1.0).unwrap();
        let res = solve_dsm(&p, &Vector::zeros(2), 0.1, &SolveConfig::default()).unwrap();
        assert_eq!(res.iterations, 0);
        assert_eq!(res.stop_reason, StopReason::InitialAlreadySmall);
        assert_eq!(res.solution, Vector::zeros(2));
    }

    #[test]
    fn apriori_mode_runs_exact_count() {
        let a = DenseMatrix::identity(2);
        let p = Preconditioner::new(&a, 1.0).unwrap();
        let cfg = SolveConfig {
            stopping: Stopping::APriori,
            ..SolveConfig::default()
        };
        let res = solve_dsm(&p, &v(&[1.0, 0.0]), 0.01, &cfg).unwrap();
        assert_eq!(res.iterations, 10);
        assert_eq!(res.stop_reason, StopReason::AprioriReached);
        assert_eq!(res.residual_history.len(), 11);
    }

    #[test]
    fn max_iter_cap() {
        let a = DenseMatrix::identity(2);
        let p = Preconditioner::new(&a, 1.0).unwrap();
        let cfg = SolveConfig {
            max_iter: 3,
            ..SolveConfig::default()
        };
        let res = solve_dsm(&p, &v(&[1.0, 0.0]), 0.01, &cfg).unwrap();
        assert_eq!(res.iterations, 3);
        assert_eq!(res.stop_reason, StopReason::MaxIter);
    }

    #[test]
    fn tie_counts_as_stopped() {
        // residual 0.5 after one step, target exactly 1.25 * 0.4 = 0.5
        let a = DenseMatrix::identity(1);
        let p = Preconditioner::new(&a, 1.0).unwrap();
        let cfg = SolveConfig {
            c: 1.25,
            ..SolveConfig::default()
        };
        let res = solve_dsm(&p, &v(&[1.0]), 0.4, &cfg).unwrap();
        assert_eq!(res.iterations, 1);
    }

    #[test]
    fn rejects_bad_configs() {
        let a = DenseMatrix::identity(2);
        let p = Preconditioner::new(&a, 1.0).unwrap();
        let f = v(&[1.0, 0.0]);
        let bad = [
            SolveConfig { c: 1.0, ..Default::default() },
            SolveConfig { c: 2.0, ..Default::default() },
            SolveConfig { gamma: 1.0, ..Default::default() },
            SolveConfig { h: 0.0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(matches!(solve_dsm(&p, &f, 0.01, &cfg), Err(Error::InvalidParameter(_))));
        }
        // ‖T‖ = 1/2
        let cfg = SolveConfig { h: 4.5, ..Default::default() };
        assert!(matches!(solve_dsm(&p, &f, 0.01, &cfg), Err(Error::StepTooLarge { .. })));
        assert!(solve_dsm(&p, &f, 0.0, &SolveConfig::default()).is_err());
        assert!(solve_dsm(&p, &f, -1.0, &SolveConfig::default()).is_err());
        assert!(solve_dsm(&p, &v(&[1.0]), 0.01, &SolveConfig::default()).is_err());
    }

    #[test]
    fn landweber_identity_one_step() {
        let a = DenseMatrix::identity(2);
        let f = v(&[0.4, -1.2]);
        let res = landweber_solve(&a, &f, 0.01, &SolveConfig::default()).unwrap();
        assert_eq!(res.iterations, 1);
        assert_eq!(res.solution, f);
        assert_eq!(res.final_residual(), 0.0);
        assert_eq!(res.a_used, 0.0);
    }

    #[test]
    fn landweber_step_bound() {
        let a = DenseMatrix::from_diag(&[2.0, 1.0]);
        let cfg = SolveConfig { h: 0.6, ..Default::default() };
        assert!(matches!(
            landweber_solve(&a, &v(&[1.0, 1.0]), 0.01, &cfg),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn landweber_slow_component() {
        // exact data on diag(1, 0.1): Landweber's second residual component
        // decays as 0.99^n while DSM (a = 0.01) contracts it by 0.01/0.02 per step
        let a = DenseMatrix::from_diag(&[1.0, 0.1]);
        let f = v(&[1.0, 1.0]);
        let lw_cfg = SolveConfig {
            stopping: Stopping::APriori,
            apriori_c: 20.0,
            ..Default::default()
        };
        let lw = landweber_solve(&a, &f, 1.0, &lw_cfg).unwrap();
        assert_eq!(lw.iterations, 20);
        let r2 = a.matvec(&lw.solution).unwrap()[1] - 1.0;
        assert!((r2.abs() - 0.99f64.powi(20)).abs() < 1e-12);

        let p = Preconditioner::new(&a, 0.01).unwrap();
        let dsm = solve_dsm(&p, &f, 1.0, &lw_cfg).unwrap();
        let d2 = a.matvec(&dsm.solution).unwrap()[1] - 1.0;
        assert!((d2.abs() - 0.5f64.powi(20)).abs() < 1e-12);
        assert!(d2.abs() < 1e-5 * r2.abs());
    }

    #[test]
    fn iterates_match_steps() {
        let a = DenseMatrix::from_rows(&[[1.0, 0.5], [0.0, 0.2]]).unwrap();
        let p = Preconditioner::new(&a, 0.1).unwrap();
        let f = v(&[1.0, -0.4]);
        let it: Vec<Vector> = dsm_iterates(&p, 1.0, Vector::zeros(2), &f).unwrap().take(3).collect();
        let mut u = Vector::zeros(2);
        for got in it {
            u = dsm_step(&p, 1.0, &u, &f).unwrap();
            assert_eq!(got, u);
        }
    }
}
