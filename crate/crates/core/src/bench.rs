//! Benchmark harness and command implementations behind the `dsm` binary.
//!
//! Cells `(n, seed)` are independent and run in parallel; rows are sorted by
//! `(n, seed, method)` before anything is written, so output files depend
//! only on the inputs.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::linalg::{cond_estimate, DenseMatrix, Vector};
use crate::operators::Preconditioner;
use crate::params::{choose_a, phi, vr_newton, vr_solve};
use crate::problems::{heat_matrix, nodes, ExactProfile, ProblemInstance, DEFAULT_KAPPA};
use crate::solver::{landweber_solve, solve_dsm, SolveConfig, SolveResult};

/// Absolute slack for the residual-monotonicity check.
pub const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Dsm,
    VrI,
    VrN,
    Landweber,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Dsm, Method::VrI, Method::VrN, Method::Landweber];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dsm => "dsm",
            Method::VrI => "vr_i",
            Method::VrN => "vr_n",
            Method::Landweber => "landweber",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method '{s}' (expected dsm|vr_i|vr_n|landweber)"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub method: Method,
    pub seed: u64,
    pub delta_rel: f64,
    pub n_iter: usize,
    pub rel_error: f64,
    pub a_used: f64,
    /// Wall time; reported on stdout only, never written to files.
    pub wall_ms: f64,
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub n_list: Vec<usize>,
    pub delta_rel: f64,
    pub seeds: usize,
    /// First seed; runs use `seed, seed + 1, ...`.
    pub seed: u64,
    pub methods: Vec<Method>,
    pub profile: ExactProfile,
    pub solve: SolveConfig,
    pub assert_invariants: bool,
    /// Run VR_i at the initial guess of `choose_a` instead of its output.
    pub vr_i_initial_a: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n_list: (1..=10).map(|i| 10 * i).collect(),
            delta_rel: 0.05,
            seeds: 10,
            seed: 0,
            methods: Method::ALL.to_vec(),
            profile: ExactProfile::default(),
            solve: SolveConfig::default(),
            assert_invariants: false,
            vr_i_initial_a: false,
        }
    }
}

#[derive(Debug, Error)]
#[error("n={n} seed={seed} method={method}: {source}")]
pub struct BenchError {
    pub n: usize,
    pub seed: u64,
    pub method: Method,
    #[source]
    pub source: Error,
}

/// Everything one method produced on one instance.
#[derive(Clone, Debug)]
pub struct MethodOutcome {
    pub solution: Vector,
    pub n_iter: usize,
    pub a_used: f64,
    /// Present for the iterative methods.
    pub history: Option<SolveResult>,
}

/// Runs `method` on `inst` with the benchmark defaults.
pub fn run_method(
    inst: &ProblemInstance,
    method: Method,
    cfg: &SolveConfig,
    vr_i_initial_a: bool,
) -> Result<MethodOutcome> {
    let (a, f, delta) = (&inst.a, &inst.b_noisy, inst.delta);
    match method {
        Method::Dsm => {
            let trace = choose_a(a, f, delta)?;
            let p = Preconditioner::new(a, trace.chosen_a)?;
            let res = solve_dsm(&p, f, delta, cfg)?;
            Ok(MethodOutcome {
                solution: res.solution.clone(),
                n_iter: res.iterations,
                a_used: res.a_used,
                history: Some(res),
            })
        }
        Method::VrI => {
            let trace = choose_a(a, f, delta)?;
            let a_used = if vr_i_initial_a {
                trace.initial_a()
            } else {
                trace.chosen_a
            };
            Ok(MethodOutcome {
                solution: vr_solve(a, f, a_used)?,
                n_iter: 1,
                a_used,
                history: None,
            })
        }
        Method::VrN => {
            let res = vr_newton(a, f, delta, cfg.c)?;
            Ok(MethodOutcome {
                solution: res.solution,
                n_iter: res.iterations,
                a_used: res.a,
                history: None,
            })
        }
        Method::Landweber => {
            let res = landweber_solve(a, f, delta, cfg)?;
            Ok(MethodOutcome {
                solution: res.solution.clone(),
                n_iter: res.iterations,
                a_used: res.a_used,
                history: Some(res),
            })
        }
    }
}

fn run_cell(cfg: &BenchConfig, n: usize, seed: u64) -> std::result::Result<Vec<BenchRow>, BenchError> {
    let fail = |method, source| BenchError {
        n,
        seed,
        method,
        source,
    };
    let first = cfg.methods.first().copied().unwrap_or(Method::Dsm);
    let inst = ProblemInstance::heat(n, cfg.delta_rel, seed, cfg.profile).map_err(|e| fail(first, e))?;
    let mut rows = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let start = Instant::now();
        let out = run_method(&inst, method, &cfg.solve, cfg.vr_i_initial_a).map_err(|e| fail(method, e))?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        if cfg.assert_invariants {
            if let Some(res) = &out.history {
                if !res.is_monotone(MONOTONE_SLACK) {
                    return Err(fail(
                        method,
                        Error::InvariantViolated("residual history increased".into()),
                    ));
                }
            }
        }
        rows.push(BenchRow {
            n,
            method,
            seed,
            delta_rel: cfg.delta_rel,
            n_iter: out.n_iter,
            rel_error: inst.relative_error(&out.solution),
            a_used: out.a_used,
            wall_ms,
        });
    }
    Ok(rows)
}

/// Runs every `(n, seed, method)` cell. Rows come back sorted.
pub fn run_bench(cfg: &BenchConfig) -> std::result::Result<Vec<BenchRow>, BenchError> {
    if cfg.n_list.is_empty() || cfg.seeds == 0 || !(cfg.delta_rel > 0.0) {
        return Err(BenchError {
            n: 0,
            seed: cfg.seed,
            method: cfg.methods.first().copied().unwrap_or(Method::Dsm),
            source: Error::InvalidParameter(
                "bench needs a nonempty n list, at least one seed and delta_rel > 0".into(),
            ),
        });
    }
    let cells: Vec<(usize, u64)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| (0..cfg.seeds as u64).map(move |s| (n, s)))
        .map(|(n, s)| (n, cfg.seed + s))
        .collect();
    let mut rows: Vec<BenchRow> = cells
        .par_iter()
        .map(|&(n, seed)| run_cell(cfg, n, seed))
        .collect::<std::result::Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by_key(|r| (r.n, r.seed, r.method));
    Ok(rows)
}

/// Per-`(n, method)` aggregate over seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub n: usize,
    pub method: Method,
    pub seeds: usize,
    pub mean_n_iter: f64,
    pub std_n_iter: f64,
    pub mean_rel_error: f64,
    pub std_rel_error: f64,
    pub mean_a_used: f64,
    /// Shown on stdout only; kept out of the summary file.
    pub mean_wall_ms: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(rows: &[BenchRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, Method)> = rows.iter().map(|r| (r.n, r.method)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(n, method)| {
            let group: Vec<&BenchRow> = rows.iter().filter(|r| r.n == n && r.method == method).collect();
            let iters: Vec<f64> = group.iter().map(|r| r.n_iter as f64).collect();
            let errs: Vec<f64> = group.iter().map(|r| r.rel_error).collect();
            let a: Vec<f64> = group.iter().map(|r| r.a_used).collect();
            let wall: Vec<f64> = group.iter().map(|r| r.wall_ms).collect();
            let (mean_n_iter, std_n_iter) = mean_std(&iters);
            let (mean_rel_error, std_rel_error) = mean_std(&errs);
            SummaryRow {
                n,
                method,
                seeds: group.len(),
                mean_n_iter,
                std_n_iter,
                mean_rel_error,
                std_rel_error,
                mean_a_used: mean_std(&a).0,
                mean_wall_ms: mean_std(&wall).0,
            }
        })
        .collect()
}

pub const ROWS_HEADER: &str = "n,method,seed,delta_rel,n_iter,rel_error,a_used";
pub const SUMMARY_HEADER: &str =
    "n,method,seeds,mean_n_iter,std_n_iter,mean_rel_error,std_rel_error,mean_a_used";

pub fn rows_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(ROWS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:e},{},{:.16e},{:.16e}\n",
            r.n, r.method, r.seed, r.delta_rel, r.n_iter, r.rel_error, r.a_used
        ));
    }
    out
}

pub fn summary_csv(summary: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for s in summary {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.16e},{:.16e},{:.16e}\n",
            s.n,
            s.method,
            s.seeds,
            s.mean_n_iter,
            s.std_n_iter,
            s.mean_rel_error,
            s.std_rel_error,
            s.mean_a_used
        ));
    }
    out
}

/// `results.csv` -> `results.summary.csv`
pub fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.summary.csv"))
}

/// Human-readable table: one line per `n`, mean iterations, relative error
/// and wall time for each method.
pub fn format_table(summary: &[SummaryRow]) -> String {
    let mut methods: Vec<Method> = summary.iter().map(|s| s.method).collect();
    methods.sort();
    methods.dedup();
    let mut out = format!("{:>5}", "");
    for m in &methods {
        out.push_str(&format!(" | {:<26}", m.as_str()));
    }
    out.truncate(out.trim_end().len());
    out.push_str(&format!("\n{:>5}", "n"));
    for _ in &methods {
        out.push_str(&format!(" | {:>8} {:>8} {:>8}", "n_iter", "rel_err", "ms"));
    }
    out.push('\n');
    let mut ns: Vec<usize> = summary.iter().map(|s| s.n).collect();
    ns.dedup();
    for n in ns {
        out.push_str(&format!("{n:>5}"));
        for m in &methods {
            match summary.iter().find(|s| s.n == n && s.method == *m) {
                Some(s) => out.push_str(&format!(
                    " | {:>8.2} {:>8.4} {:>8.2}",
                    s.mean_n_iter, s.mean_rel_error, s.mean_wall_ms
                )),
                None => out.push_str(&format!(" | {:>8} {:>8} {:>8}", "-", "-", "-")),
            }
        }
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs the benchmark and writes the per-seed rows to `out` and the per-`n`
/// summary next to it. Returns the summary.
pub fn cmd_bench(cfg: &BenchConfig, out: &Path) -> std::result::Result<Vec<SummaryRow>, BenchError> {
    let rows = run_bench(cfg)?;
    let summary = summarize(&rows);
    let io_fail = |source| BenchError {
        n: 0,
        seed: cfg.seed,
        method: cfg.methods.first().copied().unwrap_or(Method::Dsm),
        source,
    };
    write_file(out, &rows_csv(&rows)).map_err(io_fail)?;
    write_file(&summary_path(out), &summary_csv(&summary)).map_err(io_fail)?;
    Ok(summary)
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub method: Method,
    /// Fixed regularization parameter; chosen by [`choose_a`] when absent.
    pub a: Option<f64>,
    pub solve: SolveConfig,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub method: Method,
    pub solution: Vector,
    pub iterations: usize,
    pub final_residual: f64,
    pub a_used: f64,
    pub stop_reason: String,
}

impl SolveReport {
    pub fn to_text(&self) -> String {
        format!(
            "method={}\niterations={}\nfinal_residual={:e}\na_used={:e}\nstop_reason={}\n",
            self.method, self.iterations, self.final_residual, self.a_used, self.stop_reason
        )
    }
}

/// Solves a user-supplied system `A u = f_δ` with noise level `delta`.
pub fn solve_system(a: &DenseMatrix, f: &Vector, delta: f64, opts: &SolveOptions) -> Result<SolveReport> {
    if f.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            op: "solve: right-hand side vs matrix rows",
            expected: a.rows(),
            found: f.len(),
        });
    }
    let pick_a = || -> Result<f64> {
        match opts.a {
            Some(a_fixed) => Ok(a_fixed),
            None => Ok(choose_a(a, f, delta)?.chosen_a),
        }
    };
    let residual = |u: &Vector| -> Result<f64> { Ok(a.matvec(u)?.sub(f).norm()) };
    match opts.method {
        Method::Dsm => {
            let p = Preconditioner::new(a, pick_a()?)?;
            let res = solve_dsm(&p, f, delta, &opts.solve)?;
            Ok(SolveReport {
                method: Method::Dsm,
                final_residual: res.final_residual(),
                iterations: res.iterations,
                a_used: res.a_used,
                stop_reason: res.stop_reason.to_string(),
                solution: res.solution,
            })
        }
        Method::Landweber => {
            let res = landweber_solve(a, f, delta, &opts.solve)?;
            Ok(SolveReport {
                method: Method::Landweber,
                final_residual: res.final_residual(),
                iterations: res.iterations,
                a_used: res.a_used,
                stop_reason: res.stop_reason.to_string(),
                solution: res.solution,
            })
        }
        Method::VrI => {
            let a_used = pick_a()?;
            let solution = vr_solve(a, f, a_used)?;
            Ok(SolveReport {
                method: Method::VrI,
                final_residual: phi(a, f, a_used)?,
                iterations: 1,
                a_used,
                stop_reason: "direct".into(),
                solution,
            })
        }
        Method::VrN => {
            let res = vr_newton(a, f, delta, opts.solve.c)?;
            Ok(SolveReport {
                method: Method::VrN,
                final_residual: residual(&res.solution)?,
                iterations: res.iterations,
                a_used: res.a,
                stop_reason: "discrepancy_met".into(),
                solution: res.solution,
            })
        }
    }
}

/// Condition estimate of the `n`-point heat matrix.
pub fn cmd_cond(n: usize) -> Result<f64> {
    cond_estimate(&heat_matrix(n, DEFAULT_KAPPA)?)
}

#[derive(Clone, Debug)]
pub struct PlotData {
    pub t: Vec<f64>,
    pub u_exact: Vector,
    pub u_dsm: Vector,
    pub u_vr_n: Vector,
}

pub const PLOT_HEADER: &str = "t,u_exact,u_dsm,u_vr_n";

impl PlotData {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(PLOT_HEADER);
        out.push('\n');
        for j in 0..self.t.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.t[j], self.u_exact[j], self.u_dsm[j], self.u_vr_n[j]
            ));
        }
        out
    }
}

/// Exact, DSM and VR_n solutions on one heat instance.
pub fn plot_data(
    n: usize,
    delta_rel: f64,
    seed: u64,
    profile: ExactProfile,
    cfg: &SolveConfig,
) -> Result<PlotData> {
    let inst = ProblemInstance::heat(n, delta_rel, seed, profile)?;
    let dsm = run_method(&inst, Method::Dsm, cfg, false)?;
    let vr_n = run_method(&inst, Method::VrN, cfg, false)?;
    Ok(PlotData {
        t: nodes(n),
        u_exact: inst.u_exact.clone(),
        u_dsm: dsm.solution,
        u_vr_n: vr_n.solution,
    })
}

pub fn cmd_plot_data(
    n: usize,
    delta_rel: f64,
    seed: u64,
    profile: ExactProfile,
    cfg: &SolveConfig,
    out: &Path,
) -> Result<PlotData> {
    let data = plot_data(n, delta_rel, seed, profile, cfg)?;
    write_file(out, &data.to_csv())?;
    Ok(data)
}
