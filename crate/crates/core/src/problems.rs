//! Inverse heat conduction benchmark and plain-text I/O.
//!
//! The operator discretizes the first-kind Volterra equation
//! `∫_0^s k(s - t) u(t) dt = b(s)` on `[0, 1]` by collocation at `s_i = i/n`
//! and the midpoint rule at `t_j = (j - 1/2)/n`, which gives a lower
//! triangular Toeplitz matrix with entries `k((i - j + 1/2)/n) / n`.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Vector};

pub const DEFAULT_KAPPA: f64 = 1.0;

/// `k(t) = t^{-3/2} / (2κ√π) · exp(-1/(4κ²t))`, with `k(0) = 0`.
pub fn heat_kernel(t: f64, kappa: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "heat kernel needs t >= 0, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let norm = 2.0 * kappa * std::f64::consts::PI.sqrt();
    Ok(t.powf(-1.5) / norm * (-1.0 / (4.0 * kappa * kappa * t)).exp())
}

pub fn heat_matrix(n: usize, kappa: f64) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("heat matrix needs n >= 1".into()));
    }
    let h = 1.0 / n as f64;
    let lags = (0..n)
        .map(|d| heat_kernel((d as f64 + 0.5) * h, kappa).map(|k| h * k))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DenseMatrix::from_fn(n, n, |i, j| if j <= i { lags[i - j] } else { 0.0 }))
}

/// Midpoint nodes `t_j = (j - 1/2)/n`, `j = 1..=n`.
pub fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| (j as f64 + 0.5) / n as f64).collect()
}

/// Smooth bump `u(t) = 4t(1 - t)` at the midpoint nodes.
pub fn exact_solution(n: usize) -> Vector {
    Vector::from(nodes(n).into_iter().map(|t| 4.0 * t * (1.0 - t)).collect::<Vec<_>>())
}

/// Pulse profile on the first half of the interval, zero on the second:
/// with `τ = 20 i / n` for `i = 1..=n/2`, a quadratic rise `0.75 τ²/4` up to
/// `τ = 2`, a cap `0.75 + (τ - 2)(3 - τ)` up to `τ = 3`, then exponential
/// decay `0.75 e^{-2(τ - 3)}`.
pub fn pulse_solution(n: usize) -> Vector {
    let mut u = vec![0.0; n];
    for (i, ui) in u.iter_mut().enumerate().take(n / 2) {
        let tau = 20.0 * (i + 1) as f64 / n as f64;
        *ui = if tau < 2.0 {
            0.75 * tau * tau / 4.0
        } else if tau < 3.0 {
            0.75 + (tau - 2.0) * (3.0 - tau)
        } else {
            0.75 * (-(tau - 3.0) * 2.0).exp()
        };
    }
    Vector::from(u)
}

/// Which exact solution a benchmark instance is built around.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExactProfile {
    /// [`pulse_solution`]
    #[default]
    Pulse,
    /// [`exact_solution`]
    Bump,
}

impl ExactProfile {
    pub fn sample(self, n: usize) -> Vector {
        match self {
            ExactProfile::Pulse => pulse_solution(n),
            ExactProfile::Bump => exact_solution(n),
        }
    }
}

impl fmt::Display for ExactProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExactProfile::Pulse => "pulse",
            ExactProfile::Bump => "bump",
        })
    }
}

impl FromStr for ExactProfile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pulse" => Ok(ExactProfile::Pulse),
            "bump" => Ok(ExactProfile::Bump),
            other => Err(format!("unknown profile '{other}' (expected pulse|bump)")),
        }
    }
}

/// Adds seeded Gaussian noise rescaled to norm `delta_rel * ‖b‖`.
/// Returns the noisy vector and `δ = delta_rel * ‖b‖`.
pub fn add_noise(b: &Vector, delta_rel: f64, seed: u64) -> Result<(Vector, f64)> {
    if !(delta_rel >= 0.0 && delta_rel.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "delta_rel must be finite and nonnegative, got {delta_rel}"
        )));
    }
    let delta = delta_rel * b.norm();
    if delta == 0.0 || b.is_empty() {
        return Ok((b.clone(), delta));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e: Vec<f64> = (0..b.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let e = Vector::from(e);
    let e_norm = e.norm();
    Ok((b.add_scaled(delta / e_norm, &e), delta))
}

/// A generated heat benchmark.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub a: DenseMatrix,
    pub u_exact: Vector,
    pub b_exact: Vector,
    pub b_noisy: Vector,
    pub delta: f64,
    pub delta_rel: f64,
    pub seed: u64,
}

impl ProblemInstance {
    pub fn heat(n: usize, delta_rel: f64, seed: u64, profile: ExactProfile) -> Result<Self> {
        Self::heat_with_kappa(n, DEFAULT_KAPPA, delta_rel, seed, profile)
    }

    pub fn heat_with_kappa(
        n: usize,
        kappa: f64,
        delta_rel: f64,
        seed: u64,
        profile: ExactProfile,
    ) -> Result<Self> {
        let a = heat_matrix(n, kappa)?;
        let u_exact = profile.sample(n);
        let b_exact = a.matvec(&u_exact)?;
        let (b_noisy, delta) = add_noise(&b_exact, delta_rel, seed)?;
        Ok(ProblemInstance {
            a,
            u_exact,
            b_exact,
            b_noisy,
            delta,
            delta_rel,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// `‖u - u_exact‖ / ‖u_exact‖`
    pub fn relative_error(&self, u: &Vector) -> f64 {
        u.sub(&self.u_exact).norm() / self.u_exact.norm()
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn save_matrix(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|&x| fmt_f64(x)).collect();
        writeln!(w, "{}", line.join(",")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_vector(path: impl AsRef<Path>, v: &Vector) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(v.len() * 24);
    for &x in v.iter() {
        out.push_str(&fmt_f64(x));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn parse_value(path: &Path, line: usize, token: &str) -> Result<f64> {
    let x: f64 = token.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("not a number: '{}'", token.trim()),
    })?;
    if !x.is_finite() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("non-finite value '{}'", token.trim()),
        });
    }
    Ok(x)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cols = None;
    let mut rows = 0;
    let mut data = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for token in line.split(',') {
            data.push(parse_value(path, idx + 1, token)?);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    msg: format!("row has {width} entries, expected {c}"),
                });
            }
            _ => {}
        }
        rows += 1;
    }
    DenseMatrix::new(rows, cols.unwrap_or(0), data)
}

pub fn load_vector(path: impl AsRef<Path>) -> Result<Vector> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let data = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, l)| parse_value(path, idx + 1, l))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Vector::from(data))
}
