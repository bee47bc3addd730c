//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use dsm_core::linalg::{sym_eigen, GramSide};
use dsm_core::{DenseMatrix, Preconditioner, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from((0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>())
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Random orthonormal n x n matrix by Gram-Schmidt on a random square.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let mut cols: Vec<Vector> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = random_vector(rng, n);
        for _ in 0..2 {
            for c in &cols {
                v = v.add_scaled(-v.dot(c), c);
            }
        }
        let nv = v.norm();
        if nv > 1e-8 {
            cols.push(v.scaled(1.0 / nv));
        }
    }
    DenseMatrix::from_columns(&cols).unwrap()
}

/// `U diag(s) V^T` with random orthogonal `U`, `V`.
pub fn with_singular_values(rng: &mut ChaCha8Rng, s: &[f64]) -> DenseMatrix {
    let n = s.len();
    let u = random_orthogonal(rng, n);
    let v = random_orthogonal(rng, n);
    let us = DenseMatrix::from_fn(n, n, |i, j| u.get(i, j) * s[j]);
    us.matmul(&v.transpose()).unwrap()
}

pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    random_matrix(rng, n, n)
        .gram(GramSide::Columns)
        .add_scaled_identity(0.5)
        .unwrap()
}

/// Gauss-Jordan inverse with partial pivoting; independent of the Cholesky
/// and Jacobi code paths.
pub fn gauss_jordan_inverse(m: &DenseMatrix) -> DenseMatrix {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        assert!(d != 0.0, "singular");
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    for j in 0..n {
                        a[i][j] -= f * a[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    DenseMatrix::from_rows(&inv).unwrap()
}

/// Minimal-norm solution `A^+ f` from the eigendecomposition of `A^T A`:
/// `Σ_{λ_k > tol} v_k ⟨v_k, A^T f⟩ / λ_k`.
pub fn pseudoinverse_solution(a: &DenseMatrix, f: &Vector) -> Vector {
    let eig = sym_eigen(&a.gram(GramSide::Columns)).unwrap();
    let tol = 1e-10 * eig.max_value();
    let atf = a.matvec_transpose(f).unwrap();
    eig.apply_fn(&atf, |l| if l > tol { 1.0 / l } else { 0.0 }).unwrap()
}

/// Closed-form DSM iterate `(I - hT)^n u0 + h Σ_{i<n} (I - hT)^i P f`
/// evaluated on the eigendecomposition of the assembled `T`.
pub fn closed_form_iterate(p: &Preconditioner<'_>, h: f64, n: usize, u0: &Vector, f: &Vector) -> Vector {
    let eig = sym_eigen(&p.assemble_t()).unwrap();
    let pf = p.apply_p(f).unwrap();
    let decay = |l: f64| (1.0 - h * l).powi(n as i32);
    let geometric = |l: f64| (0..n).map(|i| (1.0 - h * l).powi(i as i32)).sum::<f64>() * h;
    eig.apply_fn(u0, decay)
        .unwrap()
        .add(&eig.apply_fn(&pf, geometric).unwrap())
}

/// Row `n` of the explicit DSM recursion, for comparison with the oracles.
pub fn iterate_n(p: &Preconditioner<'_>, h: f64, n: usize, u0: &Vector, f: &Vector) -> Vector {
    let mut u = u0.clone();
    for _ in 0..n {
        u = dsm_core::solver::dsm_step(p, h, &u, f).unwrap();
    }
    u
}
