mod common;

use common::{gauss_jordan_inverse, random_matrix, random_vector, rng, with_singular_values};
use dsm_core::linalg::{op_norm, sym_eigen, GramSide};
use dsm_core::params::{choose_a, phi, vr_newton, vr_solve, ParamAction};
use dsm_core::problems::{ExactProfile, ProblemInstance};
use dsm_core::{DenseMatrix, Error, Vector};
use proptest::prelude::*;

/// Norm of the component of `f` orthogonal to the range of `A`.
fn out_of_range_norm(a: &DenseMatrix, f: &Vector) -> f64 {
    let e = sym_eigen(&a.gram(GramSide::Rows)).unwrap();
    let tol = 1e-10 * e.max_value();
    e.apply_fn(f, |l| if l > tol { 0.0 } else { 1.0 }).unwrap().norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn phi_is_monotone_and_bounded(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = with_singular_values(&mut r, &[1.0, 0.3, 0.05, 0.0]);
        let f = random_vector(&mut r, 4);
        let mut prev = 0.0;
        for k in 0..=32 {
            let a = 10f64.powf(-6.0 + 8.0 * k as f64 / 32.0);
            let v = phi(&m, &f, a).unwrap();
            prop_assert!(v >= prev - 1e-12);
            prop_assert!(v <= f.norm() * (1.0 + 1e-12));
            prev = v;
        }
        // a -> 0 leaves only the part of f outside the range
        let floor = out_of_range_norm(&m, &f);
        let tiny = phi(&m, &f, 1e-12).unwrap();
        prop_assert!((tiny - floor).abs() <= 1e-6);
        prop_assert!(phi(&m, &f, 1e-6).unwrap() >= floor - 1e-12);
    }

    #[test]
    fn choose_a_ends_in_exactly_one_way(seed in any::<u64>(), level in 0.001f64..0.5) {
        let mut r = rng(seed);
        let m = random_matrix(&mut r, 6, 6);
        let f = random_vector(&mut r, 6);
        let delta = level * f.norm();
        let trace = choose_a(&m, &f, delta).unwrap();
        prop_assert!(trace.evaluations <= 100);
        prop_assert_eq!(trace.evaluations, trace.steps.len());
        let last = trace.steps.last().unwrap();
        let in_band = (delta..=2.0 * delta).contains(&phi(&m, &f, trace.chosen_a).unwrap());
        match last.action {
            ParamAction::Accept => {
                prop_assert!(in_band);
                prop_assert!(!trace.fell_back());
                prop_assert_eq!(trace.chosen_a, last.a);
            }
            ParamAction::FallbackTriple => {
                prop_assert!(trace.fell_back());
                prop_assert_eq!(trace.chosen_a, 3.0 * last.a);
            }
            other => prop_assert!(false, "trace ended with {other}"),
        }
        // intermediate steps never accept or fall back
        for s in &trace.steps[..trace.steps.len() - 1] {
            prop_assert!(matches!(s.action, ParamAction::Shrink(_) | ParamAction::Triple));
        }
    }

    #[test]
    fn phi_equals_residual_of_vr_solution(seed in any::<u64>(), a in 1e-6f64..10.0) {
        let mut r = rng(seed);
        let m = random_matrix(&mut r, 5, 4);
        let f = random_vector(&mut r, 5);
        let u = vr_solve(&m, &f, a).unwrap();
        let res = m.matvec(&u).unwrap().sub(&f).norm();
        prop_assert!((phi(&m, &f, a).unwrap() - res).abs() <= 1e-12 * f.norm().max(1.0));
    }
}

#[test]
fn vr_solve_matches_direct_inverse() {
    let mut r = rng(51);
    let m = with_singular_values(&mut r, &[3.0, 2.0, 1.5, 1.0]);
    let f = random_vector(&mut r, 4);
    let u = vr_solve(&m, &f, 1e-12).unwrap();
    let direct = gauss_jordan_inverse(&m).matvec(&f).unwrap();
    assert!(u.max_abs_diff(&direct) <= 1e-6 * direct.norm());
}

#[test]
fn vr_newton_on_heat() {
    for seed in 0..5 {
        let inst = ProblemInstance::heat(20, 0.05, seed, ExactProfile::Pulse).unwrap();
        let (a, f, delta) = (&inst.a, &inst.b_noisy, inst.delta);
        let res = vr_newton(a, f, delta, 1.01).unwrap();
        assert!(res.iterations <= 12, "seed {seed}: {} iterations", res.iterations);
        let target = 1.01 * delta;
        assert!((phi(a, f, res.a).unwrap() - target).abs() <= 1e-8 * target);
        assert!((res.phi - target).abs() <= 1e-8 * target);

        let s = op_norm(a).powi(2);
        let ratio = target / f.norm();
        let hi = s.max(2.0 * s * ratio / (1.0 - ratio));
        for &ak in &res.a_history {
            assert!(ak >= 1e-16 * s * (1.0 - 1e-12) && ak <= hi * (1.0 + 1e-12));
        }
        assert_eq!(res.a_history.len(), res.iterations);
        let u = vr_solve(a, f, res.a).unwrap();
        assert!(u.max_abs_diff(&res.solution) <= 1e-10 * u.norm());
    }
}

#[test]
fn vr_newton_root_is_beyond_unit_bracket() {
    // φ(a) = a/(1+a) for A = I, f = e1; Cδ = 0.8 needs a = 4 > ‖A‖²
    let a = DenseMatrix::identity(2);
    let f = Vector::from(&[1.0, 0.0][..]);
    let res = vr_newton(&a, &f, 0.8 / 1.01, 1.01).unwrap();
    assert!((res.a - 4.0).abs() <= 1e-6);
}

#[test]
fn vr_newton_rejects_unreachable_targets() {
    let a = DenseMatrix::identity(2);
    let f = Vector::from(&[1.0, 0.0][..]);
    assert!(matches!(vr_newton(&a, &f, 1.0, 1.01), Err(Error::NoRoot { .. })));
    // out-of-range part of f exceeds the target
    let a = DenseMatrix::from_diag(&[1.0, 0.0]);
    let f = Vector::from(&[1.0, 0.5][..]);
    assert!(vr_newton(&a, &f, 0.1, 1.01).is_err());
}

#[test]
fn choose_a_on_benchmark_sizes() {
    for n in [10, 50, 100] {
        let inst = ProblemInstance::heat(n, 0.05, 7, ExactProfile::Pulse).unwrap();
        let trace = choose_a(&inst.a, &inst.b_noisy, inst.delta).unwrap();
        let v = phi(&inst.a, &inst.b_noisy, trace.chosen_a).unwrap();
        assert!(trace.fell_back() || (inst.delta..=2.0 * inst.delta).contains(&v));
    }
}

#[test]
fn choose_a_triples_then_falls_back() {
    // A = I, f = e1: φ(a) = a/(1+a) stays just below δ for a0 = δ/3 and 3a0 = δ
    let a = DenseMatrix::identity(2);
    let f = Vector::from(&[1.0, 0.0][..]);
    let delta = 0.01;
    let trace = choose_a(&a, &f, delta).unwrap();
    for s in &trace.steps {
        assert!((s.phi - s.a / (1.0 + s.a)).abs() <= 1e-14);
        assert!((s.c - s.phi / delta).abs() <= 1e-12);
    }
    let actions: Vec<ParamAction> = trace.steps.iter().map(|s| s.action).collect();
    assert_eq!(actions, [ParamAction::Triple, ParamAction::FallbackTriple]);
    assert!((trace.chosen_a - 0.03).abs() <= 1e-15);
}
