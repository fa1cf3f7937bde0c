mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ttda_core::discriminant::sorted_eigen;
use ttda_core::stiefel::{cayley_retract, quad_objective_grad, write_trace_csv};
use ttda_core::{minimize_on_stiefel, SolverConfig, StiefelPoint};

fn kron_identity(q: usize, b: &DMatrix<f64>) -> DMatrix<f64> {
    let p = b.nrows();
    let mut a = DMatrix::zeros(p * q, p * q);
    for k in 0..q {
        a.view_mut((k * p, k * p), (p, p)).copy_from(b);
    }
    a
}

fn value(a: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let v = DVector::from_column_slice(x.as_slice());
    v.dot(&(a * &v))
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(300);
    for _ in 0..20 {
        let q = rng.random_range(1..=4);
        let p = rng.random_range(q..=30);
        let a = random_symmetric(&mut rng, p * q);
        let x = StiefelPoint::new(random_orthonormal(&mut rng, p, q)).unwrap();
        let (v, g) = quad_objective_grad(&a, &x).unwrap();
        assert!((v - value(&a, x.matrix())).abs() <= 1e-10 * (1.0 + v.abs()));
        let h = 1e-6;
        let mut fd = DMatrix::zeros(p, q);
        for j in 0..q {
            for i in 0..p {
                let mut plus = x.matrix().clone();
                plus[(i, j)] += h;
                let mut minus = x.matrix().clone();
                minus[(i, j)] -= h;
                fd[(i, j)] = (value(&a, &plus) - value(&a, &minus)) / (2.0 * h);
            }
        }
        let rel = (&fd - &g).norm() / g.norm();
        assert!(rel <= 1e-5, "relative FD error {rel} at p={p}, q={q}");
    }
}

#[test]
fn asymmetric_input_is_symmetrized() {
    let mut rng = ChaCha8Rng::seed_from_u64(301);
    let a = random_matrix(&mut rng, 6, 6);
    let sym = (&a + a.transpose()) * 0.5;
    let x = StiefelPoint::new(random_orthonormal(&mut rng, 3, 2)).unwrap();
    let (v1, g1) = quad_objective_grad(&a, &x).unwrap();
    let (v2, g2) = quad_objective_grad(&sym, &x).unwrap();
    assert!((v1 - v2).abs() < 1e-12);
    assert!((g1 - g2).amax() < 1e-12);
}

#[test]
fn cayley_matches_direct_inverse_and_stays_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(302);
    for (p, q) in [(10, 2), (12, 5), (4, 4), (30, 4), (7, 1)] {
        let x = StiefelPoint::new(random_orthonormal(&mut rng, p, q)).unwrap();
        let g = random_matrix(&mut rng, p, q);
        let tau = 0.1;
        let y = cayley_retract(&x, &g, tau).unwrap();
        let w = &g * x.matrix().transpose() - x.matrix() * g.transpose();
        let eye = DMatrix::<f64>::identity(p, p);
        let direct = (&eye + &w * (tau / 2.0)).try_inverse().unwrap() * (&eye - &w * (tau / 2.0)) * x.matrix();
        assert!((y.matrix() - direct).amax() <= 1e-9, "p={p} q={q}");
        let gram = y.matrix().transpose() * y.matrix();
        assert!((gram - DMatrix::identity(q, q)).amax() <= 1e-10);
    }
}

#[test]
fn single_column_finds_smallest_eigenvector() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for _ in 0..10 {
        let p = rng.random_range(3..=20);
        let a = random_symmetric(&mut rng, p);
        let (vals, _) = sorted_eigen(&a);
        let x0 = StiefelPoint::random(p, 1, rng.random()).unwrap();
        let cfg = SolverConfig { max_iter: 5000, grad_tol: 1e-9, ..Default::default() };
        let sol = minimize_on_stiefel(&a, &x0, &cfg).unwrap();
        assert!((sol.objective - vals[0]).abs() <= 1e-6, "{} vs {}", sol.objective, vals[0]);
        assert!(sol.objective >= vals[0] - 1e-8);
        assert!(sol.max_feasibility_error <= 1e-10);
        assert!(sol.objective <= sol.initial_objective);
    }
}

#[test]
fn block_trace_problem_reaches_eigen_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(304);
    for _ in 0..10 {
        let q = rng.random_range(1..=4);
        let p = rng.random_range(q + 1..=15);
        let b = random_symmetric(&mut rng, p);
        let (vals, _) = sorted_eigen(&b);
        let optimum: f64 = vals[..q].iter().sum();
        let a = kron_identity(q, &b);
        let x0 = StiefelPoint::random(p, q, rng.random()).unwrap();
        let cfg = SolverConfig { max_iter: 5000, grad_tol: 1e-9, ..Default::default() };
        let sol = minimize_on_stiefel(&a, &x0, &cfg).unwrap();
        assert!(sol.objective >= optimum - 1e-8);
        assert!((sol.objective - optimum).abs() <= 1e-6, "{} vs {optimum}", sol.objective);
        assert!(sol.max_feasibility_error <= 1e-10);
        let running_min: Vec<f64> = sol
            .trace
            .iter()
            .scan(f64::INFINITY, |m, r| {
                *m = m.min(r.objective);
                Some(*m)
            })
            .collect();
        assert!(running_min.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn optimal_start_is_stationary() {
    let mut rng = ChaCha8Rng::seed_from_u64(305);
    let b = random_symmetric(&mut rng, 8);
    let (_, vecs) = sorted_eigen(&b);
    let x0 = StiefelPoint::new(vecs.columns(0, 3).into_owned()).unwrap();
    let a = kron_identity(3, &b);
    let sol = minimize_on_stiefel(&a, &x0, &SolverConfig::default()).unwrap();
    assert!(sol.iterations <= 2);
    assert!((sol.objective - sol.initial_objective).abs() <= 1e-12);
}

#[test]
fn deterministic_and_traceable() {
    let mut rng = ChaCha8Rng::seed_from_u64(306);
    let a = random_symmetric(&mut rng, 12);
    let x0 = StiefelPoint::random(6, 2, 5).unwrap();
    let cfg = SolverConfig::default();
    let s1 = minimize_on_stiefel(&a, &x0, &cfg).unwrap();
    let s2 = minimize_on_stiefel(&a, &x0, &cfg).unwrap();
    assert_eq!(s1.point, s2.point);
    assert_eq!(s1.trace, s2.trace);
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, &s1.trace).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), s1.trace.len() + 1);
}

#[test]
fn nonfinite_form_is_reported() {
    let mut a = DMatrix::<f64>::identity(4, 4);
    a[(0, 0)] = f64::NAN;
    let x0 = StiefelPoint::random(4, 1, 1).unwrap();
    assert!(minimize_on_stiefel(&a, &x0, &SolverConfig::default()).is_err());
}
