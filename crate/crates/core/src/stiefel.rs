//! Minimization of `vec(X)ᵀ A vec(X)` over matrices with orthonormal columns.
//!
//! Feasible curvilinear search: Cayley retractions along the canonical
//! tangent direction, Barzilai–Borwein step proposals, and a nonmonotone
//! Armijo backtracking test.

use std::collections::VecDeque;
use std::io::Write;

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tt::max_abs_identity_deviation;

/// Feasibility tolerance on `‖XᵀX − I‖_max`.
pub fn feasibility_tol<T: Scalar>() -> T {
    T::lit(1e-10).max(T::eps() * T::lit(1e3))
}

/// Matrix with orthonormal columns (`p × q`, `p ≥ q`).
#[derive(Clone, Debug, PartialEq)]
pub struct StiefelPoint<T: Scalar> {
    x: DMatrix<T>,
}

impl<T: Scalar> StiefelPoint<T> {
    pub fn new(x: DMatrix<T>) -> Result<Self> {
        if x.nrows() < x.ncols() || x.ncols() == 0 {
            return Err(Error::ShapeMismatch(format!("Stiefel point must be p×q with p ≥ q ≥ 1, got {:?}", x.shape())));
        }
        let dev = max_abs_identity_deviation(&(x.transpose() * &x));
        if !(dev <= feasibility_tol::<T>()) {
            return Err(Error::Infeasible(dev.as_f64()));
        }
        Ok(Self { x })
    }

    /// Orthonormalizes the columns of `m` (thin QR).
    pub fn orthonormalize(m: &DMatrix<T>) -> Result<Self> {
        if m.nrows() < m.ncols() || m.ncols() == 0 {
            return Err(Error::ShapeMismatch(format!("cannot orthonormalize a {:?} matrix", m.shape())));
        }
        Self::new(m.clone().qr().q())
    }

    /// Random point from the orthonormalized Gaussian ensemble.
    pub fn random(p: usize, q: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(p, q, |_, _| {
            let g: f64 = StandardNormal.sample(&mut rng);
            T::lit(g)
        });
        Self::orthonormalize(&m)
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.x
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.x
    }

    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn cols(&self) -> usize {
        self.x.ncols()
    }

    pub fn feasibility_error(&self) -> T {
        max_abs_identity_deviation(&(self.x.transpose() * &self.x))
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig<T> {
    pub max_iter: usize,
    /// Stop when the tangent gradient norm falls to this value.
    pub grad_tol: T,
    pub step_init: T,
    /// Sufficient-decrease constant of the Armijo test.
    pub c1: T,
    /// Step shrink factor per backtrack, in `(0, 1)`.
    pub backtrack: T,
    /// Number of recent objective values the Armijo test compares against.
    pub window: usize,
    pub max_backtracks: usize,
    /// Seed for random starting points.
    pub seed: u64,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: T::lit(1e-6),
            step_init: T::lit(1e-3),
            c1: T::lit(1e-4),
            backtrack: T::lit(0.5),
            window: 5,
            max_backtracks: 30,
            seed: 0,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !(pos(self.grad_tol) && pos(self.step_init) && pos(self.c1)) {
            return Err(Error::InvalidParameter("solver tolerances must be positive".into()));
        }
        if !(self.backtrack > T::zero() && self.backtrack < T::one()) {
            return Err(Error::InvalidParameter(format!("backtrack factor {} outside (0, 1)", self.backtrack)));
        }
        if self.window == 0 || self.max_iter == 0 {
            return Err(Error::InvalidParameter("window and max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// One row of the solver trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step: f64,
}

/// Writes `iter,objective,grad_norm,step` rows with a header line.
pub fn write_trace_csv<W: Write>(w: &mut W, trace: &[IterRecord]) -> Result<()> {
    writeln!(w, "iter,objective,grad_norm,step")?;
    for r in trace {
        writeln!(w, "{},{:e},{:e},{:e}", r.iter, r.objective, r.grad_norm, r.step)?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct StiefelSolution<T: Scalar> {
    /// Best point seen (lowest objective).
    pub point: StiefelPoint<T>,
    pub objective: T,
    pub initial_objective: T,
    /// Initial point (iter 0) and every accepted step.
    pub trace: Vec<IterRecord>,
    /// Loop index at termination.
    pub iterations: usize,
    pub converged: bool,
    pub line_search_failed: bool,
    /// Largest `‖XᵀX − I‖_max` over the start and every accepted iterate.
    pub max_feasibility_error: f64,
}

fn check_dims<T: Scalar>(a: &DMatrix<T>, x: &DMatrix<T>) -> Result<()> {
    if !a.is_square() || a.nrows() != x.len() {
        return Err(Error::ShapeMismatch(format!(
            "quadratic form is {:?}, variable has {} entries",
            a.shape(),
            x.len()
        )));
    }
    Ok(())
}

fn eval<T: Scalar>(a: &DMatrix<T>, x: &DMatrix<T>) -> (T, DMatrix<T>) {
    let v = DVector::from_column_slice(x.as_slice());
    let av = a * &v;
    let value = v.dot(&av);
    let grad = DMatrix::from_column_slice(x.nrows(), x.ncols(), av.as_slice()) * T::lit(2.0);
    (value, grad)
}

/// Value `vec(X)ᵀ A vec(X)` and Euclidean gradient `2 A vec(X)` reshaped to
/// `p × q`. `A` is symmetrized first.
pub fn quad_objective_grad<T: Scalar>(a: &DMatrix<T>, x: &StiefelPoint<T>) -> Result<(T, DMatrix<T>)> {
    check_dims(a, &x.x)?;
    let sym = (a + a.transpose()) * T::lit(0.5);
    Ok(eval(&sym, &x.x))
}

/// Cayley step `X(τ) = (I + τ/2 W)⁻¹ (I − τ/2 W) X` with `W = G Xᵀ − X Gᵀ`.
///
/// Uses the rank-`2q` Woodbury form when `p > 2q`.
pub fn cayley_retract<T: Scalar>(x: &StiefelPoint<T>, grad: &DMatrix<T>, tau: T) -> Result<StiefelPoint<T>> {
    let xm = &x.x;
    if grad.shape() != xm.shape() {
        return Err(Error::ShapeMismatch(format!("gradient {:?} for point {:?}", grad.shape(), xm.shape())));
    }
    let (p, q) = xm.shape();
    let half = tau * T::lit(0.5);
    let y = if p > 2 * q {
        // W = U Vᵀ with U = [G, X], V = [X, −G]
        let mut u = DMatrix::zeros(p, 2 * q);
        u.columns_mut(0, q).copy_from(grad);
        u.columns_mut(q, q).copy_from(xm);
        let mut v = DMatrix::zeros(p, 2 * q);
        v.columns_mut(0, q).copy_from(xm);
        v.columns_mut(q, q).copy_from(&(-grad));
        let vt = v.transpose();
        let inner = DMatrix::identity(2 * q, 2 * q) + &vt * &u * half;
        let rhs = &vt * xm;
        let sol = inner.lu().solve(&rhs).ok_or(Error::Singular)?;
        xm - &u * sol * tau
    } else {
        let w = grad * xm.transpose() - xm * grad.transpose();
        let eye = DMatrix::<T>::identity(p, p);
        let lhs = &eye + &w * half;
        let rhs = (&eye - &w * half) * xm;
        lhs.lu().solve(&rhs).ok_or(Error::Singular)?
    };
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    let dev = max_abs_identity_deviation(&(y.transpose() * &y));
    if dev > feasibility_tol::<T>() * T::lit(0.01) {
        // rounding drift over many steps; pull back onto the manifold
        return StiefelPoint::orthonormalize(&y);
    }
    Ok(StiefelPoint { x: y })
}

/// `G − X GᵀX`, the gradient under the canonical metric.
fn tangent_grad<T: Scalar>(x: &DMatrix<T>, g: &DMatrix<T>) -> DMatrix<T> {
    g - x * (g.transpose() * x)
}

/// Curvilinear search from `x0`. Returns the best iterate.
pub fn minimize_on_stiefel<T: Scalar>(
    a: &DMatrix<T>,
    x0: &StiefelPoint<T>,
    cfg: &SolverConfig<T>,
) -> Result<StiefelSolution<T>> {
    cfg.validate()?;
    check_dims(a, &x0.x)?;
    let dev = x0.feasibility_error();
    if !(dev <= feasibility_tol::<T>()) {
        return Err(Error::Infeasible(dev.as_f64()));
    }
    let a = (a + a.transpose()) * T::lit(0.5);
    let tau_min = T::lit(1e-20);
    let tau_max = T::lit(1e20);

    let mut x = x0.clone();
    let (mut f, mut g) = eval(&a, &x.x);
    if !f.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut tg = tangent_grad(&x.x, &g);
    let initial_objective = f;
    let mut best = (x.clone(), f);
    let mut trace = vec![IterRecord { iter: 0, objective: f.as_f64(), grad_norm: tg.norm().as_f64(), step: 0.0 }];
    let mut history: VecDeque<T> = VecDeque::from([f]);
    let mut tau = cfg.step_init;
    let mut converged = false;
    let mut line_search_failed = false;
    let mut iterations = 0;
    let mut max_feasibility_error = dev.as_f64();

    for k in 1..=cfg.max_iter {
        iterations = k;
        let gnorm = tg.norm();
        if gnorm <= cfg.grad_tol {
            converged = true;
            break;
        }
        let gtx = g.transpose() * &x.x;
        let w_sq = (g.norm_squared() - (&gtx * &gtx).trace()) * T::lit(2.0);
        let deriv = -w_sq * T::lit(0.5);
        let reference = history.iter().fold(f, |m, &v| m.max(v));

        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            match cayley_retract(&x, &g, tau) {
                Ok(y) => {
                    let (fy, gy) = eval(&a, &y.x);
                    if !fy.is_finite() {
                        return Err(Error::NonFinite);
                    }
                    if fy <= reference + cfg.c1 * tau * deriv {
                        accepted = Some((y, fy, gy));
                        break;
                    }
                }
                Err(Error::Singular) => {}
                Err(e) => return Err(e),
            }
            tau *= cfg.backtrack;
        }
        let Some((y, fy, gy)) = accepted else {
            warn!(
                "Stiefel line search made no progress after {} halvings at iteration {k}; stopping",
                cfg.max_backtracks
            );
            line_search_failed = true;
            break;
        };

        let tgy = tangent_grad(&y.x, &gy);
        let s = &y.x - &x.x;
        let dy = &tgy - &tg;
        let sy = s.dot(&dy).abs();
        let step = tau;
        tau = if k % 2 == 1 { s.norm_squared() / sy } else { sy / dy.norm_squared() };
        if !tau.is_finite() {
            tau = cfg.step_init;
        }
        tau = tau.max(tau_min).min(tau_max);

        max_feasibility_error = max_feasibility_error.max(y.feasibility_error().as_f64());
        x = y;
        f = fy;
        g = gy;
        tg = tgy;
        if f < best.1 {
            best = (x.clone(), f);
        }
        history.push_back(f);
        if history.len() > cfg.window {
            history.pop_front();
        }
        trace.push(IterRecord { iter: k, objective: f.as_f64(), grad_norm: tg.norm().as_f64(), step: step.as_f64() });
    }
    debug!(
        "Stiefel solve: {iterations} iterations, objective {} -> {}, converged {converged}",
        initial_objective, best.1
    );
    Ok(StiefelSolution {
        point: best.0,
        objective: best.1,
        initial_objective,
        trace,
        iterations,
        converged,
        line_search_failed,
        max_feasibility_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_zero_forms() {
        let x = StiefelPoint::<f64>::random(5, 2, 3).unwrap();
        let (v, g) = quad_objective_grad(&DMatrix::identity(10, 10), &x).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        assert!((g - x.matrix() * 2.0).amax() < 1e-12);
        let (v, g) = quad_objective_grad(&DMatrix::zeros(10, 10), &x).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(g.amax(), 0.0);
        assert!(quad_objective_grad(&DMatrix::zeros(9, 9), &x).is_err());
    }

    #[test]
    fn retraction_trivial_cases() {
        let x = StiefelPoint::<f64>::random(6, 2, 1).unwrap();
        let zero = DMatrix::zeros(6, 2);
        assert!((cayley_retract(&x, &zero, 0.7).unwrap().matrix() - x.matrix()).amax() < 1e-15);
        let g = DMatrix::from_fn(6, 2, |i, j| (i + 2 * j) as f64);
        assert!((cayley_retract(&x, &g, 0.0).unwrap().matrix() - x.matrix()).amax() < 1e-15);
    }

    #[test]
    fn rejects_infeasible_start() {
        let x = DMatrix::from_element(3, 1, 1.0);
        assert!(matches!(StiefelPoint::<f64>::new(x), Err(Error::Infeasible(_))));
        let a = DMatrix::identity(3, 3);
        let bad = StiefelPoint { x: DMatrix::from_element(3, 1, 1.0) };
        assert!(minimize_on_stiefel(&a, &bad, &SolverConfig::default()).is_err());
    }

    #[test]
    fn isotropic_form_stops_immediately() {
        let a = DMatrix::<f64>::identity(12, 12) * 3.0;
        let x = StiefelPoint::random(4, 3, 9).unwrap();
        let sol = minimize_on_stiefel(&a, &x, &SolverConfig::default()).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.iterations, 1);
        assert!((sol.objective - 9.0).abs() < 1e-12);
    }

    #[test]
    fn trace_csv_format() {
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &[IterRecord { iter: 0, objective: 1.0, grad_norm: 0.5, step: 0.0 }]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next(), Some("iter,objective,grad_norm,step"));
        assert_eq!(s.lines().count(), 2);
    }

    #[test]
    fn config_validation() {
        let cfg = SolverConfig::<f64> { backtrack: 1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig::<f64> { grad_tol: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
