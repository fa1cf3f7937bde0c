//! Tensor-train factors and chains, TT-SVD, and subspace projection.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

/// One three-mode factor `𝒰_n` of shape `(R_{n-1}, I_n, R_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TtFactor<T> {
    core: DenseTensor<T>,
    left_orthogonal: bool,
}

impl<T: Scalar> TtFactor<T> {
    pub fn new(core: DenseTensor<T>) -> Result<Self> {
        if core.order() != 3 {
            return Err(Error::ShapeMismatch(format!("a TT factor needs 3 modes, got shape {:?}", core.shape())));
        }
        Ok(Self { core, left_orthogonal: false })
    }

    /// Builds a factor from its left unfolding `L(𝒰_n)` of shape
    /// `(R_{n-1}·I_n) × R_n`.
    pub fn from_left_unfolding(left: DMatrix<T>, left_rank: usize, dim: usize) -> Result<Self> {
        let right_rank = left.ncols();
        let core = DenseTensor::from_matrix_with_shape(left, &[left_rank, dim, right_rank])?;
        Self::new(core)
    }

    /// Marks the factor as left-orthogonal. The flag is informational;
    /// [`orthogonality_error`](Self::orthogonality_error) measures it.
    pub fn with_left_orthogonal(mut self, flag: bool) -> Self {
        self.left_orthogonal = flag;
        self
    }

    pub fn is_left_orthogonal(&self) -> bool {
        self.left_orthogonal
    }

    pub fn core(&self) -> &DenseTensor<T> {
        &self.core
    }

    pub fn left_rank(&self) -> usize {
        self.core.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.core.shape()[1]
    }

    pub fn right_rank(&self) -> usize {
        self.core.shape()[2]
    }

    pub fn left_unfolding(&self) -> DMatrix<T> {
        self.core.unfold(2)
    }

    /// `max |L(𝒰)ᵀL(𝒰) − I|`.
    pub fn orthogonality_error(&self) -> T {
        let l = self.core.unfold_view(2);
        let g = l.transpose() * l;
        max_abs_identity_deviation(&g)
    }
}

pub(crate) fn max_abs_identity_deviation<T: Scalar>(g: &DMatrix<T>) -> T {
    let mut worst = T::zero();
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Ordered chain `𝒰_1 ×₃¹ 𝒰_2 ×₃¹ … ×₃¹ 𝒰_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct TtChain<T> {
    factors: Vec<TtFactor<T>>,
}

impl<T: Scalar> TtChain<T> {
    pub fn new(factors: Vec<TtFactor<T>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::ShapeMismatch("a TT chain needs at least one factor".into()));
        }
        for (n, w) in factors.windows(2).enumerate() {
            if w[0].right_rank() != w[1].left_rank() {
                return Err(Error::InvalidRank(format!(
                    "factor {n} has trailing rank {} but factor {} has leading rank {}",
                    w[0].right_rank(),
                    n + 1,
                    w[1].left_rank()
                )));
            }
        }
        Ok(Self { factors })
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[TtFactor<T>] {
        &self.factors
    }

    pub fn factor(&self, n: usize) -> &TtFactor<T> {
        &self.factors[n]
    }

    /// Replaces factor `n`; the replacement must keep the factor's shape.
    pub fn set_factor(&mut self, n: usize, factor: TtFactor<T>) -> Result<()> {
        if factor.core.shape() != self.factors[n].core.shape() {
            return Err(Error::ShapeMismatch(format!(
                "factor {n} has shape {:?}, replacement has {:?}",
                self.factors[n].core.shape(),
                factor.core.shape()
            )));
        }
        self.factors[n] = factor;
        Ok(())
    }

    /// Mode sizes `I_1, …, I_N`.
    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(TtFactor::dim).collect()
    }

    /// Bond ranks `R_0, R_1, …, R_N`.
    pub fn ranks(&self) -> Vec<usize> {
        std::iter::once(self.factors[0].left_rank()).chain(self.factors.iter().map(TtFactor::right_rank)).collect()
    }

    pub fn element_count(&self) -> usize {
        self.factors.iter().map(|f| f.core.len()).sum()
    }

    pub fn max_orthogonality_error(&self) -> T {
        self.factors.iter().fold(T::zero(), |m, f| m.max(f.orthogonality_error()))
    }

    /// Merges factors `start..end` (half-open) with `×₃¹`; the result has
    /// shape `(R_start, I_start, …, I_{end-1}, R_end)`.
    pub fn contract(&self, start: usize, end: usize) -> Result<DenseTensor<T>> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidParameter(format!(
                "contraction range {start}..{end} invalid for a chain of {} factors",
                self.len()
            )));
        }
        let first = &self.factors[start];
        let mut shape = vec![first.left_rank(), first.dim()];
        let mut acc = first.left_unfolding();
        for f in &self.factors[start + 1..end] {
            let rows = acc.nrows();
            let next = acc * f.core.unfold_view(1);
            // (rows × I·R) reinterpreted as (rows·I × R)
            acc = next.reshape_generic(nalgebra::Dyn(rows * f.dim()), nalgebra::Dyn(f.right_rank()));
            shape.push(f.dim());
        }
        shape.push(self.factors[end - 1].right_rank());
        DenseTensor::from_matrix_with_shape(acc, &shape)
    }

    /// `U = L(𝒰_1 ×₃¹ … ×₃¹ 𝒰_N)`, of shape `(∏ I_n) × R_N`.
    pub fn subspace(&self) -> Result<DMatrix<T>> {
        if self.factors[0].left_rank() != 1 {
            return Err(Error::InvalidRank(format!(
                "a subspace chain needs R_0 = 1, got {}",
                self.factors[0].left_rank()
            )));
        }
        let full = self.contract(0, self.len())?;
        Ok(full.left_unfold())
    }

    pub fn cast<U: Scalar>(&self) -> TtChain<U> {
        TtChain {
            factors: self
                .factors
                .iter()
                .map(|f| TtFactor { core: f.core.cast(), left_orthogonal: f.left_orthogonal })
                .collect(),
        }
    }
}

/// `x = Uᵀ V(y)`.
pub fn project<T: Scalar>(u: &DMatrix<T>, y: &DenseTensor<T>) -> Result<DVector<T>> {
    if u.nrows() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "subspace has {} rows but the tensor has {} entries",
            u.nrows(),
            y.len()
        )));
    }
    Ok(u.tr_mul(&y.vectorize()))
}

/// `Y = V⁻¹(U x)` with the given shape.
pub fn reconstruct<T: Scalar>(u: &DMatrix<T>, x: &DVector<T>, shape: &[usize]) -> Result<DenseTensor<T>> {
    if u.ncols() != x.len() {
        return Err(Error::ShapeMismatch(format!(
            "subspace has {} columns but the coefficient vector has length {}",
            u.ncols(),
            x.len()
        )));
    }
    DenseTensor::from_vector(&(u * x), shape)
}

/// Rank selection for [`tt_svd`].
#[derive(Clone, Debug, PartialEq)]
pub enum Truncation<T> {
    /// Bond ranks `R_1, …, R_N` (`R_N` is at most 1 for a plain tensor).
    Ranks(Vec<usize>),
    /// Keep singular values `≥ τ·σ_max` at every step, `τ ∈ (0, 1]`.
    Threshold(T),
}

/// Result of [`tt_svd`]: `V(t) ≈ U · weights` with `U` the chain's subspace.
#[derive(Clone, Debug)]
pub struct TtSvd<T> {
    pub chain: TtChain<T>,
    pub weights: DVector<T>,
    /// Mode sizes of the decomposed tensor.
    pub shape: Vec<usize>,
}

impl<T: Scalar> TtSvd<T> {
    pub fn reconstruct(&self) -> Result<DenseTensor<T>> {
        reconstruct(&self.chain.subspace()?, &self.weights, &self.shape)
    }
}

/// Left-to-right sequential SVD sweep producing left-orthogonal factors.
///
/// Every factor is left-orthogonal; the norm of the tensor ends up in
/// `weights`. At least one singular value is kept per step, so an all-zero
/// tensor gives rank-1 factors with zero weights.
pub fn tt_svd<T: Scalar>(t: &DenseTensor<T>, truncation: &Truncation<T>) -> Result<TtSvd<T>> {
    let order = t.order();
    if order == 0 {
        return Err(Error::ShapeMismatch("TT-SVD needs at least one mode".into()));
    }
    let dims = t.shape().to_vec();
    let rule = match truncation {
        Truncation::Threshold(tau) => {
            if !(*tau > T::zero() && *tau <= T::one()) {
                return Err(Error::InvalidParameter(format!("truncation threshold {tau} outside (0, 1]")));
            }
            RankRule::Threshold(*tau)
        }
        Truncation::Ranks(ranks) => {
            if ranks.len() != order {
                return Err(Error::InvalidRank(format!("expected {order} ranks (R_1..R_N), got {}", ranks.len())));
            }
            let mut prev = 1;
            for (n, &r) in ranks.iter().enumerate() {
                let tail: usize = dims[n + 1..].iter().product();
                let bound = (prev * dims[n]).min(tail);
                if r == 0 || r > bound {
                    return Err(Error::InvalidRank(format!("R_{} = {r} outside feasible range 1..={bound}", n + 1)));
                }
                prev = r;
            }
            RankRule::Explicit(ranks.clone())
        }
    };
    let payload = t.unfold(order);
    let (chain, rest) = sweep(payload, &dims, &rule, false)?;
    let weights = DVector::from_column_slice(rest.as_slice());
    Ok(TtSvd { chain, weights, shape: dims })
}

#[derive(Clone, Debug)]
pub(crate) enum RankRule<T> {
    Explicit(Vec<usize>),
    Threshold(T),
}

/// Sweeps over `dims` of a payload matrix with `∏dims` rows (first-mode
/// fastest) and any number of trailing columns. Returns the chain and the
/// `R_n × P` remainder.
///
/// With `complete` set, explicit ranks larger than the SVD provides are
/// honored by extending the left basis with orthonormal columns whose
/// remainder rows are zero; the reconstruction is unchanged.
pub(crate) fn sweep<T: Scalar>(
    payload: DMatrix<T>,
    dims: &[usize],
    rule: &RankRule<T>,
    complete: bool,
) -> Result<(TtChain<T>, DMatrix<T>)> {
    let total: usize = dims.iter().product();
    if payload.nrows() != total {
        return Err(Error::ShapeMismatch(format!(
            "payload has {} rows, dims {:?} need {total}",
            payload.nrows(),
            dims
        )));
    }
    let p = payload.ncols();
    let mut factors = Vec::with_capacity(dims.len());
    let mut r_prev = 1;
    let mut rest = payload;
    for (n, &dim) in dims.iter().enumerate() {
        let rows = r_prev * dim;
        let cols = rest.len() / rows;
        let mat = rest.reshape_generic(nalgebra::Dyn(rows), nalgebra::Dyn(cols));
        let (u, sigma, vt) = sorted_svd(mat);
        let available = sigma.len();
        let smax = if available > 0 { sigma[0] } else { T::zero() };
        let keep = match rule {
            RankRule::Threshold(tau) => {
                if smax <= T::zero() {
                    1
                } else {
                    sigma.iter().filter(|&&s| s >= *tau * smax).count().max(1)
                }
            }
            RankRule::Explicit(ranks) => {
                let requested = ranks[n];
                if complete {
                    if requested > rows {
                        return Err(Error::InvalidRank(format!(
                            "R_{} = {requested} exceeds R_{}·I_{} = {rows}",
                            n + 1,
                            n,
                            n + 1
                        )));
                    }
                    requested
                } else {
                    let tol = smax * T::lit(rows.max(cols) as f64) * T::eps();
                    let numerical = sigma.iter().filter(|&&s| s > tol).count().max(1);
                    if numerical < requested {
                        warn!(
                            "TT-SVD step {}: requested rank {requested} reduced to numerical rank {numerical}",
                            n + 1
                        );
                    }
                    requested.min(numerical)
                }
            }
        };
        let basis_cols = keep.min(available);
        let mut left = u.columns(0, basis_cols).into_owned();
        let mut remainder = DMatrix::zeros(keep, cols);
        for k in 0..basis_cols {
            let s = sigma[k];
            for j in 0..cols {
                remainder[(k, j)] = s * vt[(k, j)];
            }
        }
        if keep > basis_cols {
            left = complete_basis(left, keep);
        }
        factors.push(TtFactor::from_left_unfolding(left, r_prev, dim)?.with_left_orthogonal(true));
        rest = remainder;
        r_prev = keep;
    }
    let rest = rest.reshape_generic(nalgebra::Dyn(r_prev), nalgebra::Dyn(p));
    Ok((TtChain::new(factors)?, rest))
}

/// Thin SVD with singular values sorted in decreasing order.
pub(crate) fn sorted_svd<T: Scalar>(m: DMatrix<T>) -> (DMatrix<T>, Vec<T>, DMatrix<T>) {
    let (u, sv, vt) = checked_svd(m);
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap_or(std::cmp::Ordering::Equal));
    let sigma = order.iter().map(|&k| sv[k]).collect();
    let u_sorted = DMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    let vt_sorted = DMatrix::from_fn(order.len(), vt.ncols(), |i, j| vt[(order[i], j)]);
    (u_sorted, sigma, vt_sorted)
}

/// Unsorted thin SVD whose factors are verified to reproduce `m`.
///
/// nalgebra's implicit-shift iteration occasionally stops on a wrong
/// factorization for rank-deficient input when run with its default
/// convergence threshold; the result is checked and recomputed with other
/// thresholds or on the transpose when the residual is too large.
/// SVD from the eigendecomposition of `MᵀM`: `V` are its eigenvectors,
/// `U = M V Σ⁻¹` re-orthonormalized by QR.
fn gram_svd<T: Scalar>(m: &DMatrix<T>) -> Option<nalgebra::SVD<T, nalgebra::Dyn, nalgebra::Dyn>> {
    if m.nrows() < m.ncols() {
        let t = gram_svd(&m.transpose())?;
        let (u, vt) = (t.v_t.map(|v| v.transpose()), t.u.map(|u| u.transpose()));
        return Some(nalgebra::SVD { u, v_t: vt, singular_values: t.singular_values });
    }
    let (values, vectors) = crate::discriminant::sorted_eigen(&(m.transpose() * m));
    let k = values.len();
    let v = DMatrix::from_fn(k, k, |i, j| vectors[(i, k - 1 - j)]);
    let sv = DVector::from_fn(k, |j, _| values[k - 1 - j].max(T::zero()).sqrt());
    let mut u = m * &v;
    for (j, mut c) in u.column_iter_mut().enumerate() {
        if sv[j] > T::zero() {
            c /= sv[j];
        }
    }
    let qr = u.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut c) in q.column_iter_mut().enumerate() {
        if r[(j, j)] < T::zero() {
            c.neg_mut();
        }
    }
    Some(nalgebra::SVD { u: Some(q), v_t: Some(v.transpose()), singular_values: sv })
}

fn checked_svd<T: Scalar>(m: DMatrix<T>) -> (DMatrix<T>, DVector<T>, DMatrix<T>) {
    let (rows, cols) = m.shape();
    let tol = m.amax() * T::lit(((rows + cols) * 64) as f64) * T::eps();
    let residual = |u: &DMatrix<T>, s: &DVector<T>, vt: &DMatrix<T>| {
        let mut us = u.clone();
        for (j, mut c) in us.column_iter_mut().enumerate() {
            c *= s[j];
        }
        (us * vt - &m).amax()
    };
    let mut best: Option<(T, (DMatrix<T>, DVector<T>, DMatrix<T>))> = None;
    for attempt in 0..5 {
        let parts = match attempt {
            0 => m.clone().try_svd(true, true, T::eps(), 0),
            1 => m.clone().try_svd(true, true, T::eps() * T::lit(1e-4), 0),
            2 => m.clone().try_svd(true, true, T::eps() * T::lit(1e4), 0),
            3 => m.transpose().try_svd(true, true, T::eps(), 0).map(|t| {
                let (u, vt) = (t.v_t.map(|v| v.transpose()), t.u.map(|u| u.transpose()));
                nalgebra::SVD { u, v_t: vt, singular_values: t.singular_values }
            }),
            _ => gram_svd(&m),
        };
        let Some(svd) = parts else { continue };
        let (Some(u), Some(vt)) = (svd.u, svd.v_t) else { continue };
        let s = svd.singular_values;
        let r = residual(&u, &s, &vt);
        if r <= tol {
            return (u, s, vt);
        }
        if best.as_ref().is_none_or(|(b, _)| r < *b) {
            best = Some((r, (u, s, vt)));
        }
    }
    let (r, parts) = best.expect("at least one SVD attempt produces factors");
    if r > tol * T::lit(1e4) {
        warn!("SVD residual {r} above tolerance {tol}; using the best attempt");
    } else {
        debug!("SVD residual {r} above tolerance {tol}; using the best attempt");
    }
    parts
}

/// Extends orthonormal columns to `target` columns using canonical vectors
/// and two passes of Gram–Schmidt.
pub(crate) fn complete_basis<T: Scalar>(basis: DMatrix<T>, target: usize) -> DMatrix<T> {
    let rows = basis.nrows();
    assert!(target <= rows, "cannot hold {target} orthonormal columns in {rows} rows");
    let mut cols: Vec<DVector<T>> = basis.column_iter().map(|c| c.into_owned()).collect();
    let mut e = 0;
    while cols.len() < target && e < rows {
        let mut v = DVector::zeros(rows);
        v[e] = T::one();
        e += 1;
        for _ in 0..2 {
            for c in &cols {
                let d = c.dot(&v);
                v.axpy(-d, c, T::one());
            }
        }
        let norm = v.norm();
        if norm > T::lit(0.5) {
            cols.push(v / norm);
        }
    }
    DMatrix::from_columns(&cols)
}
