//! Scatter matrices, trace-difference LDA, and the Tucker-based baselines
//! (CMDA and DGTDA).
//!
//! All solvers minimize `tr(Uᵀ (S_W − λ S_B) U)` over orthonormal `U`, whose
//! optimum is spanned by the eigenvectors of the smallest eigenvalues.

use log::{debug, warn};
use nalgebra::{DMatrix, SymmetricEigen};

use crate::data::LabeledTensorSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

/// Default CMDA sweep limit.
pub const CMDA_MAX_ITER: usize = 20;
/// Default CMDA stopping threshold on the normalized subspace change.
pub const CMDA_TOL: f64 = 0.1;

/// Within-class and between-class scatter with `S = S_W − λ S_B`.
#[derive(Clone, Debug)]
pub struct ScatterPair<T: Scalar> {
    pub s_w: DMatrix<T>,
    pub s_b: DMatrix<T>,
    pub lambda: T,
    pub s: DMatrix<T>,
}

impl<T: Scalar> ScatterPair<T> {
    pub fn new(s_w: DMatrix<T>, s_b: DMatrix<T>, lambda: T) -> Result<Self> {
        if lambda < T::zero() || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("λ = {lambda} must be a finite nonnegative number")));
        }
        if s_w.shape() != s_b.shape() || !s_w.is_square() {
            return Err(Error::ShapeMismatch(format!("scatter matrices {:?} and {:?}", s_w.shape(), s_b.shape())));
        }
        let s = &s_w - &s_b * lambda;
        Ok(Self { s_w, s_b, lambda, s })
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    /// Same scatter pair with a different `λ`.
    pub fn with_lambda(&self, lambda: T) -> Result<Self> {
        Self::new(self.s_w.clone(), self.s_b.clone(), lambda)
    }
}

pub(crate) fn symmetrize<T: Scalar>(m: &mut DMatrix<T>) {
    let n = m.nrows();
    let half = T::lit(0.5);
    for j in 0..n {
        for i in 0..j {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Scatter of sample matrices (`D × P` each): `S_W = Σ (Y − M_c)(Y − M_c)ᵀ`,
/// `S_B = Σ_c K_c (M_c − M)(M_c − M)ᵀ`. With `P = 1` these are the vector
/// scatter matrices; with `P > 1` they are the mode-wise analogues.
pub(crate) fn scatter_from_matrices<T: Scalar>(
    mats: &[DMatrix<T>],
    labels: &[usize],
    num_classes: usize,
) -> (DMatrix<T>, DMatrix<T>) {
    let (d, p) = mats[0].shape();
    let mut sizes = vec![0usize; num_classes];
    let mut means = vec![DMatrix::<T>::zeros(d, p); num_classes];
    let mut total = DMatrix::<T>::zeros(d, p);
    for (m, &l) in mats.iter().zip(labels) {
        sizes[l] += 1;
        means[l] += m;
        total += m;
    }
    for (m, &k) in means.iter_mut().zip(&sizes) {
        *m /= T::lit(k as f64);
    }
    total /= T::lit(mats.len() as f64);

    let mut zw = DMatrix::<T>::zeros(d, mats.len() * p);
    for (i, (m, &l)) in mats.iter().zip(labels).enumerate() {
        zw.columns_mut(i * p, p).copy_from(&(m - &means[l]));
    }
    let mut zb = DMatrix::<T>::zeros(d, num_classes * p);
    for (c, (m, &k)) in means.iter().zip(&sizes).enumerate() {
        zb.columns_mut(c * p, p).copy_from(&((m - &total) * T::lit(k as f64).sqrt()));
    }
    let mut s_w = &zw * zw.transpose();
    let mut s_b = &zb * zb.transpose();
    symmetrize(&mut s_w);
    symmetrize(&mut s_b);
    (s_w, s_b)
}

fn require_two_classes<T: Scalar>(data: &LabeledTensorSet<T>) -> Result<()> {
    if data.num_classes() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "discriminant training needs at least 2 classes, got {}",
            data.num_classes()
        )));
    }
    Ok(())
}

/// Vectorized scatter matrices of a labeled set (`D × D`, `D = ∏ I_n`).
pub fn scatter_matrices<T: Scalar>(data: &LabeledTensorSet<T>, lambda: T) -> Result<ScatterPair<T>> {
    require_two_classes(data)?;
    let mats: Vec<DMatrix<T>> = data.samples().iter().map(|s| s.unfold(s.order())).collect();
    let (s_w, s_b) = scatter_from_matrices(&mats, data.labels(), data.num_classes());
    ScatterPair::new(s_w, s_b, lambda)
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues ascending.
pub fn sorted_eigen<T: Scalar>(m: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let mut sym = m.clone();
    symmetrize(&mut sym);
    let eig = checked_eigen(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Symmetric eigendecomposition verified through `‖AV − VΛ‖`, retried with
/// other convergence thresholds when the first attempt is inaccurate.
fn checked_eigen<T: Scalar>(a: DMatrix<T>) -> SymmetricEigen<T, nalgebra::Dyn> {
    let n = a.nrows();
    let tol = a.amax() * T::lit((n * 64) as f64) * T::eps();
    let residual = |e: &SymmetricEigen<T, nalgebra::Dyn>| {
        let mut vl = e.eigenvectors.clone();
        for (j, mut c) in vl.column_iter_mut().enumerate() {
            c *= e.eigenvalues[j];
        }
        (&a * &e.eigenvectors - vl).amax()
    };
    let mut best: Option<(T, SymmetricEigen<T, nalgebra::Dyn>)> = None;
    for scale in [1.0, 1e-4, 1e4] {
        let Some(e) = SymmetricEigen::try_new(a.clone(), T::eps() * T::lit(scale), 0) else { continue };
        let r = residual(&e);
        if r <= tol {
            return e;
        }
        if best.as_ref().is_none_or(|(b, _)| r < *b) {
            best = Some((r, e));
        }
    }
    let (r, e) = best.expect("symmetric eigensolver produced no result");
    if r > tol * T::lit(1e4) {
        warn!("eigendecomposition residual {r} above tolerance {tol}; using the best attempt");
    } else {
        debug!("eigendecomposition residual {r} above tolerance {tol}; using the best attempt");
    }
    e
}

/// The `r` algebraically smallest eigenpairs of a symmetric matrix.
pub fn smallest_eigenpairs<T: Scalar>(m: &DMatrix<T>, r: usize) -> Result<(Vec<T>, DMatrix<T>)> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(format!("eigenproblem on a {:?} matrix", m.shape())));
    }
    if r == 0 || r > m.nrows() {
        return Err(Error::InvalidRank(format!("r = {r} outside 1..={}", m.nrows())));
    }
    let (values, vectors) = sorted_eigen(m);
    Ok((values[..r].to_vec(), vectors.columns(0, r).into_owned()))
}

#[derive(Clone, Debug)]
pub struct LdaSolution<T: Scalar> {
    /// `D × r` with orthonormal columns.
    pub u: DMatrix<T>,
    /// The `r` smallest eigenvalues of `S`, ascending.
    pub eigenvalues: Vec<T>,
    /// `tr(Uᵀ S U)`.
    pub objective: T,
}

/// Trace-difference LDA: eigenvectors of `S` for the `r` smallest
/// eigenvalues.
pub fn lda_solve<T: Scalar>(scatter: &ScatterPair<T>, r: usize) -> Result<LdaSolution<T>> {
    let (eigenvalues, u) = smallest_eigenpairs(&scatter.s, r)?;
    let objective = eigenvalues.iter().fold(T::zero(), |a, &b| a + b);
    Ok(LdaSolution { u, eigenvalues, objective })
}

/// Vectorized LDA model: features `x = Uᵀ V(𝒴)`.
#[derive(Clone, Debug)]
pub struct LdaModel<T: Scalar> {
    pub subspace: DMatrix<T>,
    pub lambda: T,
    pub objective: T,
}

impl<T: Scalar> LdaModel<T> {
    pub fn transform(&self, y: &DenseTensor<T>) -> Result<nalgebra::DVector<T>> {
        crate::tt::project(&self.subspace, y)
    }
}

/// Trace-difference LDA on vectorized samples with `r` output dimensions.
pub fn lda_fit<T: Scalar>(data: &LabeledTensorSet<T>, r: usize, lambda: T) -> Result<LdaModel<T>> {
    let sol = lda_solve(&scatter_matrices(data, lambda)?, r)?;
    Ok(LdaModel { subspace: sol.u, lambda, objective: sol.objective })
}

/// `tr(Uᵀ S U)`.
pub fn trace_objective<T: Scalar>(s: &DMatrix<T>, u: &DMatrix<T>) -> T {
    (u.transpose() * s * u).trace()
}

/// Mode-`n` scatter pair: every sample (and mean) is projected on `U_mᵀ` for
/// all `m ≠ n`, matricized along mode `n`, and accumulated. `subspaces[n]`
/// is ignored; every other entry must be present with `I_m` rows.
pub fn mda_mode_scatter<T: Scalar>(
    data: &LabeledTensorSet<T>,
    subspaces: &[Option<DMatrix<T>>],
    n: usize,
    lambda: T,
) -> Result<ScatterPair<T>> {
    require_two_classes(data)?;
    let shape = data.shape();
    let order = shape.len();
    if n >= order {
        return Err(Error::ModeOutOfRange { mode: n, order });
    }
    if subspaces.len() != order {
        return Err(Error::ShapeMismatch(format!("{} subspaces for {order} modes", subspaces.len())));
    }
    let mut projectors = Vec::with_capacity(order);
    for (m, u) in subspaces.iter().enumerate() {
        if m == n {
            projectors.push(None);
            continue;
        }
        let u = u.as_ref().ok_or_else(|| Error::InvalidParameter(format!("missing subspace for mode {m}")))?;
        if u.nrows() != shape[m] {
            return Err(Error::ShapeMismatch(format!(
                "subspace for mode {m} has {} rows, mode size is {}",
                u.nrows(),
                shape[m]
            )));
        }
        projectors.push(Some(u.transpose()));
    }
    let mats = data
        .samples()
        .iter()
        .map(|s| {
            let mut p = s.clone();
            for (m, ut) in projectors.iter().enumerate() {
                if let Some(ut) = ut {
                    p = p.mode_product(m, ut)?;
                }
            }
            p.mode_unfold(n)
        })
        .collect::<Result<Vec<_>>>()?;
    let (s_w, s_b) = scatter_from_matrices(&mats, data.labels(), data.num_classes());
    ScatterPair::new(s_w, s_b, lambda)
}

/// Normalized distance between the column spaces of two orthonormal bases:
/// `‖P_new − P_old‖_F / ‖P_old‖_F` with `P = UUᵀ`.
pub fn subspace_distance<T: Scalar>(old: &DMatrix<T>, new: &DMatrix<T>) -> T {
    let r_old = T::lit(old.ncols() as f64);
    let r_new = T::lit(new.ncols() as f64);
    let overlap = (old.transpose() * new).norm_squared();
    let sq = (r_old + r_new - overlap * T::lit(2.0)).max(T::zero());
    (sq / r_old).sqrt()
}

/// Per-mode orthonormal subspaces `U_n` (Tucker structure).
#[derive(Clone, Debug)]
pub struct TuckerModel<T: Scalar> {
    pub subspaces: Vec<DMatrix<T>>,
}

impl<T: Scalar> TuckerModel<T> {
    /// Core `𝒳 = 𝒴 ×_1 U_1ᵀ … ×_N U_Nᵀ`.
    pub fn core(&self, y: &DenseTensor<T>) -> Result<DenseTensor<T>> {
        if y.order() != self.subspaces.len() {
            return Err(Error::ShapeMismatch(format!(
                "{}-mode sample for a {}-mode model",
                y.order(),
                self.subspaces.len()
            )));
        }
        let mut x = y.clone();
        for (m, u) in self.subspaces.iter().enumerate() {
            x = x.mode_product(m, &u.transpose())?;
        }
        Ok(x)
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.subspaces.iter().map(|u| u.ncols()).collect()
    }

    pub fn factor_elements(&self) -> usize {
        self.subspaces.iter().map(|u| u.len()).sum()
    }

    pub fn core_elements(&self) -> usize {
        self.ranks().iter().product()
    }
}

#[derive(Clone, Debug)]
pub struct CmdaConfig<T> {
    pub ranks: Vec<usize>,
    pub lambda: T,
    pub max_iter: usize,
    pub tol: T,
}

impl<T: Scalar> CmdaConfig<T> {
    pub fn new(ranks: Vec<usize>, lambda: T) -> Self {
        Self { ranks, lambda, max_iter: CMDA_MAX_ITER, tol: T::lit(CMDA_TOL) }
    }
}

#[derive(Clone, Debug)]
pub struct CmdaResult<T: Scalar> {
    pub model: TuckerModel<T>,
    /// Objective after every mode update, tagged `(sweep, mode)`.
    pub update_objectives: Vec<(usize, usize, T)>,
    /// Objective after each completed sweep (all modes compressed).
    pub sweep_objectives: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

fn check_mode_ranks(shape: &[usize], ranks: &[usize]) -> Result<()> {
    if ranks.len() != shape.len() {
        return Err(Error::InvalidRank(format!("{} ranks for {} modes", ranks.len(), shape.len())));
    }
    for (n, (&r, &i)) in ranks.iter().zip(shape).enumerate() {
        if r == 0 || r > i {
            return Err(Error::InvalidRank(format!("mode {n}: rank {r} outside 1..={i}")));
        }
    }
    Ok(())
}

/// Constrained MDA: alternating exact mode updates with the other modes
/// fixed. Starts from full identity subspaces, so the first sweep sees
/// uncompressed neighbors.
pub fn cmda<T: Scalar>(data: &LabeledTensorSet<T>, cfg: &CmdaConfig<T>) -> Result<CmdaResult<T>> {
    let shape = data.shape().to_vec();
    check_mode_ranks(&shape, &cfg.ranks)?;
    if cfg.max_iter == 0 {
        return Err(Error::InvalidParameter("CMDA needs max_iter ≥ 1".into()));
    }
    let mut subspaces: Vec<DMatrix<T>> = shape.iter().map(|&i| DMatrix::identity(i, i)).collect();
    let mut update_objectives = Vec::new();
    let mut sweep_objectives = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for sweep in 0..cfg.max_iter {
        let previous = subspaces.clone();
        let mut last = T::zero();
        for n in 0..shape.len() {
            let others: Vec<Option<DMatrix<T>>> =
                subspaces.iter().enumerate().map(|(m, u)| (m != n).then(|| u.clone())).collect();
            let scatter = mda_mode_scatter(data, &others, n, cfg.lambda)?;
            let sol = lda_solve(&scatter, cfg.ranks[n])?;
            subspaces[n] = sol.u;
            last = sol.objective;
            update_objectives.push((sweep, n, sol.objective));
        }
        sweep_objectives.push(last);
        iterations = sweep + 1;
        let change =
            previous.iter().zip(&subspaces).map(|(a, b)| subspace_distance(a, b)).fold(T::zero(), |m, d| m.max(d));
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(CmdaResult { model: TuckerModel { subspaces }, update_objectives, sweep_objectives, iterations, converged })
}

#[derive(Clone, Debug)]
pub struct DgtdaResult<T: Scalar> {
    pub model: TuckerModel<T>,
    /// Per-mode `λ_n` in trace-difference form (`1/ζ_n`, see [`dgtda`]).
    pub lambdas: Vec<T>,
}

/// Largest eigenvalue of the pseudo-ratio `S_W⁺ S_B`, computed through the
/// symmetric form `(S_W⁺)^{1/2} S_B (S_W⁺)^{1/2}`.
pub fn pseudo_ratio_max<T: Scalar>(s_w: &DMatrix<T>, s_b: &DMatrix<T>) -> T {
    let (vals, vecs) = sorted_eigen(s_w);
    let top = vals.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let tol = top * T::lit(s_w.nrows() as f64) * T::eps();
    let inv_sqrt: Vec<T> = vals.iter().map(|&v| if v > tol { T::one() / v.sqrt() } else { T::zero() }).collect();
    let scaled = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, j)] * inv_sqrt[j]);
    let half = &scaled * vecs.transpose();
    let m = &half * s_b * &half;
    let (ratio, _) = sorted_eigen(&m);
    ratio.last().copied().unwrap_or_else(T::zero).max(T::zero())
}

/// Direct generalized tensor discriminant analysis: one non-iterative pass
/// per mode on the raw mode-`n` scatters.
///
/// Each mode takes `ζ_n = λ_max(S_W⁺ S_B)` and keeps the top eigenvectors of
/// `S_B − ζ_n S_W`, which are the bottom eigenvectors of `S_W − λ_n S_B` with
/// `λ_n = 1/ζ_n` (`λ_n = 0` when `ζ_n = 0`).
pub fn dgtda<T: Scalar>(data: &LabeledTensorSet<T>, ranks: &[usize]) -> Result<DgtdaResult<T>> {
    let shape = data.shape().to_vec();
    check_mode_ranks(&shape, ranks)?;
    let identities: Vec<Option<DMatrix<T>>> = shape.iter().map(|&i| Some(DMatrix::identity(i, i))).collect();
    let mut subspaces = Vec::with_capacity(shape.len());
    let mut lambdas = Vec::with_capacity(shape.len());
    for (n, &r) in ranks.iter().enumerate() {
        let raw = mda_mode_scatter(data, &identities, n, T::zero())?;
        let zeta = pseudo_ratio_max(&raw.s_w, &raw.s_b);
        let lambda = if zeta > T::zero() {
            T::one() / zeta
        } else {
            warn!("DGTDA mode {n}: between-class scatter vanishes on the range of S_W; using λ = 0");
            T::zero()
        };
        let sol = lda_solve(&raw.with_lambda(lambda)?, r)?;
        subspaces.push(sol.u);
        lambdas.push(lambda);
    }
    Ok(DgtdaResult { model: TuckerModel { subspaces }, lambdas })
}
