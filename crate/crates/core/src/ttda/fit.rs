use log::{debug, warn};
use nalgebra::{DMatrix, DVector};

use super::assemble::an_matrix;
use super::{DENSE_CEILING, TTDA_MAX_ITER, TTDA_TOL};
use crate::data::LabeledTensorSet;
use crate::discriminant::{scatter_from_matrices, smallest_eigenpairs, sorted_eigen, ScatterPair};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stiefel::{minimize_on_stiefel, SolverConfig, StiefelPoint};
use crate::tensor::DenseTensor;
use crate::tt::{project, sorted_svd, sweep, RankRule, TtChain, TtFactor};

#[derive(Clone, Debug)]
pub struct TtdaConfig<T> {
    /// Bond ranks `R_1, …, R_N`; `R_N` is the feature dimension.
    pub ranks: Vec<usize>,
    pub lambda: T,
    pub max_iter: usize,
    /// Stop when every factor's relative Frobenius change is below this.
    pub tol: T,
    pub solver: SolverConfig<T>,
    /// Largest scatter dimension `D` that may be materialized.
    pub dense_ceiling: usize,
}

impl<T: Scalar> TtdaConfig<T> {
    pub fn new(ranks: Vec<usize>, lambda: T) -> Self {
        Self {
            ranks,
            lambda,
            max_iter: TTDA_MAX_ITER,
            tol: T::lit(TTDA_TOL),
            solver: SolverConfig::default(),
            dense_ceiling: DENSE_CEILING,
        }
    }
}

/// Objective `tr(UᵀSU)` right after factor `factor` was updated in outer
/// iteration `iter`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateRecord {
    pub iter: usize,
    pub factor: usize,
    pub objective: f64,
    /// Stiefel iterations spent (0 for the exact last-factor solve).
    pub inner_iterations: usize,
}

/// Result of fitting one chain against a fixed scatter pair.
#[derive(Clone, Debug)]
pub struct ChainFit<T: Scalar> {
    pub chain: TtChain<T>,
    pub log: Vec<UpdateRecord>,
    pub iterations: usize,
    pub converged: bool,
    /// `−λ · Σ` of the top `R_N` eigenvalues of `S_B`.
    pub lower_bound: T,
}

pub(crate) fn validate_ranks(dims: &[usize], ranks: &[usize]) -> Result<()> {
    if ranks.len() != dims.len() {
        return Err(Error::InvalidRank(format!("{} ranks for {} modes", ranks.len(), dims.len())));
    }
    let mut prev = 1;
    for (n, (&r, &i)) in ranks.iter().zip(dims).enumerate() {
        if r == 0 || r > prev * i {
            return Err(Error::InvalidRank(format!("R_{} = {r} outside 1..={}", n + 1, prev * i)));
        }
        prev = r;
    }
    Ok(())
}

/// Initial chain from the SVD sweep of a payload (`∏dims × P`), with basis
/// completion where the payload's rank falls short of the requested ranks.
pub(crate) fn init_chain<T: Scalar>(payload: DMatrix<T>, dims: &[usize], ranks: &[usize]) -> Result<TtChain<T>> {
    validate_ranks(dims, ranks)?;
    let (chain, _) = sweep(payload, dims, &RankRule::Explicit(ranks.to_vec()), true)?;
    Ok(chain)
}

/// Rotates `u` within its column space to best match `reference`.
fn procrustes_align<T: Scalar>(u: DMatrix<T>, reference: &DMatrix<T>) -> DMatrix<T> {
    let (a, _, bt) = sorted_svd(u.transpose() * reference);
    u * (a * bt)
}

fn relative_change<T: Scalar>(old: &DMatrix<T>, new: &DMatrix<T>) -> T {
    let denom = old.norm();
    if denom > T::zero() {
        (new - old).norm() / denom
    } else {
        new.norm()
    }
}

pub(crate) fn check_ceiling(dim: usize, ceiling: usize) -> Result<()> {
    if dim > ceiling {
        return Err(Error::TooLarge { dim, ceiling });
    }
    Ok(())
}

/// Alternating factor updates of `chain` against a fixed scatter pair.
pub(crate) fn fit_chain<T: Scalar>(
    scatter: &ScatterPair<T>,
    mut chain: TtChain<T>,
    max_iter: usize,
    tol: T,
    solver: &SolverConfig<T>,
) -> Result<ChainFit<T>> {
    let order = chain.len();
    let r_last = chain.factor(order - 1).right_rank();
    let (sb_eigs, _) = sorted_eigen(&scatter.s_b);
    let top: T = sb_eigs.iter().rev().take(r_last).fold(T::zero(), |a, &b| a + b);
    let lower_bound = -scatter.lambda * top;

    if scatter.s.amax() == T::zero() {
        warn!("scatter matrix is identically zero; keeping the initial factors");
        return Ok(ChainFit { chain, log: Vec::new(), iterations: 0, converged: true, lower_bound });
    }

    let mut log = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..max_iter {
        let previous: Vec<DMatrix<T>> = chain.factors().iter().map(TtFactor::left_unfolding).collect();
        for n in 0..order - 1 {
            let a = an_matrix(&chain, &scatter.s, n)?;
            let f = chain.factor(n);
            let (r_prev, dim) = (f.left_rank(), f.dim());
            let current = f.left_unfolding();
            let x0 = StiefelPoint::new(current.clone()).or_else(|_| StiefelPoint::orthonormalize(&current))?;
            let sol = minimize_on_stiefel(&a, &x0, solver)?;
            if sol.line_search_failed {
                debug!("factor {n}: inner solve stopped on a failed line search");
            }
            let updated =
                TtFactor::from_left_unfolding(sol.point.into_matrix(), r_prev, dim)?.with_left_orthogonal(true);
            chain.set_factor(n, updated)?;
            log.push(UpdateRecord {
                iter,
                factor: n,
                objective: sol.objective.as_f64(),
                inner_iterations: sol.iterations,
            });
        }
        let n = order - 1;
        let b = an_matrix(&chain, &scatter.s, n)?;
        let (values, vectors) = smallest_eigenpairs(&b, r_last)?;
        let aligned = procrustes_align(vectors, &previous[n]);
        let r_prev = chain.factor(n).left_rank();
        let dim = chain.factor(n).dim();
        chain.set_factor(n, TtFactor::from_left_unfolding(aligned, r_prev, dim)?.with_left_orthogonal(true))?;
        let objective = values.iter().fold(T::zero(), |a, &v| a + v);
        log.push(UpdateRecord { iter, factor: n, objective: objective.as_f64(), inner_iterations: 0 });

        iterations = iter + 1;
        let change = previous
            .iter()
            .zip(chain.factors())
            .map(|(old, f)| relative_change(old, &f.left_unfolding()))
            .fold(T::zero(), |m, c| m.max(c));
        debug!("chain fit iteration {iterations}: objective {objective}, max factor change {change}");
        if change < tol {
            converged = true;
            break;
        }
    }
    Ok(ChainFit { chain, log, iterations, converged, lower_bound })
}

/// Single-chain model: left-orthogonal factors with subspace `U` and the
/// training features `x = Uᵀ V(𝒴)`.
#[derive(Clone, Debug)]
pub struct TtdaModel<T: Scalar> {
    pub chain: TtChain<T>,
    pub lambda: T,
    /// `U` (`∏I_n × R_N`).
    pub subspace: DMatrix<T>,
    pub features: Vec<DVector<T>>,
    pub labels: Vec<usize>,
    pub log: Vec<UpdateRecord>,
    pub iterations: usize,
    pub converged: bool,
    pub lower_bound: T,
}

impl<T: Scalar> TtdaModel<T> {
    pub fn transform(&self, y: &DenseTensor<T>) -> Result<DVector<T>> {
        project(&self.subspace, y)
    }

    /// Final objective `tr(UᵀSU)`.
    pub fn objective(&self) -> Option<f64> {
        self.log.last().map(|r| r.objective)
    }

    /// Factor elements plus one `R_N` feature vector per training sample.
    pub fn storage_elements(&self) -> usize {
        self.chain.element_count() + self.features.len() * self.subspace.ncols()
    }
}

/// TTDA: builds `S = S_W − λ S_B` once, initializes from the TT-SVD of the
/// mean training tensor, and alternates factor updates until the factors
/// settle or `max_iter` outer iterations pass.
pub fn ttda_fit<T: Scalar>(data: &LabeledTensorSet<T>, cfg: &TtdaConfig<T>) -> Result<TtdaModel<T>> {
    let dims = data.shape().to_vec();
    let d = data.sample_len();
    check_ceiling(d, cfg.dense_ceiling)?;
    validate_ranks(&dims, &cfg.ranks)?;
    if data.num_classes() < 2 {
        return Err(Error::InsufficientSamples("TTDA needs at least 2 classes".into()));
    }
    let mats: Vec<DMatrix<T>> = data.samples().iter().map(|s| s.unfold(s.order())).collect();
    let (s_w, s_b) = scatter_from_matrices(&mats, data.labels(), data.num_classes());
    let scatter = ScatterPair::new(s_w, s_b, cfg.lambda)?;
    let init = init_chain(data.mean().unfold(dims.len()), &dims, &cfg.ranks)?;
    let fit = fit_chain(&scatter, init, cfg.max_iter, cfg.tol, &cfg.solver)?;
    let subspace = fit.chain.subspace()?;
    let features = data.samples().iter().map(|y| project(&subspace, y)).collect::<Result<Vec<_>>>()?;
    Ok(TtdaModel {
        chain: fit.chain,
        lambda: cfg.lambda,
        subspace,
        features,
        labels: data.labels().to_vec(),
        log: fit.log,
        iterations: fit.iterations,
        converged: fit.converged,
        lower_bound: fit.lower_bound,
    })
}
