use std::ops::Range;

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fit::{check_ceiling, fit_chain, init_chain, validate_ranks, UpdateRecord};
use super::{DENSE_CEILING, LOOP_ITER, TTDA_MAX_ITER, TTDA_TOL};
use crate::data::LabeledTensorSet;
use crate::discriminant::{scatter_from_matrices, ScatterPair};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stiefel::SolverConfig;
use crate::tensor::DenseTensor;
use crate::tt::TtChain;

/// Split of modes `1..=N` into `f` contiguous branches.
///
/// `boundaries` holds `d_1 < d_2 < … < d_{f-1}`: branch 1 covers modes
/// `1..=d_1`, branch 2 covers `d_1+1..=d_2`, and the last branch ends at `N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchSpec {
    order: usize,
    boundaries: Vec<usize>,
}

impl BranchSpec {
    pub fn new(order: usize, boundaries: Vec<usize>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("branch split of a 0-mode tensor".into()));
        }
        let mut prev = 0;
        for &d in &boundaries {
            if d <= prev || d >= order {
                return Err(Error::InvalidParameter(format!(
                    "boundaries {boundaries:?} must be strictly increasing inside 1..{order}"
                )));
            }
            prev = d;
        }
        Ok(Self { order, boundaries })
    }

    /// One branch over all modes (plain TT).
    pub fn single(order: usize) -> Result<Self> {
        Self::new(order, Vec::new())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn branch_count(&self) -> usize {
        self.boundaries.len() + 1
    }

    /// Zero-based mode ranges of the branches.
    pub fn ranges(&self) -> Vec<Range<usize>> {
        let mut edges = vec![0];
        edges.extend(&self.boundaries);
        edges.push(self.order);
        edges.windows(2).map(|w| w[0]..w[1]).collect()
    }

    /// Mode sizes of each branch.
    pub fn branch_dims(&self, shape: &[usize]) -> Result<Vec<Vec<usize>>> {
        if shape.len() != self.order {
            return Err(Error::ShapeMismatch(format!(
                "branch split for {} modes applied to shape {shape:?}",
                self.order
            )));
        }
        Ok(self.ranges().into_iter().map(|r| shape[r].to_vec()).collect())
    }
}

fn log_products(shape: &[usize]) -> Vec<f64> {
    let mut acc = vec![0.0];
    for &i in shape {
        acc.push(acc.last().unwrap() + (i as f64).ln());
    }
    acc
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Branch boundaries balancing the mode-size products.
///
/// Two branches take the `d` minimizing `|∏_{i≤d} I_i − ∏_{i>d} I_i|`. Three
/// or more take the boundaries minimizing the summed log-distance of each
/// branch product to the `f`-th root of the total. Ties go to the smallest
/// boundaries.
pub fn select_branch_points(shape: &[usize], f: usize) -> Result<BranchSpec> {
    let order = shape.len();
    if f == 0 || f > order {
        return Err(Error::InvalidParameter(format!("{f} branches for {order} modes")));
    }
    if f == 1 {
        return BranchSpec::single(order);
    }
    let logs = log_products(shape);
    if f == 2 {
        let total = logs[order];
        let mut best = (f64::INFINITY, 1);
        for d in 1..order {
            let left = logs[d].exp();
            let right = (total - logs[d]).exp();
            let gap = (left - right).abs();
            if gap < best.0 * (1.0 - 1e-12) {
                best = (gap, d);
            }
        }
        return BranchSpec::new(order, vec![best.1]);
    }
    let target = logs[order] / f as f64;
    let mut combo: Vec<usize> = (1..f).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let mut edges = vec![0];
        edges.extend(&combo);
        edges.push(order);
        let cost: f64 = edges.windows(2).map(|w| (logs[w[1]] - logs[w[0]] - target).abs()).sum();
        if best.as_ref().is_none_or(|(c, _)| cost < c - 1e-12) {
            best = Some((cost, combo.clone()));
        }
        // boundaries range over 1..=order-1
        let mut shifted: Vec<usize> = combo.iter().map(|&b| b - 1).collect();
        if !next_combination(&mut shifted, order - 1) {
            break;
        }
        combo = shifted.iter().map(|&b| b + 1).collect();
    }
    BranchSpec::new(order, best.unwrap().1)
}

#[derive(Clone, Debug)]
pub struct MultiBranchConfig<T> {
    pub spec: BranchSpec,
    /// Per-branch bond ranks; the last entry of each list is the branch's
    /// core dimension.
    pub ranks: Vec<Vec<usize>>,
    pub lambda: T,
    pub max_iter: usize,
    pub tol: T,
    /// Passes over all branches.
    pub loop_iter: usize,
    pub solver: SolverConfig<T>,
    pub dense_ceiling: usize,
}

impl<T: Scalar> MultiBranchConfig<T> {
    pub fn new(spec: BranchSpec, ranks: Vec<Vec<usize>>, lambda: T) -> Self {
        Self {
            spec,
            ranks,
            lambda,
            max_iter: TTDA_MAX_ITER,
            tol: T::lit(TTDA_TOL),
            loop_iter: LOOP_ITER,
            solver: SolverConfig::default(),
            dense_ceiling: DENSE_CEILING,
        }
    }
}

/// One chain-fit record tagged with the pass and branch it belongs to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchUpdate {
    pub pass: usize,
    pub branch: usize,
    pub record: UpdateRecord,
}

/// Multi-branch model: one left-orthogonal chain per branch (`R_0 = 1`), with
/// branch subspaces `U_b` and the training cores
/// `𝒳 = 𝒴 ×_1 U_1ᵀ ⋯ ×_f U_fᵀ` (samples viewed as `f`-mode tensors).
#[derive(Clone, Debug)]
pub struct BranchModel<T: Scalar> {
    pub spec: BranchSpec,
    pub shape: Vec<usize>,
    pub chains: Vec<TtChain<T>>,
    pub lambda: T,
    pub subspaces: Vec<DMatrix<T>>,
    pub cores: Vec<DenseTensor<T>>,
    pub labels: Vec<usize>,
    pub log: Vec<BranchUpdate>,
}

fn branch_sizes(dims: &[Vec<usize>]) -> Vec<usize> {
    dims.iter().map(|d| d.iter().product()).collect()
}

fn project_others<T: Scalar>(
    y: &DenseTensor<T>,
    projectors: &[DMatrix<T>],
    skip: Option<usize>,
) -> Result<DenseTensor<T>> {
    let mut x = y.clone();
    for (b, ut) in projectors.iter().enumerate() {
        if Some(b) != skip {
            x = x.mode_product(b, ut)?;
        }
    }
    Ok(x)
}

impl<T: Scalar> BranchModel<T> {
    pub fn branch_ranks(&self) -> Vec<usize> {
        self.subspaces.iter().map(|u| u.ncols()).collect()
    }

    /// Core of a sample, shaped by the branch ranks.
    pub fn core(&self, y: &DenseTensor<T>) -> Result<DenseTensor<T>> {
        if y.shape() != self.shape.as_slice() {
            return Err(Error::ShapeMismatch(format!("sample {:?}, model {:?}", y.shape(), self.shape)));
        }
        let sizes = branch_sizes(&self.spec.branch_dims(&self.shape)?);
        let grouped = y.reshape(&sizes)?;
        let projectors: Vec<DMatrix<T>> = self.subspaces.iter().map(|u| u.transpose()).collect();
        project_others(&grouped, &projectors, None)
    }

    pub fn transform(&self, y: &DenseTensor<T>) -> Result<DVector<T>> {
        Ok(self.core(y)?.vectorize())
    }

    /// Factor elements of all branches plus one core per training sample.
    pub fn storage_elements(&self) -> usize {
        let factors: usize = self.chains.iter().map(TtChain::element_count).sum();
        let core: usize = self.branch_ranks().iter().product();
        factors + self.cores.len() * core
    }
}

/// Multi-branch TTDA. Each branch is a TT chain over its contiguous modes;
/// a pass updates the branches in order, each against the scatter of the
/// training samples projected onto all other branches. All chains start
/// from the TT-SVD of the mean training tensor.
///
/// With a single branch this is exactly [`ttda_fit`](super::ttda_fit).
pub fn multibranch_fit<T: Scalar>(data: &LabeledTensorSet<T>, cfg: &MultiBranchConfig<T>) -> Result<BranchModel<T>> {
    let shape = data.shape().to_vec();
    let dims = cfg.spec.branch_dims(&shape)?;
    let f = dims.len();
    if cfg.ranks.len() != f {
        return Err(Error::InvalidRank(format!("{} rank lists for {f} branches", cfg.ranks.len())));
    }
    for (d, r) in dims.iter().zip(&cfg.ranks) {
        validate_ranks(d, r)?;
    }
    if data.num_classes() < 2 {
        return Err(Error::InsufficientSamples("discriminant training needs at least 2 classes".into()));
    }
    if cfg.loop_iter == 0 {
        return Err(Error::InvalidParameter("loop_iter must be at least 1".into()));
    }
    let sizes = branch_sizes(&dims);
    for &d in &sizes {
        check_ceiling(d, cfg.dense_ceiling)?;
    }
    let grouped = data.reshape(&sizes)?;
    let mean = grouped.mean();
    let mut chains = Vec::with_capacity(f);
    for b in 0..f {
        chains.push(init_chain(mean.mode_unfold(b)?, &dims[b], &cfg.ranks[b])?);
    }
    let mut subspaces = chains.iter().map(TtChain::subspace).collect::<Result<Vec<_>>>()?;

    let passes = if f == 1 { 1 } else { cfg.loop_iter };
    let mut log = Vec::new();
    for pass in 0..passes {
        for b in 0..f {
            let projectors: Vec<DMatrix<T>> = subspaces.iter().map(|u| u.transpose()).collect();
            let mats = grouped
                .samples()
                .iter()
                .map(|y| project_others(y, &projectors, Some(b))?.mode_unfold(b))
                .collect::<Result<Vec<_>>>()?;
            let (s_w, s_b) = scatter_from_matrices(&mats, grouped.labels(), grouped.num_classes());
            let scatter = ScatterPair::new(s_w, s_b, cfg.lambda)?;
            let fit = fit_chain(&scatter, chains[b].clone(), cfg.max_iter, cfg.tol, &cfg.solver)?;
            debug!("pass {pass}, branch {b}: {} chain iterations", fit.iterations);
            log.extend(fit.log.into_iter().map(|record| BranchUpdate { pass, branch: b, record }));
            subspaces[b] = fit.chain.subspace()?;
            chains[b] = fit.chain;
        }
    }

    let projectors: Vec<DMatrix<T>> = subspaces.iter().map(|u| u.transpose()).collect();
    let cores = grouped.samples().iter().map(|y| project_others(y, &projectors, None)).collect::<Result<Vec<_>>>()?;
    Ok(BranchModel {
        spec: cfg.spec.clone(),
        shape,
        chains,
        lambda: cfg.lambda,
        subspaces,
        cores,
        labels: data.labels().to_vec(),
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation_and_ranges() {
        assert!(BranchSpec::new(4, vec![2, 2]).is_err());
        assert!(BranchSpec::new(4, vec![0]).is_err());
        assert!(BranchSpec::new(4, vec![4]).is_err());
        let s = BranchSpec::new(5, vec![1, 3]).unwrap();
        assert_eq!(s.branch_count(), 3);
        assert_eq!(s.ranges(), vec![0..1, 1..3, 3..5]);
        assert_eq!(s.branch_dims(&[2, 3, 4, 5, 6]).unwrap(), vec![vec![2], vec![3, 4], vec![5, 6]]);
    }

    #[test]
    fn branch_points_examples() {
        assert_eq!(select_branch_points(&[8, 8, 8, 8], 2).unwrap().boundaries(), &[2]);
        assert_eq!(select_branch_points(&[4, 4, 4, 4, 11], 2).unwrap().boundaries(), &[3]);
        assert_eq!(select_branch_points(&[30, 40, 30, 10], 3).unwrap().boundaries(), &[1, 2]);
        assert!(select_branch_points(&[3, 3], 3).is_err());
        assert_eq!(select_branch_points(&[3, 3, 3], 3).unwrap().boundaries(), &[1, 2]);
        assert!(select_branch_points(&[3, 3, 3], 1).unwrap().boundaries().is_empty());
    }

    #[test]
    fn combinations_enumerate_in_order() {
        let mut c = vec![0, 1];
        let mut all = vec![c.clone()];
        while next_combination(&mut c, 4) {
            all.push(c.clone());
        }
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
    }
}
