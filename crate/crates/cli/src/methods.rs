//! Rank resolution and training dispatch for every method.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use ttda_core::discriminant::sorted_eigen;
use ttda_core::ttda::normalized_storage;
use ttda_core::{
    cmda, dgtda, lda_fit, multibranch_fit, select_branch_points, tt_svd, ttda_fit, BranchSpec, Branches, CmdaConfig,
    Dataset, FeatureExtractor, Lda, MultiBranchConfig, Tensor, Truncation, Ttda, TtdaConfig, Tucker,
};

use crate::config::{format_rank_lists, ExperimentConfig, Method, RankSpec};
use crate::error::{CliError, CliResult};

/// Ranks in the form each method consumes.
#[derive(Clone, Debug, PartialEq)]
pub enum Ranks {
    /// LDA feature count.
    Single(usize),
    /// One rank per mode (Tucker) or bond ranks `R_1..R_N` (TTDA).
    List(Vec<usize>),
    /// Branch split and per-branch bond ranks.
    Branches { spec: BranchSpec, ranks: Vec<Vec<usize>> },
}

impl Ranks {
    pub fn label(&self) -> String {
        match self {
            Ranks::Single(r) => r.to_string(),
            Ranks::List(l) => format_rank_lists(std::slice::from_ref(l)),
            Ranks::Branches { ranks, .. } => format_rank_lists(ranks),
        }
    }
}

#[derive(Clone, Debug)]
pub enum TrainedModel {
    Lda(Lda),
    Tucker(Tucker),
    Ttda(Ttda),
    Branch(Branches),
}

impl FeatureExtractor<f64> for TrainedModel {
    fn extract(&self, y: &Tensor) -> ttda_core::Result<DVector<f64>> {
        match self {
            TrainedModel::Lda(m) => m.extract(y),
            TrainedModel::Tucker(m) => m.extract(y),
            TrainedModel::Ttda(m) => m.extract(y),
            TrainedModel::Branch(m) => m.extract(y),
        }
    }
}

impl TrainedModel {
    /// Stored elements: subspace factors plus one feature vector (or core)
    /// per training sample.
    pub fn storage_elements(&self, train_samples: usize) -> usize {
        match self {
            TrainedModel::Lda(m) => m.subspace.len() + train_samples * m.subspace.ncols(),
            TrainedModel::Tucker(m) => m.factor_elements() + train_samples * m.core_elements(),
            TrainedModel::Ttda(m) => m.chain.element_count() + train_samples * m.subspace.ncols(),
            TrainedModel::Branch(m) => {
                m.chains.iter().map(|c| c.element_count()).sum::<usize>()
                    + train_samples * m.branch_ranks().iter().product::<usize>()
            }
        }
    }

    pub fn normalized_storage(&self, train_samples: usize, shape: &[usize]) -> f64 {
        normalized_storage(self.storage_elements(train_samples), train_samples, shape)
    }
}

/// One objective evaluation of an iterative method.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub pass: usize,
    pub branch: usize,
    pub iter: usize,
    pub factor: usize,
    pub objective: f64,
    pub inner_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct Trained {
    pub model: TrainedModel,
    pub trace: Vec<TraceRow>,
}

/// Samples stacked along a trailing mode: shape `(…shape, n)`.
pub fn stack_samples(data: &Dataset) -> CliResult<Tensor> {
    let mut shape = data.shape().to_vec();
    shape.push(data.len());
    let mut buf = Vec::with_capacity(data.sample_len() * data.len());
    for s in data.samples() {
        buf.extend_from_slice(s.data());
    }
    Ok(Tensor::new(shape, buf)?)
}

/// Count of singular values of `m` that are at least `τ·σ_max` (at least 1).
fn threshold_rank(m: &DMatrix<f64>, tau: f64) -> usize {
    let gram = if m.nrows() <= m.ncols() { m * m.transpose() } else { m.transpose() * m };
    let (eig, _) = sorted_eigen(&gram);
    let sv: Vec<f64> = eig.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 1;
    }
    sv.iter().filter(|&&s| s >= tau * max).count().max(1)
}

/// TT bond ranks `R_1..R_len` of `matrix` viewed as a tensor with leading
/// modes `dims` and one trailing mode for the columns.
fn tt_threshold_ranks(matrix: DMatrix<f64>, dims: &[usize], tau: f64) -> CliResult<Vec<usize>> {
    let mut shape = dims.to_vec();
    shape.push(matrix.ncols());
    let t = Tensor::from_matrix_with_shape(matrix, &shape)?;
    let svd = tt_svd(&t, &Truncation::Threshold(tau))?;
    Ok(svd.chain.ranks()[1..=dims.len()].to_vec())
}

fn branch_spec(cfg: &ExperimentConfig, shape: &[usize], f: usize) -> CliResult<BranchSpec> {
    Ok(match &cfg.boundaries {
        Some(b) => BranchSpec::new(shape.len(), b.clone())?,
        None => select_branch_points(shape, f)?,
    })
}

/// Ranks for `cfg.method` on a training set: explicit ranks are checked for
/// shape, a threshold τ is applied to the stacked training tensor (TT-SVD
/// for the chain methods, per-mode HOSVD for Tucker, one SVD for LDA).
pub fn resolve_ranks(cfg: &ExperimentConfig, train: &Dataset) -> CliResult<Ranks> {
    let shape = train.shape();
    let n_modes = shape.len();
    match (&cfg.ranks, cfg.method) {
        (RankSpec::Explicit(l), Method::Lda) => Ok(Ranks::Single(l[0][0])),
        (RankSpec::Explicit(l), Method::Cmda | Method::Dgtda | Method::Ttda) => {
            if l[0].len() != n_modes {
                return Err(CliError::Config(format!("{} ranks for {n_modes}-mode samples", l[0].len())));
            }
            Ok(Ranks::List(l[0].clone()))
        }
        (RankSpec::Explicit(l), m) => {
            let f = m.branches().expect("multi-branch method");
            let spec = branch_spec(cfg, shape, f)?;
            let dims = spec.branch_dims(shape)?;
            if l.len() != f || dims.iter().zip(l).any(|(d, r)| d.len() != r.len()) {
                return Err(CliError::Config(format!(
                    "ranks {} do not match branch mode counts {:?}",
                    format_rank_lists(l),
                    dims.iter().map(Vec::len).collect::<Vec<_>>()
                )));
            }
            Ok(Ranks::Branches { spec, ranks: l.clone() })
        }
        (RankSpec::Tau(tau), m) => {
            let stacked = stack_samples(train)?;
            match m {
                Method::Lda => Ok(Ranks::Single(threshold_rank(&stacked.unfold(n_modes), *tau))),
                Method::Cmda | Method::Dgtda => Ok(Ranks::List(
                    (0..n_modes)
                        .map(|n| Ok(threshold_rank(&stacked.mode_unfold(n)?, *tau)))
                        .collect::<CliResult<_>>()?,
                )),
                Method::Ttda => Ok(Ranks::List(tt_threshold_ranks(stacked.unfold(n_modes), shape, *tau)?)),
                Method::TwoWay | Method::ThreeWay => {
                    let spec = branch_spec(cfg, shape, m.branches().unwrap())?;
                    let dims = spec.branch_dims(shape)?;
                    let mut grouped: Vec<usize> = dims.iter().map(|d| d.iter().product()).collect();
                    grouped.push(train.len());
                    let grouped = stacked.reshape(&grouped)?;
                    let ranks = dims
                        .iter()
                        .enumerate()
                        .map(|(b, d)| tt_threshold_ranks(grouped.mode_unfold(b)?, d, *tau))
                        .collect::<CliResult<Vec<_>>>()?;
                    Ok(Ranks::Branches { spec, ranks })
                }
            }
        }
    }
}

/// Trains `cfg.method` with the given ranks and λ.
pub fn train(cfg: &ExperimentConfig, data: &Dataset, ranks: &Ranks, lambda: f64) -> CliResult<Trained> {
    let mismatch = || CliError::Config(format!("ranks {} do not fit method {}", ranks.label(), cfg.method));
    match (cfg.method, ranks) {
        (Method::Lda, Ranks::Single(r)) => {
            Ok(Trained { model: TrainedModel::Lda(lda_fit(data, *r, lambda)?), trace: Vec::new() })
        }
        (Method::Cmda, Ranks::List(r)) => {
            let mut c = CmdaConfig::new(r.clone(), lambda);
            c.max_iter = cfg.cmda_max_iter;
            c.tol = cfg.cmda_tol;
            let res = cmda(data, &c)?;
            let trace = res
                .update_objectives
                .iter()
                .map(|&(sweep, mode, obj)| TraceRow {
                    pass: 0,
                    branch: 0,
                    iter: sweep,
                    factor: mode,
                    objective: obj,
                    inner_iterations: 0,
                })
                .collect();
            Ok(Trained { model: TrainedModel::Tucker(res.model), trace })
        }
        (Method::Dgtda, Ranks::List(r)) => {
            Ok(Trained { model: TrainedModel::Tucker(dgtda(data, r)?.model), trace: Vec::new() })
        }
        (Method::Ttda, Ranks::List(r)) => {
            let mut c = TtdaConfig::new(r.clone(), lambda);
            c.max_iter = cfg.max_iter;
            c.tol = cfg.tol;
            c.solver = cfg.solver();
            c.dense_ceiling = cfg.dense_ceiling;
            let model = ttda_fit(data, &c)?;
            let trace = model
                .log
                .iter()
                .map(|u| TraceRow {
                    pass: 0,
                    branch: 0,
                    iter: u.iter,
                    factor: u.factor,
                    objective: u.objective,
                    inner_iterations: u.inner_iterations,
                })
                .collect();
            Ok(Trained { model: TrainedModel::Ttda(model), trace })
        }
        (Method::TwoWay | Method::ThreeWay, Ranks::Branches { spec, ranks }) => {
            let mut c = MultiBranchConfig::new(spec.clone(), ranks.clone(), lambda);
            c.max_iter = cfg.max_iter;
            c.tol = cfg.tol;
            c.loop_iter = cfg.loop_iter;
            c.solver = cfg.solver();
            c.dense_ceiling = cfg.dense_ceiling;
            let model = multibranch_fit(data, &c)?;
            let trace = model
                .log
                .iter()
                .map(|u| TraceRow {
                    pass: u.pass,
                    branch: u.branch,
                    iter: u.record.iter,
                    factor: u.record.factor,
                    objective: u.record.objective,
                    inner_iterations: u.record.inner_iterations,
                })
                .collect();
            Ok(Trained { model: TrainedModel::Branch(model), trace })
        }
        _ => Err(mismatch()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_rank_counts() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![10.0, 5.0, 1.0]));
        assert_eq!(threshold_rank(&m, 0.4), 2);
        assert_eq!(threshold_rank(&m, 1.0), 1);
        assert_eq!(threshold_rank(&m, 0.05), 3);
        assert_eq!(threshold_rank(&DMatrix::zeros(2, 2), 0.5), 1);
    }
}
