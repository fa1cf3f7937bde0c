//! Tensor-train discriminant analysis: single-chain (TTDA) and multi-branch
//! (2WTTDA, 3WTTDA, …) subspace learning.

mod assemble;
mod branch;
mod fit;
mod storage;

pub use assemble::{an_matrix, assemble_an};
pub use branch::{multibranch_fit, select_branch_points, BranchModel, BranchSpec, BranchUpdate, MultiBranchConfig};
pub use fit::{ttda_fit, ChainFit, TtdaConfig, TtdaModel, UpdateRecord};
pub use storage::{
    branch_storage, closed_form_storage, normalized_storage, optimal_branch_count, storage_g, OptimalBranch,
};

/// Default outer-iteration limit for a chain fit.
pub const TTDA_MAX_ITER: usize = 200;
/// Default stopping threshold on the normalized factor change.
pub const TTDA_TOL: f64 = 0.1;
/// Default number of passes over the branches.
pub const LOOP_ITER: usize = 3;
/// Default ceiling on the dimension of a materialized scatter matrix.
pub const DENSE_CEILING: usize = 4096;
