//! Tensor-train discriminant analysis.
//!
//! Everything is generic over the [`Scalar`] type (`f32` or `f64`); the
//! aliases at the bottom fix it to `f64`.

pub mod classify;
pub mod data;
pub mod discriminant;
pub mod error;
pub mod io;
pub mod scalar;
pub mod stiefel;
pub mod tensor;
pub mod tt;
pub mod ttda;

pub use classify::{
    accuracy, default_lambda_grid, evaluate, nn1_classify, select_lambda, FeatureExtractor, FeatureSet, LambdaSearch,
    LambdaSelection,
};
pub use data::LabeledTensorSet;
pub use discriminant::{
    cmda, dgtda, lda_fit, lda_solve, scatter_matrices, CmdaConfig, LdaModel, ScatterPair, TuckerModel,
};
pub use error::{Error, Result};
pub use scalar::Scalar;
pub use stiefel::{minimize_on_stiefel, SolverConfig, StiefelPoint};
pub use tensor::{merge_leading, merge_product, DenseTensor};
pub use tt::{tt_svd, Truncation, TtChain, TtFactor, TtSvd};
pub use ttda::{
    multibranch_fit, select_branch_points, ttda_fit, BranchModel, BranchSpec, MultiBranchConfig, TtdaConfig, TtdaModel,
};

pub type Tensor = DenseTensor<f64>;
pub type Chain = TtChain<f64>;
pub type Factor = TtFactor<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;
pub type Dataset = LabeledTensorSet<f64>;
pub type Features = FeatureSet<f64>;
pub type Ttda = TtdaModel<f64>;
pub type Branches = BranchModel<f64>;
pub type Tucker = TuckerModel<f64>;
pub type Lda = LdaModel<f64>;
