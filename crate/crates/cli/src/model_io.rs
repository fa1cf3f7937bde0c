//! Model directories: `manifest.json`, `config.txt`, the training features,
//! and the learned factors.
//!
//! | kind     | factor files                 |
//! |----------|------------------------------|
//! | `lda`    | `subspace.tten` (`D × r`)    |
//! | `tucker` | `mode_<n>.tten` (`I_n × r_n`)|
//! | `tt`     | `chain.ttch`                 |
//! | `branch` | `branch_<b>.ttch`            |
//!
//! `features.tten` holds the training features as a `F × n` matrix.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use ttda_core::io::{load_chain, load_tensor, save_chain, save_tensor};
use ttda_core::{BranchModel, BranchSpec, Features, Lda, Tensor, TtdaModel, Tucker};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::experiment::{split_seed, RepeatResult};
use crate::methods::TrainedModel;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.txt";
pub const FEATURES_FILE: &str = "features.tten";
pub const MODEL_FORMAT: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: u32,
    pub method: String,
    pub kind: String,
    pub shape: Vec<usize>,
    pub lambda: f64,
    pub ranks: String,
    /// Branch boundaries (`branch` models only).
    pub boundaries: Vec<usize>,
    pub labels: Vec<usize>,
    /// Seed and fraction of the split the model was trained on.
    pub split_seed: u64,
    pub train_fraction: f64,
    pub storage_norm: f64,
    pub train_seconds: f64,
    /// Test accuracy on the held-out part of the split.
    pub accuracy: f64,
}

fn kind(model: &TrainedModel) -> &'static str {
    match model {
        TrainedModel::Lda(_) => "lda",
        TrainedModel::Tucker(_) => "tucker",
        TrainedModel::Ttda(_) => "tt",
        TrainedModel::Branch(_) => "branch",
    }
}

fn features_matrix(features: &Features) -> DMatrix<f64> {
    let dim = features.dim().unwrap_or(0);
    DMatrix::from_fn(dim, features.len(), |i, j| features.features()[j][i])
}

/// Writes a model directory. `features` are the training features the
/// model was evaluated against.
pub fn save_model(
    dir: &Path,
    manifest: &Manifest,
    cfg: &ExperimentConfig,
    model: &TrainedModel,
    features: &Features,
) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    if manifest.kind != kind(model) {
        return Err(CliError::Model(format!("manifest kind {} for a {} model", manifest.kind, kind(model))));
    }
    match model {
        TrainedModel::Lda(m) => save_tensor(dir.join("subspace.tten"), &Tensor::from_matrix(&m.subspace))?,
        TrainedModel::Tucker(m) => {
            for (n, u) in m.subspaces.iter().enumerate() {
                save_tensor(dir.join(format!("mode_{n}.tten")), &Tensor::from_matrix(u))?;
            }
        }
        TrainedModel::Ttda(m) => save_chain(dir.join("chain.ttch"), &m.chain)?,
        TrainedModel::Branch(m) => {
            for (b, c) in m.chains.iter().enumerate() {
                save_chain(dir.join(format!("branch_{b}.ttch")), c)?;
            }
        }
    }
    save_tensor(dir.join(FEATURES_FILE), &Tensor::from_matrix(&features_matrix(features)))?;
    fs::write(dir.join(CONFIG_FILE), cfg.to_text())?;
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(manifest)?)?;
    Ok(())
}

fn load_matrix(path: &Path) -> CliResult<DMatrix<f64>> {
    let t = load_tensor::<f64>(path)?;
    if t.order() != 2 {
        return Err(CliError::Model(format!("{} is not a matrix", path.display())));
    }
    Ok(t.unfold(1))
}

#[derive(Clone, Debug)]
pub struct SavedModel {
    pub manifest: Manifest,
    pub config: ExperimentConfig,
    pub model: TrainedModel,
    pub features: Features,
}

pub fn load_model(dir: &Path) -> CliResult<SavedModel> {
    let manifest: Manifest = serde_json::from_str(
        &fs::read_to_string(dir.join(MANIFEST_FILE))
            .map_err(|e| CliError::Model(format!("{}: {e}", dir.join(MANIFEST_FILE).display())))?,
    )?;
    if manifest.format != MODEL_FORMAT {
        return Err(CliError::Model(format!("unsupported model format {}", manifest.format)));
    }
    let config = ExperimentConfig::from_file(&dir.join(CONFIG_FILE))?;
    let fm = load_matrix(&dir.join(FEATURES_FILE))?;
    if fm.ncols() != manifest.labels.len() {
        return Err(CliError::Model(format!("{} features for {} labels", fm.ncols(), manifest.labels.len())));
    }
    let features = Features::new(fm.column_iter().map(|c| c.into_owned()).collect(), manifest.labels.clone())?;
    let model = match manifest.kind.as_str() {
        "lda" => TrainedModel::Lda(Lda {
            subspace: load_matrix(&dir.join("subspace.tten"))?,
            lambda: manifest.lambda,
            objective: f64::NAN,
        }),
        "tucker" => TrainedModel::Tucker(Tucker {
            subspaces: (0..manifest.shape.len())
                .map(|n| load_matrix(&dir.join(format!("mode_{n}.tten"))))
                .collect::<CliResult<_>>()?,
        }),
        "tt" => {
            let chain = load_chain::<f64>(dir.join("chain.ttch"))?;
            let subspace = chain.subspace()?;
            TrainedModel::Ttda(TtdaModel {
                chain,
                lambda: manifest.lambda,
                subspace,
                features: features.features().to_vec(),
                labels: manifest.labels.clone(),
                log: Vec::new(),
                iterations: 0,
                converged: true,
                lower_bound: f64::NAN,
            })
        }
        "branch" => {
            let spec = BranchSpec::new(manifest.shape.len(), manifest.boundaries.clone())?;
            let chains = (0..spec.branch_count())
                .map(|b| Ok(load_chain::<f64>(dir.join(format!("branch_{b}.ttch")))?))
                .collect::<CliResult<Vec<_>>>()?;
            let subspaces = chains.iter().map(|c| c.subspace()).collect::<ttda_core::Result<Vec<_>>>()?;
            let core_shape: Vec<usize> = subspaces.iter().map(|u| u.ncols()).collect();
            let cores = features
                .features()
                .iter()
                .map(|f| Tensor::from_vector(f, &core_shape))
                .collect::<ttda_core::Result<Vec<_>>>()?;
            TrainedModel::Branch(BranchModel {
                spec,
                shape: manifest.shape.clone(),
                chains,
                lambda: manifest.lambda,
                subspaces,
                cores,
                labels: manifest.labels.clone(),
                log: Vec::new(),
            })
        }
        other => return Err(CliError::Model(format!("unknown model kind `{other}`"))),
    };
    Ok(SavedModel { manifest, config, model, features })
}

/// Manifest for the first repeat of a run.
pub fn manifest_for(rep: &RepeatResult, cfg: &ExperimentConfig, shape: &[usize], labels: Vec<usize>) -> Manifest {
    let boundaries = match &rep.trained.model {
        TrainedModel::Branch(m) => m.spec.boundaries().to_vec(),
        _ => Vec::new(),
    };
    Manifest {
        format: MODEL_FORMAT,
        method: cfg.method.to_string(),
        kind: kind(&rep.trained.model).to_string(),
        shape: shape.to_vec(),
        lambda: rep.lambda,
        ranks: rep.ranks.label(),
        boundaries,
        labels,
        split_seed: split_seed(cfg, 0),
        train_fraction: cfg.train_fraction,
        storage_norm: rep.storage_norm,
        train_seconds: rep.train_seconds,
        accuracy: rep.accuracy,
    }
}
