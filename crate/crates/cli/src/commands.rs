//! Subcommand bodies, callable without the binary.

use std::path::Path;

use serde::Serialize;
use ttda_core::io::{load_tensor, save_chain};
use ttda_core::{accuracy, nn1_classify, tt_svd, FeatureExtractor, Truncation};

use crate::config::ExperimentConfig;
use crate::dataset::{load_dataset, save_tten_dir};
use crate::error::{CliError, CliResult};
use crate::experiment::{run_on, split_seed, write_trace};
use crate::model_io::{load_model, manifest_for, save_model, Manifest};
use crate::synthetic::{generate_synthetic, SyntheticReport};

#[derive(Clone, Debug, Serialize)]
pub struct SynthReport {
    pub samples: usize,
    pub classes: usize,
    pub shape: Vec<usize>,
    #[serde(flatten)]
    pub separation: SyntheticReport,
}

/// Generates the configured synthetic dataset and writes it as a TTEN
/// directory.
pub fn synth(cfg: &ExperimentConfig, out: &Path) -> CliResult<SynthReport> {
    let (data, separation) = generate_synthetic(&cfg.synthetic)?;
    save_tten_dir(out, &data)?;
    Ok(SynthReport { samples: data.len(), classes: data.num_classes(), shape: data.shape().to_vec(), separation })
}

#[derive(Clone, Debug, Serialize)]
pub struct DecomposeReport {
    pub shape: Vec<usize>,
    /// Bond ranks `R_0..R_N`.
    pub ranks: Vec<usize>,
    pub relative_error: f64,
    pub elements: usize,
    /// Chain plus weights relative to the dense tensor.
    pub compression: f64,
}

/// TT-SVD of a TTEN file. The chain is written to `out` when given.
pub fn decompose(input: &Path, truncation: &Truncation<f64>, out: Option<&Path>) -> CliResult<DecomposeReport> {
    let t = load_tensor::<f64>(input)?;
    let svd = tt_svd(&t, truncation)?;
    let approx = svd.reconstruct()?;
    let norm = t.frobenius_norm();
    let err = approx.sub(&t)?.frobenius_norm();
    let relative_error = if norm > 0.0 { err / norm } else { err };
    let elements = svd.chain.element_count() + svd.weights.len();
    if let Some(path) = out {
        save_chain(path, &svd.chain)?;
    }
    Ok(DecomposeReport {
        shape: t.shape().to_vec(),
        ranks: svd.chain.ranks(),
        relative_error,
        elements,
        compression: elements as f64 / t.len() as f64,
    })
}

/// Trains on the first split of `cfg`, evaluates on its held-out part, and
/// writes the model directory.
pub fn train_model(cfg: &ExperimentConfig, dir: &Path) -> CliResult<Manifest> {
    let data = load_dataset(cfg)?;
    let mut single = cfg.clone();
    single.repeats = 1;
    let outcome = run_on(&single, &data)?;
    let rep = &outcome.repeats[0];
    let (train_set, _) = data.stratified_split(cfg.train_fraction, split_seed(cfg, 0))?;
    let features = rep.trained.model.extract_all(&train_set)?;
    let manifest = manifest_for(rep, cfg, data.shape(), train_set.labels().to_vec());
    save_model(dir, &manifest, cfg, &rep.trained.model, &features)?;
    if let Some(path) = &cfg.trace {
        write_trace(path, &rep.trained.trace)?;
    }
    Ok(manifest)
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub method: String,
    pub accuracy: f64,
    pub test_samples: usize,
}

/// Evaluates a saved model on the held-out part of the split it was
/// trained on. `overrides` adjust the saved configuration (for example a
/// moved dataset path).
pub fn eval_saved(dir: &Path, overrides: &[String]) -> CliResult<EvalReport> {
    let saved = load_model(dir)?;
    let mut cfg = saved.config.clone();
    for o in overrides {
        cfg.apply_override(o)?;
    }
    let data = load_dataset(&cfg)?;
    if data.shape() != saved.manifest.shape.as_slice() {
        return Err(CliError::Model(format!(
            "dataset shape {:?}, model trained on {:?}",
            data.shape(),
            saved.manifest.shape
        )));
    }
    let (_, test) = data.stratified_split(saved.manifest.train_fraction, saved.manifest.split_seed)?;
    let queries = saved.model.extract_all(&test)?;
    let predicted = nn1_classify(&saved.features, queries.features())?;
    Ok(EvalReport {
        method: saved.manifest.method,
        accuracy: accuracy(&predicted, test.labels())?,
        test_samples: test.len(),
    })
}
