//! Feature extraction, 1-NN classification, and λ selection.

use log::info;
use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::LabeledTensorSet;
use crate::discriminant::{LdaModel, TuckerModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;
use crate::ttda::{BranchModel, TtdaModel};

/// Anything that maps a sample tensor to a flat feature vector.
pub trait FeatureExtractor<T: Scalar> {
    fn extract(&self, y: &DenseTensor<T>) -> Result<DVector<T>>;

    fn extract_all(&self, data: &LabeledTensorSet<T>) -> Result<FeatureSet<T>> {
        let features = data.samples().iter().map(|y| self.extract(y)).collect::<Result<Vec<_>>>()?;
        FeatureSet::new(features, data.labels().to_vec())
    }
}

impl<T: Scalar> FeatureExtractor<T> for LdaModel<T> {
    fn extract(&self, y: &DenseTensor<T>) -> Result<DVector<T>> {
        self.transform(y)
    }
}

impl<T: Scalar> FeatureExtractor<T> for TuckerModel<T> {
    fn extract(&self, y: &DenseTensor<T>) -> Result<DVector<T>> {
        Ok(self.core(y)?.vectorize())
    }
}

impl<T: Scalar> FeatureExtractor<T> for TtdaModel<T> {
    fn extract(&self, y: &DenseTensor<T>) -> Result<DVector<T>> {
        self.transform(y)
    }
}

impl<T: Scalar> FeatureExtractor<T> for BranchModel<T> {
    fn extract(&self, y: &DenseTensor<T>) -> Result<DVector<T>> {
        self.transform(y)
    }
}

/// Labeled feature vectors of equal length.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSet<T: Scalar> {
    features: Vec<DVector<T>>,
    labels: Vec<usize>,
}

impl<T: Scalar> FeatureSet<T> {
    pub fn new(features: Vec<DVector<T>>, labels: Vec<usize>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!("{} features, {} labels", features.len(), labels.len())));
        }
        if let Some(first) = features.first() {
            if let Some(bad) = features.iter().position(|f| f.len() != first.len()) {
                return Err(Error::ShapeMismatch(format!(
                    "feature {bad} has length {}, expected {}",
                    features[bad].len(),
                    first.len()
                )));
            }
        }
        Ok(Self { features, labels })
    }

    pub fn features(&self) -> &[DVector<T>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.features.first().map(|f| f.len())
    }
}

/// Label of the Euclidean-nearest training feature for every query; ties go
/// to the lowest training index.
pub fn nn1_classify<T: Scalar>(train: &FeatureSet<T>, queries: &[DVector<T>]) -> Result<Vec<usize>> {
    let dim =
        train.dim().ok_or_else(|| Error::InsufficientSamples("1-NN needs at least one training feature".into()))?;
    queries
        .iter()
        .map(|q| {
            if q.len() != dim {
                return Err(Error::ShapeMismatch(format!("query length {}, training length {dim}", q.len())));
            }
            let mut best = (T::zero(), usize::MAX);
            for (i, f) in train.features.iter().enumerate() {
                let d = (f - q).norm_squared();
                if best.1 == usize::MAX || d < best.0 {
                    best = (d, i);
                }
            }
            Ok(train.labels[best.1])
        })
        .collect()
}

/// Fraction of matching labels.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::ShapeMismatch(format!("{} predictions for {} labels", predicted.len(), truth.len())));
    }
    if truth.is_empty() {
        return Err(Error::InsufficientSamples("accuracy of an empty test set".into()));
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// 1-NN accuracy of `model` on `test` with `train` as the reference set.
pub fn evaluate<T: Scalar, M: FeatureExtractor<T> + ?Sized>(
    model: &M,
    train: &LabeledTensorSet<T>,
    test: &LabeledTensorSet<T>,
) -> Result<f64> {
    let reference = model.extract_all(train)?;
    let queries = model.extract_all(test)?;
    let predicted = nn1_classify(&reference, queries.features())?;
    accuracy(&predicted, queries.labels())
}

/// Nine log-spaced values `10^{-1}, 10^{-0.5}, …, 10^{3}`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..9).map(|k| 10f64.powf(-1.0 + 0.5 * k as f64)).collect()
}

#[derive(Clone, Debug)]
pub struct LambdaSearch<T> {
    pub grid: Vec<T>,
    /// Held-out samples per class in each validation trial.
    pub subset_size: usize,
    pub trials: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for LambdaSearch<T> {
    fn default() -> Self {
        Self { grid: default_lambda_grid().into_iter().map(T::lit).collect(), subset_size: 2, trials: 5, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaSelection<T> {
    pub lambda: T,
    /// Mean validation accuracy per grid value, in grid order.
    pub scores: Vec<(T, f64)>,
}

/// Picks λ from a grid. The model is trained once per λ on `train`; each
/// trial validates it on `subset_size` random samples per class drawn from
/// `pool`. Trials draw the same subsets for every λ. The λ with the highest
/// mean accuracy wins; ties go to the smallest λ.
pub fn select_lambda<T, M, F>(
    train: &LabeledTensorSet<T>,
    pool: &LabeledTensorSet<T>,
    search: &LambdaSearch<T>,
    mut fit: F,
) -> Result<LambdaSelection<T>>
where
    T: Scalar,
    M: FeatureExtractor<T>,
    F: FnMut(&LabeledTensorSet<T>, T) -> Result<M>,
{
    if search.grid.is_empty() || search.trials == 0 || search.subset_size == 0 {
        return Err(Error::InvalidParameter("λ search needs a grid, trials ≥ 1 and subset size ≥ 1".into()));
    }
    let by_class = pool.class_indices();
    if let Some((c, idx)) = by_class.iter().enumerate().find(|(_, idx)| idx.len() < search.subset_size) {
        return Err(Error::InsufficientSamples(format!(
            "class {c} has {} held-out samples, validation needs {}",
            idx.len(),
            search.subset_size
        )));
    }
    let subsets: Vec<Vec<usize>> = (0..search.trials)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(search.seed.wrapping_add(t as u64));
            let mut chosen: Vec<usize> = by_class
                .iter()
                .flat_map(|idx| {
                    let mut idx = idx.clone();
                    idx.shuffle(&mut rng);
                    idx.truncate(search.subset_size);
                    idx
                })
                .collect();
            chosen.sort_unstable();
            chosen
        })
        .collect();

    let mut scores = Vec::with_capacity(search.grid.len());
    for &lambda in &search.grid {
        let model = fit(train, lambda)?;
        let reference = model.extract_all(train)?;
        let pool_features = model.extract_all(pool)?;
        let mut total = 0.0;
        for subset in &subsets {
            let queries: Vec<DVector<T>> = subset.iter().map(|&i| pool_features.features()[i].clone()).collect();
            let truth: Vec<usize> = subset.iter().map(|&i| pool.labels()[i]).collect();
            total += accuracy(&nn1_classify(&reference, &queries)?, &truth)?;
        }
        let mean = total / subsets.len() as f64;
        info!("λ = {lambda}: validation accuracy {mean:.4}");
        scores.push((lambda, mean));
    }
    let mut best = scores[0];
    for &(lambda, score) in &scores[1..] {
        if score > best.1 || (score == best.1 && lambda < best.0) {
            best = (lambda, score);
        }
    }
    Ok(LambdaSelection { lambda: best.0, scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs(points: &[[f64; 2]], labels: &[usize]) -> FeatureSet<f64> {
        FeatureSet::new(points.iter().map(|p| DVector::from_column_slice(p)).collect(), labels.to_vec()).unwrap()
    }

    #[test]
    fn nn_identity_and_ties() {
        let train = fs(&[[0.0, 0.0], [2.0, 0.0], [5.0, 5.0]], &[1, 0, 2]);
        let q = vec![DVector::from_vec(vec![5.0, 5.0]), DVector::from_vec(vec![1.0, 0.0])];
        assert_eq!(nn1_classify(&train, &q).unwrap(), vec![2, 1]);
        let empty = FeatureSet::<f64>::new(vec![], vec![]).unwrap();
        assert!(nn1_classify(&empty, &q).is_err());
    }

    #[test]
    fn accuracy_ratios() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 1, 0, 1], &[1, 1, 1, 1]).unwrap(), 0.75);
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn default_grid_spans_endpoints() {
        let g = default_lambda_grid();
        assert_eq!(g.len(), 9);
        assert!((g[0] - 0.1).abs() < 1e-15);
        assert!((g[8] - 1000.0).abs() < 1e-9);
        for w in g.windows(2) {
            assert!((w[1] / w[0] - 10f64.sqrt()).abs() < 1e-12);
        }
    }
}
