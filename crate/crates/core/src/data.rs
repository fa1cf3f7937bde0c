//! Labeled collections of equally shaped sample tensors.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

/// Training collection `𝒴`: samples with class labels `0..C`.
///
/// Samples keep their insertion order; class `c` holds the samples whose
/// label is `c`, and every class in `0..C` is nonempty.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledTensorSet<T> {
    shape: Vec<usize>,
    samples: Vec<DenseTensor<T>>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl<T: Scalar> LabeledTensorSet<T> {
    pub fn new(samples: Vec<DenseTensor<T>>, labels: Vec<usize>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientSamples("empty sample set".into()));
        }
        if samples.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!("{} samples but {} labels", samples.len(), labels.len())));
        }
        let shape = samples[0].shape().to_vec();
        if let Some(bad) = samples.iter().position(|s| s.shape() != shape.as_slice()) {
            return Err(Error::ShapeMismatch(format!(
                "sample {bad} has shape {:?}, expected {:?}",
                samples[bad].shape(),
                shape
            )));
        }
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![0usize; num_classes];
        for &l in &labels {
            counts[l] += 1;
        }
        if let Some(c) = counts.iter().position(|&k| k == 0) {
            return Err(Error::EmptyClass(c));
        }
        Ok(Self { shape, samples, labels, num_classes })
    }

    /// Builds a set from per-class sample lists (class `c` = `classes[c]`).
    pub fn from_classes(classes: Vec<Vec<DenseTensor<T>>>) -> Result<Self> {
        let mut samples = Vec::new();
        let mut labels = Vec::new();
        for (c, class) in classes.into_iter().enumerate() {
            if class.is_empty() {
                return Err(Error::EmptyClass(c));
            }
            labels.extend(std::iter::repeat_n(c, class.len()));
            samples.extend(class);
        }
        Self::new(samples, labels)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn sample_len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn samples(&self) -> &[DenseTensor<T>] {
        &self.samples
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DenseTensor<T>, usize)> {
        self.samples.iter().zip(self.labels.iter().copied())
    }

    /// `K_c` for every class.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Indices of the samples in each class, in insertion order.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut idx = vec![Vec::new(); self.num_classes];
        for (i, &l) in self.labels.iter().enumerate() {
            idx[l].push(i);
        }
        idx
    }

    /// Class means `ℳ_c`.
    pub fn class_means(&self) -> Vec<DenseTensor<T>> {
        let sizes = self.class_sizes();
        let mut sums = vec![DenseTensor::zeros(&self.shape); self.num_classes];
        for (s, l) in self.iter() {
            for (acc, &x) in sums[l].data_mut().iter_mut().zip(s.data()) {
                *acc += x;
            }
        }
        sums.into_iter().zip(sizes).map(|(m, k)| m.scale(T::one() / T::lit(k as f64))).collect()
    }

    /// Total mean `ℳ` over all samples.
    pub fn mean(&self) -> DenseTensor<T> {
        let mut sum = DenseTensor::zeros(&self.shape);
        for s in &self.samples {
            for (acc, &x) in sum.data_mut().iter_mut().zip(s.data()) {
                *acc += x;
            }
        }
        sum.scale(T::one() / T::lit(self.len() as f64))
    }

    /// Same samples reinterpreted under a new shape of equal size.
    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        let samples = self.samples.iter().map(|s| s.reshape(shape)).collect::<Result<Vec<_>>>()?;
        Ok(Self { shape: shape.to_vec(), samples, labels: self.labels.clone(), num_classes: self.num_classes })
    }

    /// The samples at `indices`, in that order. Class labels are kept, so
    /// every class must still be represented.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let samples = indices.iter().map(|&i| self.samples[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::new(samples, labels)
    }

    /// Stratified random split: `ceil(fraction·K_c)` training samples per
    /// class (at least one, and at least one left for testing when
    /// `K_c ≥ 2`).
    pub fn stratified_split(&self, train_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!("train fraction {train_fraction} outside (0, 1)")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (c, mut idx) in self.class_indices().into_iter().enumerate() {
            if idx.len() < 2 {
                return Err(Error::InsufficientSamples(format!("class {c} has fewer than 2 samples to split")));
            }
            idx.shuffle(&mut rng);
            let k = ((train_fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
            let (tr, te) = idx.split_at(k);
            train.extend_from_slice(tr);
            test.extend_from_slice(te);
        }
        train.sort_unstable();
        test.sort_unstable();
        Ok((self.subset(&train)?, self.subset(&test)?))
    }
}
