//! Seeded synthetic classification data with low-TT-rank class means.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use ttda_core::{Dataset, Tensor, TtChain, TtFactor};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub shape: Vec<usize>,
    pub classes: usize,
    pub per_class: usize,
    /// Interior bond ranks `R_1..R_{N-1}` of the class-mean generator.
    /// The boundary ranks `R_0 = R_N = 1` may be included.
    pub ranks: Vec<usize>,
    pub separation: f64,
    pub sigma: f64,
    pub seed: u64,
    /// Required class-mean distance in units of σ.
    pub margin: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            shape: vec![4, 4, 4, 4],
            classes: 3,
            per_class: 20,
            ranks: vec![2, 2, 2],
            separation: 1.0,
            sigma: 0.05,
            seed: 7,
            margin: 6.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SyntheticReport {
    pub min_mean_distance: f64,
    /// `margin · σ`.
    pub required_distance: f64,
    pub separated: bool,
}

impl SyntheticSpec {
    /// Full bond ranks `R_0..R_N`.
    pub fn bond_ranks(&self) -> CliResult<Vec<usize>> {
        let n = self.shape.len();
        let inner = if self.ranks.len() == n + 1 && self.ranks[0] == 1 && self.ranks[n] == 1 {
            &self.ranks[1..n]
        } else {
            &self.ranks[..]
        };
        if inner.len() + 1 != n {
            return Err(CliError::Config(format!(
                "{} generator ranks for {n} modes (expected {})",
                self.ranks.len(),
                n.saturating_sub(1)
            )));
        }
        let mut full = vec![1];
        full.extend_from_slice(inner);
        full.push(1);
        Ok(full)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.shape.is_empty() || self.shape.contains(&0) {
            return Err(CliError::Config(format!("synthetic shape {:?} must be nonempty and positive", self.shape)));
        }
        if self.classes == 0 || self.per_class == 0 {
            return Err(CliError::Config("synthetic data needs classes ≥ 1 and per_class ≥ 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) || !(self.separation > 0.0 && self.separation.is_finite()) {
            return Err(CliError::Config("synthetic σ and separation must be positive".into()));
        }
        let r = self.bond_ranks()?;
        for n in 1..self.shape.len() {
            let left: usize = self.shape[..n].iter().product();
            let right: usize = self.shape[n..].iter().product();
            if r[n] == 0 || r[n] > left.min(right) {
                return Err(CliError::Config(format!(
                    "generator rank R_{n} = {} infeasible (at most {})",
                    r[n],
                    left.min(right)
                )));
            }
        }
        Ok(())
    }
}

fn gaussian_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let len = shape.iter().product();
    let data = (0..len).map(|_| StandardNormal.sample(rng)).collect();
    Tensor::new(shape.to_vec(), data).expect("length matches shape")
}

/// Class means are `separation ·` a unit-norm contraction of a random
/// Gaussian TT chain; samples add `σ ·` standard normal noise. Classes are
/// generated in order, means first, then samples class by class.
pub fn generate_synthetic(spec: &SyntheticSpec) -> CliResult<(Dataset, SyntheticReport)> {
    spec.validate()?;
    let ranks = spec.bond_ranks()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut means = Vec::with_capacity(spec.classes);
    for _ in 0..spec.classes {
        let factors = spec
            .shape
            .iter()
            .enumerate()
            .map(|(n, &i)| TtFactor::new(gaussian_tensor(&mut rng, &[ranks[n], i, ranks[n + 1]])))
            .collect::<ttda_core::Result<Vec<_>>>()?;
        let full = TtChain::new(factors)?.contract(0, spec.shape.len())?.reshape(&spec.shape)?;
        let norm = full.frobenius_norm();
        if norm == 0.0 {
            return Err(CliError::Dataset("generator produced a zero class mean".into()));
        }
        means.push(full.scale(spec.separation / norm));
    }
    let mut classes = Vec::with_capacity(spec.classes);
    for mean in &means {
        let samples = (0..spec.per_class)
            .map(|_| mean.add(&gaussian_tensor(&mut rng, &spec.shape).scale(spec.sigma)))
            .collect::<ttda_core::Result<Vec<_>>>()?;
        classes.push(samples);
    }
    let mut min_mean_distance = f64::INFINITY;
    for a in 0..means.len() {
        for b in a + 1..means.len() {
            min_mean_distance = min_mean_distance.min(means[a].sub(&means[b])?.frobenius_norm());
        }
    }
    let required_distance = spec.margin * spec.sigma;
    let separated = min_mean_distance > required_distance;
    if !separated {
        log::warn!("closest class means are {min_mean_distance:.4} apart, below {required_distance:.4}");
    }
    let data = Dataset::from_classes(classes)?;
    Ok((data, SyntheticReport { min_mean_distance, required_distance, separated }))
}
