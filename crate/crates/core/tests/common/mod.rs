#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ttda_core::{DenseTensor, LabeledTensorSet, TtChain, TtFactor};

/// All multi-indices of `shape` with the first index varying fastest.
pub fn indices(shape: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = shape.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0; shape.len()];
    for _ in 0..total {
        out.push(idx.clone());
        for (k, &d) in shape.iter().enumerate() {
            idx[k] += 1;
            if idx[k] < d {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

/// Linear position of `idx` in a first-mode-fastest layout.
pub fn offset(shape: &[usize], idx: &[usize]) -> usize {
    let mut pos = 0;
    for k in (0..shape.len()).rev() {
        pos = pos * shape[k] + idx[k];
    }
    pos
}

pub fn at(t: &DenseTensor<f64>, idx: &[usize]) -> f64 {
    t.data()[offset(t.shape(), idx)]
}

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> DenseTensor<f64> {
    let n: usize = shape.iter().product();
    DenseTensor::new(shape.to_vec(), (0..n).map(|_| gauss(rng)).collect()).unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| gauss(rng))
}

pub fn random_orthonormal(rng: &mut ChaCha8Rng, p: usize, q: usize) -> DMatrix<f64> {
    random_matrix(rng, p, q).qr().q()
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = random_matrix(rng, n, n);
    (&m + m.transpose()) * 0.5
}

/// Random left-orthogonal chain with the given dims and ranks `R_1..R_N`.
pub fn random_chain(rng: &mut ChaCha8Rng, dims: &[usize], ranks: &[usize]) -> TtChain<f64> {
    let mut prev = 1;
    let mut factors = Vec::new();
    for (&i, &r) in dims.iter().zip(ranks) {
        let q = random_orthonormal(rng, prev * i, r);
        factors.push(TtFactor::from_left_unfolding(q, prev, i).unwrap().with_left_orthogonal(true));
        prev = r;
    }
    TtChain::new(factors).unwrap()
}

/// Random labeled set with `classes` classes of `per_class` samples each;
/// class means are spread by `spread` and samples carry unit noise.
pub fn random_labeled(
    rng: &mut ChaCha8Rng,
    shape: &[usize],
    classes: usize,
    per_class: usize,
    spread: f64,
) -> LabeledTensorSet<f64> {
    let means: Vec<DenseTensor<f64>> = (0..classes).map(|_| random_tensor(rng, shape).scale(spread)).collect();
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for (c, m) in means.iter().enumerate() {
        for _ in 0..per_class {
            samples.push(m.add(&random_tensor(rng, shape)).unwrap());
            labels.push(c);
        }
    }
    LabeledTensorSet::new(samples, labels).unwrap()
}

/// Brute-force `vec(U)` contraction of a chain with `R_0 = 1`:
/// `U[(i_1..i_N), r] = Σ Π factor entries`.
pub fn chain_subspace_oracle(chain: &TtChain<f64>) -> DMatrix<f64> {
    let dims = chain.dims();
    let ranks = chain.ranks();
    let d: usize = dims.iter().product();
    let r_last = *ranks.last().unwrap();
    let mut u = DMatrix::zeros(d, r_last);
    for idx in indices(&dims) {
        let row = offset(&dims, &idx);
        // row vector over the current bond
        let mut v = vec![1.0];
        for (n, f) in chain.factors().iter().enumerate() {
            let rn = ranks[n + 1];
            let mut next = vec![0.0; rn];
            for (a, &va) in v.iter().enumerate() {
                for (b, nb) in next.iter_mut().enumerate() {
                    *nb += va * at(f.core(), &[a, idx[n], b]);
                }
            }
            v = next;
        }
        for (r, &x) in v.iter().enumerate() {
            u[(row, r)] = x;
        }
    }
    u
}
