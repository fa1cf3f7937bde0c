use super::branch::BranchSpec;
use crate::error::{Error, Result};

/// Exact stored elements of a multi-branch model: every factor
/// `R_{n-1} I_n R_n` plus one core `∏_b r_b` per sample. Ranks are listed
/// per branch as `R_1..` (each branch starts from `R_0 = 1`).
pub fn branch_storage(shape: &[usize], spec: &BranchSpec, ranks: &[Vec<usize>], samples: usize) -> Result<usize> {
    let dims = spec.branch_dims(shape)?;
    if ranks.len() != dims.len() {
        return Err(Error::InvalidRank(format!("{} rank lists for {} branches", ranks.len(), dims.len())));
    }
    let mut total = 0;
    let mut core = 1;
    for (d, r) in dims.iter().zip(ranks) {
        if d.len() != r.len() {
            return Err(Error::InvalidRank(format!("{} ranks for a {}-mode branch", r.len(), d.len())));
        }
        let mut prev = 1;
        for (&i, &rn) in d.iter().zip(r) {
            total += prev * i * rn;
            prev = rn;
        }
        core *= prev;
    }
    Ok(total + samples * core)
}

/// Closed-form storage of an `f`-branch model with uniform mode size `i` and
/// rank `r`: `(N − f) r² I + f r I + r^f C K`.
///
/// `f = 1` is TT, `f = 2` and `f = 3` are the two- and three-way structures,
/// and `f = N` is Tucker.
pub fn closed_form_storage(n_modes: usize, f: usize, i: usize, r: usize, c: usize, k: usize) -> usize {
    (n_modes - f) * r * r * i + f * r * i + r.pow(f as u32) * c * k
}

/// Storage relative to the raw training data: `stored / (C K ∏ I_n)`.
pub fn normalized_storage(stored: usize, samples: usize, shape: &[usize]) -> f64 {
    let raw = samples as f64 * shape.iter().map(|&i| i as f64).product::<f64>();
    stored as f64 / raw
}

/// `g(f) = (N − f) r² I + f r I + r^f C K` over the reals.
pub fn storage_g(f: f64, n_modes: usize, r: f64, i: f64, c: f64, k: f64) -> f64 {
    (n_modes as f64 - f) * r * r * i + f * r * i + r.powf(f) * c * k
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalBranch {
    /// `log_r((r² I − r I) / (C K ln r))`.
    pub raw: f64,
    /// `raw` rounded, at least 1, and at most `N` when a mode count is given.
    pub rounded: usize,
}

/// Branch count minimizing the storage `g(f)`.
pub fn optimal_branch_count(r: usize, i: usize, c: usize, k: usize, n_modes: Option<usize>) -> Result<OptimalBranch> {
    if r < 2 {
        return Err(Error::InvalidParameter(format!("rank {r} < 2 leaves the logarithm base degenerate")));
    }
    if i == 0 || c == 0 || k == 0 {
        return Err(Error::InvalidParameter("mode size, classes and samples must be positive".into()));
    }
    let (rf, i, ck) = (r as f64, i as f64, (c * k) as f64);
    let arg = (rf * rf * i - rf * i) / (ck * rf.ln());
    let raw = arg.ln() / rf.ln();
    let mut rounded = if raw.is_finite() { raw.round().max(1.0) as usize } else { 1 };
    if let Some(n) = n_modes {
        rounded = rounded.min(n.max(1));
    }
    Ok(OptimalBranch { raw, rounded })
}
