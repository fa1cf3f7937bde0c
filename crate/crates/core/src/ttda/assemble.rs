use nalgebra::DMatrix;

use crate::discriminant::symmetrize;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;
use crate::tt::TtChain;

/// `L(𝒰_1 ×₃¹ … ×₃¹ 𝒰_{n-1})` as a `D_L × R_{n-1}` matrix (`[1]` for the
/// first factor).
fn left_part<T: Scalar>(chain: &TtChain<T>, n: usize) -> Result<DMatrix<T>> {
    if n == 0 {
        return Ok(DMatrix::identity(1, 1));
    }
    Ok(chain.contract(0, n)?.left_unfold())
}

/// The 2N-mode scatter tensor 𝒮 grouped as a six-mode tensor
/// `(D_L, I_n, D_R, D_L, I_n, D_R)` around factor `n`.
fn grouped_scatter<T: Scalar>(s: &DMatrix<T>, dims: &[usize], n: usize) -> Result<DenseTensor<T>> {
    let d: usize = dims.iter().product();
    if s.shape() != (d, d) {
        return Err(Error::ShapeMismatch(format!("scatter is {:?}, chain dimension is {d}", s.shape())));
    }
    let dl: usize = dims[..n].iter().product();
    let dr: usize = dims[n + 1..].iter().product();
    DenseTensor::new(vec![dl, dims[n], dr, dl, dims[n], dr], s.as_slice().to_vec())
}

/// Assembles `𝒜_n` from the current chain and the scatter matrix `S`
/// (`D × D`, rows and columns in the chain's canonical order).
///
/// For `n < N − 1` (zero-based) the result has modes
/// `(R_{n-1}, I_n, R_n, R_{n-1}, I_n, R_n)` and satisfies
/// `vec(𝒰_n)ᵀ T_3(𝒜_n) vec(𝒰_n) = tr(UᵀSU)`. For the last factor it has modes
/// `(R_{N-1}, I_N, R_{N-1}, I_N)` and
/// `tr(L(𝒰_N)ᵀ T_2(𝒜_N) L(𝒰_N)) = tr(UᵀSU)`. Factor `n` itself is not read.
pub fn assemble_an<T: Scalar>(chain: &TtChain<T>, s: &DMatrix<T>, n: usize) -> Result<DenseTensor<T>> {
    let order = chain.len();
    if n >= order {
        return Err(Error::ModeOutOfRange { mode: n, order });
    }
    if chain.factor(0).left_rank() != 1 {
        return Err(Error::InvalidRank("assembly needs a chain with R_0 = 1".into()));
    }
    let dims = chain.dims();
    let lt = left_part(chain, n)?.transpose();
    let grouped = grouped_scatter(s, &dims, n)?;
    let reduced = grouped.mode_product(0, &lt)?.mode_product(3, &lt)?;

    if n + 1 == order {
        let sh = reduced.shape().to_vec();
        return reduced.into_shape(&[sh[0], sh[1], sh[3], sh[4]]);
    }

    // Σ_r over the dangling R_N bond of the right part
    let right = chain.contract(n + 1, order)?;
    let r_n = right.shape()[0];
    let r_last = *right.shape().last().unwrap();
    let dr = right.len() / (r_n * r_last);
    let right_mat = right.unfold(1);
    let mut acc: Option<DenseTensor<T>> = None;
    for r in 0..r_last {
        let rr = right_mat.columns(r * dr, dr).into_owned();
        let term = reduced.mode_product(2, &rr)?.mode_product(5, &rr)?;
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term)?,
        });
    }
    Ok(acc.expect("R_N ≥ 1"))
}

/// `T_3(𝒜_n)` (or `T_2(𝒜_N)` for the last factor), symmetrized.
pub fn an_matrix<T: Scalar>(chain: &TtChain<T>, s: &DMatrix<T>, n: usize) -> Result<DMatrix<T>> {
    let a = assemble_an(chain, s, n)?;
    let half = a.order() / 2;
    let mut m = a.unfold(half);
    symmetrize(&mut m);
    Ok(m)
}
