//! Dense N-mode tensors with first-mode-fastest storage.
//!
//! Entry `(i_1, …, i_N)` (0-based here) lives at linear position
//! `Σ_n i_n · ∏_{m<n} I_m`. Under this layout the vectorization `V(·)`, the
//! reshapes `T_n(·)` and the left/right unfoldings `L(·) = T_{N-1}(·)`,
//! `R(·) = T_1(·)` never move data; they only reinterpret the shape. This is
//! also nalgebra's column-major layout, so an unfolding can be viewed as a
//! `DMatrix` without copying.
//!
//! Mode indices in this API are 0-based. `reshape_tn(n)` keeps the
//! count-based meaning: the first `n` modes become rows.

use nalgebra::{DMatrix, DMatrixView, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Strides of a first-mode-fastest layout.
fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = Vec::with_capacity(shape.len());
    let mut acc = 1;
    for &d in shape {
        s.push(acc);
        acc *= d;
    }
    s
}

/// Advances a multi-index in first-mode-fastest order. Returns false on wrap.
fn advance(idx: &mut [usize], shape: &[usize]) -> bool {
    for (i, &d) in idx.iter_mut().zip(shape) {
        *i += 1;
        if *i < d {
            return true;
        }
        *i = 0;
    }
    false
}

impl<T: Scalar> DenseTensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if let Some(m) = shape.iter().position(|&d| d == 0) {
            return Err(Error::ShapeMismatch(format!("mode {m} has size 0")));
        }
        if product(&shape) != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {:?} needs {} entries, got {}",
                shape,
                product(&shape),
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        assert!(shape.iter().all(|&d| d > 0), "mode sizes must be positive");
        Self { shape: shape.to_vec(), data: vec![T::zero(); product(shape)] }
    }

    /// A 0-mode tensor holding one value.
    pub fn scalar(value: T) -> Self {
        Self { shape: Vec::new(), data: vec![value] }
    }

    /// Builds a tensor by evaluating `f` at every multi-index.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> T) -> Self {
        assert!(shape.iter().all(|&d| d > 0), "mode sizes must be positive");
        let mut data = Vec::with_capacity(product(shape));
        let mut idx = vec![0; shape.len()];
        loop {
            data.push(f(&idx));
            if !advance(&mut idx, shape) {
                break;
            }
        }
        Self { shape: shape.to_vec(), data }
    }

    /// Wraps a matrix as a 2-mode tensor (no data movement).
    pub fn from_matrix(m: &DMatrix<T>) -> Self {
        Self { shape: vec![m.nrows(), m.ncols()], data: m.as_slice().to_vec() }
    }

    /// Reinterprets a matrix's column-major data under `shape`.
    pub fn from_matrix_with_shape(m: DMatrix<T>, shape: &[usize]) -> Result<Self> {
        let (r, c) = m.shape();
        Self::new(shape.to_vec(), m.data.into())
            .map_err(|_| Error::ShapeMismatch(format!("{r}x{c} matrix cannot be reshaped to {shape:?}")))
    }

    pub fn from_vector(v: &DVector<T>, shape: &[usize]) -> Result<Self> {
        Self::new(shape.to_vec(), v.as_slice().to_vec())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut lin = 0;
        let mut stride = 1;
        for (&i, &d) in idx.iter().zip(&self.shape) {
            debug_assert!(i < d);
            lin += i * stride;
            stride *= d;
        }
        lin
    }

    pub fn multi_index(&self, mut lin: usize) -> Vec<usize> {
        self.shape
            .iter()
            .map(|&d| {
                let i = lin % d;
                lin /= d;
                i
            })
            .collect()
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: T) {
        let lin = self.linear_index(idx);
        self.data[lin] = value;
    }

    /// Same data under a new shape with the same number of entries.
    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        if product(shape) != self.len() || shape.contains(&0) {
            return Err(Error::ShapeMismatch(format!("cannot reshape {:?} into {:?}", self.shape, shape)));
        }
        Ok(Self { shape: shape.to_vec(), data: self.data.clone() })
    }

    /// Consuming variant of [`reshape`](Self::reshape).
    pub fn into_shape(self, shape: &[usize]) -> Result<Self> {
        if product(shape) != self.len() || shape.contains(&0) {
            return Err(Error::ShapeMismatch(format!("cannot reshape {:?} into {:?}", self.shape, shape)));
        }
        Ok(Self { shape: shape.to_vec(), data: self.data })
    }

    /// `T_n(·)`: the first `n` modes index rows, the rest columns.
    ///
    /// Valid for `1 ≤ n ≤ N`; `n = N` is the vectorization as a column.
    pub fn reshape_tn(&self, n: usize) -> Result<Self> {
        let order = self.order();
        if n == 0 || n > order {
            return Err(Error::ModeOutOfRange { mode: n, order });
        }
        let rows = product(&self.shape[..n]);
        self.reshape(&[rows, self.len() / rows])
    }

    /// Inverse of [`reshape_tn`](Self::reshape_tn).
    pub fn reshape_tn_inv(matrix: &Self, shape: &[usize]) -> Result<Self> {
        matrix.reshape(shape)
    }

    /// `T_n(·)` as a matrix view; `n = 0` yields a single row.
    pub fn unfold_view(&self, n: usize) -> DMatrixView<'_, T> {
        assert!(n <= self.order(), "unfolding index {n} beyond order {}", self.order());
        let rows = product(&self.shape[..n]);
        DMatrixView::from_slice(&self.data, rows, self.len() / rows)
    }

    /// Owned copy of `T_n(·)`.
    pub fn unfold(&self, n: usize) -> DMatrix<T> {
        self.unfold_view(n).into_owned()
    }

    /// `L(·)`: every mode but the last as rows.
    pub fn left_unfold(&self) -> DMatrix<T> {
        self.unfold(self.order().saturating_sub(1))
    }

    /// `R(·)`: the first mode as rows.
    pub fn right_unfold(&self) -> DMatrix<T> {
        self.unfold(self.order().min(1))
    }

    /// `V(·)` as a column vector.
    pub fn vectorize(&self) -> DVector<T> {
        DVector::from_column_slice(&self.data)
    }

    /// Standard mode-`n` matricization: mode `n` indexes rows, the remaining
    /// modes (in order) index columns.
    pub fn mode_unfold(&self, n: usize) -> Result<DMatrix<T>> {
        let order = self.order();
        if n >= order {
            return Err(Error::ModeOutOfRange { mode: n, order });
        }
        let mut perm: Vec<usize> = Vec::with_capacity(order);
        perm.push(n);
        perm.extend((0..order).filter(|&m| m != n));
        Ok(self.permute(&perm)?.unfold(1))
    }

    /// Reorders modes: output mode `k` is input mode `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let order = self.order();
        if perm.len() != order {
            return Err(Error::ShapeMismatch(format!(
                "permutation of length {} for a {order}-mode tensor",
                perm.len()
            )));
        }
        let mut seen = vec![false; order];
        for &p in perm {
            if p >= order {
                return Err(Error::ModeOutOfRange { mode: p, order });
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::DuplicateMode(p));
            }
        }
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(self.clone());
        }
        let in_strides = strides(&self.shape);
        let out_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let step: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        let mut data = Vec::with_capacity(self.len());
        let mut idx = vec![0; order];
        let mut offset = 0usize;
        loop {
            data.push(self.data[offset]);
            // advance the output multi-index and keep the input offset in sync
            let mut k = 0;
            loop {
                if k == order {
                    return Ok(Self { shape: out_shape, data });
                }
                idx[k] += 1;
                offset += step[k];
                if idx[k] < out_shape[k] {
                    break;
                }
                offset -= step[k] * out_shape[k];
                idx[k] = 0;
                k += 1;
            }
        }
    }

    /// Tensor trace over the paired modes `k1`, `k2`: sums the diagonal of
    /// every matrix slice spanned by those modes. The result keeps the
    /// remaining modes in their original order; tracing a matrix yields a
    /// 0-mode tensor.
    pub fn trace(&self, k1: usize, k2: usize) -> Result<Self> {
        let order = self.order();
        for k in [k1, k2] {
            if k >= order {
                return Err(Error::ModeOutOfRange { mode: k, order });
            }
        }
        if k1 == k2 {
            return Err(Error::DuplicateMode(k1));
        }
        if self.shape[k1] != self.shape[k2] {
            return Err(Error::ShapeMismatch(format!(
                "trace pairs mode {k1} (size {}) with mode {k2} (size {})",
                self.shape[k1], self.shape[k2]
            )));
        }
        let st = strides(&self.shape);
        let diag_step = st[k1] + st[k2];
        let keep: Vec<usize> = (0..order).filter(|&m| m != k1 && m != k2).collect();
        let out_shape: Vec<usize> = keep.iter().map(|&m| self.shape[m]).collect();
        let out_steps: Vec<usize> = keep.iter().map(|&m| st[m]).collect();
        let n = self.shape[k1];
        let mut data = Vec::with_capacity(product(&out_shape));
        let mut idx = vec![0; keep.len()];
        loop {
            let base: usize = idx.iter().zip(&out_steps).map(|(i, s)| i * s).sum();
            let mut acc = T::zero();
            for i in 0..n {
                acc += self.data[base + i * diag_step];
            }
            data.push(acc);
            if !advance(&mut idx, &out_shape) {
                break;
            }
        }
        Ok(Self { shape: out_shape, data })
    }

    /// Mode-`mode` product with a `J × I_mode` matrix: the mode of size
    /// `I_mode` is replaced in place by one of size `J`.
    pub fn mode_product(&self, mode: usize, m: &DMatrix<T>) -> Result<Self> {
        let order = self.order();
        if mode >= order {
            return Err(Error::ModeOutOfRange { mode, order });
        }
        let dim = self.shape[mode];
        if m.ncols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "mode {mode} has size {dim} but the matrix has {} columns",
                m.ncols()
            )));
        }
        let pre = product(&self.shape[..mode]);
        let post = product(&self.shape[mode + 1..]);
        let j = m.nrows();
        let mt = m.transpose();
        let mut out = vec![T::zero(); pre * j * post];
        for p in 0..post {
            let src = DMatrixView::from_slice(&self.data[p * pre * dim..(p + 1) * pre * dim], pre, dim);
            let block = &mut out[p * pre * j..(p + 1) * pre * j];
            let mut dst = nalgebra::DMatrixViewMut::from_slice(block, pre, j);
            dst.gemm(T::one(), &src, &mt, T::zero());
        }
        let mut shape = self.shape.clone();
        shape[mode] = j;
        Ok(Self { shape, data: out })
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn scale(&self, alpha: T) -> Self {
        self.map(|x| x * alpha)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", self.shape, other.shape)));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { shape: self.shape.clone(), data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        Ok(self.sub(other)?.data.iter().fold(T::zero(), |m, &x| m.max(x.abs())))
    }

    /// Lossy precision change, e.g. for persisting in the `f64` file format.
    pub fn cast<U: Scalar>(&self) -> DenseTensor<U> {
        DenseTensor { shape: self.shape.clone(), data: self.data.iter().map(|&x| U::lit(x.as_f64())).collect() }
    }
}

fn check_modes(modes: &[usize], order: usize) -> Result<()> {
    let mut seen = vec![false; order];
    for &m in modes {
        if m >= order {
            return Err(Error::ModeOutOfRange { mode: m, order });
        }
        if std::mem::replace(&mut seen[m], true) {
            return Err(Error::DuplicateMode(m));
        }
    }
    Ok(())
}

/// Tensor merging product: contracts `a` and `b` over the paired modes
/// `a_modes[i] ↔ b_modes[i]`.
///
/// The result lists `a`'s surviving modes in order, followed by `b`'s
/// surviving modes in order. Use [`DenseTensor::permute`] for any other
/// layout. With empty mode lists this is the outer product.
pub fn merge_product<T: Scalar>(
    a: &DenseTensor<T>,
    b: &DenseTensor<T>,
    a_modes: &[usize],
    b_modes: &[usize],
) -> Result<DenseTensor<T>> {
    if a_modes.len() != b_modes.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} modes of a paired with {} modes of b",
            a_modes.len(),
            b_modes.len()
        )));
    }
    check_modes(a_modes, a.order())?;
    check_modes(b_modes, b.order())?;
    for (&ma, &mb) in a_modes.iter().zip(b_modes) {
        if a.shape[ma] != b.shape[mb] {
            return Err(Error::ShapeMismatch(format!(
                "a mode {ma} (size {}) paired with b mode {mb} (size {})",
                a.shape[ma], b.shape[mb]
            )));
        }
    }
    let a_free: Vec<usize> = (0..a.order()).filter(|m| !a_modes.contains(m)).collect();
    let b_free: Vec<usize> = (0..b.order()).filter(|m| !b_modes.contains(m)).collect();

    let a_perm: Vec<usize> = a_free.iter().chain(a_modes).copied().collect();
    let b_perm: Vec<usize> = b_modes.iter().chain(&b_free).copied().collect();
    let ap = a.permute(&a_perm)?;
    let bp = b.permute(&b_perm)?;

    let am = ap.unfold_view(a_free.len());
    let bm = bp.unfold_view(b_modes.len());
    let c = am * bm;

    let shape: Vec<usize> = a_free.iter().map(|&m| a.shape[m]).chain(b_free.iter().map(|&m| b.shape[m])).collect();
    DenseTensor::from_matrix_with_shape(c, &shape)
}

/// Merging product over the first `N-1` modes of an `N`-mode `a` and an
/// `M`-mode `b` (`M ≥ N`), computed as the single matrix product
/// `L(a)ᵀ · T_{N-1}(b)`. The result has shape `(I_N, J_N, …, J_M)`.
pub fn merge_leading<T: Scalar>(a: &DenseTensor<T>, b: &DenseTensor<T>) -> Result<DenseTensor<T>> {
    let n = a.order();
    if n == 0 || b.order() < n {
        return Err(Error::ShapeMismatch(format!(
            "merge_leading needs 1 ≤ order(a) ≤ order(b), got {} and {}",
            n,
            b.order()
        )));
    }
    if a.shape[..n - 1] != b.shape[..n - 1] {
        return Err(Error::ShapeMismatch(format!(
            "leading modes differ: {:?} vs {:?}",
            &a.shape[..n - 1],
            &b.shape[..n - 1]
        )));
    }
    let la = a.unfold_view(n - 1);
    let tb = b.unfold_view(n - 1);
    let c = la.transpose() * tb;
    let shape: Vec<usize> = std::iter::once(a.shape[n - 1]).chain(b.shape[n - 1..].iter().copied()).collect();
    DenseTensor::from_matrix_with_shape(c, &shape)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(shape: &[usize]) -> DenseTensor<f64> {
        let n = product(shape);
        DenseTensor::new(shape.to_vec(), (0..n).map(|x| x as f64 + 1.0).collect()).unwrap()
    }

    #[test]
    fn reshape_tn_dimensions() {
        let t = seq(&[2, 3, 4]);
        assert_eq!(t.reshape_tn(2).unwrap().shape(), &[6, 4]);
        assert_eq!(t.reshape_tn(1).unwrap().shape(), &[2, 12]);
        assert_eq!(t.reshape_tn(3).unwrap().shape(), &[24, 1]);
        assert!(matches!(t.reshape_tn(0), Err(Error::ModeOutOfRange { .. })));
        assert!(matches!(t.reshape_tn(4), Err(Error::ModeOutOfRange { .. })));
    }

    #[test]
    fn reshape_tn_entry_mapping_matches_linear_index_formula() {
        // Y(i1,i2,i3) = M(i1 + 2(i2-1), i3), 1-based, for shape [2,3,4], n = 2
        let t = seq(&[2, 3, 4]);
        let m = t.reshape_tn(2).unwrap();
        let mut checked = 0;
        for i1 in 1..=2 {
            for i2 in 1..=3 {
                for i3 in 1..=4 {
                    let lin = (i1 - 1) + 2 * (i2 - 1) + 6 * (i3 - 1);
                    assert_eq!(t.get(&[i1 - 1, i2 - 1, i3 - 1]), t.data()[lin]);
                    assert_eq!(t.get(&[i1 - 1, i2 - 1, i3 - 1]), m.get(&[i1 + 2 * (i2 - 1) - 1, i3 - 1]));
                    checked += 1;
                }
            }
        }
        assert_eq!(checked, 24);
    }

    #[test]
    fn reshape_inverse_rejects_wrong_product() {
        let m = seq(&[6, 4]);
        assert!(DenseTensor::reshape_tn_inv(&m, &[2, 3, 5]).is_err());
        assert_eq!(DenseTensor::reshape_tn_inv(&m, &[2, 3, 4]).unwrap(), seq(&[2, 3, 4]));
    }

    #[test]
    fn multi_index_roundtrip() {
        let t = seq(&[3, 1, 4, 2]);
        for lin in 0..t.len() {
            assert_eq!(t.linear_index(&t.multi_index(lin)), lin);
        }
    }

    #[test]
    fn trace_over_outer_modes() {
        let t = seq(&[2, 3, 2]);
        let d = t.trace(0, 2).unwrap();
        assert_eq!(d.shape(), &[3]);
        for j in 0..3 {
            assert_eq!(d.get(&[j]), t.get(&[0, j, 0]) + t.get(&[1, j, 1]));
        }
    }

    #[test]
    fn trace_of_identity_slices() {
        let t = DenseTensor::<f64>::from_fn(&[2, 3, 2], |i| if i[0] == i[2] { 1.0 } else { 0.0 });
        let d = t.trace(0, 2).unwrap();
        assert!(d.data().iter().all(|&x| x == 2.0));
    }

    #[test]
    fn trace_of_matrix_is_scalar() {
        let m = seq(&[3, 3]);
        let d = m.trace(1, 0).unwrap();
        assert_eq!(d.order(), 0);
        assert_eq!(d.data(), &[1.0 + 5.0 + 9.0]);
    }

    #[test]
    fn trace_errors() {
        let t = seq(&[2, 3, 2]);
        assert!(matches!(t.trace(0, 1), Err(Error::ShapeMismatch(_))));
        assert!(matches!(t.trace(1, 1), Err(Error::DuplicateMode(1))));
        assert!(matches!(t.trace(0, 5), Err(Error::ModeOutOfRange { .. })));
    }

    #[test]
    fn merge_of_matrices_is_matmul() {
        let a = seq(&[2, 3]);
        let b = seq(&[3, 4]);
        let c = merge_product(&a, &b, &[1], &[0]).unwrap();
        let expected = a.unfold(1) * b.unfold(1);
        assert_eq!(c.shape(), &[2, 4]);
        assert_eq!(c.unfold(1), expected);
    }

    #[test]
    fn merge_errors() {
        let a = seq(&[2, 3]);
        let b = seq(&[3, 4]);
        assert!(matches!(merge_product(&a, &b, &[0], &[0]), Err(Error::ShapeMismatch(_))));
        assert!(matches!(merge_product(&a, &b, &[1, 1], &[0, 0]), Err(Error::DuplicateMode(1))));
        assert!(matches!(merge_product(&a, &b, &[2], &[0]), Err(Error::ModeOutOfRange { .. })));
        assert!(matches!(merge_product(&a, &b, &[1], &[0, 1]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn merge_leading_with_orthonormal_left_unfolding_gives_identity() {
        // columns of L(a) orthonormal: a = reshaped 4x2 slice of the identity
        let mut q = DMatrix::<f64>::zeros(4, 2);
        q[(0, 0)] = 1.0;
        q[(3, 1)] = 1.0;
        let a = DenseTensor::from_matrix_with_shape(q, &[2, 2, 2]).unwrap();
        let c = merge_leading(&a, &a).unwrap();
        assert_eq!(c.shape(), &[2, 2]);
        assert_eq!(c.unfold(1), DMatrix::identity(2, 2));
    }

    #[test]
    fn merge_leading_shape_mismatch() {
        let a = seq(&[2, 3, 2]);
        let b = seq(&[3, 3, 2, 2]);
        assert!(merge_leading(&a, &b).is_err());
        assert!(merge_leading(&seq(&[2, 2, 2]), &seq(&[2, 2])).is_err());
    }

    #[test]
    fn mode_product_matches_definition() {
        let t = seq(&[2, 3, 2]);
        let m = DMatrix::from_fn(4, 3, |i, j| (i as f64) - 2.0 * j as f64);
        let p = t.mode_product(1, &m).unwrap();
        assert_eq!(p.shape(), &[2, 4, 2]);
        for a in 0..2 {
            for j in 0..4 {
                for c in 0..2 {
                    let expect: f64 = (0..3).map(|i| m[(j, i)] * t.get(&[a, i, c])).sum();
                    assert!((p.get(&[a, j, c]) - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn permute_moves_entries() {
        let t = seq(&[2, 3, 4]);
        let p = t.permute(&[2, 0, 1]).unwrap();
        assert_eq!(p.shape(), &[4, 2, 3]);
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    assert_eq!(p.get(&[k, i, j]), t.get(&[i, j, k]));
                }
            }
        }
        assert!(t.permute(&[0, 0, 1]).is_err());
    }

    #[test]
    fn zero_size_mode_rejected() {
        assert!(DenseTensor::<f64>::new(vec![2, 0], vec![]).is_err());
        assert!(DenseTensor::<f64>::new(vec![2, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn mode_unfold_rows_are_mode_fibers() {
        let t = seq(&[2, 3, 4]);
        let m = t.mode_unfold(1).unwrap();
        assert_eq!(m.shape(), (3, 8));
        // column (i, k) -> i + 2k
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    assert_eq!(m[(j, i + 2 * k)], t.get(&[i, j, k]));
                }
            }
        }
    }
}
