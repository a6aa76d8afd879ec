//! Dense n-mode tensors and the contraction primitives used by the TT code.
//!
//! Every tensor is stored with the first mode varying fastest: element
//! `(i_1, ..., i_m)` lives at offset `i_1 + I_1 * (i_2 + I_2 * (i_3 + ...))`.
//! nalgebra's `DMatrix` is column-major, so a left or right unfolding is a
//! zero-copy reinterpretation of the flat data, and so is every reshape.
//!
//! Mode indices in [`ModeList`] and [`partial_trace`] are 1-based, matching
//! the usual notation for merging products (`A x_{2,3}^{1,2} B`).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Mode dimensions `(I_1, ..., I_m)` of a tensor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("a shape needs at least one mode".into()));
        }
        if let Some(p) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidShape(format!("mode {} has dimension 0", p + 1)));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidShape(format!("element count of {dims:?} overflows")))?;
        Ok(Shape(dims))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    /// Number of modes.
    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    /// Flat-offset strides under the mode-1-fastest convention.
    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.0)
    }
}

fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut strides = Vec::with_capacity(dims.len());
    let mut acc = 1;
    for &d in dims {
        strides.push(acc);
        acc *= d;
    }
    strides
}

/// Ordered list of distinct mode indices, given 1-based and stored 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ModeList(Vec<usize>);

impl ModeList {
    pub fn new(one_based: &[usize]) -> Result<Self> {
        let mut idx = Vec::with_capacity(one_based.len());
        for &m in one_based {
            if m == 0 {
                return Err(Error::InvalidModes("mode indices are 1-based; got 0".into()));
            }
            if idx.contains(&(m - 1)) {
                return Err(Error::InvalidModes(format!("mode {m} repeated")));
            }
            idx.push(m - 1);
        }
        Ok(ModeList(idx))
    }

    /// Inclusive 1-based range `first..=last`; empty when `last < first`.
    pub fn span(first: usize, last: usize) -> Self {
        if last < first || last == 0 {
            return ModeList(Vec::new());
        }
        let first = first.max(1);
        ModeList((first - 1..last).collect())
    }

    pub fn empty() -> Self {
        ModeList(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 0-based indices.
    pub fn zero_based(&self) -> &[usize] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if shape.numel() != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {:?} holds {} elements, data has {}",
                shape.dims(),
                shape.numel(),
                data.len()
            )));
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let shape = Shape::new(dims)?;
        let data = vec![0.0; shape.numel()];
        Ok(DenseTensor { shape, data })
    }

    /// Builds a tensor by evaluating `f` at every multi-index.
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let shape = Shape::new(dims)?;
        let mut data = Vec::with_capacity(shape.numel());
        let mut idx = vec![0usize; shape.order()];
        for _ in 0..shape.numel() {
            data.push(f(&idx));
            advance(&mut idx, shape.dims());
        }
        Ok(DenseTensor { shape, data })
    }

    /// Folds a vector back into a tensor of the given dims (inverse of [`vectorize`]).
    pub fn from_vector(v: &DVector<f64>, dims: Vec<usize>) -> Result<Self> {
        DenseTensor::new(dims, v.as_slice().to_vec())
    }

    /// Folds a matrix (column-major) into a tensor; the flat data is kept as is.
    pub fn from_matrix(m: &DMatrix<f64>, dims: Vec<usize>) -> Result<Self> {
        DenseTensor::new(dims, m.as_slice().to_vec())
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn order(&self) -> usize {
        self.shape.order()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order());
        let mut off = 0;
        let mut stride = 1;
        for (&i, &d) in idx.iter().zip(self.dims()) {
            debug_assert!(i < d);
            off += i * stride;
            stride *= d;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: f64) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    /// Reorders modes: output mode `p` is input mode `perm[p]` (0-based).
    pub fn permute(&self, perm: &[usize]) -> Result<DenseTensor> {
        let m = self.order();
        if perm.len() != m {
            return Err(Error::InvalidModes(format!(
                "permutation of length {} for a {m}-mode tensor",
                perm.len()
            )));
        }
        let mut seen = vec![false; m];
        for &p in perm {
            if p >= m || seen[p] {
                return Err(Error::InvalidModes(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let in_strides = self.shape.strides();
        let out_dims: Vec<usize> = perm.iter().map(|&p| self.dims()[p]).collect();
        let src_strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        let mut data = Vec::with_capacity(self.numel());
        let inner = out_dims[0];
        let inner_stride = src_strides[0];
        let mut idx = vec![0usize; m];
        let outer: usize = out_dims[1..].iter().product();
        for _ in 0..outer {
            let base: usize = idx[1..]
                .iter()
                .zip(&src_strides[1..])
                .map(|(i, s)| i * s)
                .sum();
            data.extend((0..inner).map(|i| self.data[base + i * inner_stride]));
            advance(&mut idx[1..], &out_dims[1..]);
        }
        Ok(DenseTensor {
            shape: Shape(out_dims),
            data,
        })
    }
}

/// Odometer increment of a mode-1-fastest multi-index.
fn advance(idx: &mut [usize], dims: &[usize]) {
    for (i, &d) in idx.iter_mut().zip(dims) {
        *i += 1;
        if *i < d {
            return;
        }
        *i = 0;
    }
}

/// Flat data in mode-1-fastest order.
pub fn vectorize(t: &DenseTensor) -> DVector<f64> {
    DVector::from_column_slice(t.data())
}

/// `(I_1...I_{m-1}) x I_m` matricization.
pub fn left_unfold(t: &DenseTensor) -> Result<DMatrix<f64>> {
    if t.order() < 2 {
        return Err(Error::TooFewModes(t.order()));
    }
    let cols = *t.dims().last().unwrap();
    Ok(DMatrix::from_column_slice(t.numel() / cols, cols, t.data()))
}

/// `I_1 x (I_2...I_m)` matricization.
pub fn right_unfold(t: &DenseTensor) -> Result<DMatrix<f64>> {
    if t.order() < 2 {
        return Err(Error::TooFewModes(t.order()));
    }
    let rows = t.dims()[0];
    Ok(DMatrix::from_column_slice(rows, t.numel() / rows, t.data()))
}

/// Replaces the shape, keeping the flat data.
pub fn reshape(t: &DenseTensor, dims: Vec<usize>) -> Result<DenseTensor> {
    let shape = Shape::new(dims)?;
    if shape.numel() != t.numel() {
        return Err(Error::ShapeMismatch(format!(
            "cannot reshape {:?} ({} elements) to {:?} ({} elements)",
            t.dims(),
            t.numel(),
            shape.dims(),
            shape.numel()
        )));
    }
    Ok(DenseTensor {
        shape,
        data: t.data.clone(),
    })
}

/// Tensor merging product `a x_{g1}^{g2} b`.
///
/// Sums over the paired modes `g1(p)` of `a` and `g2(p)` of `b`. The result
/// carries `a`'s surviving modes in order followed by `b`'s surviving modes.
/// A full contraction yields a one-element tensor of shape `[1]`.
pub fn merge_product(
    a: &DenseTensor,
    b: &DenseTensor,
    g1: &ModeList,
    g2: &ModeList,
) -> Result<DenseTensor> {
    if g1.len() != g2.len() {
        return Err(Error::InvalidModes(format!(
            "merge lists differ in length ({} vs {})",
            g1.len(),
            g2.len()
        )));
    }
    for (list, t, name) in [(g1, a, "g1"), (g2, b, "g2")] {
        if let Some(&m) = list.zero_based().iter().find(|&&m| m >= t.order()) {
            return Err(Error::InvalidModes(format!(
                "{name} refers to mode {} of a {}-mode tensor",
                m + 1,
                t.order()
            )));
        }
    }
    for (p, (&ma, &mb)) in g1.zero_based().iter().zip(g2.zero_based()).enumerate() {
        if a.dims()[ma] != b.dims()[mb] {
            return Err(Error::ShapeMismatch(format!(
                "merge pair {}: mode {} of a has dim {}, mode {} of b has dim {}",
                p + 1,
                ma + 1,
                a.dims()[ma],
                mb + 1,
                b.dims()[mb]
            )));
        }
    }

    let free_a: Vec<usize> = (0..a.order())
        .filter(|m| !g1.zero_based().contains(m))
        .collect();
    let free_b: Vec<usize> = (0..b.order())
        .filter(|m| !g2.zero_based().contains(m))
        .collect();

    let perm_a: Vec<usize> = free_a.iter().chain(g1.zero_based()).copied().collect();
    let perm_b: Vec<usize> = g2.zero_based().iter().chain(&free_b).copied().collect();
    let ap = a.permute(&perm_a)?;
    let bp = b.permute(&perm_b)?;

    let rows: usize = free_a.iter().map(|&m| a.dims()[m]).product();
    let inner: usize = g1.zero_based().iter().map(|&m| a.dims()[m]).product();
    let cols: usize = free_b.iter().map(|&m| b.dims()[m]).product();

    let am = DMatrix::from_vec(rows, inner, ap.data);
    let bm = DMatrix::from_vec(inner, cols, bp.data);
    let cm = am * bm;

    let mut dims: Vec<usize> = free_a
        .iter()
        .map(|&m| a.dims()[m])
        .chain(free_b.iter().map(|&m| b.dims()[m]))
        .collect();
    if dims.is_empty() {
        dims.push(1);
    }
    DenseTensor::new(dims, cm.data.into())
}

/// Trace over the slices spanned by 1-based modes `i` and `j`; both modes are dropped.
pub fn partial_trace(t: &DenseTensor, i: usize, j: usize) -> Result<DenseTensor> {
    let m = t.order();
    if i == j || i == 0 || j == 0 || i > m || j > m {
        return Err(Error::InvalidModes(format!(
            "trace modes ({i}, {j}) invalid for a {m}-mode tensor"
        )));
    }
    let (i, j) = (i - 1, j - 1);
    let dim = t.dims()[i];
    if dim != t.dims()[j] {
        return Err(Error::ShapeMismatch(format!(
            "trace modes {} and {} have dims {} and {}",
            i + 1,
            j + 1,
            dim,
            t.dims()[j]
        )));
    }
    let strides = t.shape().strides();
    let diag_stride = strides[i] + strides[j];
    let kept: Vec<usize> = (0..m).filter(|&p| p != i && p != j).collect();
    let out_dims: Vec<usize> = kept.iter().map(|&p| t.dims()[p]).collect();
    let kept_strides: Vec<usize> = kept.iter().map(|&p| strides[p]).collect();
    let numel: usize = out_dims.iter().product();

    let mut data = Vec::with_capacity(numel);
    let mut idx = vec![0usize; out_dims.len()];
    for _ in 0..numel {
        let base: usize = idx.iter().zip(&kept_strides).map(|(a, s)| a * s).sum();
        data.push((0..dim).map(|d| t.data[base + d * diag_stride]).sum());
        advance(&mut idx, &out_dims);
    }
    let dims = if out_dims.is_empty() { vec![1] } else { out_dims };
    DenseTensor::new(dims, data)
}

/// Standard Kronecker product; block `(i, j)` of the result is `a[(i, j)] * b`.
pub fn kronecker(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}
