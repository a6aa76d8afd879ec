//! Tensor-train subspaces.
//!
//! A chain of cores `U_k` of shape `R_{k-1} x I_k x R_k` (with `R_0 = 1`)
//! spans the column space of `E = L(U_1 x_3^1 U_2 x_3^1 ... x_3^1 U_n)`, a
//! `(I_1...I_n) x R_n` matrix. Embeddings are `t = E^T vec(X)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fix_column_signs, left_singular, orthonormality_error, qr_positive};
use crate::tensor::{left_unfold, right_unfold, vectorize, DenseTensor};

/// One 3-mode core `R_{k-1} x I_k x R_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct TtCore {
    tensor: DenseTensor,
}

impl TtCore {
    pub fn new(tensor: DenseTensor) -> Result<Self> {
        if tensor.order() != 3 {
            return Err(Error::InvalidShape(format!(
                "a TT core has 3 modes, got {:?}",
                tensor.dims()
            )));
        }
        Ok(TtCore { tensor })
    }

    /// Folds a `(r_prev * i) x r_next` left unfolding back into a core.
    pub fn from_left_unfolding(m: &DMatrix<f64>, r_prev: usize, i: usize) -> Result<Self> {
        if m.nrows() != r_prev * i {
            return Err(Error::ShapeMismatch(format!(
                "left unfolding has {} rows, expected {r_prev}*{i}",
                m.nrows()
            )));
        }
        TtCore::new(DenseTensor::from_matrix(m, vec![r_prev, i, m.ncols()])?)
    }

    pub fn tensor(&self) -> &DenseTensor {
        &self.tensor
    }

    /// `(r_prev, i, r_next)`
    pub fn dims(&self) -> (usize, usize, usize) {
        let d = self.tensor.dims();
        (d[0], d[1], d[2])
    }

    pub fn left_unfold(&self) -> DMatrix<f64> {
        left_unfold(&self.tensor).expect("core has 3 modes")
    }

    pub fn right_unfold(&self) -> DMatrix<f64> {
        right_unfold(&self.tensor).expect("core has 3 modes")
    }

    pub fn num_params(&self) -> usize {
        self.tensor.numel()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TtChain {
    cores: Vec<TtCore>,
}

impl TtChain {
    pub fn new(cores: Vec<TtCore>) -> Result<Self> {
        let first = cores
            .first()
            .ok_or_else(|| Error::InvalidShape("a TT chain needs at least one core".into()))?;
        if first.dims().0 != 1 {
            return Err(Error::InvalidShape(format!(
                "first core must have R_0 = 1, got {}",
                first.dims().0
            )));
        }
        for (k, pair) in cores.windows(2).enumerate() {
            if pair[0].dims().2 != pair[1].dims().0 {
                return Err(Error::ShapeMismatch(format!(
                    "core {} ends with rank {} but core {} starts with rank {}",
                    k + 1,
                    pair[0].dims().2,
                    k + 2,
                    pair[1].dims().0
                )));
            }
        }
        Ok(TtChain { cores })
    }

    pub fn cores(&self) -> &[TtCore] {
        &self.cores
    }

    /// Number of cores `n`.
    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn core(&self, k: usize) -> &TtCore {
        &self.cores[k - 1]
    }

    /// Replaces core `k` (1-based), checking rank consistency.
    pub fn with_core(&self, k: usize, core: TtCore) -> Result<TtChain> {
        let mut cores = self.cores.clone();
        cores[k - 1] = core;
        TtChain::new(cores)
    }

    pub fn mode_dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims().1).collect()
    }

    /// `(R_1, ..., R_n)`
    pub fn ranks(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims().2).collect()
    }

    /// `R_n`, the embedding dimension.
    pub fn embedding_dim(&self) -> usize {
        self.cores.last().unwrap().dims().2
    }

    /// `I_1 * ... * I_n`
    pub fn ambient_dim(&self) -> usize {
        self.mode_dims().iter().product()
    }

    /// Worst `max |L(U_k)^T L(U_k) - I|` over all cores.
    pub fn orthonormality_error(&self) -> f64 {
        self.cores
            .iter()
            .map(|c| orthonormality_error(&c.left_unfold()))
            .fold(0.0, f64::max)
    }

    pub fn is_left_orthonormal(&self, tol: f64) -> bool {
        self.orthonormality_error() < tol
    }
}

/// Settings for [`tt_svd`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtSvdConfig {
    /// Singular values below `tau * sigma_max` are dropped at every split.
    pub tau: f64,
    /// Optional per-split upper bound on `R_k`.
    #[serde(default)]
    pub rank_cap: Option<Vec<usize>>,
}

impl TtSvdConfig {
    pub fn new(tau: f64) -> Self {
        TtSvdConfig { tau, rank_cap: None }
    }
}

/// Stacks equally-shaped samples into a dataset tensor whose last mode indexes samples.
pub fn stack_samples(samples: &[DenseTensor]) -> Result<DenseTensor> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty dataset".into()))?;
    let mut data = Vec::with_capacity(first.numel() * samples.len());
    for (i, s) in samples.iter().enumerate() {
        if s.dims() != first.dims() {
            return Err(Error::ShapeMismatch(format!(
                "sample {i} has shape {:?}, sample 0 has {:?}",
                s.dims(),
                first.dims()
            )));
        }
        data.extend_from_slice(s.data());
    }
    let mut dims = first.dims().to_vec();
    dims.push(samples.len());
    DenseTensor::new(dims, data)
}

/// Sequential-SVD TT initialization of an `(n+1)`-mode dataset `I_1 x ... x I_n x N`.
///
/// Returns left-orthonormal cores `U_1..U_n`; the trailing `R_n x N`
/// coefficient factor is dropped.
pub fn tt_svd(dataset: &DenseTensor, cfg: &TtSvdConfig) -> Result<TtChain> {
    tt_svd_with_coefficients(dataset, cfg).map(|(chain, _)| chain)
}

/// As [`tt_svd`], also returning the `R_n x N` coefficients so that
/// `E * coefficients` reconstructs the truncated dataset.
pub fn tt_svd_with_coefficients(
    dataset: &DenseTensor,
    cfg: &TtSvdConfig,
) -> Result<(TtChain, DMatrix<f64>)> {
    if !(cfg.tau > 0.0 && cfg.tau <= 1.0) {
        return Err(Error::InvalidArgument(format!("tau must lie in (0, 1], got {}", cfg.tau)));
    }
    if dataset.order() < 2 {
        return Err(Error::InvalidShape(
            "dataset needs at least one mode plus the sample mode".into(),
        ));
    }
    let dims = dataset.dims();
    let n = dims.len() - 1;
    if let Some(cap) = &cfg.rank_cap {
        if cap.len() != n {
            return Err(Error::InvalidArgument(format!(
                "rank_cap has {} entries for {n} cores",
                cap.len()
            )));
        }
        if cap.contains(&0) {
            return Err(Error::InvalidArgument("rank caps must be positive".into()));
        }
    }

    let mut cores = Vec::with_capacity(n);
    let mut r_prev = 1usize;
    let mut rem = DMatrix::from_column_slice(dims[0], dataset.numel() / dims[0], dataset.data());
    for k in 0..n {
        let (u, s) = left_singular(&rem)?;
        let sigma_max = s.first().copied().unwrap_or(0.0);
        let mut keep = s.iter().filter(|&&x| x >= cfg.tau * sigma_max).count().max(1);
        if let Some(cap) = &cfg.rank_cap {
            keep = keep.min(cap[k]);
        }
        keep = keep.min(u.ncols());
        let mut basis = u.columns(0, keep).into_owned();
        fix_column_signs(&mut basis);
        let coeff = basis.tr_mul(&rem);
        cores.push(TtCore::from_left_unfolding(&basis, r_prev, dims[k])?);
        r_prev = keep;
        rem = if k + 1 < n {
            let rows = keep * dims[k + 1];
            DMatrix::from_vec(rows, coeff.len() / rows, coeff.data.into())
        } else {
            coeff
        };
    }
    Ok((TtChain::new(cores)?, rem))
}

/// Record of a core whose rank had to shrink during orthogonalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReduction {
    pub core: usize,
    pub from: usize,
    pub to: usize,
}

const RANK_TOL: f64 = 1e-12;

/// Left-to-right QR sweep giving every core an orthonormal left unfolding.
///
/// The contracted subspace is preserved; the final triangular factor is
/// discarded since only the span of `E` matters. Rank-deficient unfoldings are
/// truncated through an SVD and reported.
pub fn left_orthogonalize(chain: &TtChain) -> Result<(TtChain, Vec<RankReduction>)> {
    let mut cores = Vec::with_capacity(chain.order());
    let mut reductions = Vec::new();
    let mut carry: Option<DMatrix<f64>> = None;
    for (k, core) in chain.cores().iter().enumerate() {
        let (_, i, r_next) = core.dims();
        let right = match &carry {
            Some(c) => c * core.right_unfold(),
            None => core.right_unfold(),
        };
        let r_prev = right.nrows();
        let l = DMatrix::from_vec(r_prev * i, r_next, right.data.into());

        let (q, r) = qr_positive(&l);
        let diag_max = (0..r.nrows()).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
        let deficient = l.nrows() < r_next
            || (0..r.nrows()).any(|j| r[(j, j)].abs() <= RANK_TOL * diag_max.max(f64::MIN_POSITIVE));
        let (q, r) = if deficient {
            let (u, s) = left_singular(&l)?;
            let smax = s.first().copied().unwrap_or(0.0);
            let keep = s.iter().filter(|&&x| x > RANK_TOL * smax).count().max(1);
            let mut basis = u.columns(0, keep).into_owned();
            fix_column_signs(&mut basis);
            let rest = basis.tr_mul(&l);
            log::warn!("core {}: rank reduced from {} to {}", k + 1, r_next, keep);
            reductions.push(RankReduction {
                core: k + 1,
                from: r_next,
                to: keep,
            });
            (basis, rest)
        } else {
            (q, r)
        };
        cores.push(TtCore::from_left_unfolding(&q, r_prev, i)?);
        carry = Some(r);
    }
    Ok((TtChain::new(cores)?, reductions))
}

/// `L(U_1 x_3^1 ... x_3^1 U_k)` of shape `(I_1...I_k) x R_k`; `k` defaults to `n`.
///
/// Each step applies `B_{j+1} = (I_{I_{j+1}} (x) B_j) L(U_{j+1})`, evaluated as
/// `B_j R(U_{j+1})` reinterpreted with the mode-1-fastest layout, which is the
/// same product without forming the Kronecker factor.
pub fn contract_chain(chain: &TtChain, upto: Option<usize>) -> DMatrix<f64> {
    let k = upto.unwrap_or(chain.order()).clamp(1, chain.order());
    let mut b = chain.core(1).left_unfold();
    for core in &chain.cores()[1..k] {
        let (_, i, r_next) = core.dims();
        let prod = &b * core.right_unfold();
        let rows = b.nrows() * i;
        b = DMatrix::from_vec(rows, r_next, prod.data.into());
    }
    b
}

/// Prefix `T_1 = U_1 x ... x U_{k-1}` as an `I_1 x ... x I_{k-1} x R_{k-1}` tensor.
///
/// For `k = 1` the prefix is empty and this is the one-element tensor `[1]` of shape `[R_0]`.
pub fn prefix_tensor(chain: &TtChain, k: usize) -> DenseTensor {
    if k <= 1 {
        return DenseTensor::new(vec![1], vec![1.0]).unwrap();
    }
    let m = contract_chain(chain, Some(k - 1));
    let mut dims = chain.mode_dims()[..k - 1].to_vec();
    dims.push(m.ncols());
    DenseTensor::from_matrix(&m, dims).unwrap()
}

/// Suffix `T_n = U_{k+1} x ... x U_n` as an `R_k x I_{k+1} x ... x I_n x R_n` tensor.
///
/// For `k = n` the suffix is empty and this is `I_{R_n}` as an `R_n x R_n` tensor.
pub fn suffix_tensor(chain: &TtChain, k: usize) -> DenseTensor {
    let n = chain.order();
    if k >= n {
        let r = chain.embedding_dim();
        return DenseTensor::from_matrix(&DMatrix::identity(r, r), vec![r, r]).unwrap();
    }
    let mut acc = chain.core(n).right_unfold();
    for j in (k + 1..n).rev() {
        let core = chain.core(j);
        let (r_prev, _, _) = core.dims();
        let prod = core.left_unfold() * &acc;
        acc = DMatrix::from_vec(r_prev, prod.len() / r_prev, prod.data.into());
    }
    let mut dims = vec![chain.core(k + 1).dims().0];
    dims.extend_from_slice(&chain.mode_dims()[k..]);
    dims.push(chain.embedding_dim());
    DenseTensor::from_matrix(&acc, dims).unwrap()
}

/// `E^T D` for a `d x N` block of vectorized samples, by sequential core contractions.
pub fn project_columns(chain: &TtChain, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dims = chain.mode_dims();
    let ambient: usize = dims.iter().product();
    if d.nrows() != ambient {
        return Err(Error::ShapeMismatch(format!(
            "samples have dimension {}, chain expects {ambient}",
            d.nrows()
        )));
    }
    let n_samples = d.ncols();
    // w holds (r_{k-1} * i_k) x (i_{k+1} ... i_n * N)
    let mut w = DMatrix::from_column_slice(dims[0], d.len() / dims[0], d.as_slice());
    for (k, core) in chain.cores().iter().enumerate() {
        let t = core.left_unfold().tr_mul(&w);
        w = if k + 1 < dims.len() {
            let rows = t.nrows() * dims[k + 1];
            DMatrix::from_vec(rows, t.len() / rows, t.data.into())
        } else {
            t
        };
    }
    debug_assert_eq!(w.shape(), (chain.embedding_dim(), n_samples));
    Ok(w)
}

/// Embedding `t = E^T vec(X)` of one sample.
pub fn project(chain: &TtChain, sample: &DenseTensor) -> Result<DVector<f64>> {
    let dims = chain.mode_dims();
    if sample.dims() != dims.as_slice() {
        return Err(Error::ShapeMismatch(format!(
            "sample shape {:?} does not match chain modes {:?}",
            sample.dims(),
            dims
        )));
    }
    let v = vectorize(sample);
    let out = project_columns(chain, &DMatrix::from_column_slice(v.len(), 1, v.as_slice()))?;
    Ok(out.column(0).into_owned())
}

/// Parameter counts for storing a TT subspace plus embedded training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StorageCount {
    /// `sum_k R_{k-1} I_k R_k`
    pub factor_params: usize,
    /// `R_n * N_train`
    pub embedded_params: usize,
    pub total: usize,
    /// `(n-1)(I r^2 - r^2) + (I r - r^2) + r N_train`, only for uniform dims and ranks.
    pub closed_form_total: Option<i64>,
}

pub fn storage_count(chain: &TtChain, n_train: usize) -> StorageCount {
    let factor_params = chain.cores().iter().map(TtCore::num_params).sum();
    let embedded_params = chain.embedding_dim() * n_train;
    let dims = chain.mode_dims();
    let ranks = chain.ranks();
    let uniform = dims.windows(2).all(|w| w[0] == w[1]) && ranks.windows(2).all(|w| w[0] == w[1]);
    let closed_form_total = uniform.then(|| {
        let n = dims.len() as i64;
        let i = dims[0] as i64;
        let r = ranks[0] as i64;
        (n - 1) * (i * r * r - r * r) + (i * r - r * r) + r * n_train as i64
    });
    StorageCount {
        factor_params,
        embedded_params,
        total: factor_params + embedded_params,
        closed_form_total,
    }
}
