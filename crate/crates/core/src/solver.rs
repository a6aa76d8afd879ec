//! TN and ATN alternating solvers for the TT neighborhood preserving embedding.
//!
//! Both variants minimize `tr(E^T Z E)` over left-orthonormal chains, one core
//! at a time. TN builds the exact quadratic form of each core by tensor-network
//! contraction; ATN instead fits the chain to the smallest eigenvectors of `Z`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, AffinityConfig, GraphOutput};
use crate::linalg::{symmetric_eigen_ascending, symmetrize};
use crate::stiefel::{minimize, Objective, OptimizerConfig, Termination};
use crate::tensor::{kronecker, left_unfold, merge_product, partial_trace, right_unfold, DenseTensor, ModeList};
use crate::tt::{
    contract_chain, left_orthogonalize, prefix_tensor, suffix_tensor, tt_svd, RankReduction, TtChain, TtCore,
    TtSvdConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Tn,
    Atn,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tn" => Ok(Variant::Tn),
            "atn" => Ok(Variant::Atn),
            other => Err(Error::InvalidArgument(format!("unknown variant {other:?}, expected tn or atn"))),
        }
    }
}

pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub variant: Variant,
    pub tt: TtSvdConfig,
    pub max_sweeps: usize,
    pub core_change_tol: f64,
    pub optimizer: OptimizerConfig,
    /// Bytes allowed for TN contraction intermediates.
    pub memory_budget: u64,
    pub ky_fan_tol: f64,
}

impl SolverConfig {
    pub fn new(variant: Variant, tau: f64) -> Self {
        SolverConfig {
            variant,
            tt: TtSvdConfig::new(tau),
            max_sweeps: 50,
            core_change_tol: 1e-6,
            optimizer: OptimizerConfig::default(),
            memory_budget: DEFAULT_MEMORY_BUDGET,
            ky_fan_tol: 1e-8,
        }
    }
}

/// `tr(E^T Z E)` for the chain's contracted basis.
pub fn objective(z: &DMatrix<f64>, chain: &TtChain) -> f64 {
    let e = contract_chain(chain, None);
    (e.transpose() * z * &e).trace()
}

/// `Z` viewed as the `2n`-mode tensor `I_1 x ... x I_n x I_1 x ... x I_n`.
pub fn gram_tensor(z: &DMatrix<f64>, mode_dims: &[usize]) -> Result<DenseTensor> {
    let d: usize = mode_dims.iter().product();
    if z.nrows() != d || z.ncols() != d {
        return Err(Error::ShapeMismatch(format!(
            "Z is {}x{}, mode dims {:?} need {d}x{d}",
            z.nrows(),
            z.ncols(),
            mode_dims
        )));
    }
    let mut dims = mode_dims.to_vec();
    dims.extend_from_slice(mode_dims);
    DenseTensor::from_matrix(z, dims)
}

fn check_core_index(chain: &TtChain, k: usize) -> Result<()> {
    if k == 0 || k > chain.order() {
        return Err(Error::InvalidArgument(format!(
            "core index {k} outside 1..={}",
            chain.order()
        )));
    }
    Ok(())
}

/// A core's quadratic form as a tensor and as its symmetrized matricization.
#[derive(Clone, Debug)]
pub struct QuadraticForm {
    pub tensor: DenseTensor,
    pub matrix: DMatrix<f64>,
}

/// Estimated peak bytes for [`build_a`] at core `k`: the largest intermediate
/// together with the permuted operand copy and the product.
pub fn tn_memory_estimate(chain: &TtChain, k: usize) -> u128 {
    let dims: Vec<u128> = chain.mode_dims().iter().map(|&x| x as u128).collect();
    let d: u128 = dims.iter().product();
    let left: u128 = dims[..k].iter().product();
    let r_prev = chain.core(k).dims().0 as u128;
    let r_k = chain.core(k).dims().2 as u128;
    let r_n = chain.embedding_dim() as u128;
    let i_k = dims[k - 1];
    let z = d * d;
    let a_b = d * left * r_k * r_n;
    let a_c = d * i_k * r_k * r_n * r_prev;
    let a_d = left * i_k * r_k * r_n * r_prev * r_k * r_n;
    let a_e = (r_prev * i_k * r_k * r_n).pow(2);
    let steps = [(z, a_b), (a_b, a_c), (a_c, a_d), (a_d, a_e), (a_e, a_e)];
    steps.iter().map(|&(i, o)| 2 * i + o).max().unwrap() * 8
}

/// The 6-mode quadratic form of core `k < n` and its
/// `(R_{k-1} I_k R_k) x (R_{k-1} I_k R_k)` matrix, so that
/// `vec(U_k)^T A vec(U_k) = tr(E^T Z E)`.
pub fn build_a(zt: &DenseTensor, chain: &TtChain, k: usize, memory_budget: u64) -> Result<QuadraticForm> {
    check_core_index(chain, k)?;
    let n = chain.order();
    if k >= n {
        return Err(Error::InvalidArgument(format!(
            "the A form is defined for cores 1..{n}, got {k}; use build_b for the last core"
        )));
    }
    let required = tn_memory_estimate(chain, k);
    if required > memory_budget as u128 {
        return Err(Error::MemoryBudget {
            core: k,
            required,
            budget: memory_budget as u128,
        });
    }
    let t1 = prefix_tensor(chain, k);
    let tn = suffix_tensor(chain, k);
    let span = ModeList::span;
    // [I_1..I_n, I_1'..I_k', R_k', R_n']
    let a_b = merge_product(zt, &tn, &span(n + k + 1, 2 * n), &span(2, n - k + 1))?;
    // [I_1..I_n, I_k', R_k', R_n', R_{k-1}']
    let a_c = merge_product(&a_b, &t1, &span(n + 1, n + k - 1), &span(1, k - 1))?;
    drop(a_b);
    // [I_1..I_k, I_k', R_k', R_n', R_{k-1}', R_k, R_n]
    let a_d = merge_product(&a_c, &tn, &span(k + 1, n), &span(2, n - k + 1))?;
    drop(a_c);
    // [I_k, I_k', R_k', R_n', R_{k-1}', R_k, R_n, R_{k-1}]
    let a_e = merge_product(&a_d, &t1, &span(1, k - 1), &span(1, k - 1))?;
    drop(a_d);
    // [R_{k-1}, I_k, R_k, R_n, R_{k-1}', I_k', R_k', R_n']
    let ordered = a_e.permute(&[7, 0, 5, 6, 4, 1, 2, 3])?;
    let tensor = partial_trace(&ordered, 4, 8)?;
    let m = tensor.dims()[..3].iter().product();
    let matrix = symmetrize(&DMatrix::from_column_slice(m, m, tensor.data()));
    Ok(QuadraticForm { tensor, matrix })
}

/// The 4-mode form of the last core and its `(R_{n-1} I_n)`-square matrix, so
/// that `tr(L(U_n)^T B L(U_n)) = tr(E^T Z E)`.
pub fn build_b(zt: &DenseTensor, chain: &TtChain) -> Result<QuadraticForm> {
    let n = chain.order();
    let t1 = prefix_tensor(chain, n);
    let span = ModeList::span;
    // [I_1..I_n, I_n', R_{n-1}']
    let b_b = merge_product(zt, &t1, &span(n + 1, 2 * n - 1), &span(1, n - 1))?;
    // [I_n, I_n', R_{n-1}', R_{n-1}]
    let b = merge_product(&b_b, &t1, &span(1, n - 1), &span(1, n - 1))?;
    let tensor = b.permute(&[3, 0, 2, 1])?;
    let m = tensor.dims()[0] * tensor.dims()[1];
    let matrix = symmetrize(&DMatrix::from_column_slice(m, m, tensor.data()));
    Ok(QuadraticForm { tensor, matrix })
}

/// `vec(X)^T A vec(X)` with gradient `2 A vec(X)` folded back to the shape of `X`.
pub struct VecQuadratic {
    pub a: DMatrix<f64>,
}

impl Objective for VecQuadratic {
    fn value(&self, x: &DMatrix<f64>) -> f64 {
        let v = DVector::from_column_slice(x.as_slice());
        v.dot(&(&self.a * &v))
    }
    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let v = DVector::from_column_slice(x.as_slice());
        let g = &self.a * v * 2.0;
        DMatrix::from_column_slice(x.nrows(), x.ncols(), g.as_slice())
    }
}

/// `tr(X^T B X)` with gradient `2 B X`.
pub struct TraceQuadratic {
    pub b: DMatrix<f64>,
}

impl Objective for TraceQuadratic {
    fn value(&self, x: &DMatrix<f64>) -> f64 {
        x.dot(&(&self.b * x))
    }
    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.b * x * 2.0
    }
}

/// Result of one core update.
#[derive(Clone, Debug)]
pub struct CoreUpdate {
    pub chain: TtChain,
    /// Subproblem value before and after the update.
    pub before: f64,
    pub after: f64,
    pub steps: usize,
    pub termination: Termination,
}

fn replace_core(chain: &TtChain, k: usize, x: &DMatrix<f64>) -> Result<TtChain> {
    let (r_prev, i, _) = chain.core(k).dims();
    chain.with_core(k, TtCore::from_left_unfolding(x, r_prev, i)?)
}

/// Exact TN update of core `k` against the quadratic form built from `Z`.
pub fn update_core_tn(
    zt: &DenseTensor,
    chain: &TtChain,
    k: usize,
    opt: &OptimizerConfig,
    memory_budget: u64,
) -> Result<CoreUpdate> {
    check_core_index(chain, k)?;
    let x0 = chain.core(k).left_unfold();
    let res = if k < chain.order() {
        let a = build_a(zt, chain, k, memory_budget)?.matrix;
        minimize(&VecQuadratic { a }, &x0, opt)?
    } else {
        let b = build_b(zt, chain)?.matrix;
        minimize(&TraceQuadratic { b }, &x0, opt)?
    };
    Ok(CoreUpdate {
        chain: replace_core(chain, k, &res.x)?,
        before: res.f_trace[0],
        after: res.final_value(),
        steps: res.accepted_steps,
        termination: res.termination,
    })
}

/// Eigenvectors of the `r` smallest eigenvalues of `z`, ascending, sign-fixed.
pub fn smallest_eigvecs(z: &DMatrix<f64>, r: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if r == 0 || r > z.nrows() {
        return Err(Error::InvalidArgument(format!(
            "requested {r} eigenvectors of a {}x{} matrix",
            z.nrows(),
            z.ncols()
        )));
    }
    let (vals, vecs) = symmetric_eigen_ascending(z)?;
    Ok((vals.rows(0, r).into_owned(), vecs.columns(0, r).into_owned()))
}

/// `L(T_1)` (`[[1]]` for `k = 1`), `Q = R(T_n)` (`None` for `k = n`) and `C = T_k(V)`.
fn atn_parts(
    chain: &TtChain,
    k: usize,
    v: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, Option<DMatrix<f64>>, DMatrix<f64>)> {
    check_core_index(chain, k)?;
    let dims = chain.mode_dims();
    let d: usize = dims.iter().product();
    if v.nrows() != d || v.ncols() != chain.embedding_dim() {
        return Err(Error::ShapeMismatch(format!(
            "V is {}x{}, expected {d}x{}",
            v.nrows(),
            v.ncols(),
            chain.embedding_dim()
        )));
    }
    let lt1 = if k == 1 {
        DMatrix::from_element(1, 1, 1.0)
    } else {
        left_unfold(&prefix_tensor(chain, k))?
    };
    let q = if k == chain.order() {
        None
    } else {
        Some(right_unfold(&suffix_tensor(chain, k))?)
    };
    let rows: usize = dims[..k].iter().product();
    let c = DMatrix::from_column_slice(rows, v.len() / rows, v.as_slice());
    Ok((lt1, q, c))
}

/// `P = I_{I_k} (x) L(T_1)`, `Q = R(T_n)` and `C = T_k(V)` for core `k`, so that
/// `P L(U_k) Q` is `E` regrouped the same way as `C`.
pub fn build_pqc(
    chain: &TtChain,
    k: usize,
    v: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let (lt1, q, c) = atn_parts(chain, k, v)?;
    let i_k = chain.mode_dims()[k - 1];
    let p = kronecker(&DMatrix::identity(i_k, i_k), &lt1);
    let r = chain.embedding_dim();
    Ok((p, q.unwrap_or_else(|| DMatrix::identity(r, r)), c))
}

/// `||P X Q - C||_F^2`
pub fn atn_surrogate(p: &DMatrix<f64>, q: &DMatrix<f64>, c: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    (p * x * q - c).norm_squared()
}

/// `1/2 ||P X Q - C||_F^2` in the precomputed form
/// `1/2 (tr(X^T M X H) - 2 tr(X^T F) + ||C||^2)` with `M = P^T P`, `H = Q Q^T`,
/// `F = P^T C Q^T`. The gradient is `P^T (P X Q - C) Q^T = M X H - F`.
pub struct AtnObjective {
    m: Wing,
    /// `None` when `Q` is the identity.
    h: Option<DMatrix<f64>>,
    f: DMatrix<f64>,
    c_norm2: f64,
}

enum Wing {
    Dense(DMatrix<f64>),
    /// `I_{i} (x) G`, applied blockwise.
    Kron { g: DMatrix<f64>, i: usize },
}

impl Wing {
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Wing::Dense(m) => m * x,
            Wing::Kron { g, i } => {
                let r = g.nrows();
                let blocks = DMatrix::from_column_slice(r, i * x.ncols(), x.as_slice());
                let out = g * blocks;
                DMatrix::from_vec(x.nrows(), x.ncols(), out.data.into())
            }
        }
    }
}

impl AtnObjective {
    pub fn new(p: &DMatrix<f64>, q: &DMatrix<f64>, c: &DMatrix<f64>) -> Self {
        AtnObjective {
            m: Wing::Dense(symmetrize(&p.tr_mul(p))),
            h: Some(symmetrize(&(q * q.transpose()))),
            f: p.tr_mul(c) * q.transpose(),
            c_norm2: c.norm_squared(),
        }
    }

    /// Same objective for `P = I_{i_k} (x) L(T_1)` given only `L(T_1)`, never forming `P`.
    /// `q = None` stands for the identity.
    pub fn from_prefix(lt1: &DMatrix<f64>, i_k: usize, q: Option<&DMatrix<f64>>, c: &DMatrix<f64>) -> Self {
        let r = lt1.ncols();
        let rows = lt1.nrows();
        // P^T C blockwise: C regrouped as (I_1..I_{k-1}) x (i_k * cols)
        let c_blocks = DMatrix::from_column_slice(rows, i_k * c.ncols(), c.as_slice());
        let ptc = lt1.tr_mul(&c_blocks);
        let ptc = DMatrix::from_vec(r * i_k, c.ncols(), ptc.data.into());
        AtnObjective {
            m: Wing::Kron {
                g: symmetrize(&lt1.tr_mul(lt1)),
                i: i_k,
            },
            h: q.map(|q| symmetrize(&(q * q.transpose()))),
            f: match q {
                Some(q) => ptc * q.transpose(),
                None => ptc,
            },
            c_norm2: c.norm_squared(),
        }
    }

    fn mxh(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mx = self.m.apply(x);
        match &self.h {
            Some(h) => mx * h,
            None => mx,
        }
    }
}

impl Objective for AtnObjective {
    fn value(&self, x: &DMatrix<f64>) -> f64 {
        let quad = x.dot(&self.mxh(x));
        0.5 * (quad - 2.0 * x.dot(&self.f) + self.c_norm2)
    }
    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.mxh(x) - &self.f
    }
}

/// ATN update of core `k` towards `v`. `before`/`after` are `||PXQ - C||_F^2`.
pub fn update_core_atn(chain: &TtChain, k: usize, v: &DMatrix<f64>, opt: &OptimizerConfig) -> Result<CoreUpdate> {
    let (lt1, q, c) = atn_parts(chain, k, v)?;
    let i_k = chain.mode_dims()[k - 1];
    // ||P X Q - C||^2 with P X formed blockwise
    let surrogate = |x: &DMatrix<f64>| {
        let blocks = DMatrix::from_column_slice(lt1.ncols(), i_k * x.ncols(), x.as_slice());
        let px = &lt1 * blocks;
        let px = DMatrix::from_vec(lt1.nrows() * i_k, x.ncols(), px.data.into());
        match &q {
            Some(q) => (px * q - &c).norm_squared(),
            None => (px - &c).norm_squared(),
        }
    };
    let x0 = chain.core(k).left_unfold();
    let res = minimize(&AtnObjective::from_prefix(&lt1, i_k, q.as_ref(), &c), &x0, opt)?;
    Ok(CoreUpdate {
        before: surrogate(&x0),
        after: surrogate(&res.x),
        chain: replace_core(chain, k, &res.x)?,
        steps: res.accepted_steps,
        termination: res.termination,
    })
}

/// Graph, Gram target and its spectrum, shared by every fit on the same data.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub mode_dims: Vec<usize>,
    /// `d x N`, one vectorized sample per column.
    pub data: DMatrix<f64>,
    pub graph: GraphOutput,
    pub z_tensor: DenseTensor,
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub graph_seconds: f64,
    pub eigen_seconds: f64,
}

impl Prepared {
    pub fn z(&self) -> &DMatrix<f64> {
        &self.graph.z
    }

    /// Sum of the `r` smallest eigenvalues of `Z`.
    pub fn ky_fan_bound(&self, r: usize) -> f64 {
        self.eigenvalues.rows(0, r.min(self.eigenvalues.len())).sum()
    }
}

pub fn prepare(data: DMatrix<f64>, mode_dims: &[usize], graph_cfg: &AffinityConfig) -> Result<Prepared> {
    let d: usize = mode_dims.iter().product();
    if data.nrows() != d {
        return Err(Error::ShapeMismatch(format!(
            "samples have dimension {}, mode dims {:?} give {d}",
            data.nrows(),
            mode_dims
        )));
    }
    if data.ncols() < 2 {
        return Err(Error::InvalidArgument("fitting needs at least 2 samples".into()));
    }
    let t0 = Instant::now();
    let graph = build_graph(&data, graph_cfg)?;
    let z_tensor = gram_tensor(&graph.z, mode_dims)?;
    let graph_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let (eigenvalues, eigenvectors) = symmetric_eigen_ascending(&graph.z)?;
    let eigen_seconds = t1.elapsed().as_secs_f64();
    Ok(Prepared {
        mode_dims: mode_dims.to_vec(),
        data,
        graph,
        z_tensor,
        eigenvalues,
        eigenvectors,
        graph_seconds,
        eigen_seconds,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitTermination {
    CoreChange,
    MaxSweeps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateStep {
    pub sweep: usize,
    pub core: usize,
    pub before: f64,
    pub after: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub graph_seconds: f64,
    pub eigen_seconds: f64,
    pub init_seconds: f64,
    pub sweep_seconds: f64,
}

impl PhaseTimings {
    pub fn total(&self) -> f64 {
        self.graph_seconds + self.eigen_seconds + self.init_seconds + self.sweep_seconds
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub variant: Variant,
    pub ranks: Vec<usize>,
    pub epsilon: f64,
    pub initial_objective: f64,
    /// `tr(E^T Z E)` after each sweep.
    pub objective_trace: Vec<f64>,
    /// Per-core `||PXQ - C||_F^2` before and after each ATN update.
    pub surrogate_trace: Vec<SurrogateStep>,
    /// `max_k ||U_k^(t) - U_k^(t-1)||_F` per sweep.
    pub core_change_trace: Vec<f64>,
    pub sweeps_run: usize,
    pub termination: FitTermination,
    pub ky_fan_bound: f64,
    pub rank_reductions: Vec<RankReduction>,
    pub timings: PhaseTimings,
}

fn check_ky_fan(obj: f64, bound: f64, tol: f64, sweep: usize) -> Result<()> {
    if obj < bound - tol * (1.0 + bound.abs()) {
        return Err(Error::Numeric(format!(
            "objective {obj:e} below the eigenvalue lower bound {bound:e} after sweep {sweep}"
        )));
    }
    Ok(())
}

/// Runs the alternating solver from a TT-SVD initialization.
pub fn fit_prepared(prep: &Prepared, cfg: &SolverConfig) -> Result<(TtChain, SolverReport)> {
    let t_init = Instant::now();
    let mut dims = prep.mode_dims.clone();
    dims.push(prep.data.ncols());
    let dataset = DenseTensor::new(dims, prep.data.as_slice().to_vec())?;
    let (mut chain, rank_reductions) = left_orthogonalize(&tt_svd(&dataset, &cfg.tt)?)?;
    let init_seconds = t_init.elapsed().as_secs_f64();

    let r_n = chain.embedding_dim();
    let ky_fan_bound = prep.ky_fan_bound(r_n);
    let v = match cfg.variant {
        Variant::Atn => Some(prep.eigenvectors.columns(0, r_n).into_owned()),
        Variant::Tn => None,
    };
    let z = prep.z();
    let initial_objective = objective(z, &chain);
    check_ky_fan(initial_objective, ky_fan_bound, cfg.ky_fan_tol, 0)?;

    let t_sweeps = Instant::now();
    let mut objective_trace = Vec::new();
    let mut surrogate_trace = Vec::new();
    let mut core_change_trace = Vec::new();
    let mut termination = FitTermination::MaxSweeps;
    for sweep in 1..=cfg.max_sweeps {
        let start = chain.clone();
        for k in 1..=chain.order() {
            let upd = match &v {
                Some(v) => update_core_atn(&chain, k, v, &cfg.optimizer)?,
                None => update_core_tn(&prep.z_tensor, &chain, k, &cfg.optimizer, cfg.memory_budget)?,
            };
            if v.is_some() {
                surrogate_trace.push(SurrogateStep {
                    sweep,
                    core: k,
                    before: upd.before,
                    after: upd.after,
                });
            }
            chain = upd.chain;
        }
        let obj = objective(z, &chain);
        check_ky_fan(obj, ky_fan_bound, cfg.ky_fan_tol, sweep)?;
        let change = start
            .cores()
            .iter()
            .zip(chain.cores())
            .map(|(a, b)| (a.tensor().data().iter().zip(b.tensor().data()))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt())
            .fold(0.0, f64::max);
        log::debug!("sweep {sweep}: objective {obj:e}, core change {change:e}");
        objective_trace.push(obj);
        core_change_trace.push(change);
        if change < cfg.core_change_tol {
            termination = FitTermination::CoreChange;
            break;
        }
    }
    let sweep_seconds = t_sweeps.elapsed().as_secs_f64();
    let report = SolverReport {
        variant: cfg.variant,
        ranks: chain.ranks(),
        epsilon: prep.graph.epsilon,
        initial_objective,
        sweeps_run: objective_trace.len(),
        objective_trace,
        surrogate_trace,
        core_change_trace,
        termination,
        ky_fan_bound,
        rank_reductions,
        timings: PhaseTimings {
            graph_seconds: prep.graph_seconds,
            eigen_seconds: prep.eigen_seconds,
            init_seconds,
            sweep_seconds,
        },
    };
    Ok((chain, report))
}

/// Graph construction plus [`fit_prepared`] on a list of equally shaped samples.
pub fn fit(
    samples: &[DenseTensor],
    graph_cfg: &AffinityConfig,
    cfg: &SolverConfig,
) -> Result<(TtChain, SolverReport)> {
    let data = crate::graph::samples_to_matrix(samples)?;
    let dims = samples[0].dims().to_vec();
    let prep = prepare(data, &dims, graph_cfg)?;
    fit_prepared(&prep, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{orthonormality_error, qr_positive};
    use crate::stiefel::gradient_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gauss(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
    }

    fn random_chain(dims: &[usize], ranks: &[usize], seed: u64) -> TtChain {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cores = Vec::new();
        let mut r_prev = 1;
        for (&i, &r) in dims.iter().zip(ranks) {
            let q = qr_positive(&gauss(r_prev * i, r, &mut rng)).0;
            cores.push(TtCore::from_left_unfolding(&q, r_prev, i).unwrap());
            r_prev = r;
        }
        TtChain::new(cores).unwrap()
    }

    fn random_psd(d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = gauss(d, d + 2, &mut rng);
        symmetrize(&(&y * y.transpose()))
    }

    #[test]
    fn objective_trivial_cases() {
        let chain = random_chain(&[2, 2, 2], &[2, 2, 2], 1);
        assert_eq!(objective(&DMatrix::zeros(8, 8), &chain), 0.0);
        assert!((objective(&DMatrix::identity(8, 8), &chain) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn a_reproduces_objective_for_every_core() {
        let dims = [2, 3, 2];
        let chain = random_chain(&dims, &[2, 3, 2], 3);
        let z = random_psd(12, 4);
        let zt = gram_tensor(&z, &dims).unwrap();
        let obj = objective(&z, &chain);
        for k in 1..3 {
            let form = build_a(&zt, &chain, k, DEFAULT_MEMORY_BUDGET).unwrap();
            let (a, b, c) = chain.core(k).dims();
            assert_eq!(form.tensor.dims(), &[a, b, c, a, b, c]);
            let x = chain.core(k).left_unfold();
            let q = VecQuadratic { a: form.matrix.clone() }.value(&x);
            assert!((q - obj).abs() < 1e-9, "k={k}: {q} vs {obj}");
            let min_eig = form.matrix.clone().symmetric_eigen().eigenvalues.min();
            assert!(min_eig > -1e-8 * form.matrix.norm());
        }
        let b = build_b(&zt, &chain).unwrap();
        let x = chain.core(3).left_unfold();
        assert!((TraceQuadratic { b: b.matrix }.value(&x) - obj).abs() < 1e-9);
        assert!(build_a(&zt, &chain, 3, DEFAULT_MEMORY_BUDGET).is_err());
    }

    #[test]
    fn a_matches_polarization() {
        let dims = [2, 2, 2];
        let chain = random_chain(&dims, &[2, 2, 2], 7);
        let z = random_psd(8, 8);
        let zt = gram_tensor(&z, &dims).unwrap();
        for k in 1..3 {
            let a = build_a(&zt, &chain, k, DEFAULT_MEMORY_BUDGET).unwrap().matrix;
            let (r0, i, r1) = chain.core(k).dims();
            let m = r0 * i * r1;
            let f = |u: &DVector<f64>| {
                let core = TtCore::new(DenseTensor::from_vector(u, vec![r0, i, r1]).unwrap()).unwrap();
                objective(&z, &chain.with_core(k, core).unwrap())
            };
            let e = |j: usize| DVector::from_fn(m, |r, _| if r == j { 1.0 } else { 0.0 });
            for p in 0..m {
                for q in 0..m {
                    let val = if p == q {
                        f(&e(p))
                    } else {
                        0.5 * (f(&(e(p) + e(q))) - f(&e(p)) - f(&e(q)))
                    };
                    assert!((val - a[(p, q)]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn b_with_identity_gram() {
        let dims = [2, 3, 2];
        let chain = random_chain(&dims, &[2, 3, 2], 11);
        let zt = gram_tensor(&DMatrix::identity(12, 12), &dims).unwrap();
        let b = build_b(&zt, &chain).unwrap().matrix;
        assert!((b - DMatrix::<f64>::identity(6, 6)).abs().max() < 1e-9);
        let z = random_psd(12, 12);
        let bz = build_b(&gram_tensor(&z, &dims).unwrap(), &chain).unwrap().matrix;
        assert!(bz.trace() <= z.trace() + 1e-9);
    }

    #[test]
    fn zero_gram_gives_zero_forms() {
        let dims = [2, 2, 2];
        let chain = random_chain(&dims, &[2, 2, 2], 5);
        let zt = gram_tensor(&DMatrix::zeros(8, 8), &dims).unwrap();
        assert_eq!(build_a(&zt, &chain, 1, DEFAULT_MEMORY_BUDGET).unwrap().matrix.abs().max(), 0.0);
    }

    #[test]
    fn memory_budget_is_enforced() {
        let dims = [2, 2, 2];
        let chain = random_chain(&dims, &[2, 2, 2], 5);
        let zt = gram_tensor(&DMatrix::identity(8, 8), &dims).unwrap();
        let err = build_a(&zt, &chain, 1, 64).unwrap_err();
        assert!(matches!(err, Error::MemoryBudget { core: 1, .. }));
        assert!(err.to_string().contains("ATN"));
    }

    #[test]
    fn tn_gradients_match_finite_differences() {
        let dims = [2, 3, 2];
        let chain = random_chain(&dims, &[2, 3, 2], 21);
        let zt = gram_tensor(&random_psd(12, 22), &dims).unwrap();
        let a = build_a(&zt, &chain, 2, DEFAULT_MEMORY_BUDGET).unwrap().matrix;
        let x = chain.core(2).left_unfold();
        assert!(gradient_check(&VecQuadratic { a }, &x, 20, 1e-5, false, 1).unwrap() < 1e-5);
        let b = build_b(&zt, &chain).unwrap().matrix;
        let x = chain.core(3).left_unfold();
        assert!(gradient_check(&TraceQuadratic { b }, &x, 20, 1e-5, true, 2).unwrap() < 1e-5);
    }

    #[test]
    fn smallest_eigvecs_cases() {
        let z = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let (vals, v) = smallest_eigvecs(&z, 1).unwrap();
        assert_eq!(vals[0], 1.0);
        assert_eq!(v.column(0).as_slice(), &[0.0, 1.0, 0.0]);

        let id = DMatrix::<f64>::identity(4, 4);
        let (_, v) = smallest_eigvecs(&id, 2).unwrap();
        assert!((&id * &v - &v).abs().max() < 1e-12);
        assert!(orthonormality_error(&v) < 1e-12);

        let z = random_psd(6, 30);
        let (_, v) = smallest_eigvecs(&z, 2).unwrap();
        let full = z.clone().symmetric_eigen().eigenvalues;
        let mut sorted: Vec<f64> = full.iter().copied().collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(((v.transpose() * &z * &v).trace() - sorted[0] - sorted[1]).abs() < 1e-10);
        assert!(smallest_eigvecs(&z, 7).is_err());
    }

    #[test]
    fn pqc_identity() {
        let dims = [2, 3, 2];
        let chain = random_chain(&dims, &[2, 3, 2], 40);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let v = qr_positive(&gauss(12, 2, &mut rng)).0;
        let e = contract_chain(&chain, None);
        let target = (&e - &v).norm_squared();
        for k in 1..=3 {
            let (p, q, c) = build_pqc(&chain, k, &v).unwrap();
            let x = chain.core(k).left_unfold();
            assert!((atn_surrogate(&p, &q, &c, &x) - target).abs() < 1e-9);
            if k == 1 {
                assert_eq!(p, DMatrix::<f64>::identity(2, 2));
            }
            if k == 3 {
                assert_eq!(q, DMatrix::<f64>::identity(2, 2));
            }
            let obj = AtnObjective::new(&p, &q, &c);
            assert!((2.0 * obj.value(&x) - target).abs() < 1e-9);
            let direct = p.transpose() * (&p * &x * &q - &c) * q.transpose();
            assert!((obj.gradient(&x) - direct).abs().max() < 1e-12);
            assert!(gradient_check(&obj, &x, 20, 1e-5, false, k as u64).unwrap() < 1e-5);

            let (lt1, qs, cs) = atn_parts(&chain, k, &v).unwrap();
            let fast = AtnObjective::from_prefix(&lt1, dims[k - 1], qs.as_ref(), &cs);
            let y = gauss(x.nrows(), x.ncols(), &mut rng);
            assert!((fast.value(&y) - obj.value(&y)).abs() < 1e-10 * (1.0 + obj.value(&y)));
            assert!((fast.gradient(&y) - obj.gradient(&y)).abs().max() < 1e-10);
        }
    }

    #[test]
    fn atn_procrustes_with_identity_wings() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let c = qr_positive(&gauss(5, 2, &mut rng)).0;
        let p = DMatrix::<f64>::identity(5, 5);
        let q = DMatrix::<f64>::identity(2, 2);
        let x0 = qr_positive(&gauss(5, 2, &mut rng)).0;
        let res = minimize(&AtnObjective::new(&p, &q, &c), &x0, &OptimizerConfig::default()).unwrap();
        assert!(atn_surrogate(&p, &q, &c, &res.x) < 1e-8);

        // starting at the exact fit does not move
        let res = minimize(&AtnObjective::new(&p, &q, &c), &c, &OptimizerConfig::default()).unwrap();
        assert_eq!(res.accepted_steps, 0);
    }

    fn clusters(seed: u64) -> Vec<DenseTensor> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..12)
            .map(|s| {
                let centre = if s < 6 { 1.0 } else { -1.0 };
                DenseTensor::from_fn(vec![2, 2, 2], |i| {
                    let base = if i[0] == 0 { centre } else { 0.3 * centre };
                    base + 0.05 * Distribution::<f64>::sample(&StandardNormal, &mut rng)
                })
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn n_equals_one_tn_is_eigenproblem() {
        let samples: Vec<DenseTensor> = clusters(3)
            .into_iter()
            .map(|t| DenseTensor::new(vec![8], t.into_data()).unwrap())
            .collect();
        let mut cfg = SolverConfig::new(Variant::Tn, 0.3);
        cfg.optimizer.grad_tol = 1e-10;
        let (chain, report) = fit(&samples, &AffinityConfig::new(3), &cfg).unwrap();
        let r = chain.embedding_dim();
        assert!((report.objective_trace.last().unwrap() - report.ky_fan_bound).abs() < 1e-8, "{report:?}");
        assert!(r >= 1);
    }

    #[test]
    fn identical_samples_stop_after_one_sweep() {
        let s = DenseTensor::from_fn(vec![2, 2], |i| (i[0] + i[1]) as f64).unwrap();
        let (_, report) = fit(
            &[s.clone(), s],
            &AffinityConfig::new(1),
            &SolverConfig::new(Variant::Tn, 0.5),
        )
        .unwrap();
        assert_eq!(report.initial_objective, 0.0);
        assert_eq!(report.sweeps_run, 1);
        assert_eq!(report.termination, FitTermination::CoreChange);
    }

    #[test]
    fn tn_descends_and_atn_improves_on_clusters() {
        let samples = clusters(9);
        let graph = AffinityConfig::new(3);
        let (chain, report) = fit(&samples, &graph, &SolverConfig::new(Variant::Tn, 0.3)).unwrap();
        assert!(chain.is_left_orthonormal(1e-8));
        let mut prev = report.initial_objective;
        for &o in &report.objective_trace {
            assert!(o <= prev + 1e-10);
            assert!(o >= report.ky_fan_bound - 1e-8);
            prev = o;
        }

        let (chain, report) = fit(&samples, &graph, &SolverConfig::new(Variant::Atn, 0.3)).unwrap();
        assert!(chain.is_left_orthonormal(1e-8));
        assert!(report.objective_trace.last().unwrap() <= &(report.initial_objective + 1e-10));
        for s in &report.surrogate_trace {
            assert!(s.after <= s.before + 1e-10);
        }
        assert_eq!(report.core_change_trace.len(), report.sweeps_run);
    }
}
