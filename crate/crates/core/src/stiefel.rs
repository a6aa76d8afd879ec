//! Feasible curvilinear descent on `{X : X^T X = I}` with a Cayley retraction.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{orthonormality_error, qr_positive, symmetrize};

/// Smooth objective with its Euclidean gradient.
pub trait Objective {
    fn value(&self, x: &DMatrix<f64>) -> f64;
    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
}

/// Adapter for a pair of closures.
pub struct FnObjective<F, G> {
    pub f: F,
    pub g: G,
}

impl<F, G> Objective for FnObjective<F, G>
where
    F: Fn(&DMatrix<f64>) -> f64,
    G: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    fn value(&self, x: &DMatrix<f64>) -> f64 {
        (self.f)(x)
    }
    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        (self.g)(x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_inner_iters: usize,
    /// Stop when the projected gradient norm is below `grad_tol * (1 + |f|)`.
    pub grad_tol: f64,
    pub initial_step: f64,
    pub backtrack: f64,
    pub sufficient_decrease: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Compare the gradient oracle against finite differences before starting.
    pub audit_gradient: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_inner_iters: 200,
            grad_tol: 1e-6,
            initial_step: 1e-2,
            backtrack: 0.5,
            sufficient_decrease: 1e-4,
            min_step: 1e-12,
            max_step: 1e2,
            audit_gradient: false,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        let ok = self.max_inner_iters > 0
            && self.grad_tol > 0.0
            && self.initial_step > 0.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.sufficient_decrease > 0.0
            && self.min_step > 0.0
            && self.max_step >= self.min_step;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("bad optimizer config {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    GradTol,
    MaxIters,
    StepUnderflow,
}

#[derive(Clone, Debug)]
pub struct OptimizeResult {
    pub x: DMatrix<f64>,
    /// `f` at the start and after every accepted step.
    pub f_trace: Vec<f64>,
    pub termination: Termination,
    pub accepted_steps: usize,
    /// Largest `max |X^T X - I|` over accepted iterates (before any polish).
    pub max_drift: f64,
}

impl OptimizeResult {
    pub fn final_value(&self) -> f64 {
        *self.f_trace.last().unwrap()
    }
}

pub const FEASIBILITY_TOL: f64 = 1e-8;
const POLISH_TOL: f64 = 1e-10;

/// `|| G - X sym(X^T G) ||_F`, the norm of the tangent-space projection.
pub fn projected_grad_norm(x: &DMatrix<f64>, g: &DMatrix<f64>) -> f64 {
    project_tangent(x, g).norm()
}

pub fn project_tangent(x: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
    g - x * symmetrize(&x.tr_mul(g))
}

/// `(I + t/2 W)^{-1} (I - t/2 W) X` with `W = G X^T - X G^T`.
pub fn cayley_step(x: &DMatrix<f64>, g: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    CayleyCurve::new(x, g).at(t)
}

/// The curve `t -> Y(t)` of [`cayley_step`] with the `t`-independent products
/// computed once, so backtracking only pays for the solve.
pub struct CayleyCurve {
    x: DMatrix<f64>,
    form: CurveForm,
}

enum CurveForm {
    /// `W = U V^T` with `U = [G, X]`, `V = [X, -G]`; keeps `U`, `V^T U`, `V^T X`.
    LowRank {
        u: DMatrix<f64>,
        vtu: DMatrix<f64>,
        vtx: DMatrix<f64>,
    },
    Dense {
        w: DMatrix<f64>,
        wx: DMatrix<f64>,
    },
}

impl CayleyCurve {
    pub fn new(x: &DMatrix<f64>, g: &DMatrix<f64>) -> Self {
        let (p, q) = x.shape();
        let form = if 2 * q < p {
            let mut u = DMatrix::zeros(p, 2 * q);
            u.columns_mut(0, q).copy_from(g);
            u.columns_mut(q, q).copy_from(x);
            let mut v = DMatrix::zeros(p, 2 * q);
            v.columns_mut(0, q).copy_from(x);
            v.columns_mut(q, q).copy_from(&(-g));
            CurveForm::LowRank {
                vtu: v.tr_mul(&u),
                vtx: v.tr_mul(x),
                u,
            }
        } else {
            let w = g * x.transpose() - x * g.transpose();
            CurveForm::Dense { wx: &w * x, w }
        };
        CayleyCurve { x: x.clone(), form }
    }

    pub fn at(&self, t: f64) -> Result<DMatrix<f64>> {
        let singular = || Error::Numeric(format!("Cayley system singular at step {t:e}"));
        match &self.form {
            CurveForm::LowRank { u, vtu, vtx } => {
                let n = vtu.nrows();
                let small = DMatrix::identity(n, n) + vtu * (0.5 * t);
                let sol = small.lu().solve(vtx).ok_or_else(singular)?;
                Ok(&self.x - u * sol * t)
            }
            CurveForm::Dense { w, wx } => {
                let p = w.nrows();
                let lhs = DMatrix::<f64>::identity(p, p) + w * (0.5 * t);
                let rhs = &self.x - wx * (0.5 * t);
                lhs.lu().solve(&rhs).ok_or_else(singular)
            }
        }
    }
}

fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Minimizes `obj` over matrices with orthonormal columns starting from `x0`.
pub fn minimize<O: Objective + ?Sized>(
    obj: &O,
    x0: &DMatrix<f64>,
    cfg: &OptimizerConfig,
) -> Result<OptimizeResult> {
    cfg.validate()?;
    if x0.nrows() < x0.ncols() {
        return Err(Error::InvalidShape(format!(
            "Stiefel point must have p >= q, got {}x{}",
            x0.nrows(),
            x0.ncols()
        )));
    }
    let drift0 = orthonormality_error(x0);
    if !(drift0 < FEASIBILITY_TOL) {
        return Err(Error::Infeasible(drift0));
    }
    let mut x = x0.clone();
    let mut f = obj.value(&x);
    if !f.is_finite() {
        return Err(Error::NonFinite {
            what: "objective",
            iterate: 0,
        });
    }
    let mut g = obj.gradient(&x);
    if !all_finite(&g) {
        return Err(Error::NonFinite {
            what: "gradient",
            iterate: 0,
        });
    }
    if cfg.audit_gradient {
        let err = gradient_check(obj, &x, 20, 1e-5, false, 0x5eed)?;
        if err >= 1e-5 {
            return Err(Error::GradientAudit(err));
        }
    }

    let mut trace = vec![f];
    let mut t = cfg.initial_step;
    let mut accepted = 0usize;
    let mut max_drift = drift0;
    loop {
        let pg = projected_grad_norm(&x, &g);
        if pg <= cfg.grad_tol * (1.0 + f.abs()) {
            return Ok(finish(x, trace, Termination::GradTol, accepted, max_drift));
        }
        if accepted >= cfg.max_inner_iters {
            return Ok(finish(x, trace, Termination::MaxIters, accepted, max_drift));
        }
        let pg2 = pg * pg;
        let curve = CayleyCurve::new(&x, &g);
        let (mut y, fy) = loop {
            let y = curve.at(t)?;
            let fy = obj.value(&y);
            if fy.is_finite() && fy <= f - cfg.sufficient_decrease * t * pg2 {
                break (y, fy);
            }
            t *= cfg.backtrack;
            if t < cfg.min_step {
                return Ok(finish(x, trace, Termination::StepUnderflow, accepted, max_drift));
            }
        };
        accepted += 1;
        let drift = orthonormality_error(&y);
        max_drift = max_drift.max(drift);
        let mut fy = fy;
        if drift > POLISH_TOL {
            let q = qr_positive(&y).0;
            let fq = obj.value(&q);
            // keep the unpolished point if polishing would undo the decrease
            // and the drift is still tolerable
            if fq <= fy || drift >= FEASIBILITY_TOL {
                y = q;
                fy = fq;
            } else {
                log::debug!("skipped polish at drift {drift:e}");
            }
        }
        if !fy.is_finite() {
            return Err(Error::NonFinite {
                what: "objective",
                iterate: accepted,
            });
        }
        x = y;
        f = fy;
        g = obj.gradient(&x);
        if !all_finite(&g) {
            return Err(Error::NonFinite {
                what: "gradient",
                iterate: accepted,
            });
        }
        trace.push(f);
        t = (2.0 * t).min(cfg.max_step);
    }
}

fn finish(
    x: DMatrix<f64>,
    f_trace: Vec<f64>,
    termination: Termination,
    accepted_steps: usize,
    max_drift: f64,
) -> OptimizeResult {
    OptimizeResult {
        x,
        f_trace,
        termination,
        accepted_steps,
        max_drift,
    }
}

/// Gaussian matrix with unit Frobenius norm, optionally projected onto the tangent space at `x`.
pub fn random_direction(x: &DMatrix<f64>, tangent: bool, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut d = DMatrix::from_fn(x.nrows(), x.ncols(), |_, _| StandardNormal.sample(rng));
    if tangent {
        d = project_tangent(x, &d);
    }
    let n = d.norm();
    if n > 0.0 {
        d /= n;
    }
    d
}

/// Worst relative error between `<G, D>` and the central difference
/// `(f(X + hD) - f(X - hD)) / 2h` over `count` random unit directions.
pub fn gradient_check<O: Objective + ?Sized>(
    obj: &O,
    x: &DMatrix<f64>,
    count: usize,
    h: f64,
    tangent: bool,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = obj.gradient(x);
    let f0 = obj.value(x).abs();
    let mut worst = 0.0f64;
    for _ in 0..count {
        let d = random_direction(x, tangent, &mut rng);
        let an = g.dot(&d);
        let fd = (obj.value(&(x + &d * h)) - obj.value(&(x - &d * h))) / (2.0 * h);
        if !fd.is_finite() || !an.is_finite() {
            return Err(Error::Numeric("non-finite value in gradient check".into()));
        }
        let denom = an.abs().max(fd.abs()).max(1e-10 * (1.0 + f0));
        worst = worst.max((fd - an).abs() / denom);
    }
    Ok(worst)
}
