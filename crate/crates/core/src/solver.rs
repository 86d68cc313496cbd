//! Picard iteration for `z = D^α x` on the functional integral equation
//!
//! ```text
//! z(t) = f(t, x0 + I^α z(t), z(t)),    x(t) = x0 + I^α z(t)
//! ```
//!
//! With Lipschitz constants `M1, M2, M3` of `f` in `(t, x, y)` the operator is
//! a contraction of modulus `q_global = M2 T^α / Γ(α+1) + M3` in the sup norm
//! and `q_bielecki = M2/θ + M3` in the Bielecki norm with weight
//! `E_α(θ t^α)`. [`check_contraction`] certifies the former and picks the
//! invariant ball radius `R`, Lipschitz class `L` and weight parameter `θ`;
//! [`solve`] iterates in the Bielecki metric.

use std::fmt;
use std::sync::Arc;

use crate::fracops::{
    build_weights, caputo_l1, euclidean, frac_integral_with, FracWeights, GridFunction, UniformGrid,
};
use crate::par::Exec;
use crate::specfun::{bielecki_weight, gamma};
use crate::{Error, Result};

/// Error raised by a right-hand side callback.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsError(pub String);

impl fmt::Display for RhsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for RhsError {}

/// Right-hand side `f(t, x, y)` of the implicit equation, with `y` standing
/// for `D^α x`. Implementations write `d` components into `out`.
pub trait Rhs: Send + Sync {
    fn eval(&self, t: f64, x: &[f64], y: &[f64], out: &mut [f64]) -> std::result::Result<(), RhsError>;
}

/// Adapts an infallible closure `(t, x, y, out)` into an [`Rhs`].
pub struct FnRhs<F>(pub F);

impl<F> Rhs for FnRhs<F>
where
    F: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync,
{
    fn eval(&self, t: f64, x: &[f64], y: &[f64], out: &mut [f64]) -> std::result::Result<(), RhsError> {
        (self.0)(t, x, y, out);
        Ok(())
    }
}

/// Adapts a scalar closure `(t, x, y) -> f` into an [`Rhs`] of dimension 1.
pub struct ScalarRhs<F>(pub F);

impl<F> Rhs for ScalarRhs<F>
where
    F: Fn(f64, f64, f64) -> f64 + Send + Sync,
{
    fn eval(&self, t: f64, x: &[f64], y: &[f64], out: &mut [f64]) -> std::result::Result<(), RhsError> {
        out[0] = (self.0)(t, x[0], y[0]);
        Ok(())
    }
}

/// Lipschitz constants of `f` in `t`, `x` and `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lipschitz {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

impl Lipschitz {
    pub fn new(m1: f64, m2: f64, m3: f64) -> Self {
        Lipschitz { m1, m2, m3 }
    }

    /// `M2/θ + M3`.
    pub fn bielecki_modulus(&self, theta: f64) -> f64 {
        self.m2 / theta + self.m3
    }
}

/// One implicit FDE instance.
#[derive(Clone)]
pub struct ProblemSpec {
    alpha: f64,
    horizon: f64,
    x0: Vec<f64>,
    rhs: Arc<dyn Rhs>,
    lipschitz: Lipschitz,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("alpha", &self.alpha)
            .field("horizon", &self.horizon)
            .field("x0", &self.x0)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// `alpha` may be 1 (the classical ODE limit); the fractional theory
    /// needs `0 < alpha < 1`.
    pub fn new(alpha: f64, horizon: f64, x0: Vec<f64>, rhs: Arc<dyn Rhs>, lipschitz: Lipschitz) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidProblem(format!("alpha must lie in (0,1), got {alpha}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidProblem(format!("T must be positive, got {horizon}")));
        }
        if x0.is_empty() || x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("x0 must be a nonempty finite vector".into()));
        }
        let Lipschitz { m1, m2, m3 } = lipschitz;
        if !(m1 >= 0.0 && m1.is_finite()) {
            return Err(Error::InvalidProblem(format!("M1 must be nonnegative, got {m1}")));
        }
        if !(m2 > 0.0 && m2.is_finite()) {
            return Err(Error::InvalidProblem(format!("M2 must be positive, got {m2}")));
        }
        if !(m3 > 0.0 && m3 < 1.0) {
            return Err(Error::InvalidProblem(format!("M3 must lie in (0,1), got {m3}")));
        }
        Ok(ProblemSpec {
            alpha,
            horizon,
            x0,
            rhs,
            lipschitz,
        })
    }

    /// Scalar problem from a closure `(t, x, y) -> f`.
    pub fn scalar<F>(alpha: f64, horizon: f64, x0: f64, f: F, lipschitz: Lipschitz) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        ProblemSpec::new(alpha, horizon, vec![x0], Arc::new(ScalarRhs(f)), lipschitz)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn lipschitz(&self) -> Lipschitz {
        self.lipschitz
    }

    pub fn rhs(&self) -> &Arc<dyn Rhs> {
        &self.rhs
    }

    /// Same equation with a different initial value.
    pub fn with_x0(&self, x0: Vec<f64>) -> Result<Self> {
        if x0.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x0.len(),
            });
        }
        ProblemSpec::new(self.alpha, self.horizon, x0, self.rhs.clone(), self.lipschitz)
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        ProblemSpec::new(self.alpha, horizon, self.x0.clone(), self.rhs.clone(), self.lipschitz)
    }

    /// Evaluates `f` and rejects non-finite output. `node` only labels errors.
    pub fn eval_rhs(&self, node: usize, t: f64, x: &[f64], y: &[f64], out: &mut [f64]) -> Result<()> {
        self.rhs.eval(t, x, y, out).map_err(|e| Error::Evaluation {
            node,
            t,
            message: e.0,
        })?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation {
                node,
                t,
                message: format!("non-finite value {out:?}"),
            });
        }
        Ok(())
    }

    pub fn eval_rhs_vec(&self, t: f64, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.eval_rhs(0, t, x, y, &mut out)?;
        Ok(out)
    }
}

/// Constants certifying the contraction and the invariant set
/// `C_L(J, B_R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionReport {
    pub q_global: f64,
    pub contraction_ok: bool,
    /// Sampled `sup ‖f(t, 0, 0)‖` with a 1.1 safety factor.
    pub k_sup: f64,
    pub radius: Option<f64>,
    pub lipschitz_bound: Option<f64>,
    pub theta: f64,
    pub q_bielecki: f64,
}

/// `θ = max(1, 2 M2 / (1 - M3))`, which gives `M2/θ + M3 ≤ (1 + M3)/2`.
pub fn select_theta(spec: &ProblemSpec) -> f64 {
    let Lipschitz { m2, m3, .. } = spec.lipschitz;
    (2.0 * m2 / (1.0 - m3)).max(1.0)
}

pub fn check_contraction(spec: &ProblemSpec, n: usize) -> Result<ContractionReport> {
    check_contraction_with_theta(spec, n, None)
}

/// As [`check_contraction`], with an optional caller-chosen θ. An override
/// must still satisfy `M2/θ + M3 < 1`.
pub fn check_contraction_with_theta(spec: &ProblemSpec, n: usize, theta: Option<f64>) -> Result<ContractionReport> {
    let grid = UniformGrid::new(spec.horizon, n)?;
    let Lipschitz { m1, m2, m3 } = spec.lipschitz;
    let gamma_a1 = gamma(spec.alpha + 1.0)?;
    let q_global = m2 * spec.horizon.powf(spec.alpha) / gamma_a1 + m3;

    let zero = vec![0.0; spec.dim()];
    let mut out = vec![0.0; spec.dim()];
    let mut sup = 0.0f64;
    for (k, t) in grid.nodes().enumerate() {
        spec.eval_rhs(k, t, &zero, &zero, &mut out)?;
        sup = sup.max(euclidean(&out));
    }
    let k_sup = 1.1 * sup;

    let theta = match theta {
        Some(th) => {
            let q = spec.lipschitz.bielecki_modulus(th);
            if !(th > 0.0 && q < 1.0) {
                return Err(Error::ThetaTooSmall { theta: th, q });
            }
            th
        }
        None => select_theta(spec),
    };

    let contraction_ok = q_global < 1.0;
    let (radius, lipschitz_bound) = if contraction_ok {
        let r = (m2 * euclidean(&spec.x0) + k_sup) / (1.0 - q_global);
        let l = (m1 + 2.0 * m2 * r / gamma_a1) / (1.0 - m3);
        (Some(r), Some(l))
    } else {
        (None, None)
    };
    Ok(ContractionReport {
        q_global,
        contraction_ok,
        k_sup,
        radius,
        lipschitz_bound,
        theta,
        q_bielecki: spec.lipschitz.bielecki_modulus(theta),
    })
}

/// Cached Bielecki weights `E_α(θ t_k^α)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BieleckiScale {
    alpha: f64,
    theta: f64,
    grid: UniformGrid,
    weights: Vec<f64>,
}

impl BieleckiScale {
    pub fn new(alpha: f64, theta: f64, grid: UniformGrid) -> Result<Self> {
        let weights = grid
            .nodes()
            .map(|t| bielecki_weight(alpha, theta, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(BieleckiScale {
            alpha,
            theta,
            grid,
            weights,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn norm(&self, z: &GridFunction) -> Result<f64> {
        if *z.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(z.rows()
            .zip(&self.weights)
            .map(|(row, w)| euclidean(row) / w)
            .fold(0.0, f64::max))
    }

    /// `‖a - b‖_B` without allocating the difference.
    pub fn distance(&self, a: &GridFunction, b: &GridFunction) -> Result<f64> {
        if *a.grid() != self.grid || *b.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        let mut diff = vec![0.0; a.dim()];
        let mut best = 0.0f64;
        for ((ra, rb), w) in a.rows().zip(b.rows()).zip(&self.weights) {
            for ((d, u), v) in diff.iter_mut().zip(ra).zip(rb) {
                *d = u - v;
            }
            best = best.max(euclidean(&diff) / w);
        }
        Ok(best)
    }
}

/// `max_k ‖z(t_k)‖ / E_α(θ t_k^α)`.
pub fn bielecki_norm(z: &GridFunction, alpha: f64, theta: f64) -> Result<f64> {
    BieleckiScale::new(alpha, theta, *z.grid())?.norm(z)
}

/// `max_k ‖z(t_k)‖`.
pub fn chebyshev_norm(z: &GridFunction) -> f64 {
    z.rows().map(euclidean).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub n: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub theta_override: Option<f64>,
    pub initial_guess: Option<GridFunction>,
    /// Iterate even when `q_global ≥ 1`, as long as `q_bielecki < 1`.
    pub force: bool,
    pub exec: Exec,
}

impl SolverConfig {
    pub fn new(n: usize) -> Self {
        SolverConfig {
            n,
            ..SolverConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if let Some(th) = self.theta_override {
            if !(th > 0.0 && th.is_finite()) {
                return Err(Error::InvalidConfig(format!("theta must be positive, got {th}")));
            }
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n: 1024,
            tol: 1e-10,
            max_iter: 500,
            theta_override: None,
            initial_guess: None,
            force: false,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖z_{m+1} - z_m‖_B` for every step taken.
    pub step_norms: Vec<f64>,
    /// `step_norms[i+1] / step_norms[i]` wherever the denominator is nonzero.
    pub ratio_estimates: Vec<f64>,
    /// `q/(1-q) · last step`, bounding the distance to the discrete fixed point.
    pub a_posteriori_bound: f64,
    pub converged: bool,
    /// False when the run relied on `force` with `q_global ≥ 1`.
    pub certified: bool,
    pub contraction: ContractionReport,
    pub z: GridFunction,
    pub x: GridFunction,
}

impl SolveReport {
    pub fn theta(&self) -> f64 {
        self.contraction.theta
    }

    pub fn final_step(&self) -> f64 {
        self.step_norms.last().copied().unwrap_or(0.0)
    }
}

/// One application of the Picard operator, base point `x0` (or the anchor
/// for anchored families).
pub(crate) fn apply_operator(
    spec: &ProblemSpec,
    base: &[f64],
    weights: &FracWeights,
    z: &GridFunction,
    exec: Exec,
) -> Result<GridFunction> {
    let mut integral = frac_integral_with(weights, z, exec)?;
    let grid = *z.grid();
    let dim = z.dim();
    let mut out = vec![0.0; z.values().len()];
    for k in 0..grid.len() {
        let x = integral.node_mut(k);
        for (xi, b) in x.iter_mut().zip(base) {
            *xi += b;
        }
        spec.eval_rhs(k, grid.node(k), x, z.node(k), &mut out[k * dim..(k + 1) * dim])?;
    }
    GridFunction::new(grid, dim, out)
}

fn check_shapes(spec: &ProblemSpec, weights: &FracWeights, z: &GridFunction) -> Result<()> {
    if weights.grid() != z.grid() {
        return Err(Error::GridMismatch);
    }
    if z.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: z.dim(),
        });
    }
    if weights.alpha() != spec.alpha {
        return Err(Error::InvalidProblem(format!(
            "weights built for alpha = {}, problem has alpha = {}",
            weights.alpha(),
            spec.alpha
        )));
    }
    Ok(())
}

/// `(Tz)(t_k) = f(t_k, x0 + (I^α z)(t_k), z(t_k))`.
pub fn picard_step(spec: &ProblemSpec, weights: &FracWeights, z: &GridFunction) -> Result<GridFunction> {
    check_shapes(spec, weights, z)?;
    apply_operator(spec, &spec.x0, weights, z, Exec::default())
}

/// `x(t_k) = x0 + (I^α z)(t_k)`, with node 0 equal to `x0` exactly.
pub fn reconstruct_x(spec: &ProblemSpec, weights: &FracWeights, z: &GridFunction) -> Result<GridFunction> {
    check_shapes(spec, weights, z)?;
    reconstruct_from(&spec.x0, weights, z, Exec::default())
}

pub(crate) fn reconstruct_from(base: &[f64], weights: &FracWeights, z: &GridFunction, exec: Exec) -> Result<GridFunction> {
    let mut x = frac_integral_with(weights, z, exec)?;
    for k in 0..x.grid().len() {
        for (xi, b) in x.node_mut(k).iter_mut().zip(base) {
            *xi += b;
        }
    }
    x.node_mut(0).copy_from_slice(base);
    Ok(x)
}

/// Outcome of a bare fixed-point loop.
pub(crate) struct Iteration {
    pub z: GridFunction,
    pub step_norms: Vec<f64>,
    pub converged: bool,
}

/// Runs `z ← T z` until the Bielecki step falls below `tol`. With `anchor`
/// set, node 0 of every iterate is checked against the anchor (drift must
/// stay within 1e-12) and then pinned to it.
#[allow(clippy::too_many_arguments)]
pub(crate) fn iterate(
    spec: &ProblemSpec,
    base: &[f64],
    weights: &FracWeights,
    scale: &BieleckiScale,
    mut z: GridFunction,
    tol: f64,
    max_iter: usize,
    anchor: Option<&[f64]>,
    exec: Exec,
) -> Result<Iteration> {
    let mut step_norms = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let mut next = apply_operator(spec, base, weights, &z, exec)?;
        if let Some(a) = anchor {
            let drift = next
                .node(0)
                .iter()
                .zip(a)
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max);
            if drift > 1e-12 {
                return Err(Error::AnchorDrift { drift });
            }
            next.node_mut(0).copy_from_slice(a);
        }
        let step = scale.distance(&next, &z)?;
        step_norms.push(step);
        z = next;
        if step <= tol {
            converged = true;
            break;
        }
    }
    Ok(Iteration {
        z,
        step_norms,
        converged,
    })
}

pub(crate) fn ratios(steps: &[f64]) -> Vec<f64> {
    steps
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect()
}

/// Certifies the problem, iterates the Picard operator from the initial
/// guess (default: the constant `f(0, x0, 0)`), and rebuilds `x`.
pub fn solve(spec: &ProblemSpec, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let contraction = check_contraction_with_theta(spec, config.n, config.theta_override)?;
    if !contraction.contraction_ok && !config.force {
        return Err(Error::NotContractive {
            q_global: contraction.q_global,
        });
    }
    let grid = UniformGrid::new(spec.horizon, config.n)?;
    let weights = build_weights(spec.alpha, grid)?;
    let scale = BieleckiScale::new(spec.alpha, contraction.theta, grid)?;

    let z0 = match &config.initial_guess {
        Some(g) => {
            if *g.grid() != grid {
                return Err(Error::GridMismatch);
            }
            if g.dim() != spec.dim() {
                return Err(Error::DimensionMismatch {
                    expected: spec.dim(),
                    found: g.dim(),
                });
            }
            g.clone()
        }
        None => {
            let zero = vec![0.0; spec.dim()];
            let start = spec.eval_rhs_vec(0.0, &spec.x0, &zero)?;
            GridFunction::constant(grid, &start)?
        }
    };

    let run = iterate(spec, &spec.x0, &weights, &scale, z0, config.tol, config.max_iter, None, config.exec)?;
    let x = reconstruct_from(&spec.x0, &weights, &run.z, config.exec)?;
    Ok(finish(run, x, contraction))
}

pub(crate) fn finish(run: Iteration, x: GridFunction, contraction: ContractionReport) -> SolveReport {
    let q = contraction.q_bielecki;
    let last = run.step_norms.last().copied().unwrap_or(0.0);
    SolveReport {
        iterations: run.step_norms.len(),
        ratio_estimates: ratios(&run.step_norms),
        a_posteriori_bound: q * last / (1.0 - q),
        converged: run.converged,
        certified: contraction.contraction_ok,
        contraction,
        step_norms: run.step_norms,
        z: run.z,
        x,
    }
}

/// Residuals of a candidate solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    /// `z(t_k) - f(t_k, x(t_k), z(t_k))`.
    pub algebraic: GridFunction,
    /// `D^α x(t_k) - f(t_k, x(t_k), D^α x(t_k))` with the L1 derivative;
    /// node 0 copies node 1.
    pub caputo: GridFunction,
}

impl Residuals {
    /// Max Euclidean norm over nodes `k ≥ from`.
    pub fn max_algebraic_from(&self, from: usize) -> f64 {
        tail_max(&self.algebraic, from)
    }

    pub fn max_caputo_from(&self, from: usize) -> f64 {
        tail_max(&self.caputo, from)
    }
}

pub(crate) fn tail_max(g: &GridFunction, from: usize) -> f64 {
    g.rows().skip(from).map(euclidean).fold(0.0, f64::max)
}

pub fn residual_caputo(spec: &ProblemSpec, x: &GridFunction, z: &GridFunction) -> Result<Residuals> {
    if x.grid() != z.grid() {
        return Err(Error::GridMismatch);
    }
    for g in [x, z] {
        if g.dim() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                found: g.dim(),
            });
        }
    }
    let grid = *x.grid();
    let dim = spec.dim();
    let deriv = caputo_l1(spec.alpha, x)?;
    let mut alg = vec![0.0; x.values().len()];
    let mut cap = vec![0.0; x.values().len()];
    let mut f = vec![0.0; dim];
    for k in 0..grid.len() {
        let t = grid.node(k);
        spec.eval_rhs(k, t, x.node(k), z.node(k), &mut f)?;
        for i in 0..dim {
            alg[k * dim + i] = z.node(k)[i] - f[i];
        }
        if k >= 1 {
            spec.eval_rhs(k, t, x.node(k), deriv.node(k), &mut f)?;
            for i in 0..dim {
                cap[k * dim + i] = deriv.node(k)[i] - f[i];
            }
        }
    }
    let (head, tail) = cap.split_at_mut(dim);
    head.copy_from_slice(&tail[..dim]);
    Ok(Residuals {
        algebraic: GridFunction::new(grid, dim, alg)?,
        caputo: GridFunction::new(grid, dim, cap)?,
    })
}
