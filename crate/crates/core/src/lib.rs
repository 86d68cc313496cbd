//! Fixed-point solver for nonlinear implicit Caputo fractional differential
//! equations
//!
//! ```text
//! D^α x(t) = f(t, x(t), D^α x(t)),   x(0) = x0,   t ∈ [0, T],  0 < α < 1
//! ```
//!
//! The unknown derivative `z = D^α x` solves the functional integral equation
//! `z(t) = f(t, x0 + I^α z(t), z(t))`, which is a contraction in the Bielecki
//! norm `sup ‖z(t)‖ / E_α(θ t^α)` for θ large enough. The crate discretizes
//! `I^α` with product-trapezoidal weights on a uniform grid, iterates the
//! Picard operator to a tolerance, and rebuilds `x = x0 + I^α z`.
//!
//! Modules:
//!
//! - [`specfun`]: Gamma and the one-parameter Mittag-Leffler function.
//! - [`fracops`]: grids, sampled functions, the fractional integral and the L1
//!   Caputo derivative.
//! - [`solver`]: contraction certificate, Picard iteration and residuals.
//! - [`dependence`]: data-dependence bounds, Hausdorff distance between
//!   finite solution sets, anchored solution families.
//! - [`dsl`]: a small expression language for right-hand sides.
//! - [`fixtures`]: problems with known exact solutions.
//!
//! ## Feature flags
//!
//! - `parallel` (default): row-parallel weight application and parallel
//!   family solves through rayon. Without it every [`Exec`] runs sequentially.
//!
//! ## Example
//!
//! ```rust
//! use caputo_picard::prelude::*;
//!
//! let fixture = fixtures::sqrt_ml_problem();
//! let report = solve(&fixture.spec, &SolverConfig::new(256)).unwrap();
//! assert!(report.converged);
//! assert_eq!(report.x.node(0)[0], 1.0);
//! ```

pub mod dependence;
pub mod dsl;
mod error;
pub mod fixtures;
pub mod fracops;
mod par;
pub mod sampling;
pub mod solver;
pub mod specfun;

pub use error::{Error, Result};
pub use par::{set_thread_limit, Exec};

pub mod prelude {
    pub use crate::dependence::{
        check_anchor_condition, dependence_bound, family_hausdorff_bound, hausdorff_distance,
        measured_distance, solve_family, ProblemPair, SolutionFamily,
    };
    pub use crate::fixtures::{self, Fixture};
    pub use crate::fracops::{build_weights, caputo_l1, frac_integral, FracWeights, GridFunction, UniformGrid};
    pub use crate::solver::{
        bielecki_norm, check_contraction, chebyshev_norm, picard_step, reconstruct_x,
        residual_caputo, select_theta, solve, ContractionReport, Lipschitz, ProblemSpec,
        SolveReport, SolverConfig,
    };
    pub use crate::specfun::{bielecki_weight, gamma, mittag_leffler};
    pub use crate::{Error, Exec, Result};
}
