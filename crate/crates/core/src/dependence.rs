//! Data dependence and anchored solution families.
//!
//! For two problems `f`, `g` with `‖f - g‖ ≤ K_η` the solutions satisfy
//!
//! ```text
//! ‖x_f - x_g‖_B ≤ ‖x0_f - x0_g‖ + K_η / (θ (1 - (M2/θ + M3)))
//! ```
//!
//! When `f(0, x, x) = x`, pinning `z(0) = a` turns the Picard operator into
//! a weakly Picard operator: every anchor `a` selects its own fixed point.
//! [`solve_family`] computes one member per anchor, and
//! [`family_hausdorff_bound`] bounds the Pompeiu–Hausdorff distance between
//! the families of two such problems.

use crate::fracops::{build_weights, euclidean, GridFunction, UniformGrid};
use crate::par::{map_collect, Exec};
use crate::sampling::{ball_points, cube_to_ball, Halton};
use crate::solver::{
    check_contraction_with_theta, iterate, reconstruct_from, BieleckiScale, ContractionReport,
    Lipschitz, ProblemSpec, SolverConfig,
};
use crate::specfun::{bielecki_weight, gamma};
use crate::{Error, Result};

/// Largest `‖f(0, x, x) - x‖` accepted by [`check_anchor_condition`].
pub const ANCHOR_TOLERANCE: f64 = 1e-10;

/// Two problems on the same horizon, compared through their solutions.
#[derive(Debug, Clone)]
pub struct ProblemPair {
    pub spec_f: ProblemSpec,
    pub spec_g: ProblemSpec,
    /// `sup ‖f - g‖` over `J × X × X`.
    pub k_eta: f64,
    /// Constant with `‖f - g‖ ≤ K_ml · E_α(θ t^α)`.
    pub k_ml: f64,
}

impl ProblemPair {
    pub fn new(spec_f: ProblemSpec, spec_g: ProblemSpec, k_eta: f64, k_ml: f64) -> Result<Self> {
        if spec_f.alpha() != spec_g.alpha() {
            return Err(Error::InvalidProblem(format!(
                "pair needs one alpha, got {} and {}",
                spec_f.alpha(),
                spec_g.alpha()
            )));
        }
        if spec_f.horizon() != spec_g.horizon() {
            return Err(Error::InvalidProblem(format!(
                "pair needs one horizon, got {} and {}",
                spec_f.horizon(),
                spec_g.horizon()
            )));
        }
        if spec_f.dim() != spec_g.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec_f.dim(),
                found: spec_g.dim(),
            });
        }
        for (name, v) in [("K_eta", k_eta), ("K_ml", k_ml)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(name, v, "[0, inf)"));
            }
        }
        Ok(ProblemPair {
            spec_f,
            spec_g,
            k_eta,
            k_ml,
        })
    }

    /// Componentwise maximum of the two Lipschitz triples.
    pub fn lipschitz(&self) -> Lipschitz {
        let a = self.spec_f.lipschitz();
        let b = self.spec_g.lipschitz();
        Lipschitz::new(a.m1.max(b.m1), a.m2.max(b.m2), a.m3.max(b.m3))
    }

    /// `M2/θ + M3` for the pair, or an error when it is not below 1.
    pub fn modulus(&self, theta: f64) -> Result<f64> {
        let q = self.lipschitz().bielecki_modulus(theta);
        if !(theta > 0.0 && q < 1.0) {
            return Err(Error::ThetaTooSmall { theta, q });
        }
        Ok(q)
    }

    /// The smallest admissible default `θ = max(1, 2 M2 / (1 - M3))` for the
    /// pair's constants.
    pub fn default_theta(&self) -> f64 {
        let l = self.lipschitz();
        (2.0 * l.m2 / (1.0 - l.m3)).max(1.0)
    }
}

/// `‖x0_f - x0_g‖ + K_η / (θ (1 - q))` with `q = M2/θ + M3`.
pub fn dependence_bound(pair: &ProblemPair, theta: f64) -> Result<f64> {
    let q = pair.modulus(theta)?;
    let dx0: Vec<f64> = pair
        .spec_f
        .x0()
        .iter()
        .zip(pair.spec_g.x0())
        .map(|(a, b)| a - b)
        .collect();
    Ok(euclidean(&dx0) + pair.k_eta / (theta * (1.0 - q)))
}

/// `K_ml T^α / (Γ(α+1) (1 - q))`. Pure arithmetic: the anchor condition
/// on both problems is the caller's responsibility.
pub fn family_hausdorff_bound(pair: &ProblemPair, theta: f64) -> Result<f64> {
    let q = pair.modulus(theta)?;
    let alpha = pair.spec_f.alpha();
    let t_alpha = pair.spec_f.horizon().powf(alpha);
    Ok(pair.k_ml * t_alpha / (gamma(alpha + 1.0)? * (1.0 - q)))
}

/// `‖xf - xg‖_B`.
pub fn measured_distance(xf: &GridFunction, xg: &GridFunction, alpha: f64, theta: f64) -> Result<f64> {
    if xf.grid() != xg.grid() {
        return Err(Error::GridMismatch);
    }
    BieleckiScale::new(alpha, theta, *xf.grid())?.distance(xf, xg)
}

/// Pompeiu–Hausdorff distance between two finite sets of grid functions in
/// the Bielecki metric.
pub fn hausdorff_distance(a: &[GridFunction], b: &[GridFunction], alpha: f64, theta: f64) -> Result<f64> {
    let (Some(first), false) = (a.first(), b.is_empty()) else {
        return Err(Error::EmptySet);
    };
    let grid = *first.grid();
    if a.iter().chain(b).any(|g| *g.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    let scale = BieleckiScale::new(alpha, theta, grid)?;
    let mut d = vec![0.0; a.len() * b.len()];
    for (i, u) in a.iter().enumerate() {
        for (j, v) in b.iter().enumerate() {
            d[i * b.len() + j] = scale.distance(u, v)?;
        }
    }
    let row_min = |i: usize| d[i * b.len()..(i + 1) * b.len()].iter().copied().fold(f64::INFINITY, f64::min);
    let col_min = |j: usize| (0..a.len()).map(|i| d[i * b.len() + j]).fold(f64::INFINITY, f64::min);
    let ab = (0..a.len()).map(row_min).fold(0.0, f64::max);
    let ba = (0..b.len()).map(col_min).fold(0.0, f64::max);
    Ok(ab.max(ba))
}

/// Result of sampling `‖f(0, x, x) - x‖` over a ball.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorCheck {
    pub passed: bool,
    pub worst_violation: f64,
    pub worst_point: Vec<f64>,
    pub samples: usize,
}

/// Samples `x` in the closed ball of radius `radius` and reports the worst
/// `‖f(0, x, x) - x‖`. Passes when it is at most [`ANCHOR_TOLERANCE`].
pub fn check_anchor_condition(spec: &ProblemSpec, radius: f64, samples: usize) -> Result<AnchorCheck> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::domain("R", radius, "(0, inf)"));
    }
    check_points(spec, ball_points(spec.dim(), radius, samples))
}

fn check_points(spec: &ProblemSpec, points: Vec<Vec<f64>>) -> Result<AnchorCheck> {
    let mut out = vec![0.0; spec.dim()];
    let mut diff = vec![0.0; spec.dim()];
    let mut worst = (0.0f64, vec![0.0; spec.dim()]);
    let count = points.len();
    for x in points {
        spec.eval_rhs(0, 0.0, &x, &x, &mut out)?;
        for ((d, fx), xi) in diff.iter_mut().zip(&out).zip(&x) {
            *d = fx - xi;
        }
        let v = euclidean(&diff);
        if v > worst.0 {
            worst = (v, x);
        }
    }
    Ok(AnchorCheck {
        passed: worst.0 <= ANCHOR_TOLERANCE,
        worst_violation: worst.0,
        worst_point: worst.1,
        samples: count,
    })
}

/// One anchored solution.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub z: GridFunction,
    pub x: GridFunction,
    pub iterations: usize,
    pub step_norms: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SolutionFamily {
    pub anchors: Vec<Vec<f64>>,
    pub members: Vec<FamilyMember>,
    pub contraction: ContractionReport,
    pub anchor_check: AnchorCheck,
}

impl SolutionFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn theta(&self) -> f64 {
        self.contraction.theta
    }

    pub fn solutions(&self) -> Vec<GridFunction> {
        self.members.iter().map(|m| m.x.clone()).collect()
    }

    /// Bielecki distances `‖x_i - x_j‖_B` for `i < j`.
    pub fn pairwise_distances(&self, alpha: f64) -> Result<Vec<(usize, usize, f64)>> {
        let Some(first) = self.members.first() else {
            return Ok(Vec::new());
        };
        let scale = BieleckiScale::new(alpha, self.theta(), *first.x.grid())?;
        let mut out = Vec::new();
        for i in 0..self.members.len() {
            for j in i + 1..self.members.len() {
                out.push((i, j, scale.distance(&self.members[i].x, &self.members[j].x)?));
            }
        }
        Ok(out)
    }
}

/// Number of ball samples used by [`solve_family`] for the anchor check.
pub const FAMILY_ANCHOR_SAMPLES: usize = 256;

/// Solves `z = f(t, z(0) + I^α z, z)` once per anchor, pinning `z(0) = a`
/// after every step. `x0` of `spec` is ignored; each member uses its anchor.
///
/// The anchor condition is sampled over the ball holding every anchor and
/// checked at the anchors themselves. `config.initial_guess` is ignored:
/// each member starts from the constant `a`.
pub fn solve_family(spec: &ProblemSpec, anchors: &[Vec<f64>], config: &SolverConfig) -> Result<SolutionFamily> {
    config.validate()?;
    if anchors.is_empty() {
        return Err(Error::EmptySet);
    }
    for a in anchors {
        if a.len() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                found: a.len(),
            });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("anchors must be finite".into()));
        }
    }

    let radius = anchors.iter().map(|a| euclidean(a)).fold(0.0, f64::max).max(1.0);
    let mut points = ball_points(spec.dim(), radius, FAMILY_ANCHOR_SAMPLES);
    points.extend(anchors.iter().cloned());
    let anchor_check = check_points(spec, points)?;
    if !anchor_check.passed {
        return Err(Error::AnchorCondition {
            violation: anchor_check.worst_violation,
        });
    }

    let contraction = check_contraction_with_theta(spec, config.n, config.theta_override)?;
    if !contraction.contraction_ok && !config.force {
        return Err(Error::NotContractive {
            q_global: contraction.q_global,
        });
    }
    let grid = UniformGrid::new(spec.horizon(), config.n)?;
    let weights = build_weights(spec.alpha(), grid)?;
    let scale = BieleckiScale::new(spec.alpha(), contraction.theta, grid)?;

    // Members run in parallel; each solve is then sequential inside so the
    // thread pool is not oversubscribed.
    let (outer, inner) = match config.exec {
        Exec::Parallel if anchors.len() > 1 => (Exec::Parallel, Exec::Sequential),
        exec => (Exec::Sequential, exec),
    };
    let results = map_collect(outer, anchors, |a| -> Result<(FamilyMember, bool)> {
        let z0 = GridFunction::constant(grid, a)?;
        let run = iterate(spec, a, &weights, &scale, z0, config.tol, config.max_iter, Some(a), inner)?;
        let x = reconstruct_from(a, &weights, &run.z, inner)?;
        Ok((
            FamilyMember {
                iterations: run.step_norms.len(),
                step_norms: run.step_norms,
                z: run.z,
                x,
            },
            run.converged,
        ))
    });

    let mut members = Vec::with_capacity(anchors.len());
    for (i, r) in results.into_iter().enumerate() {
        let (m, converged) = r?;
        if !converged {
            return Err(Error::MemberNotConverged {
                member: i,
                iterations: m.iterations,
                last_step: m.step_norms.last().copied().unwrap_or(f64::NAN),
            });
        }
        members.push(m);
    }
    Ok(SolutionFamily {
        anchors: anchors.to_vec(),
        members,
        contraction,
        anchor_check,
    })
}

/// Low-discrepancy points `(t, x, y)` in `J × B_R × B_R`, plus the corners
/// `t ∈ {0, T}` at the origin.
type Sample = (f64, Vec<f64>, Vec<f64>);

fn product_points(dim: usize, horizon: f64, radius: f64, samples: usize) -> Result<Vec<Sample>> {
    if 1 + 2 * dim > 16 {
        return Err(Error::InvalidProblem(format!(
            "sampled estimates support dimension at most 7, got {dim}"
        )));
    }
    let zero = vec![0.0; dim];
    let mut pts = vec![(0.0, zero.clone(), zero.clone()), (horizon, zero.clone(), zero)];
    for u in Halton::new(1 + 2 * dim).take(samples) {
        let t = horizon * u[0];
        pts.push((t, cube_to_ball(&u[1..1 + dim], radius), cube_to_ball(&u[1 + dim..], radius)));
    }
    Ok(pts)
}

fn sampled_sup<W>(f: &ProblemSpec, g: &ProblemSpec, radius: f64, samples: usize, weight: W) -> Result<f64>
where
    W: Fn(f64) -> Result<f64>,
{
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: g.dim(),
        });
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::domain("R", radius, "(0, inf)"));
    }
    let horizon = f.horizon().min(g.horizon());
    let mut best = 0.0f64;
    let mut d = vec![0.0; f.dim()];
    for (t, x, y) in product_points(f.dim(), horizon, radius, samples)? {
        let a = f.eval_rhs_vec(t, &x, &y)?;
        let b = g.eval_rhs_vec(t, &x, &y)?;
        for ((di, u), v) in d.iter_mut().zip(&a).zip(&b) {
            *di = u - v;
        }
        best = best.max(euclidean(&d) / weight(t)?);
    }
    Ok(1.1 * best)
}

/// Sampled estimate of `K_η = sup ‖f - g‖` over `J × B_R × B_R`, times 1.1.
/// An estimate, not a bound.
pub fn estimate_k_eta(f: &ProblemSpec, g: &ProblemSpec, radius: f64, samples: usize) -> Result<f64> {
    sampled_sup(f, g, radius, samples, |_| Ok(1.0))
}

/// Sampled estimate of `K_ml = sup ‖f - g‖ / E_α(θ t^α)`, times 1.1.
pub fn estimate_k_ml(f: &ProblemSpec, g: &ProblemSpec, theta: f64, radius: f64, samples: usize) -> Result<f64> {
    let alpha = f.alpha();
    sampled_sup(f, g, radius, samples, |t| bielecki_weight(alpha, theta, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::f64::consts::PI;

    fn linear(lambda: f64, x0: f64) -> ProblemSpec {
        ProblemSpec::scalar(0.5, 0.5, x0, move |_, x, _| lambda * x, Lipschitz::new(0.0, lambda.abs().max(1e-12), 1e-6))
            .unwrap()
    }

    fn half(x0: f64) -> ProblemSpec {
        ProblemSpec::scalar(0.5, 0.5, x0, |_, x, y| 0.5 * (x + y.abs()), Lipschitz::new(0.5, 0.5, 0.5)).unwrap()
    }

    #[test]
    fn published_bound() {
        let pair = fixtures::sqrt_ml_pair();
        let b = dependence_bound(&pair, 2.0).unwrap();
        assert!((b - (PI.sqrt() / 2.0 + 2.3004)).abs() < 1e-12);
        assert!((b - 3.1866).abs() < 1e-4);
    }

    #[test]
    fn bound_special_cases() {
        let p = ProblemPair::new(half(1.0), half(1.0), 0.0, 0.0).unwrap();
        assert_eq!(dependence_bound(&p, 2.0).unwrap(), 0.0);
        let p = ProblemPair::new(half(1.0), half(1.0), 0.5, 0.0).unwrap();
        assert!((dependence_bound(&p, 2.0).unwrap() - 1.0).abs() < 1e-15);
        let p = ProblemPair::new(half(1.0), half(0.25), 0.0, 0.0).unwrap();
        assert_eq!(dependence_bound(&p, 2.0).unwrap(), 0.75);
        assert!(matches!(dependence_bound(&p, 1.0), Err(Error::ThetaTooSmall { .. })));
    }

    #[test]
    fn family_bound_arithmetic() {
        let p = ProblemPair::new(half(1.0), half(1.0), 0.0, 1.0).unwrap();
        let b = family_hausdorff_bound(&p, 2.0).unwrap();
        let expected = 0.5f64.sqrt() / (PI.sqrt() / 2.0 * 0.25);
        assert!((b - expected).abs() < 1e-12);
        assert!((b - 3.1915).abs() < 1e-4);
        let p = ProblemPair::new(half(1.0), half(1.0), 0.0, 0.0).unwrap();
        assert_eq!(family_hausdorff_bound(&p, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn pair_rejects_mismatch() {
        let other = ProblemSpec::scalar(0.25, 0.5, 1.0, |_, x, _| x, Lipschitz::new(0.0, 1.0, 0.1)).unwrap();
        assert!(ProblemPair::new(half(1.0), other, 0.0, 0.0).is_err());
        assert!(ProblemPair::new(half(1.0), half(1.0), -1.0, 0.0).is_err());
    }

    #[test]
    fn distances_on_constants() {
        let grid = UniformGrid::new(0.5, 16).unwrap();
        let u = GridFunction::from_scalar_fn(grid, |t| t * t).unwrap();
        let v = GridFunction::from_scalar_fn(grid, |t| t * t + 0.3).unwrap();
        assert_eq!(measured_distance(&u, &u, 0.5, 2.0).unwrap(), 0.0);
        assert!((measured_distance(&u, &v, 0.5, 2.0).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(hausdorff_distance(std::slice::from_ref(&u), std::slice::from_ref(&u), 0.5, 2.0).unwrap(), 0.0);
        assert!((hausdorff_distance(std::slice::from_ref(&u), std::slice::from_ref(&v), 0.5, 2.0).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(hausdorff_distance(&[], &[u], 0.5, 2.0), Err(Error::EmptySet));
    }

    #[test]
    fn anchor_condition_examples() {
        let ok = check_anchor_condition(&linear(1.0, 1.0), 2.0, 64).unwrap();
        assert!(ok.passed);
        assert_eq!(ok.worst_violation, 0.0);
        let sin = ProblemSpec::scalar(0.5, 1.0, 0.0, |t, x, _| x + t * x.sin(), Lipschitz::new(1.0, 2.0, 0.1)).unwrap();
        assert!(check_anchor_condition(&sin, 3.0, 64).unwrap().passed);
        let bad = check_anchor_condition(&fixtures::sqrt_ml_problem().spec, 1.0, 64).unwrap();
        assert!(!bad.passed);
        assert!(bad.worst_violation > 0.1);
    }

    #[test]
    fn family_rejects_bad_rhs() {
        let spec = fixtures::sqrt_ml_problem().spec;
        let err = solve_family(&spec, &[vec![1.0]], &SolverConfig::new(64)).unwrap_err();
        assert!(matches!(err, Error::AnchorCondition { .. }));
    }

    #[test]
    fn family_members_pin_anchor_and_scale() {
        let spec = linear(1.0, 1.0);
        let anchors = vec![vec![0.5], vec![1.0]];
        let fam = solve_family(&spec, &anchors, &SolverConfig::new(256)).unwrap();
        assert_eq!(fam.len(), 2);
        for (m, a) in fam.members.iter().zip(&anchors) {
            assert_eq!(m.z.node(0), &a[..]);
            assert_eq!(m.x.node(0), &a[..]);
        }
        for k in 0..=256 {
            let r = fam.members[1].x.node(k)[0] / fam.members[0].x.node(k)[0];
            assert!((r - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_anchor_matches_plain_solve() {
        let spec = linear(1.0, 0.75);
        let config = SolverConfig::new(128);
        let fam = solve_family(&spec, &[vec![0.75]], &config).unwrap();
        let plain = crate::solver::solve(&spec, &config).unwrap();
        assert_eq!(fam.members[0].x, plain.x);
        assert_eq!(fam.members[0].z, plain.z);
    }

    #[test]
    fn estimates_cover_constant_shift() {
        let f = half(1.0);
        let g = ProblemSpec::scalar(0.5, 0.5, 1.0, |_, x, y| 0.5 * (x + y.abs()) + 0.2, Lipschitz::new(0.5, 0.5, 0.5))
            .unwrap();
        let k = estimate_k_eta(&f, &g, 2.0, 64).unwrap();
        assert!((k - 0.22).abs() < 1e-12);
        let kml = estimate_k_ml(&f, &g, 2.0, 2.0, 64).unwrap();
        assert!((kml - 0.22).abs() < 1e-12);
    }
}
