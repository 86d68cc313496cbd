use std::fmt;
use std::io::Write;
use std::path::Path;

use caputo_picard::dependence::{estimate_k_eta, estimate_k_ml};
use caputo_picard::prelude::*;
use caputo_picard::solver::check_contraction_with_theta;

use crate::config::{self, ConfigError, RunConfig};
use crate::output::{solution_csv, write_atomic};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Runtime = 1,
    Config = 2,
    NotContractive = 3,
    NotConverged = 4,
    BoundViolated = 5,
    AnchorFailed = 6,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    fn runtime(message: impl Into<String>) -> Self {
        CliError {
            code: ExitCode::Runtime,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError {
            code: ExitCode::Config,
            message: e.to_string(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain { .. }
            | Error::InvalidProblem(_)
            | Error::InvalidConfig(_)
            | Error::ThetaTooSmall { .. }
            | Error::DimensionMismatch { .. } => ExitCode::Config,
            Error::NotContractive { .. } => ExitCode::NotContractive,
            Error::MemberNotConverged { .. } => ExitCode::NotConverged,
            Error::AnchorCondition { .. } | Error::AnchorDrift { .. } => ExitCode::AnchorFailed,
            _ => ExitCode::Runtime,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::runtime(e.to_string())
    }
}

pub type CmdResult = std::result::Result<ExitCode, CliError>;

const ESTIMATE_SAMPLES: usize = 2000;

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"))
}

pub fn run_check(path: &Path, out: &mut dyn Write) -> CmdResult {
    let cfg = config::load(path)?;
    let spec = &cfg.problem.spec;
    let c = check_contraction_with_theta(spec, cfg.solver.n, cfg.solver.theta_override)?;
    writeln!(out, "q_global = {:.4} {}", c.q_global, pass(c.contraction_ok))?;
    writeln!(out, "q_bielecki = {:.4} {}", c.q_bielecki, pass(c.q_bielecki < 1.0))?;
    writeln!(out, "K = {:.6}", c.k_sup)?;
    writeln!(out, "R = {}", opt(c.radius))?;
    writeln!(out, "L = {}", opt(c.lipschitz_bound))?;
    writeln!(out, "theta = {:.6}", c.theta)?;
    Ok(if c.contraction_ok {
        ExitCode::Ok
    } else {
        ExitCode::NotContractive
    })
}

pub fn run_solve(path: &Path, csv: &Path, out: &mut dyn Write) -> CmdResult {
    let cfg = config::load(path)?;
    let spec = &cfg.problem.spec;
    let report = solve(spec, &cfg.solver)?;
    write_atomic(csv, &solution_csv(spec, &report.x, &report.z)?)?;

    if !report.certified {
        writeln!(out, "warning: q_global = {:.4} >= 1, run forced on the Bielecki estimate", report.contraction.q_global)?;
    }
    writeln!(out, "iterations = {}", report.iterations)?;
    writeln!(out, "final_step = {:e}", report.final_step())?;
    writeln!(out, "a_posteriori_bound = {:e}", report.a_posteriori_bound)?;
    writeln!(out, "converged = {}", report.converged)?;
    if let Some(exact) = cfg.problem.sample_exact(*report.x.grid()) {
        let exact = exact.map_err(CliError::runtime)?;
        let err = chebyshev_norm(&report.x.sub(&exact)?);
        writeln!(out, "max_abs_error = {err:e}")?;
    }
    Ok(if report.converged {
        ExitCode::Ok
    } else {
        ExitCode::NotConverged
    })
}

fn require_compare(cfg: &RunConfig) -> std::result::Result<&config::CompareConfig, CliError> {
    cfg.compare.as_ref().ok_or_else(|| CliError {
        code: ExitCode::Config,
        message: "this command needs a [compare] section".into(),
    })
}

/// Radius of a ball holding every `x` and `z` value of the given solutions.
fn value_radius(parts: &[&caputo_picard::fracops::GridFunction]) -> f64 {
    parts.iter().map(|g| chebyshev_norm(g)).fold(1.0, f64::max)
}

pub fn run_depend(path: &Path, out: &mut dyn Write) -> CmdResult {
    let cfg = config::load(path)?;
    let cmp = require_compare(&cfg)?;
    let (f, g) = (&cfg.problem.spec, &cmp.problem.spec);
    let mut pair = ProblemPair::new(f.clone(), g.clone(), cmp.k_eta.unwrap_or(0.0), 0.0)?;
    let theta = cfg.solver.theta_override.unwrap_or_else(|| pair.default_theta());
    pair.modulus(theta)?;

    let mut solver = cfg.solver.clone();
    solver.theta_override = Some(theta);
    let sf = solve(f, &solver)?;
    let sg = solve(g, &solver)?;
    if !(sf.converged && sg.converged) {
        writeln!(out, "solver did not converge (f: {}, g: {})", sf.converged, sg.converged)?;
        return Ok(ExitCode::NotConverged);
    }

    let k_label = match cmp.k_eta {
        Some(_) => "",
        None => {
            let r = value_radius(&[&sf.x, &sf.z, &sg.x, &sg.z]);
            pair.k_eta = estimate_k_eta(f, g, r, ESTIMATE_SAMPLES)?;
            " (estimated)"
        }
    };
    let bound = dependence_bound(&pair, theta)?;
    let measured = measured_distance(&sf.x, &sg.x, f.alpha(), theta)?;
    writeln!(out, "theta = {theta:.6}")?;
    writeln!(out, "K_eta = {:.6}{k_label}", pair.k_eta)?;
    writeln!(out, "dependence_bound = {bound:.6}")?;
    writeln!(out, "measured_distance = {measured:.6}")?;
    writeln!(out, "margin = {:.6}", bound - measured)?;
    Ok(if measured <= bound {
        ExitCode::Ok
    } else {
        writeln!(out, "BOUND VIOLATED")?;
        ExitCode::BoundViolated
    })
}

pub fn run_family(path: &Path, out_dir: &Path, out: &mut dyn Write) -> CmdResult {
    let cfg = config::load(path)?;
    let anchors = cfg.anchors.as_ref().ok_or_else(|| CliError {
        code: ExitCode::Config,
        message: "this command needs a [family] section".into(),
    })?;
    let f = &cfg.problem.spec;

    let mut solver = cfg.solver.clone();
    let mut pair = match &cfg.compare {
        Some(cmp) => {
            let pair = ProblemPair::new(f.clone(), cmp.problem.spec.clone(), cmp.k_eta.unwrap_or(0.0), cmp.k_ml.unwrap_or(0.0))?;
            let theta = solver.theta_override.unwrap_or_else(|| pair.default_theta());
            pair.modulus(theta)?;
            solver.theta_override = Some(theta);
            Some(pair)
        }
        None => None,
    };

    let family = match solve_family(f, anchors, &solver) {
        Err(Error::AnchorCondition { violation }) => {
            writeln!(out, "anchor condition f(0, x, x) = x FAILED: worst violation {violation:e}")?;
            return Ok(ExitCode::AnchorFailed);
        }
        r => r?,
    };
    std::fs::create_dir_all(out_dir)?;
    for (i, m) in family.members.iter().enumerate() {
        let file = out_dir.join(format!("family_{}.csv", i + 1));
        write_atomic(&file, &solution_csv(f, &m.x, &m.z)?)?;
        writeln!(out, "member {}: anchor {:?}, {} iterations -> {}", i + 1, family.anchors[i], m.iterations, file.display())?;
    }
    writeln!(out, "theta = {:.6}", family.theta())?;
    for (i, j, d) in family.pairwise_distances(f.alpha())? {
        writeln!(out, "distance({}, {}) = {d:.6e}", i + 1, j + 1)?;
    }

    let Some(pair) = pair.as_mut() else {
        return Ok(ExitCode::Ok);
    };
    let g = pair.spec_g.clone();
    let other = match solve_family(&g, anchors, &solver) {
        Err(Error::AnchorCondition { violation }) => {
            writeln!(out, "compare problem: anchor condition FAILED: worst violation {violation:e}")?;
            return Ok(ExitCode::AnchorFailed);
        }
        r => r?,
    };
    let theta = family.theta();
    let k_label = match cfg.compare.as_ref().and_then(|c| c.k_ml) {
        Some(_) => "",
        None => {
            let mut parts: Vec<&caputo_picard::fracops::GridFunction> = Vec::new();
            for m in family.members.iter().chain(&other.members) {
                parts.push(&m.x);
                parts.push(&m.z);
            }
            pair.k_ml = estimate_k_ml(f, &g, theta, value_radius(&parts), ESTIMATE_SAMPLES)?;
            " (estimated)"
        }
    };
    let bound = family_hausdorff_bound(pair, theta)?;
    let measured = hausdorff_distance(&family.solutions(), &other.solutions(), f.alpha(), theta)?;
    writeln!(out, "K_ml = {:.6}{k_label}", pair.k_ml)?;
    writeln!(out, "family_hausdorff_bound = {bound:.6}")?;
    writeln!(out, "hausdorff_distance = {measured:.6}")?;
    writeln!(out, "margin = {:.6}", bound - measured)?;
    Ok(if measured <= bound {
        ExitCode::Ok
    } else {
        writeln!(out, "BOUND VIOLATED")?;
        ExitCode::BoundViolated
    })
}

pub fn run_mlf(alpha: f64, z: f64, out: &mut dyn Write) -> CmdResult {
    let v = mittag_leffler(alpha, z)?;
    writeln!(out, "{v:?}")?;
    Ok(ExitCode::Ok)
}

const SELFTEST_DENSE: usize = 4096;
const SELFTEST_SOLVE: usize = 1024;
const SELFTEST_TOL: f64 = 1e-2;

/// Residual self-validation and a solve-vs-exact comparison for every
/// fixture with a known solution.
pub fn run_selftest(out: &mut dyn Write) -> CmdResult {
    writeln!(out, "{:<18} {:>14} {:>14} {:>14}  result", "fixture", "caputo_res", "fixed_pt_res", "solve_error")?;
    let mut all = true;
    for (i, fx) in fixtures::exact_fixtures().into_iter().enumerate() {
        let check = fx
            .self_check(SELFTEST_DENSE)
            .expect("exact fixtures carry a solution")?;
        let report = solve(&fx.spec, &SolverConfig::new(SELFTEST_SOLVE))?;
        let exact = fx.sample_exact(*report.x.grid()).expect("exact fixtures carry a solution")?;
        let err = chebyshev_norm(&report.x.sub(&exact)?);
        let fp = check.fixed_point_residual.unwrap_or(0.0);
        let ok = report.converged && check.caputo_residual <= SELFTEST_TOL && fp <= SELFTEST_TOL && err <= SELFTEST_TOL;
        all &= ok;
        writeln!(
            out,
            "{:<18} {:>14.3e} {:>14.3e} {:>14.3e}  {}",
            format!("{}.{}", i + 1, fx.name),
            check.caputo_residual,
            fp,
            err,
            pass(ok)
        )?;
    }
    Ok(if all { ExitCode::Ok } else { ExitCode::Runtime })
}
