//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fail.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use caputo_picard::dependence::solve_family;
use caputo_picard::prelude::*;
use caputo_picard::specfun::bielecki_weight;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn contraction_constant() -> Outcome {
    let spec = fixtures::sqrt_ml_problem().spec;
    let (c, dt) = timed(|| check_contraction(&spec, 1024));
    let c = c.map_err(|e| e.to_string())?;
    ensure(
        (c.q_global - 0.8989).abs() <= 5e-4 && c.contraction_ok && dt < Duration::from_millis(100),
        format!("q_global = {:.6}, {dt:?}", c.q_global),
    )
}

fn exact_solution() -> Outcome {
    let fx = fixtures::sqrt_ml_problem();
    let mut cfg = SolverConfig::new(1024);
    cfg.tol = 1e-10;
    cfg.theta_override = Some(2.0);
    let (report, dt) = timed(|| solve(&fx.spec, &cfg));
    let report = report.map_err(|e| e.to_string())?;
    let grid = *report.x.grid();
    let mut worst = 0.0f64;
    let mut tail = 0.0f64;
    for (k, t) in grid.nodes().enumerate() {
        let exact = t.sqrt() + libm::exp(t) * libm::erfc(-t.sqrt());
        let e = (report.x.node(k)[0] - exact).abs();
        worst = worst.max(e);
        if k >= grid.intervals() / 8 {
            tail = tail.max(e);
        }
    }
    ensure(
        report.converged && report.iterations <= 60 && worst <= 1e-2 && tail <= 3e-3 && dt < Duration::from_secs(5),
        format!("{} iterations, max error {worst:.2e}, tail error {tail:.2e}, {dt:?}", report.iterations),
    )
}

fn max_ratio(spec: &ProblemSpec, n: usize) -> Result<(f64, f64), String> {
    let r = solve(spec, &SolverConfig::new(n)).map_err(|e| e.to_string())?;
    let worst = r.ratio_estimates.iter().copied().fold(0.0, f64::max);
    Ok((worst, r.contraction.q_bielecki))
}

fn contraction_rate() -> Outcome {
    let (w, q) = max_ratio(&fixtures::sqrt_ml_problem().spec, 1024)?;
    let mut worst_excess = w - q;
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let mut tried = 0;
    let mut certified = 0;
    while certified < 20 {
        tried += 1;
        let lambda = rng.random_range(-2.0..2.0);
        let alpha = rng.random_range(0.2..1.0);
        let horizon = rng.random_range(0.1..2.0);
        let x0 = rng.random_range(-3.0..3.0);
        let spec = fixtures::linear_eigen_problem(lambda, alpha, x0, horizon).map_err(|e| e.to_string())?.spec;
        if !check_contraction(&spec, 256).map_err(|e| e.to_string())?.contraction_ok {
            continue;
        }
        certified += 1;
        let (w, q) = max_ratio(&spec, 256)?;
        worst_excess = worst_excess.max(w - q);
    }
    ensure(
        worst_excess <= 0.05,
        format!("worst ratio - q_bielecki = {worst_excess:.4} over 1 + {certified} fixtures ({tried} drawn)"),
    )
}

fn value(text: &str, key: &str) -> Result<f64, String> {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .and_then(|v| v.split_whitespace().next())
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format!("no {key} in output:\n{text}"))
}

fn dependence_bound_cli() -> Outcome {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/sqrt_ml_pair.cfg");
    let out = Command::new(env!("CARGO_BIN_EXE_caputo-picard"))
        .arg("depend")
        .arg(&cfg)
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    let bound = value(&text, "dependence_bound")?;
    let measured = value(&text, "measured_distance")?;
    let half = PI.sqrt() / 2.0;
    ensure(
        out.status.code() == Some(0)
            && (bound - (half + 2.3004)).abs() <= 1e-3
            && measured <= half + 1e-2
            && measured <= bound,
        format!("bound = {bound:.6}, measured = {measured:.6}, exit {:?}", out.status.code()),
    )
}

fn special_functions() -> Outcome {
    let mut worst_e1 = 0.0f64;
    for z in [0.0, 0.5, 1.0, 2.0, 5.0] {
        let got = mittag_leffler(1.0, z).map_err(|e| e.to_string())?;
        worst_e1 = worst_e1.max((got - z.exp()).abs() / z.exp());
    }
    let mut worst_half = 0.0f64;
    for z in [0.0, 0.25, 0.5, 1.0, 2.0, 3.0] {
        let got = mittag_leffler(0.5, z).map_err(|e| e.to_string())?;
        worst_half = worst_half.max((got - libm::exp(z * z) * libm::erfc(-z)).abs());
    }
    let mut worst_gamma = 0.0f64;
    for i in 0..100 {
        let x = 0.5 * 40f64.powf(i as f64 / 99.0);
        let g1 = gamma(x + 1.0).map_err(|e| e.to_string())?;
        let g = gamma(x).map_err(|e| e.to_string())?;
        worst_gamma = worst_gamma.max((g1 - x * g).abs() / g1);
    }
    ensure(
        worst_e1 <= 1e-12 && worst_half <= 1e-10 && worst_gamma <= 1e-12,
        format!("E_1 rel {worst_e1:.1e}, E_1/2 abs {worst_half:.1e}, Gamma rel {worst_gamma:.1e}"),
    )
}

fn power_rule() -> Outcome {
    let grid = UniformGrid::new(1.0, 1024).map_err(|e| e.to_string())?;
    let w = build_weights(0.5, grid).map_err(|e| e.to_string())?;
    let mut errs = Vec::new();
    for beta in [0i32, 1, 2] {
        let z = GridFunction::from_scalar_fn(grid, |t| t.powi(beta)).map_err(|e| e.to_string())?;
        let got = frac_integral(&w, &z).map_err(|e| e.to_string())?;
        let b = beta as f64;
        let want = libm::tgamma(b + 1.0) / libm::tgamma(b + 1.5);
        errs.push((got.node(grid.intervals())[0] - want).abs() / want);
    }
    ensure(
        errs[0] <= 1e-12 && errs[1] <= 1e-12 && errs[2] <= 2e-3,
        format!("relative errors at T: {:.1e}, {:.1e}, {:.1e}", errs[0], errs[1], errs[2]),
    )
}

fn ml_integral_identity() -> Outcome {
    let grid = UniformGrid::new(1.0, 1024).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (alpha, theta) in [(0.5, 2.0), (1.0 / 3.0, 3.0), (0.75, 1.0)] {
        let w = build_weights(alpha, grid).map_err(|e| e.to_string())?;
        let e = GridFunction::from_scalar_fn(grid, |t| bielecki_weight(alpha, theta, t).unwrap()).map_err(|e| e.to_string())?;
        let got = frac_integral(&w, &e).map_err(|e| e.to_string())?.node(grid.intervals())[0];
        let want = (bielecki_weight(alpha, theta, 1.0).map_err(|e| e.to_string())? - 1.0) / theta;
        worst = worst.max((got - want).abs() / want);
    }
    ensure(worst <= 5e-3, format!("worst relative error {worst:.2e}"))
}

fn brute_force_hausdorff(a: &[GridFunction], b: &[GridFunction], alpha: f64, theta: f64) -> f64 {
    let dist = |u: &GridFunction, v: &GridFunction| {
        let g = u.grid();
        let mut best = 0.0f64;
        for k in 0..g.len() {
            let w = bielecki_weight(alpha, theta, g.node(k)).unwrap();
            let d: Vec<f64> = u.node(k).iter().zip(v.node(k)).map(|(p, q)| p - q).collect();
            let norm = if d.len() == 1 { d[0].abs() } else { d.iter().map(|x| x * x).sum::<f64>().sqrt() };
            best = best.max(norm / w);
        }
        best
    };
    let directed = |x: &[GridFunction], y: &[GridFunction]| {
        x.iter()
            .map(|u| y.iter().map(|v| dist(u, v)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

fn hausdorff_oracle() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(8);
    let mut mismatches = 0;
    for _ in 0..100 {
        let grid = UniformGrid::new(rng.random_range(0.1..2.0), rng.random_range(2..40)).map_err(|e| e.to_string())?;
        let dim = rng.random_range(1..4);
        let sizes = (rng.random_range(1..=8), rng.random_range(1..=8));
        let mut set = |size: usize| -> Vec<GridFunction> {
            (0..size)
                .map(|_| {
                    let v: Vec<f64> = (0..grid.len() * dim).map(|_| rng.random_range(-3.0..3.0)).collect();
                    GridFunction::new(grid, dim, v).unwrap()
                })
                .collect()
        };
        let (a, b) = (set(sizes.0), set(sizes.1));
        let (alpha, theta) = (rng.random_range(0.3..=1.0), rng.random_range(0.5..4.0));
        let fast = hausdorff_distance(&a, &b, alpha, theta).map_err(|e| e.to_string())?;
        if fast != brute_force_hausdorff(&a, &b, alpha, theta) {
            mismatches += 1;
        }
    }
    ensure(mismatches == 0, format!("{mismatches} mismatches in 100 pairs"))
}

fn anchored_family() -> Outcome {
    let (lambda, alpha, horizon) = (1.0, 0.5, 0.5);
    let spec = fixtures::linear_eigen_problem(lambda, alpha, 1.0, horizon).map_err(|e| e.to_string())?.spec;
    let anchors = [0.25, 0.5, 1.0];
    let cfg = SolverConfig::new(1024);
    let fam = solve_family(&spec, &anchors.map(|a| vec![a]), &cfg).map_err(|e| e.to_string())?;
    let q = fam.contraction.q_bielecki;

    let pinned = fam.members.iter().zip(anchors).all(|(m, a)| m.x.node(0)[0].to_bits() == a.to_bits());
    let mut separation_ok = true;
    for (i, j, d) in fam.pairwise_distances(alpha).map_err(|e| e.to_string())? {
        separation_ok &= d >= (1.0 - q) * (anchors[i] - anchors[j]).abs() - 10.0 * cfg.tol;
    }
    let mut worst = 0.0f64;
    for (m, a) in fam.members.iter().zip(anchors) {
        for (k, t) in m.x.grid().nodes().enumerate() {
            // E_1/2(s) = exp(s^2) erfc(-s)
            let s = lambda * t.powf(alpha);
            worst = worst.max((m.x.node(k)[0] - a * libm::exp(s * s) * libm::erfc(-s)).abs());
        }
    }
    ensure(
        pinned && separation_ok && worst <= 1e-2,
        format!("node 0 pinned: {pinned}, separation: {separation_ok}, max error {worst:.2e}"),
    )
}

fn uniqueness() -> Outcome {
    let spec = fixtures::sqrt_ml_problem().spec;
    let grid = UniformGrid::new(spec.horizon(), 1024).map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for c in [0.0, 5.0] {
        let mut cfg = SolverConfig::new(1024);
        cfg.initial_guess = Some(GridFunction::constant(grid, &[c]).map_err(|e| e.to_string())?);
        runs.push(solve(&spec, &cfg).map_err(|e| e.to_string())?);
    }
    let theta = runs[0].theta();
    let d = bielecki_norm(&runs[0].z.sub(&runs[1].z).map_err(|e| e.to_string())?, spec.alpha(), theta).map_err(|e| e.to_string())?;
    let tol = SolverConfig::default().tol;
    ensure(d <= 10.0 * tol, format!("Bielecki distance {d:.2e}"))
}

fn scope_note() -> Outcome {
    Ok("criteria 1, 2 and 4 reproduce published numbers; the rest are property checks".into())
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("contraction constant", contraction_constant),
        ("exact solution", exact_solution),
        ("contraction rate", contraction_rate),
        ("dependence bound (cli)", dependence_bound_cli),
        ("special functions", special_functions),
        ("quadrature power rule", power_rule),
        ("Mittag-Leffler integral identity", ml_integral_identity),
        ("Hausdorff oracle", hausdorff_oracle),
        ("anchored family", anchored_family),
        ("uniqueness", uniqueness),
        ("scope note", scope_note),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
