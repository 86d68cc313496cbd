//! Line-based `key = value` config files with `[problem]`, `[solver]`,
//! `[compare]` and `[family]` sections.

use std::fmt;
use std::path::Path;

use caputo_picard::dsl::{parse, ExprRhs};
use caputo_picard::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Problem,
    Solver,
    Compare,
    Family,
}

impl Section {
    fn from_header(name: &str) -> Option<Self> {
        Some(match name {
            "problem" => Section::Problem,
            "solver" => Section::Solver,
            "compare" => Section::Compare,
            "family" => Section::Family,
            _ => return None,
        })
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Section::Problem => &["alpha", "T", "x0", "rhs", "M1", "M2", "M3", "exact"],
            Section::Solver => &["n", "tol", "max_iter", "theta", "force"],
            Section::Compare => &["alpha", "T", "x0", "rhs", "M1", "M2", "M3", "exact", "K_eta", "K_ml"],
            Section::Family => &["anchors"],
        }
    }

    fn repeatable(key: &str) -> bool {
        matches!(key, "rhs" | "exact")
    }
}

/// One `key = value` entry with its line number.
#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug, Default)]
struct Raw {
    problem: Vec<Entry>,
    solver: Vec<Entry>,
    compare: Option<Vec<Entry>>,
    family: Option<Vec<Entry>>,
}

fn lex(text: &str) -> Result<Raw, ConfigError> {
    let mut raw = Raw::default();
    let mut current: Option<Section> = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(lineno, "unterminated section header"))?;
            let section = Section::from_header(name.trim())
                .ok_or_else(|| ConfigError::at(lineno, format!("unknown section [{}]", name.trim())))?;
            match section {
                Section::Compare if raw.compare.is_some() => return Err(ConfigError::at(lineno, "duplicate [compare] section")),
                Section::Family if raw.family.is_some() => return Err(ConfigError::at(lineno, "duplicate [family] section")),
                Section::Compare => raw.compare = Some(Vec::new()),
                Section::Family => raw.family = Some(Vec::new()),
                _ => {}
            }
            current = Some(section);
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::at(lineno, format!("expected `key = value`, found {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let section = current.ok_or_else(|| ConfigError::at(lineno, "key outside of any section"))?;
        if !section.keys().contains(&key) {
            return Err(ConfigError::at(lineno, format!("unknown key {key:?} in [{section:?}]").to_lowercase()));
        }
        if value.is_empty() {
            return Err(ConfigError::at(lineno, format!("{key} has an empty value")));
        }
        let bucket = match section {
            Section::Problem => &mut raw.problem,
            Section::Solver => &mut raw.solver,
            Section::Compare => raw.compare.as_mut().expect("opened above"),
            Section::Family => raw.family.as_mut().expect("opened above"),
        };
        if !Section::repeatable(key) {
            if let Some(prev) = bucket.iter().find(|e| e.key == key) {
                return Err(ConfigError::at(lineno, format!("{key} already set on line {}", prev.line)));
            }
        }
        bucket.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line: lineno,
        });
    }
    Ok(raw)
}

fn find<'a>(entries: &'a [Entry], key: &str) -> Option<&'a Entry> {
    entries.iter().find(|e| e.key == key)
}

fn real(e: &Entry) -> Result<f64, ConfigError> {
    let v: f64 = e
        .value
        .parse()
        .map_err(|_| ConfigError::at(e.line, format!("{} must be a number, found {:?}", e.key, e.value)))?;
    if !v.is_finite() {
        return Err(ConfigError::at(e.line, format!("{} must be finite", e.key)));
    }
    Ok(v)
}

fn required<'a>(entries: &'a [Entry], key: &str, section: &str) -> Result<&'a Entry, ConfigError> {
    find(entries, key).ok_or_else(|| ConfigError::general(format!("missing key {key} in [{section}]")))
}

fn reals(e: &Entry, sep: char) -> Result<Vec<f64>, ConfigError> {
    e.value
        .split(sep)
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ConfigError::at(e.line, format!("{}: {s:?} is not a finite number", e.key)))
        })
        .collect()
}

/// A parsed problem section. Formulas keep their source text for reports.
#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub spec: ProblemSpec,
    pub rhs: Vec<String>,
    pub exact: Option<Vec<String>>,
}

impl ProblemConfig {
    /// Exact solution sampled on `grid`, if given.
    pub fn sample_exact(&self, grid: UniformGrid) -> Option<Result<GridFunction, String>> {
        let formulas = self.exact.as_ref()?;
        let exprs: Vec<_> = formulas.iter().map(|f| parse(f).expect("validated at load")).collect();
        let mut values = Vec::with_capacity(grid.len() * exprs.len());
        for t in grid.nodes() {
            for e in &exprs {
                match e.eval(t, 0.0, 0.0) {
                    Ok(v) => values.push(v),
                    Err(err) => return Some(Err(format!("exact solution at t = {t}: {err}"))),
                }
            }
        }
        Some(GridFunction::new(grid, exprs.len(), values).map_err(|e| e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct CompareConfig {
    pub problem: ProblemConfig,
    pub k_eta: Option<f64>,
    pub k_ml: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub solver: SolverConfig,
    pub compare: Option<CompareConfig>,
    pub anchors: Option<Vec<Vec<f64>>>,
}

fn formulas(entries: &[Entry], key: &str) -> Result<Vec<String>, ConfigError> {
    entries
        .iter()
        .filter(|e| e.key == key)
        .map(|e| {
            parse(&e.value)
                .map(|_| e.value.clone())
                .map_err(|err| ConfigError::at(e.line, format!("{key}: {err}")))
        })
        .collect()
}

fn problem(entries: &[Entry], section: &str, inherit: Option<&ProblemSpec>) -> Result<ProblemConfig, ConfigError> {
    let scalar = |key: &str, fallback: Option<f64>| -> Result<f64, ConfigError> {
        match (find(entries, key), fallback) {
            (Some(e), _) => real(e),
            (None, Some(v)) => Ok(v),
            (None, None) => Err(ConfigError::general(format!("missing key {key} in [{section}]"))),
        }
    };
    let alpha = scalar("alpha", inherit.map(|s| s.alpha()))?;
    let horizon = scalar("T", inherit.map(|s| s.horizon()))?;
    let x0 = reals(required(entries, "x0", section)?, ',')?;
    let rhs = formulas(entries, "rhs")?;
    if rhs.is_empty() {
        return Err(ConfigError::general(format!("missing key rhs in [{section}]")));
    }
    if rhs.len() != x0.len() {
        let line = find(entries, "x0").map(|e| e.line);
        return Err(ConfigError {
            line,
            message: format!("x0 has {} components but {} rhs lines are given", x0.len(), rhs.len()),
        });
    }
    let exact = formulas(entries, "exact")?;
    if !exact.is_empty() && exact.len() != x0.len() {
        return Err(ConfigError::general(format!(
            "{} exact lines given for a {}-component problem",
            exact.len(),
            x0.len()
        )));
    }
    let m = |key: &str| scalar(key, inherit.map(|s| lipschitz_field(s.lipschitz(), key)));
    let lip = Lipschitz::new(m("M1")?, m("M2")?, m("M3")?);
    let rhs_fn = ExprRhs::parse_all(&rhs).expect("validated above").into_rhs();
    let spec = ProblemSpec::new(alpha, horizon, x0, rhs_fn, lip).map_err(|e| {
        let key = ["M1", "M2", "M3", "alpha", "T"].into_iter().find(|k| e.to_string().contains(k));
        ConfigError {
            line: key.and_then(|k| find(entries, k)).map(|e| e.line),
            message: e.to_string(),
        }
    })?;
    Ok(ProblemConfig {
        spec,
        rhs,
        exact: (!exact.is_empty()).then_some(exact),
    })
}

fn lipschitz_field(l: Lipschitz, key: &str) -> f64 {
    match key {
        "M1" => l.m1,
        "M2" => l.m2,
        _ => l.m3,
    }
}

fn solver(entries: &[Entry]) -> Result<SolverConfig, ConfigError> {
    let mut cfg = SolverConfig::default();
    if let Some(e) = find(entries, "n") {
        cfg.n = e
            .value
            .parse()
            .ok()
            .filter(|&n: &usize| n >= 2)
            .ok_or_else(|| ConfigError::at(e.line, format!("n must be an integer ≥ 2, found {:?}", e.value)))?;
    }
    if let Some(e) = find(entries, "tol") {
        cfg.tol = real(e)?;
    }
    if let Some(e) = find(entries, "max_iter") {
        cfg.max_iter = e
            .value
            .parse()
            .ok()
            .filter(|&m: &usize| m >= 1)
            .ok_or_else(|| ConfigError::at(e.line, format!("max_iter must be a positive integer, found {:?}", e.value)))?;
    }
    if let Some(e) = find(entries, "theta") {
        cfg.theta_override = Some(real(e)?);
    }
    if let Some(e) = find(entries, "force") {
        cfg.force = match e.value.as_str() {
            "true" => true,
            "false" => false,
            other => return Err(ConfigError::at(e.line, format!("force must be true or false, found {other:?}"))),
        };
    }
    cfg.validate().map_err(|err| {
        let key = ["tol", "max_iter", "theta"].into_iter().find(|k| err.to_string().contains(k));
        ConfigError {
            line: key.and_then(|k| find(entries, k)).map(|e| e.line),
            message: err.to_string(),
        }
    })?;
    Ok(cfg)
}

fn anchors(entries: &[Entry], dim: usize) -> Result<Vec<Vec<f64>>, ConfigError> {
    let e = required(entries, "anchors", "family")?;
    let list: Vec<Vec<f64>> = if dim == 1 {
        reals(e, ',')?.into_iter().map(|a| vec![a]).collect()
    } else {
        e.value
            .split(';')
            .map(|chunk| {
                reals(
                    &Entry {
                        value: chunk.to_string(),
                        ..e.clone()
                    },
                    ',',
                )
            })
            .collect::<Result<_, _>>()?
    };
    if let Some(bad) = list.iter().find(|a| a.len() != dim) {
        return Err(ConfigError::at(
            e.line,
            format!("anchor {bad:?} has {} components, problem has {dim}", bad.len()),
        ));
    }
    Ok(list)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw = lex(text)?;
    let problem_cfg = problem(&raw.problem, "problem", None)?;
    let solver_cfg = solver(&raw.solver)?;
    let compare = match &raw.compare {
        Some(entries) => {
            let p = problem(entries, "compare", Some(&problem_cfg.spec))?;
            let opt = |key: &str| -> Result<Option<f64>, ConfigError> {
                find(entries, key)
                    .map(|e| {
                        let v = real(e)?;
                        if v < 0.0 {
                            return Err(ConfigError::at(e.line, format!("{key} must be ≥ 0")));
                        }
                        Ok(v)
                    })
                    .transpose()
            };
            Some(CompareConfig {
                problem: p,
                k_eta: opt("K_eta")?,
                k_ml: opt("K_ml")?,
            })
        }
        None => None,
    };
    let anchors = match &raw.family {
        Some(entries) => Some(anchors(entries, problem_cfg.spec.dim())?),
        None => None,
    };
    Ok(RunConfig {
        problem: problem_cfg,
        solver: solver_cfg,
        compare,
        anchors,
    })
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::general(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[problem]\nalpha = 0.5\nT = 0.5\nx0 = 1\nrhs = x\nM1 = 0\nM2 = 1\nM3 = 0.1\n";

    #[test]
    fn minimal_config() {
        let cfg = parse_config(BASE).unwrap();
        assert_eq!(cfg.problem.spec.x0(), &[1.0]);
        assert_eq!(cfg.solver.n, 1024);
        assert!(cfg.compare.is_none() && cfg.anchors.is_none());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_config(&BASE.replace("M3 = 0.1", "M3 = 1.5")).unwrap_err();
        assert_eq!(err.line, Some(8));
        assert!(err.message.contains("M3 must lie in (0,1)"), "{err}");

        let err = parse_config(&format!("{BASE}[solver]\nn = ten\n")).unwrap_err();
        assert_eq!(err.line, Some(10));

        let err = parse_config(&format!("{BASE}bogus = 1\n")).unwrap_err();
        assert_eq!(err.line, Some(9));

        let err = parse_config(&BASE.replace("rhs = x", "rhs = x +")).unwrap_err();
        assert_eq!(err.line, Some(5));

        let err = parse_config(&format!("{BASE}alpha = 0.3\n")).unwrap_err();
        assert!(err.message.contains("already set on line 2"));

        let err = parse_config("alpha = 1\n").unwrap_err();
        assert_eq!(err.line, Some(1));
    }

    #[test]
    fn compare_inherits_order_and_horizon() {
        let text = format!("{BASE}[compare]\nx0 = 0.5\nrhs = x + 0.1\nK_eta = 0.2\n");
        let cfg = parse_config(&text).unwrap();
        let cmp = cfg.compare.unwrap();
        assert_eq!(cmp.problem.spec.alpha(), 0.5);
        assert_eq!(cmp.problem.spec.lipschitz(), cfg.problem.spec.lipschitz());
        assert_eq!(cmp.k_eta, Some(0.2));
        assert_eq!(cmp.k_ml, None);
    }

    #[test]
    fn anchor_lists() {
        let cfg = parse_config(&format!("{BASE}[family]\nanchors = 0.5, 1.0\n")).unwrap();
        assert_eq!(cfg.anchors.unwrap(), vec![vec![0.5], vec![1.0]]);

        let two = "[problem]\nalpha = 0.5\nT = 1\nx0 = 1, 2\nrhs = x\nrhs = x\nM1 = 0\nM2 = 1\nM3 = 0.1\n[family]\nanchors = 1, 2; 3, 4\n";
        let cfg = parse_config(two).unwrap();
        assert_eq!(cfg.anchors.unwrap(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let err = parse_config(&two.replace("3, 4", "3")).unwrap_err();
        assert_eq!(err.line, Some(11));
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# header\n\n{BASE}\n[solver]  # trailing\nforce = true\ntheta = 4 # override\n");
        let cfg = parse_config(&text).unwrap();
        assert!(cfg.solver.force);
        assert_eq!(cfg.solver.theta_override, Some(4.0));
    }
}
