use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} lies outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("Mittag-Leffler series for alpha = {alpha}, z = {z} did not converge within {terms} terms")]
    SeriesNonConvergence { alpha: f64, z: f64, terms: usize },
    #[error("overflow while evaluating {0}")]
    Overflow(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid functions live on different grids")]
    GridMismatch,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },
    #[error("right-hand side failed at node {node} (t = {t}): {message}")]
    Evaluation { node: usize, t: f64, message: String },
    #[error("contraction not certified: q_global = {q_global:.6} >= 1 (pass force to iterate on the Bielecki estimate)")]
    NotContractive { q_global: f64 },
    #[error("theta = {theta} gives M2/theta + M3 = {q} >= 1")]
    ThetaTooSmall { theta: f64, q: f64 },
    #[error("anchor condition f(0, x, x) = x violated: worst |f(0,x,x) - x| = {violation:e}")]
    AnchorCondition { violation: f64 },
    #[error("node 0 drifted from its anchor by {drift:e}")]
    AnchorDrift { drift: f64 },
    #[error("family member {member} did not converge in {iterations} iterations (last step {last_step:e})")]
    MemberNotConverged {
        member: usize,
        iterations: usize,
        last_step: f64,
    },
    #[error("Hausdorff distance needs two nonempty sets")]
    EmptySet,
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, range: &'static str) -> Self {
        Error::Domain { name, value, range }
    }
}
