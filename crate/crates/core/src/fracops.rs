//! Uniform grids, sampled functions, and the discrete fractional operators.
//!
//! The Riemann-Liouville integral `I^α z(t_k)` is approximated with
//! product-trapezoidal weights: `z` is interpolated linearly on each cell and
//! the kernel `(t_k - s)^(α-1) / Γ(α)` is integrated against it in closed
//! form. The Caputo derivative uses the L1 scheme. Both are only needed on
//! uniform grids, so the weights are Toeplitz apart from the first column and
//! are stored in O(n).

use crate::par::{for_each_row, Exec};
use crate::specfun::gamma;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    horizon: f64,
    intervals: usize,
}

impl UniformGrid {
    pub fn new(horizon: f64, intervals: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidGrid(format!("horizon must be positive and finite, got {horizon}")));
        }
        if intervals < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 intervals, got {intervals}")));
        }
        Ok(UniformGrid { horizon, intervals })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Number of nodes, `n + 1`.
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.intervals as f64
    }

    /// `t_k = k T / n`, with `t_n = T` exactly.
    pub fn node(&self, k: usize) -> f64 {
        if k == self.intervals {
            self.horizon
        } else {
            k as f64 * self.horizon / self.intervals as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |k| self.node(k))
    }
}

/// Vector-valued function sampled at every node of a [`UniformGrid`].
/// Values are stored node-major: node `k` occupies `values[k*d..(k+1)*d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: UniformGrid,
    dim: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: UniformGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if values.len() != grid.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: grid.len() * dim,
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: i / dim });
        }
        Ok(GridFunction { grid, dim, values })
    }

    pub fn zeros(grid: UniformGrid, dim: usize) -> Self {
        GridFunction {
            grid,
            dim,
            values: vec![0.0; grid.len() * dim],
        }
    }

    pub fn constant(grid: UniformGrid, value: &[f64]) -> Result<Self> {
        let values = value.iter().copied().cycle().take(grid.len() * value.len()).collect();
        GridFunction::new(grid, value.len(), values)
    }

    /// Samples `f(t, out)` at every node.
    pub fn from_fn<F>(grid: UniformGrid, dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(f64, &mut [f64]),
    {
        let mut values = vec![0.0; grid.len() * dim];
        for (k, row) in values.chunks_mut(dim).enumerate() {
            f(grid.node(k), row);
        }
        GridFunction::new(grid, dim, values)
    }

    pub fn from_scalar_fn<F>(grid: UniformGrid, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        GridFunction::new(grid, 1, grid.nodes().map(f).collect())
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub(crate) fn node_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::Chunks<'_, f64> {
        self.values.chunks(self.dim)
    }

    /// Euclidean norm of node `k`.
    pub fn node_norm(&self, k: usize) -> f64 {
        euclidean(self.node(k))
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        self.rows().map(|r| r[i]).collect()
    }

    fn check_compatible(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        GridFunction::new(self.grid, self.dim, values)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(u, v)| u - v).collect();
        GridFunction::new(self.grid, self.dim, values)
    }
}

pub(crate) fn euclidean(v: &[f64]) -> f64 {
    match v {
        [x] => x.abs(),
        _ => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
    }
}

/// Product-trapezoidal weights for `I^α` on a uniform grid.
///
/// Row `k` is `w[k][0] = s·e_k`, `w[k][j] = s·c_{k-j}` for `0 < j < k`,
/// `w[k][k] = s`, with `s = h^α / Γ(α+2)`, `e_k = (k-1)^(α+1) - (k-α-1)k^α`
/// and `c_m = (m+1)^(α+1) - 2m^(α+1) + (m-1)^(α+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FracWeights {
    alpha: f64,
    grid: UniformGrid,
    diag: f64,
    // first[k] = w[k][0], k >= 1
    first: Vec<f64>,
    // interior[m] = w[k][k-m], 1 <= m <= n-1
    interior: Vec<f64>,
}

/// Binomial coefficients C(p, i) for i = 0.., computed on demand.
fn binomials(p: f64) -> impl Iterator<Item = f64> {
    (0..).scan(1.0, move |c, i: i32| {
        let out = *c;
        *c *= (p - i as f64) / (i + 1) as f64;
        Some(out)
    })
}

// (m+1)^p - 2m^p + (m-1)^p, m >= 1
fn second_difference(m: usize, p: f64) -> f64 {
    let mf = m as f64;
    if m < 4 {
        return (mf + 1.0).powf(p) - 2.0 * mf.powf(p) + (mf - 1.0).powf(p);
    }
    // 2 Σ_{i≥1} C(p, 2i) m^(p-2i); every term is nonnegative for p in (1, 2]
    let inv2 = 1.0 / (mf * mf);
    let mut sum = 0.0;
    let mut scale = mf.powf(p);
    for (i, c) in binomials(p).enumerate().skip(1) {
        if i % 2 == 1 {
            continue;
        }
        scale *= inv2;
        let term = 2.0 * c * scale;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || i > 60 {
            break;
        }
    }
    sum
}

// (k-1)^p - (k-p) k^(p-1), k >= 1
fn endpoint_difference(k: usize, p: f64) -> f64 {
    let kf = k as f64;
    if k < 4 {
        return (kf - 1.0).powf(p) - (kf - p) * kf.powf(p - 1.0);
    }
    // k^p Σ_{i≥2} C(p, i) (-1/k)^i
    let inv = -1.0 / kf;
    let mut scale = kf.powf(p);
    let mut sum = 0.0;
    for (i, c) in binomials(p).enumerate().skip(1) {
        scale *= inv;
        if i == 1 {
            continue;
        }
        let term = c * scale;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || i > 60 {
            break;
        }
    }
    sum
}

/// Product-trapezoidal weights for `I^α`, `α ∈ (0, 1]`.
pub fn build_weights(alpha: f64, grid: UniformGrid) -> Result<FracWeights> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain("alpha", alpha, "(0, 1]"));
    }
    let n = grid.intervals();
    let p = alpha + 1.0;
    let diag = grid.step().powf(alpha) / gamma(alpha + 2.0)?;
    let mut first = vec![0.0; n + 1];
    for (k, w) in first.iter_mut().enumerate().skip(1) {
        *w = diag * endpoint_difference(k, p);
    }
    let mut interior = vec![0.0; n];
    for (m, w) in interior.iter_mut().enumerate().skip(1) {
        *w = diag * second_difference(m, p);
    }
    Ok(FracWeights {
        alpha,
        grid,
        diag,
        first,
        interior,
    })
}

impl FracWeights {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    /// Entry `w[k][j]` of the lower-triangular weight matrix.
    pub fn weight(&self, k: usize, j: usize) -> f64 {
        if k == 0 || j > k {
            0.0
        } else if j == k {
            self.diag
        } else if j == 0 {
            self.first[k]
        } else {
            self.interior[k - j]
        }
    }

    fn apply_row(&self, k: usize, values: &[f64], dim: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if k == 0 {
            return;
        }
        let w0 = self.first[k];
        for (o, v) in out.iter_mut().zip(&values[..dim]) {
            *o = w0 * v;
        }
        for j in 1..k {
            let w = self.interior[k - j];
            let row = &values[j * dim..(j + 1) * dim];
            for (o, v) in out.iter_mut().zip(row) {
                *o += w * v;
            }
        }
        for (o, v) in out.iter_mut().zip(&values[k * dim..(k + 1) * dim]) {
            *o += self.diag * v;
        }
    }
}

/// Discrete `I^α z`; node 0 is the zero vector.
pub fn frac_integral(weights: &FracWeights, z: &GridFunction) -> Result<GridFunction> {
    frac_integral_with(weights, z, Exec::default())
}

pub fn frac_integral_with(weights: &FracWeights, z: &GridFunction, exec: Exec) -> Result<GridFunction> {
    if weights.grid != z.grid {
        return Err(Error::GridMismatch);
    }
    let dim = z.dim;
    let mut out = vec![0.0; z.values.len()];
    for_each_row(exec, &mut out, dim, |k, row| weights.apply_row(k, &z.values, dim, row));
    GridFunction::new(z.grid, dim, out)
}

/// L1 approximation of the Caputo derivative `D^α x`, `α ∈ (0, 1]`.
///
/// `D^α x(t_k) ≈ h^(-α)/Γ(2-α) Σ_{j<k} b_{k-1-j} (x_{j+1} - x_j)` with
/// `b_m = (m+1)^(1-α) - m^(1-α)`. Node 0 copies node 1.
pub fn caputo_l1(alpha: f64, x: &GridFunction) -> Result<GridFunction> {
    caputo_l1_with(alpha, x, Exec::default())
}

pub fn caputo_l1_with(alpha: f64, x: &GridFunction, exec: Exec) -> Result<GridFunction> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain("alpha", alpha, "(0, 1]"));
    }
    let grid = x.grid;
    let n = grid.intervals();
    let dim = x.dim;
    let q = 1.0 - alpha;
    let scale = grid.step().powf(-alpha) / gamma(2.0 - alpha)?;
    let b: Vec<f64> = (0..n)
        .map(|m| {
            if m == 0 {
                1.0
            } else {
                let mf = m as f64;
                mf.powf(q) * (q * (1.0 / mf).ln_1p()).exp_m1()
            }
        })
        .collect();
    let diffs: Vec<f64> = (0..n * dim)
        .map(|i| x.values[i + dim] - x.values[i])
        .collect();
    let mut out = vec![0.0; x.values.len()];
    for_each_row(exec, &mut out, dim, |k, row| {
        if k == 0 {
            return;
        }
        for j in 0..k {
            let w = b[k - 1 - j];
            for (o, d) in row.iter_mut().zip(&diffs[j * dim..(j + 1) * dim]) {
                *o += w * d;
            }
        }
        row.iter_mut().for_each(|v| *v *= scale);
    });
    let (head, tail) = out.split_at_mut(dim);
    head.copy_from_slice(&tail[..dim]);
    GridFunction::new(grid, dim, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t: f64, n: usize) -> UniformGrid {
        UniformGrid::new(t, n).unwrap()
    }

    #[test]
    fn grid_validation_and_nodes() {
        assert!(UniformGrid::new(1.0, 1).is_err());
        assert!(UniformGrid::new(0.0, 4).is_err());
        assert!(UniformGrid::new(f64::INFINITY, 4).is_err());
        let g = grid(0.1, 3);
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(3), 0.1);
        let nodes: Vec<f64> = g.nodes().collect();
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn grid_function_rejects_bad_values() {
        let g = grid(1.0, 2);
        assert!(GridFunction::new(g, 1, vec![0.0; 2]).is_err());
        assert!(matches!(
            GridFunction::new(g, 1, vec![0.0, f64::NAN, 0.0]),
            Err(Error::NonFinite { node: 1 })
        ));
        let a = GridFunction::zeros(g, 1);
        let b = GridFunction::zeros(grid(2.0, 2), 1);
        assert_eq!(a.sub(&b), Err(Error::GridMismatch));
    }

    // direct evaluation of the closed-form integrals, for the series branches
    fn second_difference_direct(m: usize, p: f64) -> f64 {
        let m = m as f64;
        (m + 1.0).powf(p) - 2.0 * m.powf(p) + (m - 1.0).powf(p)
    }

    #[test]
    fn series_branches_match_direct_formulas() {
        for &p in &[1.1, 1.5, 1.9, 2.0] {
            for m in [4usize, 5, 9, 40] {
                let a = second_difference(m, p);
                let b = second_difference_direct(m, p);
                assert!(((a - b) / b).abs() < 1e-11, "p={p} m={m}: {a} vs {b}");
                let km = m as f64;
                let e = (km - 1.0).powf(p) - (km - p) * km.powf(p - 1.0);
                let s = endpoint_difference(m, p);
                assert!(((e - s) / e).abs() < 1e-10, "p={p} k={m}: {e} vs {s}");
            }
        }
    }

    #[test]
    fn weights_are_lower_triangular_and_nonnegative() {
        let w = build_weights(0.5, grid(1.0, 16)).unwrap();
        for k in 0..=16 {
            for j in 0..=16 {
                let v = w.weight(k, j);
                assert!(v >= 0.0);
                if j > k || k == 0 {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn row_sums_are_exact_on_constants() {
        for &alpha in &[0.1, 0.5, 0.9, 1.0] {
            let g = grid(1.3, 300);
            let w = build_weights(alpha, g).unwrap();
            let ga = gamma(alpha + 1.0).unwrap();
            for k in 1..=300 {
                let s: f64 = (0..=k).map(|j| w.weight(k, j)).sum();
                let want = g.node(k).powf(alpha) / ga;
                assert!(((s - want) / want).abs() < 1e-12, "alpha={alpha} k={k}");
            }
        }
    }

    #[test]
    fn integral_of_zero_and_constants() {
        let g = grid(0.5, 64);
        let w = build_weights(0.5, g).unwrap();
        let z = GridFunction::zeros(g, 2);
        assert!(frac_integral(&w, &z).unwrap().values().iter().all(|&v| v == 0.0));
        let c = GridFunction::constant(g, &[2.0, -3.0]).unwrap();
        let i = frac_integral(&w, &c).unwrap();
        let ga = gamma(1.5).unwrap();
        for k in 1..=64 {
            let base = g.node(k).sqrt() / ga;
            assert!(((i.node(k)[0] - 2.0 * base) / (2.0 * base)).abs() < 1e-12);
            assert!(((i.node(k)[1] + 3.0 * base) / (3.0 * base)).abs() < 1e-12);
        }
        assert_eq!(i.node(0), &[0.0, 0.0]);
    }

    #[test]
    fn integral_rejects_grid_mismatch() {
        let w = build_weights(0.5, grid(1.0, 8)).unwrap();
        let z = GridFunction::zeros(grid(1.0, 9), 1);
        assert_eq!(frac_integral(&w, &z), Err(Error::GridMismatch));
    }

    #[test]
    fn linear_integrand_is_exact() {
        let g = grid(1.0, 1024);
        let w = build_weights(0.5, g).unwrap();
        let z = GridFunction::from_scalar_fn(g, |t| t).unwrap();
        let i = frac_integral(&w, &z).unwrap();
        let want = 1.0 / gamma(2.5).unwrap();
        assert!(((i.node(1024)[0] - want) / want).abs() < 1e-12);
    }

    #[test]
    fn caputo_of_constant_and_linear() {
        let g = grid(1.0, 1024);
        let c = GridFunction::constant(g, &[4.0]).unwrap();
        assert!(caputo_l1(0.5, &c).unwrap().values().iter().all(|v| v.abs() < 1e-12));
        let x = GridFunction::from_scalar_fn(g, |t| t).unwrap();
        let d = caputo_l1(0.5, &x).unwrap();
        let ga = gamma(1.5).unwrap();
        for k in 1..=1024 {
            let want = g.node(k).sqrt() / ga;
            assert!((d.node(k)[0] - want).abs() < 2e-3);
        }
        assert_eq!(d.node(0), d.node(1));
    }

    #[test]
    fn caputo_alpha_one_is_backward_difference() {
        let g = grid(1.0, 10);
        let x = GridFunction::from_scalar_fn(g, |t| t * t).unwrap();
        let d = caputo_l1(1.0, &x).unwrap();
        for k in 1..=10 {
            let want = (g.node(k).powi(2) - g.node(k - 1).powi(2)) / g.step();
            assert!((d.node(k)[0] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn caputo_of_sqrt_near_quarter() {
        let g = grid(0.5, 4096);
        let x = GridFunction::from_scalar_fn(g, f64::sqrt).unwrap();
        let d = caputo_l1(0.5, &x).unwrap();
        let k = 2048; // t = 0.25
        assert!((d.node(k)[0] - std::f64::consts::PI.sqrt() / 2.0).abs() < 5e-2);
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let g = grid(0.7, 300);
        let w = build_weights(0.3, g).unwrap();
        let z = GridFunction::from_fn(g, 2, |t, o| {
            o[0] = t.sin();
            o[1] = (2.0 * t).exp();
        })
        .unwrap();
        let a = frac_integral_with(&w, &z, Exec::Sequential).unwrap();
        let b = frac_integral_with(&w, &z, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        let c = caputo_l1_with(0.3, &z, Exec::Sequential).unwrap();
        let d = caputo_l1_with(0.3, &z, Exec::Parallel).unwrap();
        assert_eq!(c, d);
    }
}
