//! Deterministic low-discrepancy sampling used by the sup/Lipschitz
//! estimators and the anchor-condition check.

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in the given base.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let base = base as u64;
    let inv = 1.0 / base as f64;
    let mut factor = inv;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * factor;
        index /= base;
        factor *= inv;
    }
    value
}

/// Halton sequence in `[0, 1)^dim`, skipping the all-zero first point.
#[derive(Debug, Clone)]
pub struct Halton {
    dim: usize,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize) -> Self {
        assert!(dim <= PRIMES.len(), "Halton sequence supports at most {} dimensions", PRIMES.len());
        Halton { dim, index: 1 }
    }
}

impl Iterator for Halton {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let i = self.index;
        self.index += 1;
        Some(PRIMES[..self.dim].iter().map(|&p| radical_inverse(i, p)).collect())
    }
}

/// Map a unit-cube point to the closed ball of radius `radius` in R^d by
/// stretching to `[-radius, radius]^d` and pulling outside points onto the
/// sphere.
pub fn cube_to_ball(u: &[f64], radius: f64) -> Vec<f64> {
    let mut p: Vec<f64> = u.iter().map(|&ui| radius * (2.0 * ui - 1.0)).collect();
    let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > radius {
        let s = radius / norm;
        p.iter_mut().for_each(|v| *v *= s);
    }
    p
}

/// `count` points in the radius-`radius` ball of R^d: the centre, the
/// coordinate extremes, then Halton points.
pub fn ball_points(dim: usize, radius: f64, count: usize) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; dim]];
    for i in 0..dim {
        for s in [-1.0, 1.0] {
            let mut p = vec![0.0; dim];
            p[i] = s * radius;
            pts.push(p);
        }
    }
    let rest = count.saturating_sub(pts.len());
    pts.extend(Halton::new(dim).take(rest).map(|u| cube_to_ball(&u, radius)));
    pts
}
