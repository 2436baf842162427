//! Point sets and weights used to measure reconstruction errors.

use crate::grids::LevelSet;
use crate::quadrature::gauss_legendre;

/// Largest tensor lattice `auto` builds before switching to scattered points.
pub const MAX_TENSOR_POINTS: u128 = 1 << 24;
/// Size of the scattered fallback.
pub const SCATTERED_POINTS: usize = 1_000_000;

/// A probability measure on `[0,1]^d` given by weighted points.
#[derive(Clone, Debug, PartialEq)]
pub enum ErrorLattice {
    /// Tensor product of univariate nodes with weights summing to one.
    Tensor {
        axes: Vec<Vec<f64>>,
        weights: Vec<Vec<f64>>,
    },
    /// Equally weighted points.
    Scattered { points: Vec<Vec<f64>> },
}

fn trapezoid_axis(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "trapezoid lattice needs at least two points per dimension");
    let h = 1.0 / (n - 1) as f64;
    let xs = (0..n).map(|i| i as f64 * h).collect();
    let mut w = vec![h; n];
    w[0] = h / 2.0;
    w[n - 1] = h / 2.0;
    (xs, w)
}

fn midpoint_axis(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "midpoint lattice needs at least one point per dimension");
    let h = 1.0 / n as f64;
    ((0..n).map(|i| (i as f64 + 0.5) * h).collect(), vec![h; n])
}

/// Composite Gauss–Legendre on the given sorted breakpoints.
fn gauss_axis(breaks: &[f64], nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_legendre(nodes);
    let mut xs = Vec::with_capacity(breaks.len() * nodes);
    let mut ws = Vec::with_capacity(breaks.len() * nodes);
    for pair in breaks.windows(2) {
        let mid = 0.5 * (pair[0] + pair[1]);
        let rad = 0.5 * (pair[1] - pair[0]);
        for (ti, wi) in t.iter().zip(&w) {
            xs.push(mid + rad * ti);
            ws.push(rad * wi);
        }
    }
    (xs, ws)
}

/// Breakpoints of `2^m` uniform cells refined geometrically toward `singular`.
fn graded_breaks(base_level: u32, singular: &[f64], depth: u32) -> Vec<f64> {
    let cells = 1u64 << base_level;
    let h = 1.0 / cells as f64;
    let mut b: Vec<f64> = (0..=cells).map(|i| i as f64 * h).collect();
    for &c in singular {
        for j in 1..=depth {
            let off = h * (0.5f64).powi(j as i32);
            for x in [c - off, c + off] {
                if x > 0.0 && x < 1.0 {
                    b.push(x);
                }
            }
        }
    }
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Additive recurrence with the generalized golden ratio of dimension `d`.
pub fn kronecker_points(n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=d).map(|i| (1.0 / phi.powi(i as i32)).fract()).collect();
    (1..=n)
        .map(|i| alpha.iter().map(|a| (0.5 + a * i as f64).fract()).collect())
        .collect()
}

impl ErrorLattice {
    /// `n` points per dimension, trapezoid weights, or cell midpoints when `offset`.
    pub fn uniform(n: usize, d: usize, offset: bool) -> Self {
        let (x, w) = if offset { midpoint_axis(n) } else { trapezoid_axis(n) };
        ErrorLattice::Tensor {
            axes: vec![x; d],
            weights: vec![w; d],
        }
    }

    pub fn kronecker(n: usize, d: usize) -> Self {
        ErrorLattice::Scattered {
            points: kronecker_points(n, d),
        }
    }

    /// Trapezoid lattice with `2^{L+3}+1` points per dimension, `L` the largest
    /// level of `delta`; scattered points when that exceeds [`MAX_TENSOR_POINTS`].
    pub fn auto(delta: &LevelSet) -> Self {
        let d = delta.dim();
        let level = delta.max_level() + 3;
        if level < 64 {
            let n = (1u128 << level) + 1;
            let total = n.checked_pow(d as u32);
            if total.is_some_and(|t| t <= MAX_TENSOR_POINTS) {
                return Self::uniform(n as usize, d, false);
            }
        }
        Self::kronecker(SCATTERED_POINTS, d)
    }

    /// Composite Gauss lattice on `2^base_level` cells per dimension with
    /// `depth` extra geometric refinements around each point of `singular`.
    pub fn graded(d: usize, base_level: u32, singular: &[f64], depth: u32, nodes: usize) -> Self {
        let (x, w) = gauss_axis(&graded_breaks(base_level, singular, depth), nodes);
        ErrorLattice::Tensor {
            axes: vec![x; d],
            weights: vec![w; d],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ErrorLattice::Tensor { axes, .. } => axes.len(),
            ErrorLattice::Scattered { points } => points.first().map_or(0, Vec::len),
        }
    }

    pub fn len(&self) -> u128 {
        match self {
            ErrorLattice::Tensor { axes, .. } => axes.iter().map(|a| a.len() as u128).product(),
            ErrorLattice::Scattered { points } => points.len() as u128,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
