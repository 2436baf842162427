//! Norm equivalence `‖Σ_s a_s M_{k,s}‖_p ≍ 2^{-|k|_1/p} ‖a‖_p` on one level.

use crate::bspline::{scale, ShiftRange, SplineOrder};
use crate::quadrature::gauss_legendre;
use crate::tensor::{contract_axis, SparseRows};

use super::norms::lp_norm;

/// Which univariate spline system spans a level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplineSystem {
    /// `M(2^k x - s)`, `s ∈ J(k)`: the range of the level operator.
    Operator,
    /// The surplus system indexed by `J_r(k)` (half shifts for odd orders).
    Surplus,
}

impl SplineSystem {
    pub fn shifts(self, r: SplineOrder, k: u32) -> ShiftRange {
        match self {
            SplineSystem::Operator => r.operator_shifts(k),
            SplineSystem::Surplus => r.active_shifts(k),
        }
    }

    fn eval(self, r: SplineOrder, k: u32, s: i64, x: f64) -> f64 {
        match self {
            SplineSystem::Operator => r.eval(scale(x, k) - s as f64),
            SplineSystem::Surplus => r.eval_dilated_1d(k, s, x),
        }
    }
}

/// Points and weights on `[0,1]`, refined to cells of width `2^{-k-1}`: Gauss
/// nodes for finite `p` (exact on `|g|^2`), a dense uniform grid for `p = ∞`.
fn axis_rule(r: SplineOrder, k: u32, p: f64) -> (Vec<f64>, Vec<f64>) {
    let cells = 1usize << (k + 1);
    let h = 1.0 / cells as f64;
    if p.is_infinite() {
        let n = cells * 16;
        let xs = (0..=n).map(|i| i as f64 / n as f64).collect();
        return (xs, vec![0.0; n + 1]);
    }
    let (t, w) = gauss_legendre(2 * r.get() + 2);
    let mut xs = Vec::with_capacity(cells * t.len());
    let mut ws = Vec::with_capacity(cells * t.len());
    for c in 0..cells {
        let mid = (c as f64 + 0.5) * h;
        for (ti, wi) in t.iter().zip(&w) {
            xs.push(mid + 0.5 * h * ti);
            ws.push(0.5 * h * wi);
        }
    }
    (xs, ws)
}

/// `‖g‖_p / (2^{-|k|_1/p} ‖a‖_p)` for `g = Σ_s a_s M_{k,s}`, `a` dense row-major
/// over the shift box of `system`.
pub fn stability_ratio(r: SplineOrder, k: &[u32], coeffs: &[f64], p: f64, system: SplineSystem) -> f64 {
    let mut data = coeffs.to_vec();
    let mut shape: Vec<usize> = k.iter().map(|&ki| system.shifts(r, ki).len()).collect();
    assert_eq!(
        data.len(),
        shape.iter().product::<usize>(),
        "coefficient count does not match level"
    );
    let mut weights = Vec::with_capacity(k.len());
    for (axis, &ki) in k.iter().enumerate().rev() {
        let range = system.shifts(r, ki);
        let (xs, ws) = axis_rule(r, ki, p);
        let mut rows = SparseRows::new();
        for &x in &xs {
            rows.push_row(range.iter().filter_map(|s| {
                let v = system.eval(r, ki, s, x);
                (v != 0.0).then(|| ((s - range.lo) as u32, v))
            }));
        }
        data = contract_axis(&data, &shape, axis, &rows);
        shape[axis] = xs.len();
        weights.push(ws);
    }
    weights.reverse();
    let g_norm = if p.is_infinite() {
        lp_norm(&data, p)
    } else {
        let mut total = 0.0;
        let mut flat = 0;
        crate::tensor::for_each_index(&shape, |idx| {
            let w: f64 = idx.iter().zip(&weights).map(|(&i, ws)| ws[i]).product();
            total += w * data[flat].abs().powf(p);
            flat += 1;
        });
        total.powf(1.0 / p)
    };
    let k1: u32 = k.iter().sum();
    g_norm / ((2f64).powf(-(k1 as f64) / p) * lp_norm(coeffs, p))
}
