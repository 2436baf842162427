//! Centered cardinal B-splines of order 1 to 4.
//!
//! The spline `M` of order `r` is supported on `[-r/2, r/2]` with knots at
//! `-r/2, -r/2 + 1, ..., r/2`. Level-`k` dilates are `M(2^k x - s)` for even
//! orders and `M(2^k x - s/2)` for odd orders, so that the odd-order family at
//! level `k` also carries the refined integer translates of level `k - 1`.
//!
//! The order-1 spline is the indicator of the half-open interval `[-1/2, 1/2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Order `r` of a centered B-spline, `1 <= r <= 4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct SplineOrder(u8);

impl TryFrom<u32> for SplineOrder {
    type Error = Error;

    fn try_from(r: u32) -> Result<Self> {
        SplineOrder::new(r)
    }
}

impl From<SplineOrder> for u32 {
    fn from(r: SplineOrder) -> u32 {
        r.0 as u32
    }
}

impl std::fmt::Display for SplineOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Inclusive range of integer shifts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShiftRange {
    pub lo: i64,
    pub hi: i64,
}

impl ShiftRange {
    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    pub fn contains(&self, s: i64) -> bool {
        self.lo <= s && s <= self.hi
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }

    /// Position of `s` inside the range.
    pub fn offset(&self, s: i64) -> usize {
        debug_assert!(self.contains(s));
        (s - self.lo) as usize
    }
}

impl SplineOrder {
    pub const LINEAR: SplineOrder = SplineOrder(2);
    pub const CUBIC: SplineOrder = SplineOrder(4);

    pub fn new(r: u32) -> Result<Self> {
        if (1..=4).contains(&r) {
            Ok(SplineOrder(r as u8))
        } else {
            Err(Error::OrderOutOfRange(r))
        }
    }

    pub fn get(self) -> usize {
        self.0 as usize
    }

    pub fn is_even(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// Value of the centered spline at `t`.
    pub fn eval(self, t: f64) -> f64 {
        match self.0 {
            1 => {
                if (-0.5..0.5).contains(&t) {
                    1.0
                } else {
                    0.0
                }
            }
            2 => {
                let a = t.abs();
                if a < 1.0 {
                    1.0 - a
                } else {
                    0.0
                }
            }
            3 => {
                let a = t.abs();
                if a <= 0.5 {
                    0.75 - a * a
                } else if a < 1.5 {
                    let u = 1.5 - a;
                    0.5 * u * u
                } else {
                    0.0
                }
            }
            4 => {
                let a = t.abs();
                if a <= 1.0 {
                    2.0 / 3.0 - a * a + 0.5 * a * a * a
                } else if a < 2.0 {
                    let u = 2.0 - a;
                    u * u * u / 6.0
                } else {
                    0.0
                }
            }
            _ => unreachable!("order validated at construction"),
        }
    }

    /// Knots `-r/2, ..., r/2` of the centered spline.
    pub fn knots(self) -> Vec<f64> {
        let h = self.0 as f64 / 2.0;
        (0..=self.0).map(|i| -h + i as f64).collect()
    }

    /// `J(k)`: integer shifts `s` with `M(2^k x - s)` not vanishing on `[0, 1]`.
    pub fn operator_shifts(self, k: u32) -> ShiftRange {
        let r = self.0 as i64;
        let n = 1i64 << k;
        // -r/2 < s < 2^k + r/2
        let lo = if r % 2 == 0 { -r / 2 + 1 } else { -(r - 1) / 2 };
        let hi = if r % 2 == 0 { n + r / 2 - 1 } else { n + (r - 1) / 2 };
        ShiftRange { lo, hi }
    }

    /// `J_r(k)`: shifts of the level-`k` basis (half-shift indexing for odd orders).
    pub fn active_shifts(self, k: u32) -> ShiftRange {
        if self.is_even() {
            self.operator_shifts(k)
        } else {
            let r = self.0 as i64;
            ShiftRange {
                lo: -r + 1,
                hi: (1i64 << (k + 1)) + r - 1,
            }
        }
    }

    /// Translation of the `s`-th level-`k` basis function in units of `2^-k`.
    pub fn center(self, s: i64) -> f64 {
        if self.is_even() {
            s as f64
        } else {
            s as f64 * 0.5
        }
    }

    /// `M(2^k x - s)` (even) or `M(2^k x - s/2)` (odd), without index checks.
    ///
    /// For order 1 the right end `x = 1` of the cube takes the limit from the
    /// left, so that the shifts in `J_1(k)` cover the closed interval.
    pub fn eval_dilated_1d(self, k: u32, s: i64, x: f64) -> f64 {
        let t = scale(x, k) - self.center(s);
        if self.0 == 1 && x >= 1.0 {
            return if -0.5 < t && t <= 0.5 { 1.0 } else { 0.0 };
        }
        self.eval(t)
    }

    /// Shifts whose level-`k` basis function may be nonzero at `x`.
    pub fn shifts_at(self, k: u32, x: f64) -> ShiftRange {
        let r = self.0 as f64;
        let active = self.active_shifts(k);
        let (lo, hi) = if self.is_even() {
            let t = scale(x, k);
            ((t - r / 2.0).floor() as i64, (t + r / 2.0).ceil() as i64)
        } else {
            let t = scale(x, k + 1);
            ((t - r).floor() as i64, (t + r).ceil() as i64)
        };
        ShiftRange {
            lo: lo.max(active.lo),
            hi: hi.min(active.hi),
        }
    }

    /// Exact `∫_0^1` of the level-`k` basis function with shift `s`.
    pub fn integral_1d(self, k: u32, s: i64) -> f64 {
        let half = self.0 as f64 / 2.0;
        let c = self.center(s);
        let a = (-c).max(-half);
        let b = (scale(1.0, k) - c).min(half);
        if b <= a {
            return 0.0;
        }
        let n = self.get().div_ceil(2);
        let (nodes, weights) = gauss_legendre(n);
        let mut cuts = vec![a];
        cuts.extend(self.knots().into_iter().filter(|&t| t > a && t < b));
        cuts.push(b);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let rad = 0.5 * (hi - lo);
            let piece: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(&x, &wt)| wt * self.eval(mid + rad * x))
                .sum();
            total += piece * rad;
        }
        total / scale(1.0, k)
    }
}

/// `2^k x`, exact for finite `x`.
#[inline]
pub(crate) fn scale(x: f64, k: u32) -> f64 {
    x * (2f64).powi(k as i32)
}

/// Value of the centered spline of order `r` at `t`.
pub fn eval_centered(r: SplineOrder, t: f64) -> f64 {
    r.eval(t)
}

/// Level and shift of a tensor-product spline `∏_i M_{k_i, s_i}(x_i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TensorSplineIndex {
    pub level: Vec<u32>,
    pub shift: Vec<i64>,
}

impl TensorSplineIndex {
    pub fn new(level: Vec<u32>, shift: Vec<i64>) -> Result<Self> {
        if level.len() != shift.len() {
            return Err(Error::DimensionMismatch {
                expected: level.len(),
                got: shift.len(),
            });
        }
        Ok(TensorSplineIndex { level, shift })
    }

    pub fn dim(&self) -> usize {
        self.level.len()
    }

    fn check_active(&self, r: SplineOrder) -> Result<()> {
        for (&k, &s) in self.level.iter().zip(&self.shift) {
            let range = r.active_shifts(k);
            if !range.contains(s) {
                return Err(Error::InactiveSplineIndex {
                    level: k,
                    shift: s,
                    lo: range.lo,
                    hi: range.hi,
                });
            }
        }
        Ok(())
    }
}

/// Per-dimension shift ranges realizing `J_r^d(k)`.
pub fn active_shifts(r: SplineOrder, k: &[u32]) -> Vec<ShiftRange> {
    k.iter().map(|&ki| r.active_shifts(ki)).collect()
}

/// Value of the tensor spline `idx` at `x`.
pub fn eval_dilated(r: SplineOrder, idx: &TensorSplineIndex, x: &[f64]) -> Result<f64> {
    idx.check_active(r)?;
    if x.len() != idx.dim() {
        return Err(Error::DimensionMismatch {
            expected: idx.dim(),
            got: x.len(),
        });
    }
    Ok(idx
        .level
        .iter()
        .zip(&idx.shift)
        .zip(x)
        .map(|((&k, &s), &xi)| r.eval_dilated_1d(k, s, xi))
        .product())
}

/// Exact integral of the tensor spline `idx` over the unit cube.
pub fn integral_on_cube(r: SplineOrder, idx: &TensorSplineIndex) -> Result<f64> {
    idx.check_active(r)?;
    Ok(idx
        .level
        .iter()
        .zip(&idx.shift)
        .map(|(&k, &s)| r.integral_1d(k, s))
        .product())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn orders() -> Vec<SplineOrder> {
        (1..=4).map(|r| SplineOrder::new(r).unwrap()).collect()
    }

    /// Cox–de Boor recursion on the uniform knots `-r/2, ..., r/2`.
    fn cox_de_boor(r: usize, t: f64) -> f64 {
        let knots: Vec<f64> = (0..=r).map(|i| i as f64 - r as f64 / 2.0).collect();
        let mut b: Vec<f64> = (0..r)
            .map(|i| if knots[i] <= t && t < knots[i + 1] { 1.0 } else { 0.0 })
            .collect();
        for p in 1..r {
            for i in 0..r - p {
                let left = (t - knots[i]) / (knots[i + p] - knots[i]) * b[i];
                let right = (knots[i + p + 1] - t) / (knots[i + p + 1] - knots[i + 1]) * b[i + 1];
                b[i] = left + right;
            }
        }
        b[0]
    }

    fn binom(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn order_range() {
        assert_eq!(SplineOrder::new(0), Err(Error::OrderOutOfRange(0)));
        assert_eq!(SplineOrder::new(5), Err(Error::OrderOutOfRange(5)));
        assert!(SplineOrder::new(5)
            .unwrap_err()
            .to_string()
            .contains("order out of range"));
    }

    #[test]
    fn point_values() {
        let o = |r| SplineOrder::new(r).unwrap();
        assert_eq!(o(1).eval(0.0), 1.0);
        assert_eq!(o(1).eval(-0.5), 1.0);
        assert_eq!(o(1).eval(0.5), 0.0);
        assert_eq!(o(2).eval(0.0), 1.0);
        assert_eq!(o(2).eval(0.5), 0.5);
        assert_abs_diff_eq!(o(4).eval(0.0), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(o(4).eval(1.0), 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(o(4).eval(0.0), cox_de_boor(4, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(o(4).eval(1.0), cox_de_boor(4, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn matches_cox_de_boor() {
        for r in orders() {
            for i in 0..=4000 {
                let t = -2.5 + 5.0 * i as f64 / 4000.0 + 1e-9;
                assert_abs_diff_eq!(r.eval(t), cox_de_boor(r.get(), t), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn normalization() {
        for r in orders() {
            let mut total = 0.0;
            for w in r.knots().windows(2) {
                total += crate::quadrature::integrate(|t| r.eval(t), w[0], w[1], r.get().div_ceil(2));
            }
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn shift_sets() {
        let o = |r| SplineOrder::new(r).unwrap();
        assert_eq!(o(2).active_shifts(0), ShiftRange { lo: 0, hi: 1 });
        assert_eq!(o(2).active_shifts(2).len(), 5);
        assert_eq!(o(3).active_shifts(0), ShiftRange { lo: -2, hi: 4 });
        assert_eq!(o(4).operator_shifts(0), ShiftRange { lo: -1, hi: 2 });
        assert_eq!(o(3).operator_shifts(1), ShiftRange { lo: -1, hi: 3 });
        assert_eq!(o(1).operator_shifts(2), ShiftRange { lo: 0, hi: 4 });
        assert_eq!(
            active_shifts(o(2), &[0, 2]),
            vec![o(2).active_shifts(0), o(2).active_shifts(2)]
        );
    }

    #[test]
    fn active_shifts_are_exactly_the_nonvanishing_ones() {
        for r in orders() {
            for k in 0..4 {
                let range = r.active_shifts(k);
                for s in range.lo - 4..=range.hi + 4 {
                    let nonzero = (0..=2000)
                        .map(|i| i as f64 / 2000.0)
                        .any(|x| r.eval_dilated_1d(k, s, x) != 0.0);
                    assert_eq!(nonzero, range.contains(s), "r={r} k={k} s={s}");
                }
            }
        }
    }

    #[test]
    fn dilated_examples() {
        let r2 = SplineOrder::new(2).unwrap();
        let r1 = SplineOrder::new(1).unwrap();
        let idx = TensorSplineIndex::new(vec![0], vec![0]).unwrap();
        assert_eq!(eval_dilated(r2, &idx, &[0.0]).unwrap(), 1.0);
        let idx = TensorSplineIndex::new(vec![1, 1], vec![1, 1]).unwrap();
        assert_eq!(eval_dilated(r2, &idx, &[0.5, 0.5]).unwrap(), 1.0);
        let idx = TensorSplineIndex::new(vec![2], vec![5]).unwrap();
        assert_eq!(eval_dilated(r1, &idx, &[0.6]).unwrap(), 1.0);
        let bad = TensorSplineIndex::new(vec![0], vec![2]).unwrap();
        let err = eval_dilated(r2, &bad, &[0.0]).unwrap_err();
        assert!(err.to_string().contains("inactive spline index"));
        assert!(integral_on_cube(r2, &bad).is_err());
    }

    #[test]
    fn cube_integrals() {
        let r2 = SplineOrder::new(2).unwrap();
        let i = |k: Vec<u32>, s: Vec<i64>| integral_on_cube(r2, &TensorSplineIndex::new(k, s).unwrap()).unwrap();
        assert_abs_diff_eq!(i(vec![1], vec![1]), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(i(vec![0], vec![0]), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(i(vec![2, 2], vec![2, 2]), 0.0625, epsilon = 1e-15);
    }

    #[test]
    fn cube_integrals_sum_to_one() {
        for r in orders() {
            for k in [vec![0, 0], vec![1, 3], vec![2, 0], vec![4, 1]] {
                let ranges = active_shifts(r, &k);
                let total: f64 = ranges[0]
                    .iter()
                    .flat_map(|s0| ranges[1].iter().map(move |s1| vec![s0, s1]))
                    .map(|s| integral_on_cube(r, &TensorSplineIndex::new(k.clone(), s).unwrap()).unwrap())
                    .sum();
                // Odd orders: integer and half-integer shifts each form a partition of unity.
                let copies = if r.is_even() { 1.0 } else { 4.0 };
                assert_abs_diff_eq!(total, copies, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn clipped_integral_matches_fine_quadrature() {
        for r in orders() {
            for k in 0..3 {
                for s in r.active_shifts(k).iter() {
                    let fine: f64 = (0..4096)
                        .map(|i| {
                            let a = i as f64 / 4096.0;
                            crate::quadrature::integrate(|x| r.eval_dilated_1d(k, s, x), a, a + 1.0 / 4096.0, 3)
                        })
                        .sum();
                    assert_abs_diff_eq!(r.integral_1d(k, s), fine, epsilon = 1e-6);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(t in -10.0f64..10.0) {
            for r in orders() {
                let base = t.floor() as i64;
                let sum: f64 = (base - 3..=base + 3).map(|s| r.eval(t - s as f64)).sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn symmetry(t in -3.0f64..3.0) {
            for r in orders() {
                // the order-1 spline is half-open at its two knots
                if r.get() == 1 && (t.abs() - 0.5).abs() < 1e-15 {
                    continue;
                }
                prop_assert_eq!(r.eval(t), r.eval(-t));
            }
        }

        #[test]
        fn refinement(t in -2.5f64..2.5) {
            for r in orders() {
                let rr = r.get();
                let half = rr as f64 / 2.0;
                let refined: f64 = (0..=rr)
                    .map(|j| binom(rr, j) * r.eval(2.0 * t - j as f64 + half))
                    .sum::<f64>()
                    * 2f64.powi(1 - rr as i32);
                prop_assert!((refined - r.eval(t)).abs() < 1e-12);
            }
        }
    }
}
