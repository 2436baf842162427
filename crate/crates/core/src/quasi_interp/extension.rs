use num_rational::Rational64;

use super::mask::Mask;
use crate::bspline::SplineOrder;
use crate::error::{Error, Result};

/// Smallest level whose dyadic grid has at least `r` nodes.
pub fn min_stencil_level(r: SplineOrder) -> u32 {
    let mut k = 0;
    while (1usize << k) + 1 < r.get() {
        k += 1;
    }
    k
}

/// Level of the nodes carrying the Lagrange stencils used at level `k`.
pub fn stencil_level(r: SplineOrder, k: u32) -> u32 {
    k.max(min_stencil_level(r))
}

/// Lagrange basis weights `ℓ_i(u)` for the integer nodes `nodes`.
pub fn lagrange_weights(nodes: &[i64], u: i64) -> Vec<Rational64> {
    nodes
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(Rational64::from_integer(1), |acc, (_, &xj)| {
                    acc * Rational64::new(u - xj, xi - xj)
                })
        })
        .collect()
}

/// Node indices (at a level with `2^level + 1` nodes) and Lagrange weights of
/// the extension value at the out-of-range node index `u`.
pub(crate) fn extension_stencil(r: SplineOrder, level: u32, u: i64) -> Vec<(i64, Rational64)> {
    let n = 1i64 << level;
    let r = r.get() as i64;
    let nodes: Vec<i64> = if u < 0 {
        (0..r).collect()
    } else {
        (n - r + 1..=n).collect()
    };
    debug_assert!(u < 0 || u > n);
    let w = lagrange_weights(&nodes, u);
    nodes.into_iter().zip(w).collect()
}

/// Samples `f(j 2^-k)`, `j = 0..2^k`, extended beyond `[0,1]` by the degree
/// `r-1` Lagrange polynomials through the `r` leftmost and rightmost nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryExtendedSampler {
    pub order: SplineOrder,
    pub level: u32,
    pub samples: Vec<f64>,
}

/// Samples `f` on the level-`k` dyadic grid.
pub fn extend<F: Fn(f64) -> f64 + ?Sized>(f: &F, r: SplineOrder, k: u32) -> Result<BoundaryExtendedSampler> {
    if k >= 62 || (1usize << k) + 1 < r.get() {
        return Err(Error::InsufficientNodes {
            level: k,
            nodes: if k >= 62 { u64::MAX } else { (1u64 << k) + 1 },
            order: r.get(),
        });
    }
    let n = 1usize << k;
    let h = (0.5f64).powi(k as i32);
    let samples = (0..=n).map(|j| f(j as f64 * h)).collect();
    Ok(BoundaryExtendedSampler {
        order: r,
        level: k,
        samples,
    })
}

impl BoundaryExtendedSampler {
    /// `f̄_k(u 2^-k)` at an integer node index `u` (possibly outside `0..=2^k`).
    pub fn at_index(&self, u: i64) -> f64 {
        let n = 1i64 << self.level;
        if (0..=n).contains(&u) {
            return self.samples[u as usize];
        }
        extension_stencil(self.order, self.level, u)
            .into_iter()
            .map(|(j, w)| *w.numer() as f64 / *w.denom() as f64 * self.samples[j as usize])
            .sum()
    }

    /// `f̄_k(x)`: the stored sample at dyadic nodes of `[0,1]`, `U_k(f, x)` for
    /// `x < 0` and `V_k(f, x)` for `x > 1`.
    pub fn value(&self, x: f64) -> Result<f64> {
        let n = 1i64 << self.level;
        let r = self.order.get() as i64;
        let t = x * n as f64;
        if (0.0..=1.0).contains(&x) {
            if t.fract() != 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "{x} is not a dyadic node of level {}",
                    self.level
                )));
            }
            return Ok(self.samples[t as usize]);
        }
        let nodes: Vec<i64> = if x < 0.0 {
            (0..r).collect()
        } else {
            (n - r + 1..=n).collect()
        };
        let mut total = 0.0;
        for (i, &xi) in nodes.iter().enumerate() {
            let mut l = 1.0;
            for (j, &xj) in nodes.iter().enumerate() {
                if i != j {
                    l *= (t - xj as f64) / (xi - xj) as f64;
                }
            }
            total += l * self.samples[xi as usize];
        }
        Ok(total)
    }
}

/// `a_{k,s}(f) = Σ_j λ(j) f̄_k(2^-k (s - j))`.
pub fn a_coeff(sampler: &BoundaryExtendedSampler, mask: &Mask, s: i64) -> f64 {
    mask.taps()
        .map(|(j, l)| *l.numer() as f64 / *l.denom() as f64 * sampler.at_index(s - j))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasi_interp::mask::mask_for_order;
    use approx::assert_abs_diff_eq;

    fn o(r: u32) -> SplineOrder {
        SplineOrder::new(r).unwrap()
    }

    #[test]
    fn stencil_levels() {
        assert_eq!(min_stencil_level(o(1)), 0);
        assert_eq!(min_stencil_level(o(2)), 0);
        assert_eq!(min_stencil_level(o(3)), 1);
        assert_eq!(min_stencil_level(o(4)), 2);
        assert_eq!(stencil_level(o(4), 5), 5);
    }

    #[test]
    fn too_few_nodes() {
        let err = extend(&|x: f64| x, o(4), 1).unwrap_err();
        assert!(err.to_string().contains("insufficient nodes for extension"));
        assert!(extend(&|x: f64| x, o(3), 0).is_err());
        assert!(extend(&|x: f64| x, o(3), 1).is_ok());
    }

    #[test]
    fn linear_examples() {
        let s = extend(&|x: f64| x, o(2), 1).unwrap();
        assert_abs_diff_eq!(s.value(-0.5).unwrap(), -0.5, epsilon = 1e-15);
        let g = |x: f64| 3.0 - 5.0 * x * x;
        let s = extend(&g, o(2), 0).unwrap();
        let expected = g(0.0) + 2.0 * (g(1.0) - g(0.0));
        assert_abs_diff_eq!(s.value(2.0).unwrap(), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(s.at_index(2), expected, epsilon = 1e-14);
    }

    #[test]
    fn reproduces_polynomials() {
        for r in 1..=4 {
            let r = o(r);
            let deg = r.get() as i32 - 1;
            let f = |x: f64| (0..=deg).map(|i| (i as f64 + 1.0) * x.powi(i)).sum::<f64>();
            for k in min_stencil_level(r)..5 {
                let s = extend(&f, r, k).unwrap();
                for u in -6i64..(1 << k) + 7 {
                    let x = u as f64 / (1 << k) as f64;
                    assert_abs_diff_eq!(s.at_index(u), f(x), epsilon = 1e-10);
                    assert_abs_diff_eq!(s.value(x).unwrap(), f(x), epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn a_coeff_examples() {
        let r2 = o(2);
        let s = extend(&|x: f64| x.sin(), r2, 3).unwrap();
        assert_eq!(a_coeff(&s, &mask_for_order(r2), 3), (3.0f64 / 8.0).sin());
        let r4 = o(4);
        let one = extend(&|_x: f64| 1.0, r4, 2).unwrap();
        assert_abs_diff_eq!(a_coeff(&one, &mask_for_order(r4), 2), 1.0, epsilon = 1e-15);
        // x^2 is reproduced by the cubic extension, so f̄(-1/4) = 1/16.
        let sq = extend(&|x: f64| x * x, r4, 2).unwrap();
        let expected = (-1.0 / 16.0 + 0.0 - 1.0 / 16.0) / 6.0;
        assert_abs_diff_eq!(a_coeff(&sq, &mask_for_order(r4), 0), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, -1.0 / 48.0, epsilon = 1e-15);
    }

    #[test]
    fn lagrange_is_partition_of_unity() {
        let w = lagrange_weights(&[0, 1, 2, 3], -5);
        assert_eq!(w.iter().sum::<Rational64>(), Rational64::from_integer(1));
    }
}
