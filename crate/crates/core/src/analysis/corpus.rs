//! Analytic test functions with known integrals.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::grids::{SmoothnessKind, SmoothnessSpec};

type Handle = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A function on `[0,1]^d` with its exact integral.
#[derive(Clone)]
pub struct TestFunction {
    pub label: String,
    pub dim: usize,
    pub exact_integral: f64,
    /// Smoothness class the function is expected to lie in.
    pub membership: String,
    /// Coordinates (in every dimension) where the function is not smooth.
    pub singular_points: Vec<f64>,
    /// Reproduced exactly by the reconstruction.
    pub polynomial: bool,
    handle: Handle,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("exact_integral", &self.exact_integral)
            .field("membership", &self.membership)
            .finish()
    }
}

impl TestFunction {
    pub fn new<F>(
        label: impl Into<String>,
        dim: usize,
        exact_integral: f64,
        membership: impl Into<String>,
        f: F,
    ) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        TestFunction {
            label: label.into(),
            dim,
            exact_integral,
            membership: membership.into(),
            singular_points: Vec::new(),
            polynomial: false,
            handle: Arc::new(f),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.handle)(x)
    }

    pub fn handle(&self) -> &(dyn Fn(&[f64]) -> f64 + Send + Sync) {
        &*self.handle
    }

    /// `Π x_i^{e_i}`.
    pub fn monomial(exponents: Vec<u32>) -> Self {
        let dim = exponents.len();
        let integral = exponents.iter().map(|&e| 1.0 / (e as f64 + 1.0)).product();
        let label = format!(
            "monomial_{}",
            exponents.iter().map(u32::to_string).collect::<Vec<_>>().join("_")
        );
        let mut t = TestFunction::new(label, dim, integral, "polynomial", move |x: &[f64]| {
            x.iter().zip(&exponents).map(|(v, &e)| v.powi(e as i32)).product()
        });
        t.polynomial = true;
        t
    }

    /// `Π sin(π x_i)`.
    pub fn sine_product(dim: usize) -> Self {
        TestFunction::new(
            "sine_product",
            dim,
            (2.0 / PI).powi(dim as i32),
            "analytic",
            |x: &[f64]| x.iter().map(|v| (PI * v).sin()).product(),
        )
    }

    /// `Π |x_i - 1/2|^{λ_i}`.
    pub fn kink(lambdas: Vec<f64>) -> Self {
        Self::kink_at(lambdas, 0.5)
    }

    /// `Π |x_i - c|^{λ_i}` with the singularity at `c ∈ [0,1]`.
    pub fn kink_at(lambdas: Vec<f64>, c: f64) -> Self {
        assert!((0.0..=1.0).contains(&c), "kink location must lie in [0,1]");
        let dim = lambdas.len();
        let integral = lambdas
            .iter()
            .map(|&l| (c.powf(l + 1.0) + (1.0 - c).powf(l + 1.0)) / (l + 1.0))
            .product();
        let exps = lambdas.iter().map(|l| format!("{l}")).collect::<Vec<_>>().join("_");
        let label = if c == 0.5 {
            format!("kink_{exps}")
        } else {
            format!("kink_{exps}_at_{c:.4}")
        };
        let membership = format!("mixed Besov smoothness lambda_i + 1/p in coordinate i, lambda = {lambdas:?}");
        let mut t = TestFunction::new(label, dim, integral, membership, move |x: &[f64]| {
            x.iter().zip(&lambdas).map(|(v, &l)| (v - c).abs().powf(l)).product()
        });
        t.singular_points = vec![c];
        t
    }

    /// `Π T_s(x_i)` with the lacunary series `T_s(t) = Σ_j 2^{-sj} sin²(2^j π t)`.
    pub fn lacunary(dim: usize, s: f64) -> Self {
        assert!(s > 0.0, "lacunary exponent must be positive");
        let terms = (60.0 / s).ceil() as i32;
        let coeffs: Vec<f64> = (0..terms).map(|j| (2f64).powf(-s * j as f64)).collect();
        let univariate: f64 = coeffs.iter().sum::<f64>() / 2.0;
        TestFunction::new(
            format!("lacunary_{s}"),
            dim,
            univariate.powi(dim as i32),
            format!("Zygmund smoothness {s} in every coordinate (mixed B^{s}_(p,inf) for all p)"),
            move |x: &[f64]| {
                x.iter()
                    .map(|&v| {
                        coeffs
                            .iter()
                            .enumerate()
                            .map(|(j, c)| c * (PI * v * (2f64).powi(j as i32)).sin().powi(2))
                            .sum::<f64>()
                    })
                    .product()
            },
        )
    }
}

/// Kink exponents aimed at the boundary of the smoothness class of `spec`,
/// clipped into `(0, r-1)`.
pub fn kink_exponents(spec: &SmoothnessSpec) -> Vec<f64> {
    let inv_p = 1.0 / spec.p;
    let raw: Vec<f64> = match &spec.kind {
        SmoothnessKind::Mixed { a } => a.iter().map(|ai| ai - inv_p).collect(),
        SmoothnessKind::Hybrid { alpha, beta } => {
            let b = beta - spec.gamma.unwrap_or(0.0);
            if b > 0.0 {
                vec![alpha + beta - inv_p; spec.d]
            } else {
                (0..spec.d)
                    .map(|i| if i == 0 { alpha + beta - inv_p } else { alpha - inv_p })
                    .collect()
            }
        }
    };
    let hi = spec.r.get() as f64 - 1.0;
    raw.into_iter().map(|l| l.clamp(0.05, (hi - 0.05).max(0.05))).collect()
}

/// Polynomial controls, the sine product and the class-boundary kink.
pub fn corpus(spec: &SmoothnessSpec) -> Vec<TestFunction> {
    let d = spec.d;
    let top = spec.r.get() as u32 - 1;
    vec![
        TestFunction::monomial(vec![0; d]),
        TestFunction::monomial(vec![top; d]),
        TestFunction::sine_product(d),
        TestFunction::kink(kink_exponents(spec)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::SplineOrder;
    use crate::quadrature::integrate;
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_forms() {
        assert_abs_diff_eq!(TestFunction::sine_product(2).exact_integral, 0.405285, epsilon = 1e-6);
        assert_abs_diff_eq!(TestFunction::kink(vec![1.0]).exact_integral, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(TestFunction::kink(vec![1.5]).exact_integral, 0.141421, epsilon = 1e-6);
        let off = TestFunction::kink_at(vec![1.0, 2.0], 0.25);
        assert_abs_diff_eq!(
            off.exact_integral,
            (0.625 / 2.0) * ((0.25f64.powi(3) + 0.75f64.powi(3)) / 3.0),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            TestFunction::monomial(vec![2, 3]).exact_integral,
            1.0 / 12.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn integrals_match_quadrature() {
        let k = TestFunction::kink(vec![0.5]);
        let left = integrate(|t| k.eval(&[t]), 0.0, 0.5, 60);
        let right = integrate(|t| k.eval(&[t]), 0.5, 1.0, 60);
        // endpoint singularity: compare loosely, then exactly via substitution t = 1/2 - u^2
        assert_abs_diff_eq!(left + right, k.exact_integral, epsilon = 1e-3);
        let sub = 2.0 * integrate(|u| 2.0 * u * u, 0.0, 0.5f64.sqrt(), 20);
        assert_abs_diff_eq!(sub, k.exact_integral, epsilon = 1e-12);

        let s = TestFunction::sine_product(1);
        assert_abs_diff_eq!(
            integrate(|t| s.eval(&[t]), 0.0, 1.0, 30),
            s.exact_integral,
            epsilon = 1e-12
        );

        // the trapezoid rule on 2^20 cells integrates every term below 2^20 exactly
        let l = TestFunction::lacunary(1, 1.5);
        let n = 1usize << 20;
        let trap: f64 = (0..n).map(|i| l.eval(&[i as f64 / n as f64])).sum::<f64>() / n as f64;
        assert_abs_diff_eq!(trap, l.exact_integral, epsilon = 1e-8);
    }

    #[test]
    fn exponents_follow_class() {
        let r = SplineOrder::new(4).unwrap();
        let m = SmoothnessSpec::mixed(2.0, 2.0, 2.0, r, vec![1.0, 1.5]);
        assert_eq!(kink_exponents(&m), vec![0.5, 1.0]);
        let h = SmoothnessSpec::hybrid(2.0, 1.0, 2.0, r, 2, 1.0, 0.5);
        assert_eq!(kink_exponents(&h), vec![1.0, 1.0]);
        let h = SmoothnessSpec::hybrid(2.0, 1.0, 2.0, r, 2, 1.5, -0.5);
        assert_eq!(kink_exponents(&h), vec![0.5, 1.0]);
        let e = SmoothnessSpec::hybrid(2.0, 2.0, 2.0, r, 2, 2.0, 0.0).with_gamma(1.0, 2.0);
        assert_eq!(kink_exponents(&e), vec![1.5, 1.5]);
        let c = corpus(&m);
        assert_eq!(c.len(), 4);
        assert!(c[0].polynomial && c[1].polynomial && !c[3].polynomial);
    }
}
