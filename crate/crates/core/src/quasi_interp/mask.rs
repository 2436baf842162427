use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::bspline::SplineOrder;

/// Finite even sequence `λ(j)`, `|j| <= mu`, defining `Λ(f, s) = Σ_j λ(j) f(s - j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    pub order: SplineOrder,
    pub mu: usize,
    /// `λ(-mu), ..., λ(mu)`.
    coeffs: Vec<Rational64>,
}

impl Mask {
    pub fn lambda(&self, j: i64) -> Rational64 {
        let mu = self.mu as i64;
        if j.abs() > mu {
            Rational64::zero()
        } else {
            self.coeffs[(j + mu) as usize]
        }
    }

    pub fn lambda_f64(&self, j: i64) -> f64 {
        self.lambda(j).to_f64().unwrap_or(0.0)
    }

    /// Pairs `(j, λ(j))` in increasing `j`.
    pub fn taps(&self) -> impl Iterator<Item = (i64, Rational64)> + '_ {
        let mu = self.mu as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - mu, c))
    }

    pub fn sum(&self) -> Rational64 {
        self.coeffs.iter().sum()
    }

    /// `‖Λ‖ = Σ |λ(j)|`.
    pub fn norm(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.abs())
            .sum::<Rational64>()
            .to_f64()
            .unwrap_or(f64::NAN)
    }
}

/// The explicit mask of the quasi-interpolant of order `r`.
pub fn mask_for_order(r: SplineOrder) -> Mask {
    let q = Rational64::new;
    let (mu, coeffs) = match r.get() {
        1 | 2 => (0, vec![q(1, 1)]),
        3 => (1, vec![q(-1, 8), q(10, 8), q(-1, 8)]),
        4 => (1, vec![q(-1, 6), q(8, 6), q(-1, 6)]),
        _ => unreachable!("order validated at construction"),
    };
    Mask { order: r, mu, coeffs }
}
