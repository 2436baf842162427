//! Budgets of anisotropic, Smolyak and full grids at matched accuracy.

use serde::Serialize;

use crate::error::Result;
use crate::grids::{comparison_rule, Family, SmoothnessKind, SmoothnessSpec};

/// Budgets of the three level sets at one threshold `ξ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetComparison {
    pub xi: f64,
    pub anisotropic: u128,
    pub smolyak: u128,
    pub full: u128,
}

impl BudgetComparison {
    pub fn full_ratio(&self) -> f64 {
        self.full as f64 / self.anisotropic as f64
    }

    pub fn smolyak_ratio(&self) -> f64 {
        self.smolyak as f64 / self.anisotropic as f64
    }
}

/// Coefficients `λ` of `{λ|k|_∞ <= ξ}` and `{λ|k|_1 <= ξ}` whose worst omitted
/// level has the same weight `2^{-ξ}` as the anisotropic set of `spec`.
pub fn matched_lambdas(spec: &SmoothnessSpec) -> (f64, f64) {
    let delta = spec.delta();
    let d = spec.d as f64;
    match &spec.kind {
        SmoothnessKind::Mixed { a } => (a[0] - delta, a[0] - delta),
        SmoothnessKind::Hybrid { alpha, beta } => {
            let b = beta - spec.gamma.unwrap_or(0.0);
            (alpha + b - delta, alpha + b.min(b / d) - delta)
        }
    }
}

/// Budget table over `xis` for the spec's own rule and the two comparison grids.
pub fn compare_budgets(spec: &SmoothnessSpec, xis: &[f64]) -> Result<Vec<BudgetComparison>> {
    let rule = spec.level_rule()?;
    let (lf, ls) = matched_lambdas(spec);
    let full = comparison_rule(lf, Family::FullGrid, spec.d)?;
    let smolyak = comparison_rule(ls, Family::Smolyak, spec.d)?;
    Ok(xis
        .iter()
        .map(|&xi| BudgetComparison {
            xi,
            anisotropic: rule.level_set(xi).budget(),
            smolyak: smolyak.level_set(xi).budget(),
            full: full.level_set(xi).budget(),
        })
        .collect())
}
