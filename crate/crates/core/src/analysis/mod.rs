//! Error measurement, smoothness diagnostics, rate fitting and test functions.

mod compare;
mod corpus;
mod error;
mod lattice;
mod norms;
mod rate;
mod stability;

pub use compare::{compare_budgets, matched_lambdas, BudgetComparison};
pub use corpus::{corpus, kink_exponents, TestFunction};
pub use error::{discrete_lq_error, lq_error_on};
pub use lattice::{kronecker_points, ErrorLattice, MAX_TENSOR_POINTS, SCATTERED_POINTS};
pub use norms::{
    besov_quasinorm_b3, energy_error_surrogate, energy_surrogate_from, level_norm, lp_norm, smoothness_exponent,
};
pub use rate::{fit_rate, RateFit};
pub use stability::{stability_ratio, SplineSystem};
