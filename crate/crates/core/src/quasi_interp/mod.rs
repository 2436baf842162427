//! Quasi-interpolation: masks, boundary extension, coefficient functionals and
//! the level operators `Q_k` with their details `q_k = Π_i (Q_{k_i} - Q_{k_i - 1})`.

mod extension;
mod mask;
mod stencil;
mod surplus;

pub use extension::{a_coeff, extend, lagrange_weights, min_stencil_level, stencil_level, BoundaryExtendedSampler};
pub use mask::{mask_for_order, Mask};
pub use stencil::{a_terms, c_coeff_even, c_coeff_odd, c_terms, level_stencil, max_stencil_width, LevelStencil, Terms};
pub use surplus::{
    apply_q, apply_q_lattice, apply_q_telescoping, level_point_set, level_points, q_level, q_operator_coefficients,
    surplus_from_samples, LevelSurplus, SurplusField,
};
