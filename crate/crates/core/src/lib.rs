//! Sampling recovery and cubature on anisotropic sparse grids by B-spline
//! quasi-interpolation.
//!
//! A function on `[0,1]^d` is sampled on the dyadic grid of a downward-closed
//! level set `Δ` and reconstructed as `R_Δ(f) = Σ_{k∈Δ} q_k(f)`, where each
//! detail `q_k(f)` is a tensor B-spline series whose coefficients are finite
//! linear combinations of samples. Integrating the reconstruction yields a
//! cubature rule on the same points.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod analysis;
pub mod bspline;
pub mod cubature;
pub mod dyadic;
pub mod error;
pub mod grids;
pub mod quadrature;
pub mod quasi_interp;
pub mod recovery;
pub mod tensor;

pub use bspline::{SplineOrder, TensorSplineIndex};
pub use error::{Error, Result};
pub use grids::{LevelSet, SmoothnessSpec};
pub use recovery::Reconstruction;
