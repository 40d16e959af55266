//! Velocity-space numerics for the spatially homogeneous Landau equation with
//! Maxwell molecules in its normalized (linear) form
//!
//! ```text
//! ∂t f = ∇·([a(v) + d·Id − T(t)] ∇f + (d−1) v f),   a(z) = |z|² Id − z⊗z
//! ```
//!
//! The crate provides grids and densities ([`geometry`]), moments and the exact
//! temperature law ([`moments`]), entropy and Fisher-type functionals
//! ([`functionals`]), a conservative finite-volume solver ([`solver`]), the
//! two-particle lifted quantities for d = 2 ([`lifted`]), the integrated Γ₂
//! check on the sphere ([`gamma2`]) and the explicit constants and time
//! thresholds ([`bounds`]).

pub mod bounds;
pub mod error;
pub mod functionals;
pub mod gamma2;
pub mod geometry;
pub mod lifted;
pub mod linalg;
pub mod moments;
pub mod solver;
mod stencil;
mod sum;

pub use error::{Error, Result};
pub use geometry::{
    build_grid, normalize, normalize_fn, AffineMap, Density, GaussianMixture, TemperatureTensor, VelocityGrid,
};
pub use linalg::SymMat;
