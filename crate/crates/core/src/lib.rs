//! Numerical laboratory for fractional perimeters on model manifolds.
//!
//! The singular kernel of a manifold is the time-Mellin transform of its heat
//! kernel,
//!
//! ```text
//! K_s(x, y) = |Γ(-s/2)|⁻¹ ∫₀^∞ H(x, y, t) t^{-1-s/2} dt,
//! ```
//!
//! and every functional in this crate (interaction energies, fractional
//! perimeters, Sobolev seminorms, fractional Laplacians, heat densities) is
//! evaluated from it by deterministic quadrature. The [`asymptotics`] module
//! sweeps the fractional order towards zero and extrapolates the limits, which
//! can then be compared against the closed-form volume predictions.
//!
//! Module map:
//!
//! - [`models`]: model geometries, points, regions, sampling.
//! - [`heatkernel`]: heat kernels and heat-semigroup quantities.
//! - [`quadrature`]: time integrals, region integrals and pair integrals.
//! - [`singkernel`]: Γ-normalisations and the singular kernel.
//! - [`functionals`]: interaction functional, perimeters, seminorms, Laplacians.
//! - [`asymptotics`]: s → 0⁺ sweeps, extrapolation, heat density, predictions.

pub mod asymptotics;
pub mod error;
pub mod functionals;
pub mod heatkernel;
pub mod models;
pub mod quadrature;
pub mod singkernel;

pub use error::{Error, Result};
pub use models::{ManifoldModel, ModelKind, Point, Region, VolumeClass};
pub use quadrature::{IntegralEstimate, Method, QuadConfig};
