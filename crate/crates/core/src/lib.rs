//! Mixed finite elements for the stationary Stokes and Navier–Stokes equations
//! on 2D domains with the Navier slip-with-friction boundary condition
//!
//! ```text
//! -Δu + ∇π = f + div F,   div u = 0        in Ω
//! u·n = 0,   [(2D(u) + F)n]_τ + α u_τ = h   on Γ
//! ```
//!
//! The velocity/pressure pair is Taylor–Hood (P2/P1). Impermeability is
//! imposed strongly by rotating boundary velocity nodes into their (n, τ)
//! frame, the pressure is normalized to zero mean through a multiplier, and on
//! the disk with α ≡ 0 the rigid rotation β(x) = (−x₂, x₁) can be removed by a
//! second multiplier.
//!
//! Module map:
//!
//! * [`mesh`]: unit square and polygonal disk triangulations with boundary frames
//! * [`fem`], [`quadrature`]: Taylor–Hood spaces, interpolation, norms
//! * [`forms`], [`sparse`]: assembly of every bilinear and linear form
//! * [`constraints`]: boundary rotation/elimination, pressure gauge, kernel guard
//! * [`saddle`]: sparse direct solver for the resulting saddle-point systems
//! * [`stokes`], [`navierstokes`]: end-to-end drivers and diagnostics
//! * [`spectra`]: discrete inf-sup and Korn-type constants
//! * [`exponents`]: integrability exponents of the data

pub mod constraints;
pub mod error;
pub mod exponents;
pub mod fem;
pub mod fields;
pub mod forms;
pub mod manufactured;
pub mod mesh;
pub mod navierstokes;
pub mod par;
pub mod quadrature;
pub mod saddle;
pub mod sparse;
pub mod spectra;
pub mod stokes;

/// Library version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};

/// Planar point or vector.
pub type Point = [f64; 2];
