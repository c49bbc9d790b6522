//! Numerical spin geometry of the Eguchi-Hanson family and its isospectral
//! torus deformation.
//!
//! The crate exposes the closed-form Riemannian data (metric, Christoffel
//! symbols, orthonormal coframes, spin connection), the Dirac operator and
//! parallel transport along the Killing torus, the mode-function algebra with
//! its twisted product, the finite operator algebra generated by multipliers
//! and transport unitaries, the projective-module description of the spinor
//! bundle, Hochschild chains with their Dirac representation, and cosphere
//! residue quadratures.  Every closed-form table has an independent oracle
//! (exact forward-mode derivatives, ODE integration, or quadrature) and the
//! `suite` module assembles the full verification run used by the `nceh`
//! binary.

pub mod config;
pub mod dirac;
pub mod errors;
pub mod fields;
pub mod frames;
pub mod geometry;
pub mod hochschild;
pub mod jet;
pub mod linalg;
pub mod modealg;
pub mod opalg;
pub mod projmod;
pub mod quad;
pub mod report;
pub mod residue;
pub mod spinbundle;
pub mod suite;
pub mod transport;

pub use errors::NcehError;
pub type Result<T> = std::result::Result<T, NcehError>;
