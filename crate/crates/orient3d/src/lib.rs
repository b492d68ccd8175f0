//! Absolute 3D orientation estimation of a multi-antenna receiver from
//! angle-of-arrival (AoA) measurements to base stations at known positions.
//!
//! The receiver orientation is a rotation matrix `R ∈ SO(3)`. Each base
//! station contributes a noisy elevation/azimuth pair measured in the
//! receiver's local frame; the measurement noise is circular (von Mises)
//! with per-angle concentrations calibrated from a waveform-level link
//! budget. The crate provides:
//!
//! - [`geometry`]: rotations, Euler angles, the AoA forward model and its
//!   analytic gradients with respect to the rotation matrix;
//! - [`vonmises`]: the von Mises distribution, its Fisher information
//!   `κ I₁(κ)/I₀(κ)`, and the inverse map from a target information value
//!   to a concentration;
//! - [`waveform`]: uniform planar array response, waveform-level AoA Fisher
//!   information, and the SNR → concentration calibration pipeline;
//! - [`crb`]: the constrained Cramer-Rao bound of `vec(R)` under the
//!   orthogonality constraints and the scalar orientation error bound (OEB);
//! - [`manifold`]: projected gradient descent on SO(3) with polar
//!   retraction and Armijo backtracking;
//! - [`estimators`]: least-squares and maximum-likelihood orientation
//!   estimators, plus the closed-form Procrustes solution;
//! - [`sim`]: deterministic Monte Carlo trial and sweep drivers with CSV
//!   output.

pub mod crb;
mod error;
pub mod estimators;
pub mod geometry;
pub mod manifold;
pub mod sim;
pub mod vonmises;
pub mod waveform;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
