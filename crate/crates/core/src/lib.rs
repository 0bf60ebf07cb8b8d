//! Coiflet wavelet approximation on intervals, the wavelet time-integration method
//! and a wavelet-Galerkin semi-discretization for nonlinear initial-boundary value
//! problems.

pub mod benchmarks;
pub mod coiflet;
pub mod error;
pub mod exec;
pub mod galerkin;
pub mod integrator;
pub mod interval;
pub mod numeric;
pub mod stability;
pub mod toolkit;

pub use error::{Error, Result};
pub use exec::Execution;
