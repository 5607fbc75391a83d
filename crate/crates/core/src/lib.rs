//! Numerical toolkit for superconducting-circuit quantum computing.
//!
//! Units: frequencies and energies are ordinary frequencies in GHz (E/h),
//! times are in ns. Dynamics use angular frequency (rad/ns) with hbar = 1;
//! the `2*pi` conversion happens where Hamiltonians are assembled.

pub mod circuits;
pub mod control;
pub mod coupling;
pub mod dynamics;
pub mod experiments;
pub mod gates;
pub mod qcore;
pub mod tridiag;

pub use qcore::{BlochVector, DensityMatrix, Operator, StateVector};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Converts an ordinary frequency in GHz to angular frequency in rad/ns.
#[inline]
pub fn ghz_to_angular(f: f64) -> f64 {
    std::f64::consts::TAU * f
}
