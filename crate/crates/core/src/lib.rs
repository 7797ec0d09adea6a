//! Band structure, asymptotic velocity and wave-packet transport for
//! one-dimensional periodic and limit-periodic Schrödinger operators
//! `H = -d^2/dx^2 + V`.
//!
//! The crate is organised bottom-up:
//!
//! * [`potential`]: cosine-series periodic potentials and limit-periodic
//!   families with nested periods.
//! * [`monodromy`]: the one-period transfer matrix and the Hill
//!   discriminant `Delta(z)` with its energy derivative.
//! * [`bands`]: band edges, band functions `E_n(k)`, group velocities and
//!   gap diagnostics from the discriminant.
//! * [`fiber`]: plane-wave fiber operators `H(k)`, the discrete Floquet
//!   transform and the asymptotic velocity operator.
//! * [`evolve`]: split-step time evolution, Heisenberg position and moments.
//! * [`transport`]: convergence of `X_H(t)/t`, the limit-periodic cascade
//!   and transport exponents.

pub mod bands;
pub mod error;
pub mod evolve;
pub mod fiber;
pub mod fit;
pub mod monodromy;
pub mod ode;
pub mod potential;
pub mod transport;

pub use error::{Error, Result};
pub use evolve::{Gaussian, WavePacket};
pub use potential::{EcFamily, PeriodicPotential};
