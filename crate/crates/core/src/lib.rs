//! Stochastic gradient descent in continuous time (SGDCT).
//!
//! The data process `dX = f*(X) dt + σ dW` is observed as a stream and the
//! parameter estimate follows
//!
//! ```text
//! dθ = α_t ∇_θ f(X, θ) (σσᵀ)⁻¹ (dX − f(X, θ) dt)
//! ```
//!
//! This crate holds the pure numerical parts: parametric drift families, the
//! Euler–Maruyama integrator, learning-rate schedules, the coupled estimation
//! loop, a one-dimensional Poisson solver for the fluctuation correction, the
//! limiting-covariance predictors and the estimators that turn Monte Carlo
//! replications into convergence-rate and CLT diagnostics.
//!
//! It is `no_std` and only needs `alloc`. File formats, configuration, the
//! parallel replication driver and the command line live in the `sgdct`
//! companion crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod covariance;
pub mod engine;
mod error;
pub mod linalg;
pub mod model;
pub mod poisson;
pub mod quad;
pub mod schedule;
pub mod sde;
pub mod stats;

pub use error::{CoreError, Result};
pub use linalg::Matrix;
pub use model::{BuiltinModel, DriftModel, NoiseSpec, ParameterVector, StateVector};
pub use schedule::ScheduleSpec;

/// FNV-1a over a byte stream. Used for config and replication digests.
#[derive(Debug, Clone, Copy)]
pub struct Fnv64(u64);

impl Default for Fnv64 {
    fn default() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }
}

impl Fnv64 {
    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    pub fn write_f64(&mut self, v: f64) {
        self.write(&v.to_bits().to_le_bytes());
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}
