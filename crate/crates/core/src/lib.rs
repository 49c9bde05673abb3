// SPDX-License-Identifier: Apache-2.0

//! Entanglement dynamics of an NV-center electron spin and a nuclear ancilla
//! coupled to a ¹³C spin bath.
//!
//! The crate is organised bottom-up:
//!
//! - [`linops`]: dense complex operators over labeled tensor-product spaces.
//! - [`model`]: Hamiltonians of the central system and random bath sampling.
//! - [`dynamics`]: pulse sequences, Bell-state preparation, exact evolution.
//! - [`cce`]: cluster correlation expansion of the electron coherence.
//! - [`metrics`]: concurrence, fidelity and the entanglement-based
//!   non-Markovianity measure.
//! - [`tomography`]: simulated shot-noise readout, reconstruction and
//!   bootstrap error bars.

pub mod cce;
pub mod dynamics;
pub mod error;
pub mod linops;
pub mod metrics;
pub mod model;
pub mod tomography;

pub use error::{Error, Result};
