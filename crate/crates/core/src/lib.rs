//! Simulator for a classical oscillator coupled to a quantum oscillator
//! through `omega^2 = m^2 + e^2 A^2`, comparing two definitions of the
//! time-dependent particle number of the quantum sector.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod output;
pub mod physics;
pub mod plot;
pub mod state;

pub use dynamics::{integrate, Method, QuantumInit, ScenarioConfig, TimeSeriesRecord, Trajectory};
pub use error::{Error, Result};
pub use physics::{EnergyReport, GaussianMoments, ModelParams, OscBasis};
pub use state::{Representation, SemiState};
