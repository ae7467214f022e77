//! Coverage and harvested-power analysis for blockage-limited millimeter-wave
//! cellular networks.
//!
//! The crate has two independent evaluation routes for the same quantities:
//!
//! * [`analysis`] — closed-form / quadrature expressions for energy-outage
//!   coverage, mean harvested power, SINR coverage and joint
//!   information-plus-energy success probability, built on top of the
//!   stochastic-geometry distance laws in [`geometry`] and the quadrature
//!   kernel in [`numerics`].
//! * [`montecarlo`] — a deterministic, seedable network simulator that
//!   estimates the same quantities by sampling Poisson deployments, used to
//!   validate the analytical route.
//!
//! Shared physical modelling (system parameters, sectored antenna patterns,
//! directivity gain distributions, path loss, rectifier behaviour) lives in
//! [`model`] and [`antenna`]; unit conversions in [`units`].
//!
//! Quantities are SI internally: watts, meters, hertz, radians, BSs per
//! square meter. Decibel handling is confined to [`units`] and the CLI.

pub mod antenna;
pub mod model;
pub mod units;

pub mod numerics;

pub mod geometry;

pub mod analysis;

pub mod montecarlo;

pub use antenna::{
    gain_distribution, ula_beamwidths, ula_gain_distribution, ula_pattern, AntennaPattern,
    GainDistribution,
};
pub use model::{harvested_energy, path_loss, LinkState, ModelError, SystemParams};
pub use numerics::{alzer_constant, gen_inc_gamma, integrate, QuadError, QuadratureSpec};
