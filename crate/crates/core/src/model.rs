//! Physical system model: deployment parameters, link blockage state,
//! distance-dependent path gain and the rectifier transfer function.

use crate::units;
use thiserror::Error;

/// Errors raised by model-level validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

fn reject(name: &'static str, value: f64, reason: &'static str) -> ModelError {
    ModelError::InvalidParameter {
        name,
        value,
        reason,
    }
}

/// Whether a base-station link is line-of-sight or blocked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkState {
    Los,
    Nlos,
}

/// Full parameter set for one network configuration.
///
/// All quantities are linear SI units: watts, meters, hertz, per square
/// meter. Fields are public; call [`SystemParams::validate`] after
/// constructing or mutating one (every engine entry point does so as well).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Base-station density, per m^2 (> 0).
    pub bs_density: f64,
    /// User density, per m^2 (bookkeeping only; >= 0).
    pub user_density: f64,
    /// Base-station transmit power, W (> 0).
    pub tx_power: f64,
    /// Blockage rate constant: a link of length r is line-of-sight with
    /// probability exp(-beta r).
    pub blockage_beta: f64,
    /// LOS path-loss exponent (> 0).
    pub alpha_los: f64,
    /// NLOS path-loss exponent (> 2; the aggregate-power integrals diverge
    /// otherwise).
    pub alpha_nlos: f64,
    /// LOS path-gain intercept at 1 m (> 0).
    pub intercept_los: f64,
    /// NLOS path-gain intercept at 1 m (> 0).
    pub intercept_nlos: f64,
    /// LOS Nakagami shape parameter (positive integer).
    pub nakagami_los: u32,
    /// NLOS Nakagami shape parameter (positive integer).
    pub nakagami_nlos: u32,
    /// RF-to-DC rectifier efficiency, in (0, 1].
    pub rectifier_eff: f64,
    /// Minimum received power that activates the rectifier, W (>= 0).
    /// Power at or below this level harvests nothing.
    pub activation_threshold: f64,
    /// Minimum link distance r_g, m (> 0); no BS is closer than this.
    pub min_distance: f64,
    /// Receiver thermal noise power, W (>= 0).
    pub noise_power: f64,
    /// RF-to-baseband conversion noise power, W (>= 0).
    pub conversion_noise: f64,
    /// System bandwidth, Hz (> 0).
    pub bandwidth: f64,
    /// Carrier frequency, Hz (> 0).
    pub carrier_freq: f64,
    /// Fraction of users in connected (powered, associated) mode, in [0, 1].
    pub connected_fraction: f64,
}

impl SystemParams {
    /// Baseline 28 GHz configuration: 100 BS/km^2, 20 W (~43 dBm) transmit
    /// power, blockage constant 0.0071, LOS/NLOS exponents 2/4, Nakagami
    /// shapes 2/3, free-space intercepts at 1 m, 100 MHz bandwidth with a
    /// 10 dB noise figure, unit rectifier efficiency, zero activation
    /// threshold.
    pub fn default_28ghz() -> Self {
        let carrier = 28e9;
        let bandwidth = 100e6;
        let intercept = units::free_space_intercept(carrier);
        SystemParams {
            bs_density: 100e-6,
            user_density: 100e-6,
            tx_power: 20.0,
            blockage_beta: 0.0071,
            alpha_los: 2.0,
            alpha_nlos: 4.0,
            intercept_los: intercept,
            intercept_nlos: intercept,
            nakagami_los: 2,
            nakagami_nlos: 3,
            rectifier_eff: 1.0,
            activation_threshold: 0.0,
            min_distance: 1.0,
            noise_power: units::thermal_noise_watts(bandwidth, 10.0),
            conversion_noise: 0.0,
            bandwidth,
            carrier_freq: carrier,
            connected_fraction: 1.0,
        }
    }

    /// Check every field against its documented range.
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("bs_density", self.bs_density),
            ("tx_power", self.tx_power),
            ("blockage_beta", self.blockage_beta),
            ("alpha_los", self.alpha_los),
            ("intercept_los", self.intercept_los),
            ("intercept_nlos", self.intercept_nlos),
            ("min_distance", self.min_distance),
            ("bandwidth", self.bandwidth),
            ("carrier_freq", self.carrier_freq),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(reject(name, value, "must be finite and > 0"));
            }
        }
        let nonnegative = [
            ("user_density", self.user_density),
            ("activation_threshold", self.activation_threshold),
            ("noise_power", self.noise_power),
            ("conversion_noise", self.conversion_noise),
        ];
        for (name, value) in nonnegative {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(reject(name, value, "must be finite and >= 0"));
            }
        }
        if !(self.alpha_nlos > 2.0) {
            return Err(reject(
                "alpha_nlos",
                self.alpha_nlos,
                "must be > 2 for aggregate-power integrals to converge",
            ));
        }
        if self.nakagami_los == 0 {
            return Err(reject("nakagami_los", 0.0, "must be a positive integer"));
        }
        if self.nakagami_nlos == 0 {
            return Err(reject("nakagami_nlos", 0.0, "must be a positive integer"));
        }
        if !(self.rectifier_eff > 0.0 && self.rectifier_eff <= 1.0) {
            return Err(reject(
                "rectifier_eff",
                self.rectifier_eff,
                "must lie in (0, 1]",
            ));
        }
        if !(0.0..=1.0).contains(&self.connected_fraction) {
            return Err(reject(
                "connected_fraction",
                self.connected_fraction,
                "must lie in [0, 1]",
            ));
        }
        Ok(())
    }

    /// Path-loss exponent for the given link state.
    pub fn alpha(&self, state: LinkState) -> f64 {
        match state {
            LinkState::Los => self.alpha_los,
            LinkState::Nlos => self.alpha_nlos,
        }
    }

    /// Path-gain intercept for the given link state.
    pub fn intercept(&self, state: LinkState) -> f64 {
        match state {
            LinkState::Los => self.intercept_los,
            LinkState::Nlos => self.intercept_nlos,
        }
    }

    /// Nakagami shape parameter for the given link state.
    pub fn nakagami(&self, state: LinkState) -> u32 {
        match state {
            LinkState::Los => self.nakagami_los,
            LinkState::Nlos => self.nakagami_nlos,
        }
    }
}

/// Distance-dependent path gain `C * r^-alpha` for a link in the given
/// blockage state. Distances below the minimum link distance are outside
/// the model and rejected.
pub fn path_loss(distance: f64, state: LinkState, params: &SystemParams) -> Result<f64, ModelError> {
    if !(distance >= params.min_distance) {
        return Err(reject(
            "distance",
            distance,
            "below the minimum link distance",
        ));
    }
    Ok(params.intercept(state) * distance.powf(-params.alpha(state)))
}

/// DC power delivered by the rectifier for a given received RF power:
/// `eff * power` when the received power strictly exceeds the activation
/// threshold, zero otherwise (power exactly at the threshold harvests
/// nothing).
pub fn harvested_energy(
    received_power: f64,
    rectifier_eff: f64,
    activation_threshold: f64,
) -> Result<f64, ModelError> {
    if !(received_power >= 0.0) || !received_power.is_finite() {
        return Err(reject(
            "received_power",
            received_power,
            "must be finite and >= 0",
        ));
    }
    if !(rectifier_eff > 0.0 && rectifier_eff <= 1.0) {
        return Err(reject("rectifier_eff", rectifier_eff, "must lie in (0, 1]"));
    }
    if !(activation_threshold >= 0.0) {
        return Err(reject(
            "activation_threshold",
            activation_threshold,
            "must be >= 0",
        ));
    }
    if received_power > activation_threshold {
        Ok(rectifier_eff * received_power)
    } else {
        Ok(0.0)
    }
}
