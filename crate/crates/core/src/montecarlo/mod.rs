//! Ground-truth Monte Carlo engine.
//!
//! Estimates every probability and mean the [`crate::analysis`] module
//! computes by sampling Poisson deployments with blockage marks, Nakagami
//! fading, and random directivity gains. All estimators are deterministic
//! for a fixed `(seed, trials, configuration)` triple regardless of how
//! trials are scheduled across workers: every trial derives its own
//! counter-based RNG stream from the seed, success counting is integer,
//! and means are reduced with a fixed-shape pairwise tree.

mod combining;
mod network;

pub use combining::{
    combining_gain, exhaustive_switch_combiner, greedy_switch_combiner, serving_combining_gain,
    Combiner, ReceiverSpec,
};
pub use network::{sample_network, BaseStation, NetworkRealization};

use crate::analysis::{self, AnalysisError, CoverageMode, SwiptQuery};
use crate::antenna::GainDistribution;
use crate::model::{ModelError, SystemParams};
use crate::numerics::{pairwise_sum, QuadError, QuadratureSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// 95% two-sided normal quantile for confidence halfwidths.
const Z95: f64 = 1.959963984540054;

/// Hard ceiling on the sampling radius (meters).
const TRUNCATION_CEILING: f64 = 20_000.0;

// ---------------------------------------------------------------------------
// Errors and estimates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Error)]
pub enum MonteCarloError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("simulation domain error: {0}")]
    Domain(String),
}

/// A simulated probability or mean with its sampling uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageEstimate {
    /// Point estimate: a probability, or a power in watts.
    pub estimate: f64,
    /// Number of independent trials behind the estimate.
    pub trials: u64,
    /// 95% confidence halfwidth (normal approximation), same units as
    /// the estimate.
    pub ci_halfwidth: f64,
    /// Seed the trial streams were derived from.
    pub seed: u64,
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

/// RNG for one trial: a fixed-seed ChaCha8 generator moved onto the
/// trial's own counter stream, so trials are independent and the
/// assignment of trials to workers is irrelevant.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Rectifier law applied to an incident power: `eff * power` above the
/// activation threshold, zero otherwise. Scalar twin of
/// [`crate::model::harvested_energy`] for validated parameters.
fn rectified(incident: f64, rectifier_eff: f64, activation_threshold: f64) -> f64 {
    if incident > activation_threshold {
        rectifier_eff * incident
    } else {
        0.0
    }
}

fn probability_estimate(hits: &[bool], seed: u64) -> CoverageEstimate {
    let trials = hits.len() as u64;
    let count = hits.iter().filter(|&&h| h).count() as f64;
    let p = count / trials as f64;
    CoverageEstimate {
        estimate: p,
        trials,
        ci_halfwidth: Z95 * (p * (1.0 - p) / trials as f64).sqrt(),
        seed,
    }
}

fn mean_estimate(values: &[f64], seed: u64) -> CoverageEstimate {
    let trials = values.len() as u64;
    let mean = pairwise_sum(values) / trials as f64;
    let ci_halfwidth = if trials > 1 {
        let devs: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&devs) / (trials - 1) as f64;
        Z95 * (var / trials as f64).sqrt()
    } else {
        0.0
    };
    CoverageEstimate {
        estimate: mean,
        trials,
        ci_halfwidth,
        seed,
    }
}

fn check_common(
    trials: u64,
    psi: f64,
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<(), MonteCarloError> {
    params.validate()?;
    analysis::validate_gains(gains)?;
    if trials == 0 {
        return Err(MonteCarloError::Domain("at least one trial required".into()));
    }
    if !psi.is_finite() || psi < 0.0 {
        return Err(MonteCarloError::Domain(format!(
            "outage threshold must be finite and >= 0, got {psi}"
        )));
    }
    Ok(())
}

/// Sampling radius for the deployment disc.
///
/// Chosen so the mean incident power arriving from beyond the radius
/// (a closed-form Campbell tail) is below one thousandth of the
/// activation threshold or one millionth of the whole-plane mean,
/// whichever binds, with a hard 20 km ceiling.
pub fn truncation_radius(
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<f64, MonteCarloError> {
    params.validate()?;
    analysis::validate_gains(gains)?;
    let g = gains.mean_gain();
    let coarse = QuadratureSpec::default();
    let full = analysis::mean_power_los(params.min_distance, g, params, &coarse)?
        + analysis::mean_power_nlos(params.min_distance, g, params, &coarse)?;
    let cap = (1e-3 * params.activation_threshold).max(1e-6 * full);
    if !(cap > 0.0) {
        return Ok(TRUNCATION_CEILING);
    }
    let spec = QuadratureSpec::default().with_tolerance(1e-6, cap * 1e-3);
    let tail = |x: f64| -> Result<f64, QuadError> {
        Ok(analysis::mean_power_los(x, g, params, &spec)?
            + analysis::mean_power_nlos(x, g, params, &spec)?)
    };
    if tail(TRUNCATION_CEILING)? > cap {
        return Ok(TRUNCATION_CEILING);
    }
    let (mut lo, mut hi) = (params.min_distance, TRUNCATION_CEILING);
    while hi - lo > 0.5 {
        let mid = 0.5 * (lo + hi);
        if tail(mid)? > cap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

// ---------------------------------------------------------------------------
// Energy-coverage and mean-power estimators
// ---------------------------------------------------------------------------

/// Fraction of trials whose harvested power exceeds `psi` watts.
///
/// Empty deployments count as outage.
pub fn simulate_energy_coverage(
    mode: CoverageMode,
    psi: f64,
    trials: u64,
    seed: u64,
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<CoverageEstimate, MonteCarloError> {
    check_common(trials, psi, params, gains)?;
    let r_max = truncation_radius(params, gains)?;
    let hits: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let net = sample_network(params, gains, mode, r_max, &mut rng);
            let harvested = rectified(
                net.incident_power(params),
                params.rectifier_eff,
                params.activation_threshold,
            );
            harvested > psi
        })
        .collect();
    Ok(probability_estimate(&hits, seed))
}

/// Mean useful harvested power: the average of `harvested * 1{harvested
/// > psi}` over trials, in watts. With `psi = 0` and a zero activation
/// threshold this is the plain mean harvested power.
pub fn simulate_avg_power(
    mode: CoverageMode,
    psi: f64,
    trials: u64,
    seed: u64,
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<CoverageEstimate, MonteCarloError> {
    check_common(trials, psi, params, gains)?;
    let r_max = truncation_radius(params, gains)?;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let net = sample_network(params, gains, mode, r_max, &mut rng);
            let harvested = rectified(
                net.incident_power(params),
                params.rectifier_eff,
                params.activation_threshold,
            );
            if harvested > psi {
                harvested
            } else {
                0.0
            }
        })
        .collect();
    Ok(mean_estimate(&values, seed))
}

// ---------------------------------------------------------------------------
// SWIPT estimator
// ---------------------------------------------------------------------------

/// Fraction of trials in which the decoder branch clears the SINR
/// threshold and the harvester branch clears the energy threshold
/// simultaneously.
///
/// Per trial, an arrival angle is drawn uniformly, the combiner chosen in
/// `rx` is designed for it, and its gain multiplies the serving link
/// only; interference keeps the aggregate sectored-gain abstraction. The
/// received power is split by the query's ratio between decoding and
/// harvesting, with conversion noise charged to the decoder branch.
pub fn simulate_swipt(
    query: &SwiptQuery,
    rx: &ReceiverSpec,
    trials: u64,
    seed: u64,
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<CoverageEstimate, MonteCarloError> {
    check_common(trials, query.energy_threshold, params, gains)?;
    query.validate()?;
    rx.validate()?;
    // Surface combiner refusals (oversized exhaustive search) up front so
    // the per-trial design below cannot fail.
    serving_combining_gain(rx, 0.0)?;
    let r_max = truncation_radius(params, gains)?;
    let nu = query.split_ratio;
    let hits: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let phi_r = TAU * rng.random::<f64>();
            let net = sample_network(params, gains, CoverageMode::Connected, r_max, &mut rng);
            let Some(serving) = net.serving else {
                return false;
            };
            let m_c = serving_combining_gain(rx, phi_r).expect("combiner validated");
            let mut signal = 0.0;
            let mut interference = 0.0;
            for (i, bs) in net.stations.iter().enumerate() {
                let path = params.intercept(bs.state) * bs.distance.powf(-params.alpha(bs.state));
                let power = params.tx_power * bs.gain * bs.fading * path;
                if i == serving {
                    signal = power * m_c;
                } else {
                    interference += power;
                }
            }
            let sinr = nu * signal
                / (nu * (interference + params.noise_power) + params.conversion_noise);
            let harvested = rectified(
                (1.0 - nu) * (signal + interference + params.noise_power),
                params.rectifier_eff,
                params.activation_threshold,
            );
            sinr > query.sinr_threshold && harvested > query.energy_threshold
        })
        .collect();
    Ok(probability_estimate(&hits, seed))
}

// ---------------------------------------------------------------------------
// Sub-6 GHz comparison network
// ---------------------------------------------------------------------------

/// Parameter block for the lower-frequency comparison network: no
/// blockage, a single power-law path loss, Rayleigh fading, and a
/// transmit array doing maximal ratio transmission toward the served
/// user.
#[derive(Debug, Clone, PartialEq)]
pub struct UhfBaseline {
    /// Base stations per square meter.
    pub bs_density: f64,
    /// Transmit power (watts).
    pub tx_power: f64,
    /// Transmit antennas per base station; the serving link's fading
    /// power is the unnormalized sum of this many unit exponentials.
    pub tx_antennas: u32,
    /// Common path-loss exponent.
    pub path_loss_exp: f64,
    /// Carrier frequency (hertz), setting the free-space intercept.
    pub carrier_freq: f64,
    /// Exclusion radius around the user (meters).
    pub min_distance: f64,
    pub rectifier_eff: f64,
    pub activation_threshold: f64,
}

impl UhfBaseline {
    /// Sparse 2.1 GHz deployment: 25 BSs/km², 8-antenna maximal ratio
    /// transmission, exponent 3.6.
    pub fn default_2_1ghz() -> Self {
        UhfBaseline {
            bs_density: 25.0 * 1e-6,
            tx_power: 20.0,
            tx_antennas: 8,
            path_loss_exp: 3.6,
            carrier_freq: 2.1e9,
            min_distance: 1.0,
            rectifier_eff: 1.0,
            activation_threshold: 0.0,
        }
    }

    /// Free-space intercept at one meter for the carrier.
    pub fn intercept(&self) -> f64 {
        let wavelength = 299_792_458.0 / self.carrier_freq;
        let amp = wavelength / (4.0 * PI);
        amp * amp
    }

    pub fn validate(&self) -> Result<(), MonteCarloError> {
        let positives = [
            ("bs_density", self.bs_density),
            ("tx_power", self.tx_power),
            ("carrier_freq", self.carrier_freq),
            ("min_distance", self.min_distance),
        ];
        for (name, v) in positives {
            if !(v > 0.0) || !v.is_finite() {
                return Err(MonteCarloError::Domain(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.tx_antennas < 1 {
            return Err(MonteCarloError::Domain("tx_antennas must be >= 1".into()));
        }
        if !(self.path_loss_exp > 2.0) {
            return Err(MonteCarloError::Domain(
                "path_loss_exp must exceed 2 for a finite aggregate mean".into(),
            ));
        }
        if !(self.rectifier_eff > 0.0 && self.rectifier_eff <= 1.0) {
            return Err(MonteCarloError::Domain(
                "rectifier_eff must lie in (0, 1]".into(),
            ));
        }
        if !(self.activation_threshold >= 0.0) {
            return Err(MonteCarloError::Domain(
                "activation_threshold must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Sampling radius under the same Campbell-tail rule as the mmWave
    /// engine; closed form because the path loss is a single power law.
    fn truncation_radius(&self) -> f64 {
        let kappa = 2.0 * PI * self.bs_density * self.tx_power * self.intercept();
        let tail_at = |x: f64| kappa * x.powf(2.0 - self.path_loss_exp) / (self.path_loss_exp - 2.0);
        let full = tail_at(self.min_distance);
        let cap = (1e-3 * self.activation_threshold).max(1e-6 * full);
        if !(cap > 0.0) {
            return TRUNCATION_CEILING;
        }
        let r = self.min_distance
            * (full / cap).powf(1.0 / (self.path_loss_exp - 2.0));
        r.min(TRUNCATION_CEILING)
    }

    /// One deployment draw: per station a radius and a unit-exponential
    /// fading draw, then the nearest station's fading is replaced by the
    /// maximal-ratio sum drawn after the loop. Returns `None` for an
    /// empty deployment.
    fn sample(&self, r_max: f64, rng: &mut ChaCha8Rng) -> Option<f64> {
        let r_g = self.min_distance;
        let mean = self.bs_density * PI * (r_max * r_max - r_g * r_g);
        let count = Poisson::new(mean)
            .expect("positive finite Poisson mean")
            .sample(rng) as usize;
        if count == 0 {
            return None;
        }
        let mut links = Vec::with_capacity(count);
        for _ in 0..count {
            let u: f64 = rng.random();
            let r = (r_g * r_g + u * (r_max * r_max - r_g * r_g)).sqrt();
            let h = -(1.0 - rng.random::<f64>()).ln();
            links.push((r, h));
        }
        let nearest = links
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.0.total_cmp(&b.0))
            .map(|(i, _)| i)
            .unwrap();
        let mut mrt = 0.0;
        for _ in 0..self.tx_antennas {
            mrt -= (1.0 - rng.random::<f64>()).ln();
        }
        links[nearest].1 = mrt;
        let incident: f64 = links
            .iter()
            .map(|(r, h)| self.tx_power * self.intercept() * h * r.powf(-self.path_loss_exp))
            .sum();
        Some(incident)
    }
}

/// Energy coverage of the comparison network: fraction of trials whose
/// harvested power exceeds `psi` watts. Empty deployments count as
/// outage.
pub fn simulate_uhf_baseline(
    psi: f64,
    trials: u64,
    seed: u64,
    uhf: &UhfBaseline,
) -> Result<CoverageEstimate, MonteCarloError> {
    uhf.validate()?;
    if trials == 0 {
        return Err(MonteCarloError::Domain("at least one trial required".into()));
    }
    if !psi.is_finite() || psi < 0.0 {
        return Err(MonteCarloError::Domain(format!(
            "outage threshold must be finite and >= 0, got {psi}"
        )));
    }
    let r_max = uhf.truncation_radius();
    let hits: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            match uhf.sample(r_max, &mut rng) {
                Some(incident) => {
                    rectified(incident, uhf.rectifier_eff, uhf.activation_threshold) > psi
                }
                None => false,
            }
        })
        .collect();
    Ok(probability_estimate(&hits, seed))
}

/// Mean useful harvested power of the comparison network, in watts:
/// the average of `harvested * 1{harvested > psi}` over trials, with
/// empty deployments contributing zero.
pub fn simulate_uhf_avg_power(
    psi: f64,
    trials: u64,
    seed: u64,
    uhf: &UhfBaseline,
) -> Result<CoverageEstimate, MonteCarloError> {
    uhf.validate()?;
    if trials == 0 {
        return Err(MonteCarloError::Domain("at least one trial required".into()));
    }
    if !psi.is_finite() || psi < 0.0 {
        return Err(MonteCarloError::Domain(format!(
            "outage threshold must be finite and >= 0, got {psi}"
        )));
    }
    let r_max = uhf.truncation_radius();
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let harvested = match uhf.sample(r_max, &mut rng) {
                Some(incident) => {
                    rectified(incident, uhf.rectifier_eff, uhf.activation_threshold)
                }
                None => 0.0,
            };
            if harvested > psi {
                harvested
            } else {
                0.0
            }
        })
        .collect();
    Ok(mean_estimate(&values, seed))
}
