//! Sampling of one network realization: Poisson deployment, blockage
//! marks, fading, and directivity gains.

use crate::analysis::CoverageMode;
use crate::antenna::GainDistribution;
use crate::model::{LinkState, SystemParams};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use std::f64::consts::TAU;

/// One base station as seen by the typical user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseStation {
    /// Distance from the user (meters), within the sampling annulus.
    pub distance: f64,
    /// Azimuth of the link (radians).
    pub azimuth: f64,
    /// Blockage state drawn from the exponential LOS law.
    pub state: LinkState,
    /// Normalized small-scale fading power (unit mean).
    pub fading: f64,
    /// Directivity gain of the link.
    pub gain: f64,
}

/// A sampled deployment together with the serving-station choice.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub stations: Vec<BaseStation>,
    /// Index of the serving station; populated in connected mode when the
    /// deployment is nonempty.
    pub serving: Option<usize>,
}

impl NetworkRealization {
    /// Aggregate incident RF power at the user in watts.
    pub fn incident_power(&self, params: &SystemParams) -> f64 {
        let mut total = 0.0;
        for bs in &self.stations {
            let path = params.intercept(bs.state) * bs.distance.powf(-params.alpha(bs.state));
            total += params.tx_power * bs.gain * bs.fading * path;
        }
        total
    }
}

/// Unit-mean Gamma fading power with integer shape: the scaled sum of
/// `shape` unit exponentials, exact for integer Nakagami parameters.
fn nakagami_power(shape: u32, rng: &mut ChaCha8Rng) -> f64 {
    let mut h = 0.0;
    for _ in 0..shape {
        let u: f64 = rng.random();
        h -= (1.0 - u).ln();
    }
    h / shape as f64
}

/// Inverse-CDF draw from the five-point directivity distribution.
fn draw_gain(gains: &GainDistribution, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for i in 0..gains.probs.len() - 1 {
        acc += gains.probs[i];
        if u < acc {
            return gains.gains[i];
        }
    }
    *gains.gains.last().unwrap()
}

/// Draws one deployment on the annulus `[r_g, r_max]`.
///
/// Per station the draw order is fixed: radius, azimuth, blockage mark,
/// fading (one uniform per integer shape unit), then directivity gain.
/// In connected mode the serving station is the stronger (by mean
/// received power) of the nearest LOS and nearest NLOS candidates, ties
/// to LOS, and its directivity gain is replaced by the aligned
/// serving gain.
pub fn sample_network(
    params: &SystemParams,
    gains: &GainDistribution,
    mode: CoverageMode,
    r_max: f64,
    rng: &mut ChaCha8Rng,
) -> NetworkRealization {
    let r_g = params.min_distance;
    let area = std::f64::consts::PI * (r_max * r_max - r_g * r_g);
    let mean = params.bs_density * area;
    let count = if mean > 0.0 {
        Poisson::new(mean).expect("positive finite Poisson mean").sample(rng) as usize
    } else {
        0
    };

    let mut stations = Vec::with_capacity(count);
    for _ in 0..count {
        let u: f64 = rng.random();
        let distance = (r_g * r_g + u * (r_max * r_max - r_g * r_g)).sqrt();
        let azimuth = TAU * rng.random::<f64>();
        let state = if rng.random::<f64>() < (-params.blockage_beta * distance).exp() {
            LinkState::Los
        } else {
            LinkState::Nlos
        };
        let fading = nakagami_power(params.nakagami(state), rng);
        let gain = draw_gain(gains, rng);
        stations.push(BaseStation {
            distance,
            azimuth,
            state,
            fading,
            gain,
        });
    }

    let serving = match mode {
        CoverageMode::Connected => associate(&stations, params),
        CoverageMode::Nonconnected => None,
    };
    if let Some(idx) = serving {
        stations[idx].gain = gains.serving_gain();
    }
    NetworkRealization { stations, serving }
}

/// Association rule: the nearest station of each blockage state competes
/// on mean received power `C_s r^{-alpha_s}`; ties go to LOS.
fn associate(stations: &[BaseStation], params: &SystemParams) -> Option<usize> {
    let nearest = |want: LinkState| {
        stations
            .iter()
            .enumerate()
            .filter(|(_, bs)| bs.state == want)
            .min_by(|(_, a), (_, b)| a.distance.total_cmp(&b.distance))
            .map(|(i, bs)| (i, bs.distance))
    };
    let los = nearest(LinkState::Los);
    let nlos = nearest(LinkState::Nlos);
    match (los, nlos) {
        (Some((i, _)), None) | (None, Some((i, _))) => Some(i),
        (None, None) => None,
        (Some((il, rl)), Some((inn, rn))) => {
            let pl = params.intercept_los * rl.powf(-params.alpha_los);
            let pn = params.intercept_nlos * rn.powf(-params.alpha_nlos);
            Some(if pl >= pn { il } else { inn })
        }
    }
}
