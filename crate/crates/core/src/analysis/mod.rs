//! Closed-form evaluation of coverage and harvested power.
//!
//! This module turns the model's integral expressions into numbers:
//!
//! * energy-coverage CCDFs for connected and nonconnected receivers
//!   (alternating binomial sums over distance integrals with per-field
//!   interference exponents),
//! * a LOS-ball fast approximation of the connected CCDF on a finite
//!   interval,
//! * mean harvested power by quadrature over the CCDF together with its
//!   closed-form interference-limit and serving-link-only companions,
//! * SINR coverage for a power-splitting receiver, and the joint SWIPT
//!   success probability that couples it to the energy branch through an
//!   interference split.
//!
//! Everything here is deterministic; the Monte Carlo engine provides the
//! ground truth these evaluations are tested against.

mod exponents;

use crate::antenna::GainDistribution;
use crate::geometry::{self, DistanceLaws, GeometryError};
use crate::model::{LinkState, ModelError, SystemParams};
use crate::numerics::{
    alzer_constant, gen_inc_gamma, integrate, CompensatedSum, QuadError, QuadratureSpec,
};
use exponents::{aggregate_exponent, bracket_power};
pub(crate) use exponents::{mean_power_los, mean_power_nlos};
use std::cell::RefCell;
use std::f64::consts::PI;
use thiserror::Error;

/// Default number of terms in the alternating binomial approximation of
/// the conditional fading CCDF.
pub const DEFAULT_APPROX_TERMS: u32 = 5;

/// Residual quadrature noise tolerated outside [0,1] before clamping;
/// larger excursions indicate a broken integrand and are reported as
/// errors instead.
const PROB_SLACK: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("analysis domain error: {0}")]
    Domain(String),
}

fn domain(msg: impl Into<String>) -> AnalysisError {
    AnalysisError::Domain(msg.into())
}

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

/// Which receiver population an energy-coverage query refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageMode {
    /// Beam-aligned receiver with a serving base station.
    Connected,
    /// Receiver without beam alignment; every link gain is random.
    Nonconnected,
}

/// An energy-coverage question: the probability that harvested power
/// exceeds `outage_threshold` watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCoverageQuery {
    /// Harvested-power outage threshold (watts).
    pub outage_threshold: f64,
    /// Number of terms in the alternating binomial approximation.
    pub approx_terms: u32,
    /// Receiver population.
    pub mode: CoverageMode,
}

impl EnergyCoverageQuery {
    pub fn connected(outage_threshold: f64) -> Self {
        EnergyCoverageQuery {
            outage_threshold,
            approx_terms: DEFAULT_APPROX_TERMS,
            mode: CoverageMode::Connected,
        }
    }

    pub fn nonconnected(outage_threshold: f64) -> Self {
        EnergyCoverageQuery {
            mode: CoverageMode::Nonconnected,
            ..Self::connected(outage_threshold)
        }
    }

    pub fn with_terms(mut self, approx_terms: u32) -> Self {
        self.approx_terms = approx_terms;
        self
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.outage_threshold >= 0.0) || !self.outage_threshold.is_finite() {
            return Err(domain(format!(
                "outage threshold must be finite and >= 0, got {}",
                self.outage_threshold
            )));
        }
        if self.approx_terms == 0 {
            return Err(domain("approximation needs at least one term"));
        }
        Ok(())
    }

    /// Threshold seen by the incident RF power: the harvester transform
    /// (efficiency scale and activation floor) folded into the query,
    /// `max(psi / xi, psi_min)`.
    pub fn effective_threshold(&self, params: &SystemParams) -> f64 {
        (self.outage_threshold / params.rectifier_eff).max(params.activation_threshold)
    }
}

/// A joint SWIPT question: SINR above `sinr_threshold` and harvested
/// power above `energy_threshold` under power-splitting ratio
/// `split_ratio` (fraction routed to the decoder... the harvester sees
/// `1 - split_ratio`... see [`CoverageModel::swipt_success`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwiptQuery {
    /// SINR outage threshold (linear).
    pub sinr_threshold: f64,
    /// Harvested-power outage threshold (watts).
    pub energy_threshold: f64,
    /// Fraction of received power routed to the information decoder,
    /// strictly inside (0, 1): either endpoint degenerates one branch.
    pub split_ratio: f64,
}

impl SwiptQuery {
    pub fn new(
        sinr_threshold: f64,
        energy_threshold: f64,
        split_ratio: f64,
    ) -> Result<Self, AnalysisError> {
        let q = SwiptQuery {
            sinr_threshold,
            energy_threshold,
            split_ratio,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.sinr_threshold > 0.0) || !self.sinr_threshold.is_finite() {
            return Err(domain(format!(
                "SINR threshold must be finite and > 0, got {}",
                self.sinr_threshold
            )));
        }
        if !(self.energy_threshold >= 0.0) || !self.energy_threshold.is_finite() {
            return Err(domain(format!(
                "energy threshold must be finite and >= 0, got {}",
                self.energy_threshold
            )));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(domain(format!(
                "split ratio must lie strictly inside (0, 1), got {}",
                self.split_ratio
            )));
        }
        Ok(())
    }

    /// Incident-power threshold `max(psi / xi, psi_min)`.
    pub fn effective_threshold(&self, params: &SystemParams) -> f64 {
        (self.energy_threshold / params.rectifier_eff).max(params.activation_threshold)
    }

    /// The interference level below/above which the success event is
    /// dominated by the SINR branch or the energy branch:
    /// `psi_hat / ((1-nu)(1+T)) - sigma^2 - sigma_c^2 / (nu (1 + 1/T))`.
    pub fn interference_split(&self, params: &SystemParams) -> f64 {
        let psi_hat = self.effective_threshold(params);
        let nu = self.split_ratio;
        let t = self.sinr_threshold;
        psi_hat / ((1.0 - nu) * (1.0 + t))
            - params.noise_power
            - params.conversion_noise / (nu * (1.0 + 1.0 / t))
    }

    /// Received-power threshold of the harvesting branch after the split:
    /// `psi_hat / (1 - nu)`.
    pub fn harvest_threshold(&self, params: &SystemParams) -> f64 {
        self.effective_threshold(params) / (1.0 - self.split_ratio)
    }
}

// ---------------------------------------------------------------------------
// Coverage model
// ---------------------------------------------------------------------------

/// Precomputed evaluation context: distance laws (association split,
/// serving-distance densities) plus quadrature profiles. Build once per
/// parameter set and reuse across thresholds; all methods are pure.
#[derive(Debug, Clone)]
pub struct CoverageModel {
    laws: DistanceLaws,
    gains: GainDistribution,
    /// Inner interference-exponent integrals.
    exponent_spec: QuadratureSpec,
    /// Outer serving-distance integrals.
    distance_spec: QuadratureSpec,
    /// Closed-form incomplete-gamma evaluations.
    gamma_spec: QuadratureSpec,
}

impl CoverageModel {
    pub fn new(params: &SystemParams, gains: &GainDistribution) -> Result<Self, AnalysisError> {
        validate_gains(gains)?;
        let laws = DistanceLaws::new(params)?;
        Ok(CoverageModel {
            laws,
            gains: gains.clone(),
            exponent_spec: QuadratureSpec::default().with_tolerance(1e-7, 1e-11),
            distance_spec: QuadratureSpec::default().with_tolerance(1e-6, 1e-10),
            gamma_spec: QuadratureSpec::default(),
        })
    }

    pub fn params(&self) -> &SystemParams {
        self.laws.params()
    }

    pub fn gains(&self) -> &GainDistribution {
        &self.gains
    }

    pub fn laws(&self) -> &DistanceLaws {
        &self.laws
    }

    // -- energy coverage ----------------------------------------------------

    /// Energy-coverage probability for the query's population: the CCDF
    /// of harvested power at the query threshold.
    pub fn energy_coverage(&self, q: &EnergyCoverageQuery) -> Result<f64, AnalysisError> {
        q.validate()?;
        let z = q.effective_threshold(self.params());
        match q.mode {
            CoverageMode::Connected => self.received_ccdf(
                z,
                q.approx_terms,
                true,
                &self.exponent_spec,
                &self.distance_spec,
            ),
            CoverageMode::Nonconnected => self.nonconnected_ccdf(z, q.approx_terms),
        }
    }

    /// LOS-ball approximation of the connected energy coverage: all LOS
    /// interferers inside the ball radius, integral over a finite
    /// interval. Connected mode only.
    pub fn energy_coverage_fast(&self, q: &EnergyCoverageQuery) -> Result<f64, AnalysisError> {
        q.validate()?;
        if q.mode != CoverageMode::Connected {
            return Err(domain(
                "the LOS-ball approximation applies to connected receivers only",
            ));
        }
        self.ball_ccdf(q.effective_threshold(self.params()), q.approx_terms)
    }

    /// Convex mixture of connected coverage at `psi_con` and nonconnected
    /// coverage at `psi_ncon` with connected fraction `eps`.
    pub fn overall_energy_coverage(
        &self,
        eps: f64,
        psi_con: f64,
        psi_ncon: f64,
        approx_terms: u32,
    ) -> Result<f64, AnalysisError> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(domain(format!(
                "connected fraction must lie in [0, 1], got {eps}"
            )));
        }
        let con = self.energy_coverage(&EnergyCoverageQuery::connected(psi_con).with_terms(approx_terms))?;
        let ncon = self
            .energy_coverage(&EnergyCoverageQuery::nonconnected(psi_ncon).with_terms(approx_terms))?;
        Ok(eps * con + (1.0 - eps) * ncon)
    }

    // -- average harvested power --------------------------------------------

    /// Mean harvested power of a connected receiver accounting for the
    /// activation threshold at `psi`: tail integral of the coverage CCDF
    /// plus the boundary term `psi * P(psi)`.
    pub fn avg_power_connected(&self, psi: f64, approx_terms: u32) -> Result<f64, AnalysisError> {
        self.check_avg_threshold(psi)?;
        // A full CCDF evaluation sits inside the tail quadrature, so both
        // nesting levels run with relaxed tolerances; the outer result is
        // still far tighter than the few-percent agreements asserted on it.
        let exo = QuadratureSpec::default().with_tolerance(1e-6, 1e-10);
        let dist = QuadratureSpec::default().with_tolerance(1e-5, 1e-9);
        let stash = ErrStash::new();
        let ccdf = |x: f64| {
            let z = self.transform_threshold(x);
            match self.received_ccdf(z, approx_terms, true, &exo, &dist) {
                Ok(v) => v,
                Err(e) => stash.put(e),
            }
        };
        let scale = self.avg_power_connected_limit()?.max(psi);
        let spec = QuadratureSpec::default()
            .with_tolerance(1e-4, scale * 1e-9)
            .with_tail_scale(scale);
        let tail = stash.resolve(integrate(&ccdf, psi, f64::INFINITY, &spec))?;
        let boundary = stash.resolve(Ok(ccdf(psi)))?;
        finish_power(tail + psi * boundary, "connected average power")
    }

    /// Interference-inclusive limit of the connected mean harvested power
    /// (vanishing activation threshold): serving link plus the Campbell
    /// averages of both interference fields, weighted over the serving
    /// distance law. Independent of the fading shapes.
    pub fn avg_power_connected_limit(&self) -> Result<f64, AnalysisError> {
        let p = self.params();
        let serving = self.gains.serving_gain();
        let mean_gain = self.gains.mean_gain();
        let stash = ErrStash::new();
        let integrand = |r: f64| {
            let mut total = 0.0;
            for state in [LinkState::Los, LinkState::Nlos] {
                let weight = geometry::serving_weight(state, r, p);
                if weight <= 0.0 {
                    continue;
                }
                let rho = geometry::equal_power_distance(state, r, p);
                let (los_from, nlos_from) = match state {
                    LinkState::Los => (r, rho),
                    LinkState::Nlos => (rho, r),
                };
                let direct =
                    p.tx_power * serving * p.intercept(state) * r.powf(-p.alpha(state));
                let fields = mean_power_los(los_from, mean_gain, p, &self.gamma_spec)
                    .and_then(|a| {
                        mean_power_nlos(nlos_from, mean_gain, p, &self.gamma_spec).map(|b| a + b)
                    });
                match fields {
                    Ok(f) => total += (direct + f) * weight,
                    Err(e) => return stash.put(e),
                }
            }
            total
        };
        let spec = self
            .distance_spec
            .with_tolerance(1e-7, 1e-12)
            .with_tail_scale(self.laws.serving_scale());
        let v = stash.resolve(integrate(integrand, p.min_distance, f64::INFINITY, &spec))?;
        finish_power(p.rectifier_eff * v, "connected average power limit")
    }

    /// Serving-LOS-link-only approximation of the connected mean: nearest
    /// LOS base station inside the LOS ball, closed form in a generalized
    /// incomplete gamma.
    pub fn avg_power_connected_approx(&self) -> Result<f64, AnalysisError> {
        let p = self.params();
        let r_b = geometry::los_ball_radius(self.laws.assoc_los, p.bs_density)?;
        let area = PI * p.bs_density;
        let kappa = 2.0 * PI * p.bs_density * p.tx_power;
        let g = gen_inc_gamma(
            1.0 - 0.5 * p.alpha_los,
            area * p.min_distance * p.min_distance,
            area * r_b * r_b,
            &self.gamma_spec,
        )?;
        let v = 0.5
            * kappa
            * self.gains.serving_gain()
            * p.intercept_los
            * area.powf(0.5 * p.alpha_los - 1.0)
            * g;
        finish_power(p.rectifier_eff * v, "serving-link average power")
    }

    /// Mean harvested power of a nonconnected receiver at activation
    /// threshold `psi`.
    pub fn avg_power_nonconnected(&self, psi: f64, approx_terms: u32) -> Result<f64, AnalysisError> {
        self.check_avg_threshold(psi)?;
        let stash = ErrStash::new();
        let ccdf = |x: f64| {
            let z = self.transform_threshold(x);
            match self.nonconnected_ccdf(z, approx_terms) {
                Ok(v) => v,
                Err(e) => stash.put(e),
            }
        };
        let scale = self.avg_power_nonconnected_limit()?.max(psi);
        let spec = QuadratureSpec::default()
            .with_tolerance(1e-6, scale * 1e-10)
            .with_tail_scale(scale);
        let tail = stash.resolve(integrate(&ccdf, psi, f64::INFINITY, &spec))?;
        let boundary = stash.resolve(Ok(ccdf(psi)))?;
        finish_power(tail + psi * boundary, "nonconnected average power")
    }

    /// Closed-form limit of the nonconnected mean harvested power: the
    /// Campbell average of both fields from the exclusion radius outward,
    /// exactly linear in density and transmit power.
    pub fn avg_power_nonconnected_limit(&self) -> Result<f64, AnalysisError> {
        let p = self.params();
        let g = self.gains.mean_gain();
        let v = mean_power_los(p.min_distance, g, p, &self.gamma_spec)?
            + mean_power_nlos(p.min_distance, g, p, &self.gamma_spec)?;
        finish_power(p.rectifier_eff * v, "nonconnected average power limit")
    }

    // -- SWIPT --------------------------------------------------------------

    /// SINR coverage of a power-splitting receiver: probability the
    /// post-split SINR exceeds the query threshold. Conversion noise is
    /// amplified by the split, entering as `sigma^2 + sigma_c^2 / nu`.
    pub fn sinr_coverage(&self, q: &SwiptQuery) -> Result<f64, AnalysisError> {
        q.validate()?;
        let p = self.params().clone();
        let t = q.sinr_threshold;
        let noise = p.noise_power + p.conversion_noise / q.split_ratio;
        let serving = self.gains.serving_gain();
        let c = [
            alzer_constant(p.nakagami_los)?,
            alzer_constant(p.nakagami_nlos)?,
        ];
        let stash = ErrStash::new();
        let integrand = |r: f64| {
            let mut total = 0.0;
            for (si, state) in [LinkState::Los, LinkState::Nlos].into_iter().enumerate() {
                let weight = geometry::serving_weight(state, r, &p);
                if weight <= 0.0 {
                    continue;
                }
                let shape = p.nakagami(state);
                let r_alpha = r.powf(p.alpha(state));
                let mut sum = CompensatedSum::new();
                for k in 1..=shape {
                    let srv = (-(k as f64) * c[si] * r_alpha * t * noise
                        / (p.tx_power * p.intercept(state) * serving))
                        .exp();
                    let expo = match self.sinr_exponents(state, k, c[si], t, r, &p) {
                        Ok(e) => e,
                        Err(e) => return stash.put(e),
                    };
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    sum.add(sign * binomial(shape, k) * srv * (-expo).exp());
                }
                total += weight * sum.value();
            }
            total
        };
        let spec = self.distance_spec.with_tail_scale(self.laws.serving_scale());
        let v = stash.resolve(integrate(
            integrand,
            self.params().min_distance,
            f64::INFINITY,
            &spec,
        ))?;
        finish_probability(v, "SINR coverage")
    }

    /// CCDF of the aggregate interference power alone: the connected
    /// energy CCDF with every serving-link factor replaced by one.
    /// Returns 1 for nonpositive levels.
    pub fn interference_ccdf(&self, mu: f64, approx_terms: u32) -> Result<f64, AnalysisError> {
        if approx_terms == 0 {
            return Err(domain("approximation needs at least one term"));
        }
        if mu.is_nan() {
            return Err(domain("interference level must not be NaN"));
        }
        self.received_ccdf(
            mu,
            approx_terms,
            false,
            &self.exponent_spec,
            &self.distance_spec,
        )
    }

    /// Joint SWIPT success probability: SINR above threshold and
    /// harvested power above threshold, approximated by conditioning on
    /// the interference exceeding the query's split level. The harvesting
    /// branch sees `(1 - nu)` of the received power plus thermal noise,
    /// so its received-power event is evaluated at `phi - sigma^2`.
    pub fn swipt_success(&self, q: &SwiptQuery) -> Result<f64, AnalysisError> {
        q.validate()?;
        let p = self.params();
        let mu = q.interference_split(p);
        let p_split = if mu <= 0.0 {
            1.0
        } else {
            self.interference_ccdf(mu, DEFAULT_APPROX_TERMS)?
        };
        let p_cov = self.sinr_coverage(q)?;
        let z = q.harvest_threshold(p) - p.noise_power;
        let p_energy = if z <= 0.0 {
            1.0
        } else {
            self.received_ccdf(
                z,
                DEFAULT_APPROX_TERMS,
                true,
                &self.exponent_spec,
                &self.distance_spec,
            )?
        };
        finish_probability(
            p_cov * p_split + p_energy * (1.0 - p_split),
            "SWIPT success",
        )
    }

    // -- internals ----------------------------------------------------------

    /// Incident-power threshold for a harvested-power level `x`.
    fn transform_threshold(&self, x: f64) -> f64 {
        let p = self.params();
        (x / p.rectifier_eff).max(p.activation_threshold)
    }

    fn check_avg_threshold(&self, psi: f64) -> Result<(), AnalysisError> {
        if !(psi >= 0.0) || !psi.is_finite() {
            return Err(domain(format!(
                "average-power threshold must be finite and >= 0, got {psi}"
            )));
        }
        if psi < self.params().activation_threshold {
            return Err(domain(format!(
                "average-power threshold {psi} lies below the harvester activation floor {}",
                self.params().activation_threshold
            )));
        }
        Ok(())
    }

    /// CCDF of the received power of a connected receiver at the absolute
    /// (incident) threshold `z`; `with_serving = false` drops the
    /// serving-link factors, yielding the interference-only CCDF.
    fn received_ccdf(
        &self,
        z: f64,
        terms: u32,
        with_serving: bool,
        exponent_spec: &QuadratureSpec,
        distance_spec: &QuadratureSpec,
    ) -> Result<f64, AnalysisError> {
        if z <= 0.0 {
            return Ok(1.0);
        }
        let p = self.params().clone();
        let a = alzer_constant(terms)?;
        let stash = ErrStash::new();
        let integrand = |r: f64| {
            let mut total = 0.0;
            for state in [LinkState::Los, LinkState::Nlos] {
                let weight = geometry::serving_weight(state, r, &p);
                if weight <= 0.0 {
                    continue;
                }
                match self.energy_ksum(state, z, terms, a, with_serving, r, exponent_spec) {
                    Ok(s) => total += weight * s,
                    Err(e) => return stash.put(e),
                }
            }
            total
        };
        let spec = distance_spec.with_tail_scale(self.laws.serving_scale());
        let v = stash.resolve(integrate(integrand, p.min_distance, f64::INFINITY, &spec))?;
        finish_probability(v, "energy coverage")
    }

    /// Alternating binomial sum of the conditional CCDF given serving
    /// state and distance.
    #[allow(clippy::too_many_arguments)]
    fn energy_ksum(
        &self,
        state: LinkState,
        z: f64,
        terms: u32,
        a: f64,
        with_serving: bool,
        r: f64,
        spec: &QuadratureSpec,
    ) -> Result<f64, QuadError> {
        let p = self.params();
        let rho = geometry::equal_power_distance(state, r, p);
        let (los_from, nlos_from) = match state {
            LinkState::Los => (r, rho),
            LinkState::Nlos => (rho, r),
        };
        let mut sum = CompensatedSum::new();
        for k in 0..=terms {
            let mut term = signed_binomial(terms, k);
            if k > 0 {
                let e_los = self.field_exponent(LinkState::Los, k, a, z, los_from, spec)?;
                let e_nlos = self.field_exponent(LinkState::Nlos, k, a, z, nlos_from, spec)?;
                let zeta = if with_serving {
                    self.serving_factor(state, k, a, z, r)
                } else {
                    1.0
                };
                term *= zeta * (-(e_los + e_nlos)).exp();
            }
            sum.add(term);
        }
        Ok(sum.value())
    }

    /// Interference exponent of one blockage field for the energy CCDF.
    fn field_exponent(
        &self,
        field: LinkState,
        k: u32,
        a: f64,
        z: f64,
        lower: f64,
        spec: &QuadratureSpec,
    ) -> Result<f64, QuadError> {
        let p = self.params();
        let shape = p.nakagami(field);
        let common = a * k as f64 * p.tx_power * p.intercept(field) / (z * shape as f64);
        let mut atoms = [(0.0, 0.0); 4];
        let n = self.fill_atoms(common, &mut atoms);
        aggregate_exponent(field, lower, &atoms[..n], shape, p, spec)
    }

    /// Interference exponents (both fields) of the SINR CCDF given the
    /// serving state, at summation index `k` and serving distance `r`.
    fn sinr_exponents(
        &self,
        state: LinkState,
        k: u32,
        c: f64,
        t: f64,
        r: f64,
        p: &SystemParams,
    ) -> Result<f64, QuadError> {
        let serving = self.gains.serving_gain();
        let rho = geometry::equal_power_distance(state, r, p);
        let (los_from, nlos_from) = match state {
            LinkState::Los => (r, rho),
            LinkState::Nlos => (rho, r),
        };
        let r_alpha = r.powf(p.alpha(state));
        // Relative strength of an interferer against the serving link:
        // threshold times normalized gain, rescaled across states by the
        // intercept ratio.
        let cross = p.intercept(LinkState::Los) / p.intercept(LinkState::Nlos);
        let base = c * k as f64 * t * r_alpha / serving;
        let (los_scale, nlos_scale) = match state {
            LinkState::Los => (
                base / p.nakagami_los as f64,
                base / (p.nakagami_nlos as f64 * cross),
            ),
            LinkState::Nlos => (
                base * cross / p.nakagami_los as f64,
                base / p.nakagami_nlos as f64,
            ),
        };
        let mut atoms = [(0.0, 0.0); 4];
        let n = self.fill_atoms(los_scale, &mut atoms);
        let e_los = aggregate_exponent(
            LinkState::Los,
            los_from,
            &atoms[..n],
            p.nakagami_los,
            p,
            &self.exponent_spec,
        )?;
        let n = self.fill_atoms(nlos_scale, &mut atoms);
        let e_nlos = aggregate_exponent(
            LinkState::Nlos,
            nlos_from,
            &atoms[..n],
            p.nakagami_nlos,
            p,
            &self.exponent_spec,
        )?;
        Ok(e_los + e_nlos)
    }

    fn fill_atoms(&self, scale: f64, out: &mut [(f64, f64); 4]) -> usize {
        let mut n = 0;
        for (g, q) in self.gains.active_pairs() {
            out[n] = (scale * g, q);
            n += 1;
        }
        n
    }

    /// Serving-link factor of the conditional energy CCDF.
    fn serving_factor(&self, state: LinkState, k: u32, a: f64, z: f64, r: f64) -> f64 {
        let p = self.params();
        let shape = p.nakagami(state) as f64;
        let w = a * k as f64 * p.tx_power * self.gains.serving_gain() * p.intercept(state)
            / (z * shape);
        bracket_power(w / r.powf(p.alpha(state)), shape)
    }

    /// Nonconnected energy CCDF: no serving link, both field exponents
    /// anchored at the exclusion radius; no outer distance integral.
    fn nonconnected_ccdf(&self, z: f64, terms: u32) -> Result<f64, AnalysisError> {
        if z <= 0.0 {
            return Ok(1.0);
        }
        let p = self.params();
        let a = alzer_constant(terms)?;
        let mut sum = CompensatedSum::new();
        for k in 0..=terms {
            let mut term = signed_binomial(terms, k);
            if k > 0 {
                let e_los =
                    self.field_exponent(LinkState::Los, k, a, z, p.min_distance, &self.exponent_spec)?;
                let e_nlos = self.field_exponent(
                    LinkState::Nlos,
                    k,
                    a,
                    z,
                    p.min_distance,
                    &self.exponent_spec,
                )?;
                term *= (-(e_los + e_nlos)).exp();
            }
            sum.add(term);
        }
        finish_probability(sum.value(), "nonconnected energy coverage")
    }

    /// LOS-ball CCDF: LOS interferers confined to the ball, NLOS field
    /// dropped, interference fading at its mean. Integrates over the
    /// squared normalized serving distance on ((r_g/R_B)^2, 1).
    fn ball_ccdf(&self, z: f64, terms: u32) -> Result<f64, AnalysisError> {
        if z <= 0.0 {
            return Ok(1.0);
        }
        let p = self.params().clone();
        let r_b = geometry::los_ball_radius(self.laws.assoc_los, p.bs_density)?;
        let lo = (p.min_distance / r_b).powi(2);
        if lo >= 1.0 {
            return Ok(0.0);
        }
        let ball_mass = PI * p.bs_density * r_b * r_b;
        let a_tilde = ball_mass * (-ball_mass).exp();
        let a = alzer_constant(terms)?;
        let alpha = p.alpha_los;
        let spec = QuadratureSpec::default().with_tolerance(1e-7, 1e-11);
        let stash = ErrStash::new();
        let mut sum = CompensatedSum::new();
        for k in 0..=terms {
            let integrand = |t: f64| {
                let x = t.sqrt() * r_b;
                let zeta = if k > 0 {
                    self.serving_factor(LinkState::Los, k, a, z, x)
                } else {
                    1.0
                };
                let mut expo = 0.0;
                for (g, q) in self.gains.active_pairs() {
                    let w = a * k as f64 * g * p.tx_power * p.intercept_los / z;
                    if w == 0.0 {
                        expo += PI * p.bs_density * q * (r_b * r_b - x * x);
                    } else {
                        let tail = gen_inc_gamma(
                            -2.0 / alpha,
                            w * r_b.powf(-alpha),
                            w * x.powf(-alpha),
                            &self.gamma_spec,
                        );
                        match tail {
                            Ok(v) => {
                                expo += (2.0 * PI * p.bs_density / alpha)
                                    * q
                                    * w.powf(2.0 / alpha)
                                    * v
                            }
                            Err(e) => return stash.put(e),
                        }
                    }
                }
                zeta * expo.exp()
            };
            let v = stash.resolve(integrate(integrand, lo, 1.0, &spec))?;
            sum.add(signed_binomial(terms, k) * v);
        }
        finish_probability(a_tilde * sum.value(), "LOS-ball energy coverage")
    }
}

// ---------------------------------------------------------------------------
// Free-function interface
// ---------------------------------------------------------------------------

/// Interference exponent of the LOS field anchored at distance `x`, for
/// summation index `k` at incident threshold `psi_hat`, under an
/// `approx_terms`-term fading approximation. `k = 0` is identically zero.
pub fn interference_exponent_los(
    k: u32,
    psi_hat: f64,
    x: f64,
    approx_terms: u32,
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<f64, AnalysisError> {
    interference_exponent(LinkState::Los, k, psi_hat, x, approx_terms, params, gains)
}

/// Interference exponent of the NLOS field; see
/// [`interference_exponent_los`].
pub fn interference_exponent_nlos(
    k: u32,
    psi_hat: f64,
    x: f64,
    approx_terms: u32,
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<f64, AnalysisError> {
    interference_exponent(LinkState::Nlos, k, psi_hat, x, approx_terms, params, gains)
}

fn interference_exponent(
    field: LinkState,
    k: u32,
    psi_hat: f64,
    x: f64,
    approx_terms: u32,
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<f64, AnalysisError> {
    params.validate()?;
    validate_gains(gains)?;
    if !(psi_hat > 0.0) || !psi_hat.is_finite() {
        return Err(domain(format!(
            "incident threshold must be finite and > 0, got {psi_hat}"
        )));
    }
    if !(x >= params.min_distance) {
        return Err(domain(format!(
            "field anchor {x} lies inside the exclusion radius {}",
            params.min_distance
        )));
    }
    if k == 0 {
        return Ok(0.0);
    }
    let a = alzer_constant(approx_terms)?;
    let shape = params.nakagami(field);
    let common = a * k as f64 * params.tx_power * params.intercept(field)
        / (psi_hat * shape as f64);
    let mut atoms = [(0.0, 0.0); 4];
    let mut n = 0;
    for (g, q) in gains.active_pairs() {
        atoms[n] = (common * g, q);
        n += 1;
    }
    let spec = QuadratureSpec::default().with_tolerance(1e-7, 1e-11);
    Ok(aggregate_exponent(field, x, &atoms[..n], shape, params, &spec)?)
}

/// Connected energy-coverage probability.
pub fn energy_coverage_connected(
    q: &EnergyCoverageQuery,
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<f64, AnalysisError> {
    require_mode(q, CoverageMode::Connected)?;
    CoverageModel::new(params, gains)?.energy_coverage(q)
}

/// Connected energy coverage under the LOS-ball approximation.
pub fn energy_coverage_connected_fast(
    q: &EnergyCoverageQuery,
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<f64, AnalysisError> {
    require_mode(q, CoverageMode::Connected)?;
    CoverageModel::new(params, gains)?.energy_coverage_fast(q)
}

/// Nonconnected energy-coverage probability.
pub fn energy_coverage_nonconnected(
    q: &EnergyCoverageQuery,
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<f64, AnalysisError> {
    require_mode(q, CoverageMode::Nonconnected)?;
    CoverageModel::new(params, gains)?.energy_coverage(q)
}

/// Population-level energy coverage: fraction `eps` of receivers
/// connected at threshold `psi_con`, the rest nonconnected at
/// `psi_ncon`.
pub fn overall_energy_coverage(
    eps: f64,
    psi_con: f64,
    psi_ncon: f64,
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<f64, AnalysisError> {
    CoverageModel::new(params, gains)?.overall_energy_coverage(
        eps,
        psi_con,
        psi_ncon,
        DEFAULT_APPROX_TERMS,
    )
}

/// Mean harvested power of a connected receiver at activation level
/// `psi`.
pub fn avg_power_connected(
    psi: f64,
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<f64, AnalysisError> {
    CoverageModel::new(params, gains)?.avg_power_connected(psi, DEFAULT_APPROX_TERMS)
}

/// Closed-form limit of the connected mean harvested power.
pub fn avg_power_connected_limit(
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<f64, AnalysisError> {
    CoverageModel::new(params, gains)?.avg_power_connected_limit()
}

/// Serving-LOS-link closed-form approximation of the connected mean.
pub fn avg_power_connected_approx(
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<f64, AnalysisError> {
    CoverageModel::new(params, gains)?.avg_power_connected_approx()
}

/// Mean harvested power of a nonconnected receiver at activation level
/// `psi`.
pub fn avg_power_nonconnected(
    psi: f64,
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<f64, AnalysisError> {
    CoverageModel::new(params, gains)?.avg_power_nonconnected(psi, DEFAULT_APPROX_TERMS)
}

/// Closed-form limit of the nonconnected mean harvested power.
pub fn avg_power_nonconnected_limit(
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<f64, AnalysisError> {
    CoverageModel::new(params, gains)?.avg_power_nonconnected_limit()
}

/// SINR coverage of a power-splitting receiver.
pub fn sinr_coverage(
    q: &SwiptQuery,
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<f64, AnalysisError> {
    CoverageModel::new(params, gains)?.sinr_coverage(q)
}

/// CCDF of the aggregate interference power.
pub fn interference_ccdf(
    mu: f64,
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<f64, AnalysisError> {
    CoverageModel::new(params, gains)?.interference_ccdf(mu, DEFAULT_APPROX_TERMS)
}

/// Joint SWIPT success probability.
pub fn swipt_success(
    q: &SwiptQuery,
    params: &SystemParams,
    gains: &GainDistribution,
) -> Result<f64, AnalysisError> {
    CoverageModel::new(params, gains)?.swipt_success(q)
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn require_mode(q: &EnergyCoverageQuery, mode: CoverageMode) -> Result<(), AnalysisError> {
    if q.mode != mode {
        return Err(domain(format!(
            "query mode {:?} does not match the requested operation",
            q.mode
        )));
    }
    Ok(())
}

pub(crate) fn validate_gains(gains: &GainDistribution) -> Result<(), AnalysisError> {
    let mut mass = 0.0;
    for (g, p) in gains.gains.iter().zip(gains.probs.iter()) {
        if !g.is_finite() || *g < 0.0 {
            return Err(domain(format!("gain atoms must be finite and >= 0, got {g}")));
        }
        if !p.is_finite() || *p < 0.0 {
            return Err(domain(format!(
                "atom probabilities must be finite and >= 0, got {p}"
            )));
        }
        mass += p;
    }
    if (mass - 1.0).abs() > 1e-6 {
        return Err(domain(format!(
            "atom probabilities must sum to 1, got {mass}"
        )));
    }
    if !(gains.serving_gain() > 0.0) {
        return Err(domain("aligned-link gain must be > 0"));
    }
    Ok(())
}

/// Binomial coefficient as a float (exact for the small shapes used
/// here).
fn binomial(n: u32, k: u32) -> f64 {
    let mut v = 1.0;
    for i in 0..k.min(n - k) {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

fn signed_binomial(n: u32, k: u32) -> f64 {
    if k % 2 == 0 {
        binomial(n, k)
    } else {
        -binomial(n, k)
    }
}

fn finish_probability(value: f64, what: &str) -> Result<f64, AnalysisError> {
    if !value.is_finite() {
        return Err(domain(format!("{what} evaluated to {value}")));
    }
    if !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&value) {
        return Err(domain(format!(
            "{what} = {value:.9e} escapes [0, 1] beyond quadrature noise"
        )));
    }
    Ok(value.clamp(0.0, 1.0))
}

fn finish_power(value: f64, what: &str) -> Result<f64, AnalysisError> {
    if !value.is_finite() || value < -1e-15 {
        return Err(domain(format!("{what} evaluated to {value:.9e}")));
    }
    Ok(value.max(0.0))
}

/// First-error carrier for quadrature integrands, which must return
/// plain floats: the closure records the error, poisons the integrand
/// with NaN, and the stashed error wins over the resulting quadrature
/// failure.
struct ErrStash(RefCell<Option<AnalysisError>>);

impl ErrStash {
    fn new() -> Self {
        ErrStash(RefCell::new(None))
    }

    fn put(&self, e: impl Into<AnalysisError>) -> f64 {
        self.0.borrow_mut().get_or_insert(e.into());
        f64::NAN
    }

    fn resolve(&self, outcome: Result<f64, QuadError>) -> Result<f64, AnalysisError> {
        if let Some(e) = self.0.borrow_mut().take() {
            return Err(e);
        }
        outcome.map_err(AnalysisError::from)
    }
}

#[cfg(test)]
mod tests;
