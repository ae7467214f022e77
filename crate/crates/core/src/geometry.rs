//! Stochastic-geometry distance laws for a Poisson deployment seen from a
//! typical user under exponential blockage.
//!
//! Blockage splits the network into an LOS and an NLOS point process. The
//! quantities here are the nearest-point distance densities of each
//! process, the probability that the strongest (smallest-average-path-loss)
//! candidate is LOS vs NLOS, the distance density of that serving link,
//! and the equivalent LOS-ball radius used by the fast approximations.

use crate::model::{LinkState, ModelError, SystemParams};
use crate::numerics::{integrate, QuadError, QuadratureSpec};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("geometry domain error: {0}")]
    Domain(String),
}

/// Probability that a link of length `r` is line-of-sight: `exp(-beta r)`.
pub fn los_probability(r: f64, beta: f64) -> f64 {
    (-beta * r).exp()
}

/// `int_0^x v e^(-beta v) dv`, the LOS-weighted area moment; pass
/// `f64::INFINITY` for the saturated value `1 / beta^2`.
pub fn los_moment(x: f64, beta: f64) -> f64 {
    if x.is_infinite() {
        return 1.0 / (beta * beta);
    }
    let bx = beta * x;
    // 1 - e^(-bx)(1 + bx) loses precision for small bx; switch to the
    // series x^2/2 (1 - 2bx/3 + ...) there.
    if bx < 1e-4 {
        0.5 * x * x * (1.0 - 2.0 * bx / 3.0 + 0.25 * bx * bx)
    } else {
        (1.0 - (-bx).exp() * (1.0 + bx)) / (beta * beta)
    }
}

/// `int_0^x v (1 - e^(-beta v)) dv`, the blocked-weighted area moment.
pub fn nlos_moment(x: f64, beta: f64) -> f64 {
    0.5 * x * x - los_moment(x, beta)
}

/// Probability that the process contains at least one point of the given
/// state: `1 - exp(-2 pi lambda / beta^2)` for LOS; 1 for NLOS (the
/// blocked process always has infinite mean count).
pub fn state_occupancy(state: LinkState, params: &SystemParams) -> f64 {
    match state {
        LinkState::Los => {
            -f64::exp_m1(-2.0 * PI * params.bs_density / params.blockage_beta.powi(2))
        }
        LinkState::Nlos => 1.0,
    }
}

/// Density of the nearest point of the given state at distance `x`,
/// conditioned on that state being occupied. Returns the density together
/// with the occupancy probability it is conditioned on.
pub fn nearest_pdf(
    state: LinkState,
    x: f64,
    params: &SystemParams,
) -> Result<(f64, f64), GeometryError> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(GeometryError::Domain(format!(
            "distance must be finite and >= 0, got {x}"
        )));
    }
    let lambda = params.bs_density;
    let beta = params.blockage_beta;
    let b = state_occupancy(state, params);
    let two_pi_lambda = 2.0 * PI * lambda;
    let density = match state {
        LinkState::Los => {
            two_pi_lambda / b
                * x
                * los_probability(x, beta)
                * (-two_pi_lambda * los_moment(x, beta)).exp()
        }
        LinkState::Nlos => {
            two_pi_lambda / b
                * x
                * (-f64::exp_m1(-beta * x))
                * (-two_pi_lambda * nlos_moment(x, beta)).exp()
        }
    };
    Ok((density, b))
}

/// Distance at which a link of the opposite state has the same average
/// path gain as a link of state `state` at distance `x`.
///
/// From an LOS link at `x` this is `(C_N / C_L)^(1/a_N) x^(a_L/a_N)`; from
/// an NLOS link the mirrored expression.
pub fn equal_power_distance(state: LinkState, x: f64, params: &SystemParams) -> f64 {
    match state {
        LinkState::Los => {
            (params.intercept_nlos / params.intercept_los).powf(1.0 / params.alpha_nlos)
                * x.powf(params.alpha_los / params.alpha_nlos)
        }
        LinkState::Nlos => {
            (params.intercept_los / params.intercept_nlos).powf(1.0 / params.alpha_los)
                * x.powf(params.alpha_nlos / params.alpha_los)
        }
    }
}

/// Equivalent step-blockage ball radius: the radius at which a disc of
/// unshadowed density `lambda` holds a point with the same probability as
/// the LOS association probability, `sqrt(-ln(1 - p_los) / (lambda pi))`.
pub fn los_ball_radius(assoc_los: f64, bs_density: f64) -> Result<f64, GeometryError> {
    if !(assoc_los > 0.0 && assoc_los < 1.0) {
        return Err(GeometryError::Domain(format!(
            "LOS association probability must lie strictly in (0, 1), got {assoc_los}"
        )));
    }
    if !(bs_density > 0.0) {
        return Err(GeometryError::Domain(format!(
            "density must be > 0, got {bs_density}"
        )));
    }
    Ok((-(1.0 - assoc_los).ln() / (bs_density * PI)).sqrt())
}

/// Cached distance laws for one parameter set: occupancy factors,
/// association split and serving-distance density normalizers.
#[derive(Debug, Clone)]
pub struct DistanceLaws {
    params: SystemParams,
    quad: QuadratureSpec,
    /// Probability the LOS process is nonempty.
    pub b_los: f64,
    /// Probability the NLOS process is nonempty (always 1).
    pub b_nlos: f64,
    /// Probability the serving link is LOS.
    pub assoc_los: f64,
    /// Exact complement of `assoc_los`.
    pub assoc_nlos: f64,
    /// Directly integrated normalizers of the two serving-distance
    /// densities (agree with the association split to quadrature accuracy;
    /// using them keeps each density integrating to exactly one).
    norm_los: f64,
    norm_nlos: f64,
}

impl DistanceLaws {
    pub fn new(params: &SystemParams) -> Result<Self, GeometryError> {
        Self::with_spec(params, &QuadratureSpec::default())
    }

    pub fn with_spec(params: &SystemParams, quad: &QuadratureSpec) -> Result<Self, GeometryError> {
        params.validate()?;
        let scale = serving_tail_scale(params);
        let spec = quad.with_tail_scale(scale);
        let b_los = state_occupancy(LinkState::Los, params);
        let b_nlos = state_occupancy(LinkState::Nlos, params);

        let norm_los = integrate(
            |x| serving_weight(LinkState::Los, x, params),
            0.0,
            f64::INFINITY,
            &spec,
        )?;
        let norm_nlos = integrate(
            |x| serving_weight(LinkState::Nlos, x, params),
            0.0,
            f64::INFINITY,
            &spec,
        )?;
        let total = norm_los + norm_nlos;
        if (total - 1.0).abs() > 1e-6 {
            return Err(GeometryError::Domain(format!(
                "association probabilities integrate to {total}, expected 1"
            )));
        }
        let assoc_los = norm_los.clamp(f64::MIN_POSITIVE, 1.0);
        Ok(DistanceLaws {
            params: params.clone(),
            quad: *quad,
            b_los,
            b_nlos,
            assoc_los,
            assoc_nlos: 1.0 - assoc_los,
            norm_los,
            norm_nlos,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn quad(&self) -> &QuadratureSpec {
        &self.quad
    }

    /// Association probability for the given state.
    pub fn assoc(&self, state: LinkState) -> f64 {
        match state {
            LinkState::Los => self.assoc_los,
            LinkState::Nlos => self.assoc_nlos,
        }
    }

    /// Density of the serving-link distance conditioned on the serving
    /// link having the given state.
    pub fn serving_pdf(&self, state: LinkState, x: f64) -> f64 {
        let norm = match state {
            LinkState::Los => self.norm_los,
            LinkState::Nlos => self.norm_nlos,
        };
        if norm <= 0.0 {
            return 0.0;
        }
        serving_weight(state, x, &self.params) / norm
    }

    /// Decay length of the serving-distance densities, used as the tail
    /// transform scale of outer quadratures weighted by them.
    pub fn serving_scale(&self) -> f64 {
        serving_tail_scale(&self.params)
    }
}

/// Unnormalized serving-distance density: the probability density that the
/// nearest point of `state` sits at `x` *and* beats the best point of the
/// opposite state. Integrates to the association probability of `state`.
pub(crate) fn serving_weight(state: LinkState, x: f64, params: &SystemParams) -> f64 {
    let lambda = params.bs_density;
    let beta = params.blockage_beta;
    let two_pi_lambda = 2.0 * PI * lambda;
    let rho = equal_power_distance(state, x, params);
    match state {
        LinkState::Los => {
            two_pi_lambda
                * x
                * los_probability(x, beta)
                * (-two_pi_lambda * (los_moment(x, beta) + nlos_moment(rho, beta))).exp()
        }
        LinkState::Nlos => {
            two_pi_lambda
                * x
                * (-f64::exp_m1(-beta * x))
                * (-two_pi_lambda * (nlos_moment(x, beta) + los_moment(rho, beta))).exp()
        }
    }
}

fn serving_tail_scale(params: &SystemParams) -> f64 {
    (1.0 / params.blockage_beta).max(1.0 / (PI * params.bs_density).sqrt())
}

/// Association split `(p_los, p_nlos)` for a parameter set; convenience
/// wrapper over [`DistanceLaws`].
pub fn association_probability(params: &SystemParams) -> Result<(f64, f64), GeometryError> {
    let laws = DistanceLaws::new(params)?;
    Ok((laws.assoc_los, laws.assoc_nlos))
}

/// Serving-distance density value at `x` for the given serving state;
/// convenience wrapper that rebuilds the cached laws (use [`DistanceLaws`]
/// directly when evaluating many points).
pub fn serving_distance_pdf(
    state: LinkState,
    x: f64,
    params: &SystemParams,
) -> Result<f64, GeometryError> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(GeometryError::Domain(format!(
            "distance must be finite and >= 0, got {x}"
        )));
    }
    Ok(DistanceLaws::new(params)?.serving_pdf(state, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> SystemParams {
        SystemParams::default_28ghz()
    }

    #[test]
    fn los_probability_decays() {
        assert_eq!(los_probability(0.0, 0.0071), 1.0);
        assert_relative_eq!(
            los_probability(100.0, 0.0071),
            (-0.71f64).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn moments_match_closed_forms() {
        let beta = 0.0071;
        assert_relative_eq!(
            los_moment(f64::INFINITY, beta),
            19837.33,
            max_relative = 1e-6
        );
        assert_relative_eq!(los_moment(100.0, beta), 3159.8576143969, max_relative = 1e-10);
        // Small-argument branch against the exact form at moderate bx.
        let x = 0.013
            / beta;
        let exact = (1.0 - (-beta * x).exp() * (1.0 + beta * x)) / (beta * beta);
        assert_relative_eq!(los_moment(x, beta), exact, max_relative = 1e-9);
        // Complementary moment.
        assert_relative_eq!(
            nlos_moment(100.0, beta),
            100.0 * 100.0 / 2.0 - 3159.8576143969,
            max_relative = 1e-10
        );
    }

    #[test]
    fn occupancy_factor_values() {
        // 1 - exp(-2 pi 1e-4 / 0.0071^2) ~ 0.999996.
        let b = state_occupancy(LinkState::Los, &params());
        assert_relative_eq!(b, 0.9999961, max_relative = 1e-6);
        assert_eq!(state_occupancy(LinkState::Nlos, &params()), 1.0);
        // Occupancy vanishes with density.
        let mut sparse = params();
        sparse.bs_density = 1e-12;
        assert!(state_occupancy(LinkState::Los, &sparse) < 1e-6);
    }

    #[test]
    fn nearest_pdf_normalizes() {
        let p = params();
        let spec = QuadratureSpec::default().with_tail_scale(1.0 / p.blockage_beta);
        for state in [LinkState::Los, LinkState::Nlos] {
            let mass = integrate(
                |x| nearest_pdf(state, x, &p).unwrap().0,
                0.0,
                f64::INFINITY,
                &spec,
            )
            .unwrap();
            assert_relative_eq!(mass, 1.0, max_relative = 1e-6);
        }
        assert!(nearest_pdf(LinkState::Los, -1.0, &p).is_err());
    }

    #[test]
    fn equal_power_distance_spot_value() {
        // Equal intercepts, exponents 2 and 4: the NLOS twin of an LOS
        // link at 100 m sits at sqrt(100) = 10 m.
        let p = params();
        assert_relative_eq!(
            equal_power_distance(LinkState::Los, 100.0, &p),
            10.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            equal_power_distance(LinkState::Nlos, 10.0, &p),
            100.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn los_ball_radius_spot_value() {
        // sqrt(ln 2 / (pi 1e-4)) ~ 46.97 m.
        let r = los_ball_radius(0.5, 1e-4).unwrap();
        assert_relative_eq!(r, 46.97, max_relative = 1e-3);
        assert!(los_ball_radius(0.0, 1e-4).is_err());
        assert!(los_ball_radius(1.0, 1e-4).is_err());
    }

    #[test]
    fn association_matches_reference_quadrature() {
        // Frozen oracle: the association integral evaluated with an
        // independent adaptive quadrature (scipy.integrate.quad) at the
        // default parameters and at five-fold density.
        let laws = DistanceLaws::new(&params()).unwrap();
        assert!(laws.assoc_los > 0.0 && laws.assoc_los < 1.0);
        assert_eq!(laws.assoc_los + laws.assoc_nlos, 1.0);
        assert_relative_eq!(laws.assoc_los, 0.9992208749, max_relative = 1e-7);

        // With equal intercepts and a much steeper NLOS exponent, close-in
        // blocked stations become slightly more competitive as the network
        // densifies, so the LOS share dips rather than grows.
        let mut dense = params();
        dense.bs_density *= 5.0;
        let dense_laws = DistanceLaws::new(&dense).unwrap();
        assert_relative_eq!(dense_laws.assoc_los, 0.9990381208, max_relative = 1e-7);
    }

    #[test]
    fn serving_pdfs_normalize() {
        let laws = DistanceLaws::new(&params()).unwrap();
        let spec = QuadratureSpec::default().with_tail_scale(laws.serving_scale());
        for state in [LinkState::Los, LinkState::Nlos] {
            let mass = integrate(
                |x| laws.serving_pdf(state, x),
                0.0,
                f64::INFINITY,
                &spec,
            )
            .unwrap();
            assert_relative_eq!(mass, 1.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn serving_pdf_wrapper_matches_struct() {
        let p = params();
        let laws = DistanceLaws::new(&p).unwrap();
        let direct = serving_distance_pdf(LinkState::Los, 50.0, &p).unwrap();
        assert_eq!(direct, laws.serving_pdf(LinkState::Los, 50.0));
        assert!(serving_distance_pdf(LinkState::Los, -2.0, &p).is_err());
    }
}
