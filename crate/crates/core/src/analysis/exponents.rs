//! Aggregate-field integrals shared by the coverage and mean-power
//! expressions.
//!
//! Every interference exponent here has the common shape
//!
//! ```text
//! 2 pi lambda  sum_i p_i  int_x^inf (1 - [1 + w_i / t^alpha]^(-N)) weight(t) t dt
//! ```
//!
//! where `weight(t)` is the blockage probability (or its complement) of the
//! field being integrated and the per-atom constants `w_i` fold together
//! threshold, transmit power, directivity gain and any serving-distance
//! factors. The mean-power terms are the Campbell averages of the same
//! fields and reduce to incomplete gamma functions.

use crate::model::{LinkState, SystemParams};
use crate::numerics::{gen_inc_gamma, integrate, QuadError, QuadratureSpec};
use std::f64::consts::PI;

/// `1 - (1 + z)^(-n)`, stable as `z -> 0` where the direct form cancels.
#[inline]
pub(crate) fn bracket_complement(z: f64, n: f64) -> f64 {
    -f64::exp_m1(-n * f64::ln_1p(z))
}

/// `(1 + z)^(-n)` through the log, safe for very large `z`.
#[inline]
pub(crate) fn bracket_power(z: f64, n: f64) -> f64 {
    (-n * f64::ln_1p(z)).exp()
}

/// Interference exponent of one field: base stations of blockage state
/// `field` outside radius `lower`, with fading shape `shape` and one
/// `(w_i, p_i)` entry per directivity-gain atom.
///
/// The LOS field decays exponentially through the blockage weight; the
/// NLOS field only decays algebraically (the bracket tends to
/// `N w_i / t^alpha`), so the tail transform is scaled by the larger of
/// the blockage length and the bracket crossover radius `w^(1/alpha)`.
pub(crate) fn aggregate_exponent(
    field: LinkState,
    lower: f64,
    atoms: &[(f64, f64)],
    shape: u32,
    params: &SystemParams,
    spec: &QuadratureSpec,
) -> Result<f64, QuadError> {
    let w_max = atoms.iter().fold(0.0f64, |m, (w, _)| m.max(*w));
    if atoms.is_empty() || w_max <= 0.0 {
        return Ok(0.0);
    }
    let alpha = params.alpha(field);
    let beta = params.blockage_beta;
    let n = shape as f64;
    let scale = (1.0 / beta).max(w_max.powf(1.0 / alpha));
    let integrand = |t: f64| {
        let t_alpha = t.powf(alpha);
        let mut s = 0.0;
        for (w, p) in atoms {
            s += p * bracket_complement(w / t_alpha, n);
        }
        let block = match field {
            LinkState::Los => (-beta * t).exp(),
            LinkState::Nlos => -f64::exp_m1(-beta * t),
        };
        s * block * t
    };
    let v = integrate(integrand, lower, f64::INFINITY, &spec.with_tail_scale(scale))?;
    Ok(2.0 * PI * params.bs_density * v)
}

/// Mean aggregate received power from the LOS field outside radius `x`
/// under mean directivity gain `mean_gain`:
/// `kappa C_L G beta^(alpha_L - 2) Gamma(2 - alpha_L; beta x, inf)` with
/// `kappa = 2 pi lambda P_t`.
pub(crate) fn mean_power_los(
    x: f64,
    mean_gain: f64,
    params: &SystemParams,
    spec: &QuadratureSpec,
) -> Result<f64, QuadError> {
    let kappa = 2.0 * PI * params.bs_density * params.tx_power;
    let beta = params.blockage_beta;
    let alpha = params.alpha_los;
    let tail = gen_inc_gamma(2.0 - alpha, beta * x, f64::INFINITY, spec)?;
    Ok(kappa * params.intercept_los * mean_gain * beta.powf(alpha - 2.0) * tail)
}

/// Mean aggregate received power from the NLOS field outside radius `x`:
/// the same Campbell average with the complementary blockage weight,
/// `kappa C_N G (x^(2-alpha_N)/(alpha_N - 2) - beta^(alpha_N-2) Gamma(2 - alpha_N; beta x, inf))`.
/// Requires `alpha_N > 2` (enforced by parameter validation).
pub(crate) fn mean_power_nlos(
    x: f64,
    mean_gain: f64,
    params: &SystemParams,
    spec: &QuadratureSpec,
) -> Result<f64, QuadError> {
    let kappa = 2.0 * PI * params.bs_density * params.tx_power;
    let beta = params.blockage_beta;
    let alpha = params.alpha_nlos;
    let tail = gen_inc_gamma(2.0 - alpha, beta * x, f64::INFINITY, spec)?;
    let bare = x.powf(2.0 - alpha) / (alpha - 2.0);
    Ok(kappa * params.intercept_nlos * mean_gain * (bare - beta.powf(alpha - 2.0) * tail))
}
