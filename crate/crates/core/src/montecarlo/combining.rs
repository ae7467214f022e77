//! Receive-side combining for the multi-antenna harvesting receiver.
//!
//! The receiver is a uniform linear array whose combining vector is built
//! from binary switches: each antenna is either connected or not, and the
//! combining gain of a weight choice `w` for an arrival angle `phi_r` is
//!
//! ```text
//! M_c = |sum_i w_i e^{j 2 pi d (i-1) cos(phi_r)}|^2 / sum_i w_i
//! ```
//!
//! with the element spacing `d` in carrier wavelengths. The greedy design
//! walks the array once and keeps a switch only if it strictly improves
//! the normalized sum; the exhaustive design enumerates every nonzero
//! switch pattern.

use super::MonteCarloError;

// ---------------------------------------------------------------------------
// Receiver description
// ---------------------------------------------------------------------------

/// How the receive array is collapsed onto the serving link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combiner {
    /// Single receive antenna; no combining.
    Single,
    /// Binary switches chosen by the one-pass greedy rule.
    SwitchGreedy,
    /// Binary switches chosen by exhaustive enumeration.
    SwitchExhaustive,
    /// Maximal ratio combining: gain equal to the array size on a
    /// single-path channel.
    Mrc,
}

/// Receive array geometry and combiner choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverSpec {
    /// Number of receive antennas.
    pub num_antennas: u32,
    /// Element spacing in carrier wavelengths.
    pub element_spacing: f64,
    pub combiner: Combiner,
}

impl ReceiverSpec {
    pub fn single() -> Self {
        Self::with_combiner(1, Combiner::Single)
    }

    pub fn switch_greedy(num_antennas: u32) -> Self {
        Self::with_combiner(num_antennas, Combiner::SwitchGreedy)
    }

    pub fn switch_exhaustive(num_antennas: u32) -> Self {
        Self::with_combiner(num_antennas, Combiner::SwitchExhaustive)
    }

    pub fn mrc(num_antennas: u32) -> Self {
        Self::with_combiner(num_antennas, Combiner::Mrc)
    }

    fn with_combiner(num_antennas: u32, combiner: Combiner) -> Self {
        ReceiverSpec {
            num_antennas,
            element_spacing: 0.5,
            combiner,
        }
    }

    pub fn validate(&self) -> Result<(), MonteCarloError> {
        if self.num_antennas < 1 {
            return Err(MonteCarloError::Domain(
                "receiver needs at least one antenna".into(),
            ));
        }
        if !(self.element_spacing > 0.0) || !self.element_spacing.is_finite() {
            return Err(MonteCarloError::Domain(format!(
                "element spacing must be positive and finite, got {}",
                self.element_spacing
            )));
        }
        Ok(())
    }

    /// Inter-element phase increment for an arrival angle (radians).
    fn phase_step(&self, phi_r: f64) -> f64 {
        std::f64::consts::TAU * self.element_spacing * phi_r.cos()
    }
}

// ---------------------------------------------------------------------------
// Combining designs
// ---------------------------------------------------------------------------

/// Combining gain of a binary weight pattern; in `[0, N_r]`.
pub fn combining_gain(
    weights: &[bool],
    spec: &ReceiverSpec,
    phi_r: f64,
) -> Result<f64, MonteCarloError> {
    if weights.len() != spec.num_antennas as usize {
        return Err(MonteCarloError::Domain(format!(
            "{} weights for a {}-antenna receiver",
            weights.len(),
            spec.num_antennas
        )));
    }
    let tau = spec.phase_step(phi_r);
    let (mut re, mut im, mut active) = (0.0, 0.0, 0u32);
    for (i, &on) in weights.iter().enumerate() {
        if on {
            let phase = tau * i as f64;
            re += phase.cos();
            im += phase.sin();
            active += 1;
        }
    }
    if active == 0 {
        return Err(MonteCarloError::Domain(
            "combining gain needs at least one active antenna".into(),
        ));
    }
    Ok((re * re + im * im) / active as f64)
}

/// One-pass greedy switch design: the first antenna is always on, and
/// each further antenna stays on only if it strictly increases the
/// normalized squared sum.
pub fn greedy_switch_combiner(spec: &ReceiverSpec, phi_r: f64) -> Vec<bool> {
    let n = spec.num_antennas as usize;
    let tau = spec.phase_step(phi_r);
    let mut weights = vec![false; n];
    weights[0] = true;
    let (mut re, mut im, mut active) = (1.0f64, 0.0f64, 1u32);
    let mut best = 1.0;
    for i in 1..n {
        let phase = tau * i as f64;
        let (cre, cim) = (re + phase.cos(), im + phase.sin());
        let cand = (cre * cre + cim * cim) / (active + 1) as f64;
        if cand > best {
            weights[i] = true;
            (re, im, active, best) = (cre, cim, active + 1, cand);
        }
    }
    weights
}

/// Exhaustive switch design over all nonzero binary patterns.
///
/// Ties on the (exactly computed) gain are broken toward fewer active
/// antennas, then toward the lexicographically smallest weight vector.
pub fn exhaustive_switch_combiner(
    spec: &ReceiverSpec,
    phi_r: f64,
) -> Result<Vec<bool>, MonteCarloError> {
    let n = spec.num_antennas;
    if n > 20 {
        return Err(MonteCarloError::Domain(format!(
            "exhaustive search over 2^{n} patterns refused (limit 20 antennas)"
        )));
    }
    let tau = spec.phase_step(phi_r);
    let gain_of = |mask: u32| {
        let (mut re, mut im, mut active) = (0.0f64, 0.0f64, 0u32);
        for i in 0..n {
            if mask >> i & 1 == 1 {
                let phase = tau * i as f64;
                re += phase.cos();
                im += phase.sin();
                active += 1;
            }
        }
        ((re * re + im * im) / active as f64, active)
    };
    let mut best_mask = 1u32;
    let (mut best_gain, mut best_active) = gain_of(1);
    for mask in 2..1u32 << n {
        let (gain, active) = gain_of(mask);
        let better = gain > best_gain
            || (gain == best_gain
                && (active < best_active
                    || (active == best_active && lex_less(mask, best_mask, n))));
        if better {
            (best_mask, best_gain, best_active) = (mask, gain, active);
        }
    }
    Ok((0..n).map(|i| best_mask >> i & 1 == 1).collect())
}

/// Lexicographic order on weight vectors `[w_1, w_2, ...]` encoded with
/// `w_{i+1}` at bit `i`.
fn lex_less(a: u32, b: u32, n: u32) -> bool {
    for i in 0..n {
        let (ba, bb) = (a >> i & 1, b >> i & 1);
        if ba != bb {
            return ba < bb;
        }
    }
    false
}

/// Serving-link combining gain for a receiver spec at a given arrival
/// angle: the combiner's gain for switch designs, the array size for
/// MRC, one for a single antenna.
pub fn serving_combining_gain(
    spec: &ReceiverSpec,
    phi_r: f64,
) -> Result<f64, MonteCarloError> {
    match spec.combiner {
        Combiner::Single => Ok(1.0),
        Combiner::Mrc => Ok(spec.num_antennas as f64),
        Combiner::SwitchGreedy => {
            combining_gain(&greedy_switch_combiner(spec, phi_r), spec, phi_r)
        }
        Combiner::SwitchExhaustive => {
            combining_gain(&exhaustive_switch_combiner(spec, phi_r)?, spec, phi_r)
        }
    }
}
