//! Unit conversions and radio-physics helper constants.
//!
//! Everything downstream of configuration parsing works in linear SI units;
//! these helpers are the only place decibel arithmetic happens inside the
//! library.

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Thermal noise floor at 290 K, dBm per hertz of bandwidth.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// Convert a power ratio in decibels to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert a linear power ratio to decibels.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Convert dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Convert watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Convert dBW to watts.
pub fn dbw_to_watts(dbw: f64) -> f64 {
    10f64.powf(dbw / 10.0)
}

/// Free-space path gain at 1 m for the given carrier frequency:
/// `(c / (4 pi f))^2`. Used as the default path-loss intercept.
pub fn free_space_intercept(carrier_hz: f64) -> f64 {
    let wavelength = SPEED_OF_LIGHT / carrier_hz;
    (wavelength / (4.0 * std::f64::consts::PI)).powi(2)
}

/// Receiver thermal noise power in watts for the given bandwidth and noise
/// figure: -174 dBm/Hz + 10 log10(W) + NF.
pub fn thermal_noise_watts(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    dbm_to_watts(THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn db_round_trips() {
        assert_relative_eq!(db_to_linear(10.0), 10.0, max_relative = 1e-12);
        assert_relative_eq!(db_to_linear(-10.0), 0.1, max_relative = 1e-12);
        assert_relative_eq!(linear_to_db(db_to_linear(7.3)), 7.3, max_relative = 1e-12);
        assert_relative_eq!(dbm_to_watts(30.0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(dbm_to_watts(13.0), 0.0199526231, max_relative = 1e-8);
        assert_relative_eq!(dbw_to_watts(13.0), 19.9526231, max_relative = 1e-8);
        assert_relative_eq!(watts_to_dbm(1e-10), -70.0, max_relative = 1e-12);
    }

    #[test]
    fn free_space_intercept_at_28_ghz() {
        // Oracle: (c / (4 pi f))^2 with c = 299792458 m/s and f = 28 GHz.
        let c = 299_792_458.0f64;
        let expected = (c / (4.0 * std::f64::consts::PI * 28e9)).powi(2);
        let got = free_space_intercept(28e9);
        assert_relative_eq!(got, expected, max_relative = 1e-14);
        // Frozen magnitude: ~7.26e-7 (about -61.4 dB at 1 m).
        assert_relative_eq!(got, 7.2594817e-7, max_relative = 1e-7);
    }

    #[test]
    fn thermal_noise_100_mhz_10_db_nf() {
        // -174 + 80 + 10 = -84 dBm.
        assert_relative_eq!(
            thermal_noise_watts(100e6, 10.0),
            dbm_to_watts(-84.0),
            max_relative = 1e-12
        );
    }
}
