//! Decibel and power-unit conversions.

/// Boltzmann noise density at 290 K, in dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -173.975;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * db_to_linear(dbm)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w * 1e3)
}

/// Thermal noise power over `bandwidth_hz` for a receiver with the given noise figure.
pub fn thermal_noise_watts(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    dbm_to_watts(THERMAL_NOISE_DBM_PER_HZ + linear_to_db(bandwidth_hz) + noise_figure_db)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        assert!((watts_to_dbm(dbm_to_watts(-94.0)) + 94.0).abs() < 1e-12);
        assert!((db_to_linear(20.0) - 100.0).abs() < 1e-12);
        assert!((watts_to_dbm(1.0) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_noise_20mhz() {
        let n = watts_to_dbm(thermal_noise_watts(20e6, 7.0));
        assert!((n + 93.965).abs() < 0.01, "{n}");
    }
}
