//! Unit conversions used at the configuration boundary.
//!
//! Everything inside the crate is SI: metres, watts, linear ratios and
//! densities per square metre.

/// `x` dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// `x` dB to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Density per km² to density per m².
pub fn per_km2_to_per_m2(d: f64) -> f64 {
    d * 1e-6
}

pub fn per_m2_to_per_km2(d: f64) -> f64 {
    d * 1e6
}
