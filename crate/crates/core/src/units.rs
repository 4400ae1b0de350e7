//! Power unit conversions.
//!
//! Powers enter the model in dBm (and antenna directivities in dBi) and are
//! converted to linear watts once, when the radio environment is built.
//! `P[W] = 10^((P[dBm] - 30) / 10)`.

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
