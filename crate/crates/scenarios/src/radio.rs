//! Link-budget helpers.

use statrs::function::erf::erfc;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Spectral efficiency in bit/s/Hz.
pub fn shannon_rate(snr: f64) -> f64 {
    (1.0 + snr).log2()
}

/// Log-distance path loss in dB at `distance` metres; distances below one
/// metre are clamped.
pub fn path_loss_db(distance: f64, reference_loss_db: f64, exponent: f64) -> f64 {
    reference_loss_db + 10.0 * exponent * distance.max(1.0).log10()
}
