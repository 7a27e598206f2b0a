//! Conversion from laboratory units to the dimensionless temperature
//! `τ = k_B T / (ħω)`, with `ω = 2π f` the reference angular frequency.

use std::f64::consts::TAU;

/// Boltzmann constant, J/K (exact in SI).
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Reduced Planck constant, J s (CODATA 2018).
pub const HBAR: f64 = 1.054571817e-34;

pub const REFERENCE_TEMPERATURE_MK: f64 = 19.0;
pub const REFERENCE_FREQUENCY_GHZ: f64 = 8.0;

pub fn dimensionless_temperature(temperature_mk: f64, frequency_ghz: f64) -> f64 {
    BOLTZMANN * temperature_mk * 1e-3 / (HBAR * TAU * frequency_ghz * 1e9)
}

/// `τ_c` for 19 mK at 8 GHz.
pub fn reference_tau() -> f64 {
    dimensionless_temperature(REFERENCE_TEMPERATURE_MK, REFERENCE_FREQUENCY_GHZ)
}
