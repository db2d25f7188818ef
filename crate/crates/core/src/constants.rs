//! Exact SI physical constants (2019 redefinition).

use std::f64::consts::PI;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Superconducting flux quantum h/2e, Wb.
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);

/// Reference impedance of the measurement port, Ω.
pub const PORT_IMPEDANCE: f64 = 50.0;

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// dBm to watts.
#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * db_to_linear(dbm)
}

/// Watts to dBm.
#[inline]
pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w / 1e-3)
}

#[inline]
pub fn angular(f_hz: f64) -> f64 {
    2.0 * PI * f_hz
}

#[inline]
pub fn ordinary(omega: f64) -> f64 {
    omega / (2.0 * PI)
}
