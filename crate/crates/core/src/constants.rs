//! Physical constants (CODATA 2018, SI) and the unit conversions used at the
//! configuration boundary. Everything past parsing is SI.

use std::f64::consts::PI;

/// Planck constant (J·s), exact.
pub const H: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J·s).
pub const HBAR: f64 = H / (2.0 * PI);
/// Speed of light in vacuum (m/s), exact.
pub const C: f64 = 299_792_458.0;
/// Atomic mass unit (kg).
pub const AMU: f64 = 1.660_539_066_60e-27;
/// One cubic ångström in m³ (volume-convention polarizability).
pub const ANGSTROM3: f64 = 1e-30;

pub const NM: f64 = 1e-9;
pub const UM: f64 = 1e-6;
pub const MM: f64 = 1e-3;
pub const MRAD: f64 = 1e-3;

pub fn amu_to_kg(amu: f64) -> f64 {
    amu * AMU
}

pub fn kg_to_amu(kg: f64) -> f64 {
    kg / AMU
}

pub fn a3_to_m3(a3: f64) -> f64 {
    a3 * ANGSTROM3
}

pub fn m3_to_a3(m3: f64) -> f64 {
    m3 / ANGSTROM3
}
