//! CODATA 2018 constants in SI units.

pub use core::f64::consts::PI;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant, J·s.
pub const H: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Vacuum permeability, H/m.
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Unified atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Elementary charge, C.
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Electron mass, kg.
pub const M_ELECTRON: f64 = 9.109_383_701_5e-31;
/// Bohr radius, m.
pub const BOHR: f64 = 5.291_772_109_03e-11;
/// Atomic unit of polarizability (4πε₀a₀³) in C·m²/V.
pub const POLARIZABILITY_AU: f64 = 4.0 * PI * EPSILON_0 * BOHR * BOHR * BOHR;

/// Converts an energy in joules to a frequency E/h in hertz.
#[inline]
pub fn joule_to_hz(e: f64) -> f64 {
    e / H
}
