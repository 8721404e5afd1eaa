//! Physical constants (CODATA 2018) and conversions between the
//! laboratory units used in files and tables and the SI units used
//! internally. Frequencies are always angular (rad/s) inside the crate.

use std::f64::consts::PI;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const KB: f64 = 1.380_649e-23;
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Mass of ⁸⁷Rb, kg.
pub const MASS_RB87: f64 = 86.909_180_527 * AMU;

pub const TWO_PI: f64 = 2.0 * PI;

/// 2π × MHz → rad/s.
pub fn mhz(f: f64) -> f64 {
    TWO_PI * f * 1e6
}

/// 2π × kHz → rad/s.
pub fn khz(f: f64) -> f64 {
    TWO_PI * f * 1e3
}

/// 2π × Hz → rad/s.
pub fn hz(f: f64) -> f64 {
    TWO_PI * f
}

/// rad/s → ordinary frequency in Hz.
pub fn to_hz(omega: f64) -> f64 {
    omega / TWO_PI
}

pub fn to_mhz(omega: f64) -> f64 {
    omega / TWO_PI / 1e6
}

pub fn to_khz(omega: f64) -> f64 {
    omega / TWO_PI / 1e3
}

pub fn um(x: f64) -> f64 {
    x * 1e-6
}

pub fn to_um(x: f64) -> f64 {
    x * 1e6
}

pub fn nm(x: f64) -> f64 {
    x * 1e-9
}

pub fn uk(t: f64) -> f64 {
    t * 1e-6
}

/// `coth(ħω / 2k_BT)`, with the zero-temperature limit 1.
pub fn thermal_coth(omega: f64, t_temp: f64) -> f64 {
    if t_temp <= 0.0 {
        return 1.0;
    }
    let x = HBAR * omega / (2.0 * KB * t_temp);
    if x > 350.0 {
        1.0
    } else {
        1.0 / x.tanh()
    }
}
