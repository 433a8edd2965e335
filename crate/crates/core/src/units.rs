//! Unit conventions.
//!
//! Ordinary frequencies ν are quoted in kHz, angular rates ω = 2πν are kept
//! in rad/ms, times in ms. Since 1 kHz = 1 ms⁻¹ the conversion is a bare 2π.

use core::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// ν in kHz → ω in rad/ms.
#[inline]
pub fn khz(nu_khz: f64) -> f64 {
    TWO_PI * nu_khz
}

/// ν in MHz → ω in rad/ms.
#[inline]
pub fn mhz(nu_mhz: f64) -> f64 {
    TWO_PI * 1.0e3 * nu_mhz
}

/// ω in rad/ms → ν in kHz.
#[inline]
pub fn to_khz(omega: f64) -> f64 {
    omega / TWO_PI
}

/// Rates of dimension rate^{3/2} (e.g. ε√κ): ν^{3/2}-reading in kHz^{3/2} → angular.
#[inline]
pub fn khz_three_halves(value: f64) -> f64 {
    value * libm::pow(TWO_PI, 1.5)
}

/// Angular rate^{3/2} → kHz^{3/2}.
#[inline]
pub fn to_khz_three_halves(value: f64) -> f64 {
    value / libm::pow(TWO_PI, 1.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        assert!((to_khz(khz(80.16)) - 80.16).abs() < 1e-12);
        assert!((mhz(1.0) - khz(1000.0)).abs() < 1e-9);
        assert!((to_khz_three_halves(khz_three_halves(14.27)) - 14.27).abs() < 1e-12);
    }
}
