//! The balanced cubic and its stationary kink.

use crate::error::{Error, Result};
use std::f64::consts::SQRT_2;

/// Balanced bistable cubic `u(1-u)(u-1/2)`.
#[inline]
pub fn cubic_balanced(u: f64) -> f64 {
    u * (1.0 - u) * (u - 0.5)
}

/// Derivative of [`cubic_balanced`].
#[inline]
pub fn cubic_balanced_du(u: f64) -> f64 {
    -3.0 * u * u + 3.0 * u - 0.5
}

/// Decreasing stationary front of `u'' + u(1-u)(u-1/2) = 0`, normalized so
/// that it crosses 1/2 at the origin.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KinkProfile;

impl KinkProfile {
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        kink(x)
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        let u = kink(x);
        -u * (1.0 - u) / SQRT_2
    }

    /// Second derivative, equal to `-f0(U0(x))` along the profile.
    #[inline]
    pub fn second_derivative(&self, x: f64) -> f64 {
        -cubic_balanced(kink(x))
    }

    pub fn inverse(&self, u: f64) -> Result<f64> {
        kink_inverse(u)
    }
}

/// `U0(x) = 1 / (1 + exp(x / sqrt 2))`, evaluated without overflow.
#[inline]
pub fn kink(x: f64) -> f64 {
    let s = x / SQRT_2;
    if s >= 0.0 {
        let e = (-s).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + s.exp())
    }
}

/// Inverse of the kink on `(0, 1)`.
pub fn kink_inverse(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "kink inverse needs u in (0,1), got {u}"
        )));
    }
    Ok(kink_inverse_unchecked(u))
}

#[inline]
pub(crate) fn kink_inverse_unchecked(u: f64) -> f64 {
    SQRT_2 * ((1.0 - u) / u).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_values() {
        assert_eq!(cubic_balanced(0.0), 0.0);
        assert_eq!(cubic_balanced(0.5), 0.0);
        assert!((cubic_balanced(0.25) + 3.0 / 64.0).abs() < 1e-16);
        assert_eq!(cubic_balanced_du(0.0), -0.5);
        assert_eq!(cubic_balanced_du(1.0), -0.5);
        assert_eq!(cubic_balanced_du(0.5), 0.25);
    }

    #[test]
    fn kink_normalization_and_limits() {
        assert_eq!(kink(0.0), 0.5);
        assert!(kink(-60.0) > 1.0 - 1e-15);
        assert!(kink(60.0) < 1e-15);
        let mut prev = kink(-30.0);
        for i in 1..=600 {
            let v = kink(-30.0 + 0.1 * i as f64);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn kink_inverse_value() {
        let x = kink_inverse(0.25).unwrap();
        assert!((x - SQRT_2 * 3f64.ln()).abs() < 1e-14);
        assert!((x - 1.5537).abs() < 1e-4);
        assert!(kink_inverse(0.0).is_err());
        assert!(kink_inverse(1.0).is_err());
        assert!(kink_inverse(-0.2).is_err());
    }

    #[test]
    fn kink_round_trip() {
        for k in 0..=1000 {
            let u = 1e-6 + (1.0 - 2e-6) * k as f64 / 1000.0;
            let back = kink(kink_inverse(u).unwrap());
            assert!((back - u).abs() < 1e-12, "u={u} back={back}");
        }
    }

    // Sixth-order central differences of the closed form; independent of the
    // analytic second derivative.
    #[test]
    fn kink_solves_the_profile_equation() {
        let h = 1e-2;
        let mut worst: f64 = 0.0;
        let mut x = -20.0;
        while x <= 20.0 {
            let d2 = (2.0 * kink(x + 3.0 * h) - 27.0 * kink(x + 2.0 * h) + 270.0 * kink(x + h) - 490.0 * kink(x)
                + 270.0 * kink(x - h)
                - 27.0 * kink(x - 2.0 * h)
                + 2.0 * kink(x - 3.0 * h))
                / (180.0 * h * h);
            worst = worst.max((d2 + cubic_balanced(kink(x))).abs());
            x += 0.05;
        }
        assert!(worst < 1e-10, "residual {worst:e}");
    }

    #[test]
    fn analytic_derivatives_match_closed_form() {
        let k = KinkProfile;
        for i in -50..=50 {
            let x = 0.2 * i as f64;
            let h = 1e-5;
            let fd = (kink(x + h) - kink(x - h)) / (2.0 * h);
            assert!((fd - k.derivative(x)).abs() < 1e-9);
            let fd2 = (k.derivative(x + h) - k.derivative(x - h)) / (2.0 * h);
            assert!((fd2 - k.second_derivative(x)).abs() < 1e-9);
        }
    }
}
