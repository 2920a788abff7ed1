//! Periodic bump supported between consecutive translates of the kink.
//!
//! For a period `M`, the strip between the graphs `u = U0(z)` and
//! `u = U0(z - M)` is cut into the cells `{(z, u) : U0(z) <= u < U0(z - M)}`
//! and their translates. The bump vanishes on every cell boundary, on the
//! bands `u <= delta0`, `u >= 1 - delta0`, and outside `(0, 1)`; it is
//! positive inside each cell wherever `2 delta0 <= u <= 1 - 2 delta0`.

use super::kink::kink_inverse_unchecked;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Shape of the bump across one cell, as a function of the cell phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BumpProfile {
    /// `sin^2(pi theta)`.
    #[default]
    SinSquared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiParams {
    pub period: f64,
    pub delta0: f64,
    #[serde(default)]
    pub bump: BumpProfile,
}

pub const DEFAULT_DELTA0: f64 = 0.05;

impl Default for ChiParams {
    fn default() -> Self {
        Self {
            period: 1.0,
            delta0: DEFAULT_DELTA0,
            bump: BumpProfile::SinSquared,
        }
    }
}

impl ChiParams {
    pub fn new(period: f64, delta0: f64) -> Result<Self> {
        let p = Self {
            period,
            delta0,
            bump: BumpProfile::SinSquared,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "chi period must be positive, got {}",
                self.period
            )));
        }
        if !(self.delta0 > 0.0 && self.delta0 < 0.25) {
            return Err(Error::InvalidParameter(format!(
                "delta0 must lie in (0, 1/4), got {}",
                self.delta0
            )));
        }
        Ok(())
    }
}

/// C1 cubic ramp: 0 on `[0, d]` and `[1-d, 1]`, 1 on `[2d, 1-2d]`.
#[inline]
pub fn ramp(u: f64, delta0: f64) -> f64 {
    let v = u.min(1.0 - u);
    if v <= delta0 {
        0.0
    } else if v >= 2.0 * delta0 {
        1.0
    } else {
        let s = (v - delta0) / delta0;
        s * s * (3.0 - 2.0 * s)
    }
}

#[inline]
pub fn ramp_du(u: f64, delta0: f64) -> f64 {
    let (v, sign) = if u <= 0.5 { (u, 1.0) } else { (1.0 - u, -1.0) };
    if v <= delta0 || v >= 2.0 * delta0 {
        0.0
    } else {
        let s = (v - delta0) / delta0;
        sign * 6.0 * s * (1.0 - s) / delta0
    }
}

/// Quantities of the bump that depend on the state only; shared when several
/// bumps are evaluated at the same `u`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StatePart {
    /// `U0^{-1}(u)`.
    pub inv: f64,
    /// `d U0^{-1} / du`.
    pub inv_du: f64,
    pub ramp: f64,
    pub ramp_du: f64,
}

impl StatePart {
    /// `None` when the bump vanishes identically at this state.
    #[inline]
    pub fn new(u: f64, delta0: f64) -> Option<Self> {
        if !(u > delta0 && u < 1.0 - delta0) {
            return None;
        }
        Some(Self {
            inv: kink_inverse_unchecked(u),
            inv_du: -SQRT_2 / (u * (1.0 - u)),
            ramp: ramp(u, delta0),
            ramp_du: ramp_du(u, delta0),
        })
    }
}

#[inline]
pub(crate) fn chi_with(z: f64, part: &StatePart, period: f64) -> f64 {
    let s = (PI * (z - part.inv) / period).sin();
    s * s * part.ramp
}

/// Returns `(chi, d chi / du)`.
#[inline]
pub(crate) fn chi_and_du_with(z: f64, part: &StatePart, period: f64) -> (f64, f64) {
    let (s, c) = (PI * (z - part.inv) / period).sin_cos();
    let b = s * s;
    // d/dtheta sin^2(pi theta) = pi sin(2 pi theta); dtheta/du = -inv_du / M
    let db = 2.0 * PI * s * c * (-part.inv_du / period);
    (b * part.ramp, db * part.ramp + b * part.ramp_du)
}

/// Cell phase `theta = frac((z - U0^{-1}(u)) / M)` for `u` in `(0,1)`.
pub fn cell_phase(z: f64, u: f64, period: f64) -> Option<f64> {
    if !(u > 0.0 && u < 1.0) {
        return None;
    }
    let t = (z - kink_inverse_unchecked(u)) / period;
    Some(t - t.floor())
}

/// The bump `chi(z, u)`, valued in `[0, 1]` and `M`-periodic in `z`.
pub fn chi(z: f64, u: f64, p: &ChiParams) -> f64 {
    match StatePart::new(u, p.delta0) {
        Some(part) => chi_with(z, &part, p.period),
        None => 0.0,
    }
}

pub fn chi_du(z: f64, u: f64, p: &ChiParams) -> f64 {
    match StatePart::new(u, p.delta0) {
        Some(part) => chi_and_du_with(z, &part, p.period).1,
        None => 0.0,
    }
}

pub fn chi_dz(z: f64, u: f64, p: &ChiParams) -> f64 {
    match StatePart::new(u, p.delta0) {
        Some(part) => {
            let th = PI * (z - part.inv) / p.period;
            PI * (2.0 * th).sin() / p.period * part.ramp
        }
        None => 0.0,
    }
}
