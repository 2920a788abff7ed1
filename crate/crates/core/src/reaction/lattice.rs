//! Commensurability of directions with a rectangular period lattice.

use crate::error::{Error, Result};

/// Largest denominator tried when recognizing a ratio as rational.
pub const DENOMINATOR_CAP: u64 = 10_000;
/// Relative tolerance for accepting a rational approximation.
pub const RATIONAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Membership {
    /// Largest `M > 0` with `L_i zeta_i` in `M Z` for all `i`.
    Member(f64),
    NotMember,
}

impl Membership {
    pub fn period(&self) -> Option<f64> {
        match self {
            Membership::Member(m) => Some(*m),
            Membership::NotMember => None,
        }
    }
}

/// Best rational approximation `p/q` of `x` via continued fractions with
/// `q <= cap`, accepted only if `|x - p/q| <= tol * max(1, |x|)`.
pub fn rationalize(x: f64, cap: u64, tol: f64) -> Option<(i64, u64)> {
    if !x.is_finite() {
        return None;
    }
    let target = tol * x.abs().max(1.0);
    let (mut p0, mut q0, mut p1, mut q1): (i128, i128, i128, i128) = (0, 1, 1, 0);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let p2 = ai * p1 + p0;
        let q2 = ai * q1 + q0;
        if q2 > cap as i128 {
            break;
        }
        if (x - p2 as f64 / q2 as f64).abs() <= target {
            return Some((p2 as i64, q2 as u64));
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = r - a;
        if frac.abs() < 1e-300 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Tests whether `zeta` belongs to the set of lattice-commensurate unit
/// directions for the period vector `lattice` and returns the largest
/// admissible `M`.
pub fn membership(zeta: &[f64], lattice: &[f64]) -> Result<Membership> {
    if zeta.len() != lattice.len() || zeta.is_empty() {
        return Err(Error::InvalidParameter(
            "direction and lattice dimensions differ".into(),
        ));
    }
    let norm: f64 = zeta.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "direction must be a unit vector, |zeta| = {norm}"
        )));
    }
    if lattice.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidParameter("lattice periods must be positive".into()));
    }
    let proj: Vec<f64> = zeta.iter().zip(lattice).map(|(z, l)| z * l).collect();
    let scale = proj.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let zero_tol = 1e-12 * scale;
    let reference = proj
        .iter()
        .copied()
        .find(|v| v.abs() >= scale * (1.0 - 1e-15))
        .unwrap_or(scale)
        .abs();

    // v_i = (p_i / q_i) * reference
    let mut fracs = Vec::with_capacity(proj.len());
    for v in &proj {
        if v.abs() <= zero_tol {
            fracs.push((0i64, 1u64));
            continue;
        }
        match rationalize(v / reference, DENOMINATOR_CAP, RATIONAL_TOL) {
            Some(pq) => fracs.push(pq),
            None => return Ok(Membership::NotMember),
        }
    }
    let mut lcm: u64 = 1;
    for &(_, q) in &fracs {
        lcm = lcm / gcd(lcm, q) * q;
        if lcm > DENOMINATOR_CAP * DENOMINATOR_CAP {
            return Ok(Membership::NotMember);
        }
    }
    // v_i / (reference / lcm) = p_i * lcm / q_i are integers; divide out
    // their gcd to get the largest M.
    let mut g: u64 = 0;
    for &(p, q) in &fracs {
        let k = (p.unsigned_abs()) * (lcm / q);
        g = gcd(g, k);
    }
    let g = g.max(1);
    Ok(Membership::Member(reference * g as f64 / lcm as f64))
}

/// Checks that every `L_i zeta_i` is an integer multiple of `m`.
pub fn period_compatible(zeta: &[f64], lattice: &[f64], m: f64) -> bool {
    zeta.iter().zip(lattice).all(|(z, l)| {
        let k = z * l / m;
        (k - k.round()).abs() <= 1e-9 * k.abs().max(1.0)
    })
}

/// Period of the lattice along the line orthogonal to a planar direction:
/// length of the shortest lattice vector `(k1 L1, k2 L2)` perpendicular to
/// `zeta`.
pub fn transverse_period(zeta: &[f64], lattice: &[f64]) -> Result<f64> {
    if zeta.len() != 2 || lattice.len() != 2 {
        return Err(Error::InvalidParameter(
            "transverse period is defined for planar directions".into(),
        ));
    }
    let a = lattice[0] * zeta[0];
    let b = lattice[1] * zeta[1];
    // k1 a + k2 b = 0
    if a.abs() < 1e-14 {
        return Ok(lattice[0]);
    }
    if b.abs() < 1e-14 {
        return Ok(lattice[1]);
    }
    let (p, q) = rationalize(-b / a, DENOMINATOR_CAP, RATIONAL_TOL).ok_or_else(|| Error::NotInLattice {
        dir: zeta.to_vec(),
        lattice: lattice.to_vec(),
    })?;
    // k1 / k2 = p / q
    let k1 = p as f64;
    let k2 = q as f64;
    Ok(((k1 * lattice[0]).powi(2) + (k2 * lattice[1]).powi(2)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn axis_direction() {
        assert_eq!(membership(&[1.0, 0.0], &[1.0, 1.0]).unwrap(), Membership::Member(1.0));
        assert_eq!(membership(&[0.0, -1.0], &[1.0, 1.0]).unwrap(), Membership::Member(1.0));
    }

    #[test]
    fn diagonal_direction() {
        let m = membership(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2], &[1.0, 1.0])
            .unwrap()
            .period()
            .unwrap();
        assert!((m - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn pythagorean_direction() {
        let m = membership(&[0.6, 0.8], &[1.0, 1.0]).unwrap().period().unwrap();
        assert!((m - 0.2).abs() < 1e-15);
        assert!(period_compatible(&[0.6, 0.8], &[1.0, 1.0], m));
    }

    #[test]
    fn irrational_slope_is_rejected() {
        let z = [1f64.cos(), 1f64.sin()];
        assert_eq!(membership(&z, &[1.0, 1.0]).unwrap(), Membership::NotMember);
        let z = [2f64.cos(), 2f64.sin()];
        assert_eq!(membership(&z, &[1.0, 1.0]).unwrap(), Membership::NotMember);
    }

    #[test]
    fn lattice_can_make_irrational_directions_members() {
        // L = (cos, sin) of the angle between the two directions
        let th: f64 = 0.3;
        let z = [th.cos(), th.sin()];
        let l = [z[1], z[0]];
        assert!(matches!(membership(&z, &l).unwrap(), Membership::Member(_)));
    }

    #[test]
    fn rejects_non_unit() {
        assert!(membership(&[1.0, 1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn transverse_periods() {
        assert_eq!(transverse_period(&[1.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        let p = transverse_period(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2], &[1.0, 1.0]).unwrap();
        assert!((p - 2f64.sqrt()).abs() < 1e-14);
        let p = transverse_period(&[0.6, 0.8], &[1.0, 1.0]).unwrap();
        assert!((p - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rationalize_known() {
        assert_eq!(rationalize(0.75, 100, 1e-12), Some((3, 4)));
        assert_eq!(rationalize(-4.0 / 3.0, 100, 1e-12), Some((-4, 3)));
        assert_eq!(rationalize(std::f64::consts::PI, 100, 1e-12), None);
    }
}
