//! Two-port (ABCD) and one-port network algebra.
//!
//! Ladders are assembled as products of 2×2 transmission matrices; scattering
//! parameters are produced only when a result is reported against a reference
//! impedance. All quantities are SI: ohms, siemens, dimensionless ratios.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("invalid element value {0}: must be finite")]
    InvalidElement(Complex64),
    #[error("invalid reference impedance {0} ohm: must be positive and finite")]
    InvalidReference(f64),
    #[error("singular network: conversion denominator is zero")]
    SingularNetwork,
}

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// ABCD transmission matrix `[[a, b], [c, d]]`.
///
/// `b` is in ohms, `c` in siemens, `a` and `d` are dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Abcd {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Default for Abcd {
    fn default() -> Self {
        Self::identity()
    }
}

impl Abcd {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self { a, b, c, d }
    }

    /// Through connection.
    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    /// `a·d − b·c`; equals one for reciprocal networks.
    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// `self` followed by `rhs` (left-to-right matrix product).
    pub fn then(&self, rhs: &Abcd) -> Abcd {
        Abcd {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }
}

/// Two-port scattering parameters referenced to a real impedance `z0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SParams2 {
    pub s11: Complex64,
    pub s21: Complex64,
    pub s12: Complex64,
    pub s22: Complex64,
    pub z0: f64,
}

impl SParams2 {
    /// `|s11|² + |s21|²`, the fraction of port-1 incident power that is
    /// reflected or transmitted.
    pub fn power_sum_port1(&self) -> f64 {
        self.s11.norm_sqr() + self.s21.norm_sqr()
    }
}

/// Series impedance `z` as a two-port: `[[1, z], [0, 1]]`.
pub fn abcd_series(z: Complex64) -> Result<Abcd, NetworkError> {
    if !z.is_finite() {
        return Err(NetworkError::InvalidElement(z));
    }
    Ok(Abcd::new(ONE, z, ZERO, ONE))
}

/// Shunt admittance `y` as a two-port: `[[1, 0], [y, 1]]`.
pub fn abcd_shunt(y: Complex64) -> Result<Abcd, NetworkError> {
    if !y.is_finite() {
        return Err(NetworkError::InvalidElement(y));
    }
    Ok(Abcd::new(ONE, ZERO, y, ONE))
}

/// Left-to-right product of `stages`; the empty cascade is the identity.
pub fn cascade<'a, I>(stages: I) -> Abcd
where
    I: IntoIterator<Item = &'a Abcd>,
{
    stages
        .into_iter()
        .fold(Abcd::identity(), |acc, stage| acc.then(stage))
}

fn check_reference(z0: f64) -> Result<(), NetworkError> {
    if z0 > 0.0 && z0.is_finite() {
        Ok(())
    } else {
        Err(NetworkError::InvalidReference(z0))
    }
}

/// Converts an ABCD matrix to S-parameters with equal real reference
/// impedance `z0` on both ports.
pub fn abcd_to_s(m: &Abcd, z0: f64) -> Result<SParams2, NetworkError> {
    check_reference(z0)?;
    let b_n = m.b / z0;
    let c_n = m.c * z0;
    let den = m.a + b_n + c_n + m.d;
    if den == ZERO || !den.is_finite() {
        return Err(NetworkError::SingularNetwork);
    }
    let inv = den.inv();
    Ok(SParams2 {
        s11: (m.a + b_n - c_n - m.d) * inv,
        s21: 2.0 * inv,
        s12: 2.0 * m.determinant() * inv,
        s22: (-m.a + b_n - c_n + m.d) * inv,
        z0,
    })
}

/// [`abcd_to_s`] for a network known to be reciprocal, such as any cascade of
/// series and shunt elements. `s12` is taken equal to `s21` rather than formed
/// from the determinant, which loses relative precision deep in a stopband.
pub fn abcd_to_s_reciprocal(m: &Abcd, z0: f64) -> Result<SParams2, NetworkError> {
    let mut s = abcd_to_s(m, z0)?;
    s.s12 = s.s21;
    Ok(s)
}

/// Reflection coefficient of a one-port with admittance `y`: `(1 − z0·y)/(1 + z0·y)`.
pub fn one_port_s11(y: Complex64, z0: f64) -> Result<Complex64, NetworkError> {
    check_reference(z0)?;
    let zy = y * z0;
    let den = ONE + zy;
    if den == ZERO {
        return Err(NetworkError::SingularNetwork);
    }
    if !zy.is_finite() {
        // Short-circuit limit.
        return Ok(-ONE);
    }
    Ok((ONE - zy) / den)
}

/// Inverse of [`one_port_s11`]: the admittance presenting reflection `s11`.
pub fn one_port_admittance(s11: Complex64, z0: f64) -> Result<Complex64, NetworkError> {
    check_reference(z0)?;
    let den = (ONE + s11) * z0;
    if den == ZERO {
        return Err(NetworkError::SingularNetwork);
    }
    Ok((ONE - s11) / den)
}
