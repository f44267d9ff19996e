//! Confluent hypergeometric function and Gamma ratios.
//!
//! Gamma ratios are always formed as reciprocal Pochhammer products. The
//! hydrogen seeds need `Γ(-2l) / Γ(-2l + |k|)`, a ratio of two poles that is
//! finite only as a limit, so the individual Gamma values are never formed.

use crate::error::{Error, Result};

/// Maximum number of series terms before giving up.
pub const SERIES_CAP: usize = 500;
/// Relative size of the last term at which the series is truncated.
pub const SERIES_TOL: f64 = 1e-16;
/// Below this `z` the large-argument expansion replaces the series.
pub const ASYMPTOTIC_NEG_Z: f64 = -60.0;
/// Tolerance of the "is this an integer" test on parameters.
pub const INTEGER_TOL: f64 = 1e-12;

fn nearest_integer(v: f64) -> Option<i64> {
    let r = v.round();
    ((v - r).abs() < INTEGER_TOL).then_some(r as i64)
}

fn non_positive_integer(v: f64) -> Option<u32> {
    nearest_integer(v).filter(|&n| n <= 0).map(|n| (-n) as u32)
}

/// Parameters of `1F1(a; b; z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypergeometricParams {
    pub a: f64,
    pub b: f64,
    pub z: f64,
}

impl HypergeometricParams {
    pub fn new(a: f64, b: f64, z: f64) -> Result<Self> {
        let p = Self { a, b, z };
        p.validate()?;
        Ok(p)
    }

    /// A non-positive integer `b` is only allowed when the series for `a`
    /// terminates before the denominator hits zero.
    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite() && self.z.is_finite()) {
            return Err(Error::Parameter(format!("non-finite 1F1 parameters {self:?}")));
        }
        if let Some(nb) = non_positive_integer(self.b) {
            match non_positive_integer(self.a) {
                Some(na) if na < nb => {}
                _ => {
                    return Err(Error::Parameter(format!(
                        "1F1 with b = {} needs an integer a in ({}, 0], got a = {}",
                        self.b, self.b, self.a
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Kummer's function `M(a, b, z) = 1F1(a; b; z)` for real arguments.
///
/// Terminating series are summed exactly. Otherwise negative `z` is mapped
/// through `M(a, b, z) = e^z M(b - a, b, -z)` so the summed series has terms
/// of one sign when `b > a > 0`. Far out on the negative axis the algebraic
/// large-`|z|` expansion is used; the neglected part is `O(e^z)`.
pub fn kummer_1f1(p: HypergeometricParams) -> Result<f64> {
    p.validate()?;
    let HypergeometricParams { a, b, z } = p;
    if z == 0.0 {
        return Ok(1.0);
    }
    if let Some(na) = non_positive_integer(a) {
        return Ok(terminating(a, b, z, na));
    }
    if z < ASYMPTOTIC_NEG_Z.min(-4.0 * (a.abs() + b.abs())) && non_positive_integer(b - a).is_none() {
        return asymptotic_negative(a, b, z);
    }
    if z < 0.0 {
        let inner = HypergeometricParams { a: b - a, b, z: -z };
        return Ok(z.exp() * kummer_1f1(inner)?);
    }
    series(a, b, z)
}

/// Convenience wrapper for `kummer_1f1` with loose arguments.
pub fn hyp1f1(a: f64, b: f64, z: f64) -> Result<f64> {
    kummer_1f1(HypergeometricParams { a, b, z })
}

/// `d/dz M(a, b, z) = (a / b) M(a + 1, b + 1, z)`.
pub fn hyp1f1_dz(a: f64, b: f64, z: f64) -> Result<f64> {
    if a == 0.0 {
        return Ok(0.0);
    }
    Ok(a / b * hyp1f1(a + 1.0, b + 1.0, z)?)
}

/// `n`-th derivative in `z`: `(a)_n / (b)_n · M(a + n, b + n, z)`.
pub fn hyp1f1_derivative(a: f64, b: f64, z: f64, n: u32) -> Result<f64> {
    let num = pochhammer(a, n);
    if num == 0.0 {
        return Ok(0.0);
    }
    Ok(num / pochhammer(b, n) * hyp1f1(a + n as f64, b + n as f64, z)?)
}

fn terminating(a: f64, b: f64, z: f64, degree: u32) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 0..degree {
        let j = j as f64;
        term *= (a + j) / ((b + j) * (j + 1.0)) * z;
        sum += term;
    }
    sum
}

fn series(a: f64, b: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 0..SERIES_CAP {
        let jf = j as f64;
        term *= (a + jf) / ((b + jf) * (jf + 1.0)) * z;
        sum += term;
        if term.abs() <= SERIES_TOL * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence("1F1"))
}

/// `Γ(b)/Γ(b - a) (-z)^{-a} Σ (a)_s (a - b + 1)_s / s! (-z)^{-s}`, summed
/// until the terms stop shrinking.
fn asymptotic_negative(a: f64, b: f64, z: f64) -> Result<f64> {
    use statrs::function::gamma::gamma;
    let w = -z;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for s in 0..SERIES_CAP {
        let sf = s as f64;
        let next = term * (a + sf) * (a - b + 1.0 + sf) / ((sf + 1.0) * w);
        if next == 0.0 || next.abs() <= SERIES_TOL * sum.abs() {
            sum += next;
            let front = gamma(b) / gamma(b - a) * w.powf(-a);
            return Ok(front * sum);
        }
        if next.abs() > term.abs() {
            break;
        }
        sum += next;
        term = next;
    }
    Err(Error::NoConvergence("1F1 large-argument expansion"))
}

/// Rising factorial `(z)_m = z (z + 1) ... (z + m - 1)`.
pub fn pochhammer(z: f64, m: u32) -> f64 {
    (0..m).map(|j| z + j as f64).product()
}

/// `Γ(z) / Γ(z + m) = 1 / (z)_m`, refusing to divide by a vanishing factor.
pub fn gamma_ratio(z: f64, m: u32) -> Result<f64> {
    for j in 0..m {
        let factor = z + j as f64;
        if factor.abs() < INTEGER_TOL {
            return Err(Error::GammaPole { z, index: j });
        }
    }
    Ok(1.0 / pochhammer(z, m))
}

/// `Γ(n)` for a positive integer `n`, exact up to `n = 171`.
pub fn factorial_gamma(n: u32) -> f64 {
    (1..n).map(f64::from).product()
}

/// `Γ(a + 1/2) / Γ(a)` for `a > 0`, through log-Gamma.
pub fn gamma_half_shift_ratio(a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Parameter(format!(
            "Γ(a + 1/2) / Γ(a) needs a > 0, got {a}"
        )));
    }
    use statrs::function::gamma::ln_gamma;
    Ok((ln_gamma(a + 0.5) - ln_gamma(a)).exp())
}
