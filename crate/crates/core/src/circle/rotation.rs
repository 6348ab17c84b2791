use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::frac;

/// Number of continued-fraction terms inspected by the rationality test.
pub const DEFAULT_CF_DEPTH: usize = 40;

/// Largest convergent denominator inspected by the rationality test.
pub const MAX_DENOMINATOR: u128 = 1 << 20;

/// A convergent closer than this counts as an exact rational hit.
pub const RATIONAL_TOL: f64 = 1e-15;

/// Irrational (to working depth) rotation number in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationNumber {
    #[serde(with = "crate::num::sig17")]
    value: f64,
    /// Convergents `p/q`, up to the configured depth.
    convergents: Vec<(u128, u128)>,
}

impl RotationNumber {
    pub fn new(value: f64) -> Result<Self> {
        Self::with_depth(value, DEFAULT_CF_DEPTH)
    }

    /// Rejects `value` when one of its first `depth` convergents `p/q` with
    /// `q <= MAX_DENOMINATOR` reproduces it to `RATIONAL_TOL`. Larger
    /// denominators are not inspected: every double lies within rounding
    /// distance of some fraction with `q ~ 1e8`, so only convergents whose
    /// approximation error would dominate rounding are meaningful.
    pub fn with_depth(value: f64, depth: usize) -> Result<Self> {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::RotationOutOfRange(value));
        }
        let (vnum, vden) = dyadic(value)?;
        let (mut num, mut den) = (vnum, vden);
        let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
        let mut convergents = Vec::with_capacity(depth + 1);
        for _ in 0..=depth {
            let a = num / den;
            let (p2, q2) = (a * p1 + p0, a * q1 + q0);
            if q2 > MAX_DENOMINATOR {
                break;
            }
            convergents.push((p2, q2));
            // |value - p/q| = |vnum q - p vden| / (vden q), exactly.
            let diff = (vnum * q2).abs_diff(p2 * vden) as f64 / (vden as f64 * q2 as f64);
            if diff <= RATIONAL_TOL {
                return Err(Error::RationalRotation(value, depth));
            }
            (p0, q0, p1, q1) = (p1, q1, p2, q2);
            let r = num % den;
            if r == 0 {
                return Err(Error::RationalRotation(value, depth));
            }
            (num, den) = (den, r);
        }
        Ok(Self { value, convergents })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn convergents(&self) -> &[(u128, u128)] {
        &self.convergents
    }
}

/// Exact `value = num / den` with `den` a power of two.
fn dyadic(value: f64) -> Result<(u128, u128)> {
    let bits = value.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mant = (bits & ((1u64 << 52) - 1)) | if exp == 0 { 0 } else { 1u64 << 52 };
    // value = mant * 2^(exp - 1075)
    let shift = 1075 - exp.max(1);
    if shift <= 0 || shift > 126 {
        return Err(Error::InvalidArgument(format!("rotation number {value} is outside the representable dyadic range")));
    }
    let mut num = mant as u128;
    let mut den = 1u128 << shift;
    while num % 2 == 0 && den > 1 {
        num /= 2;
        den /= 2;
    }
    Ok((num, den))
}

/// A degree-one circle map, given by an increasing lift `F` with
/// `F(x + 1) = F(x) + 1`.
pub trait CircleMap: Send + Sync {
    fn lift(&self, x: f64) -> f64;

    /// The induced map on `[0, 1)`.
    fn apply(&self, x: f64) -> f64 {
        frac(self.lift(x))
    }

    fn inverse(&self, x: f64) -> f64;

    /// Visits `x, h(x), ..., h^(n-1)(x)`.
    fn orbit(&self, x: f64, n: usize, visit: &mut dyn FnMut(f64)) {
        let mut y = frac(x);
        for _ in 0..n {
            visit(y);
            y = self.apply(y);
        }
    }

    fn is_identity(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityMap;

impl CircleMap for IdentityMap {
    fn lift(&self, x: f64) -> f64 {
        x
    }
    fn inverse(&self, x: f64) -> f64 {
        frac(x)
    }
    fn is_identity(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RigidRotation {
    pub rho: f64,
}

impl RigidRotation {
    pub fn new(rho: f64) -> Self {
        Self { rho }
    }
}

impl CircleMap for RigidRotation {
    fn lift(&self, x: f64) -> f64 {
        x + self.rho
    }
    fn apply(&self, x: f64) -> f64 {
        rotate(x, self.rho)
    }
    fn inverse(&self, x: f64) -> f64 {
        rotate_back(x, self.rho)
    }
}

/// `R_rho` on `[0, 1)`, the single rounding rule used by every orbit.
#[inline]
pub(crate) fn rotate(theta: f64, rho: f64) -> f64 {
    let y = theta + rho;
    if y >= 1.0 {
        y - 1.0
    } else {
        y
    }
}

#[inline]
pub(crate) fn rotate_back(theta: f64, rho: f64) -> f64 {
    let y = theta - rho;
    if y < 0.0 {
        y + 1.0
    } else {
        y
    }
}

/// `(F^N(x) - x) / N` for the lift `F`, started at `x = 0`.
pub fn rotation_number_estimate(map: &dyn CircleMap, iterations: usize) -> f64 {
    assert!(iterations >= 1, "iterations must be positive");
    let x0 = 0.0;
    // Track the integer part separately so the fractional part keeps full
    // precision over long orbits.
    let mut turns = 0i64;
    let mut y = x0;
    for _ in 0..iterations {
        let z = map.lift(y);
        let k = z.floor();
        turns += k as i64;
        y = z - k;
    }
    (turns as f64 + y - x0) / iterations as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_values_are_rejected() {
        assert!(matches!(RotationNumber::new(0.25), Err(Error::RationalRotation(..))));
        assert!(matches!(RotationNumber::new(0.1), Err(Error::RationalRotation(..))));
        assert!(matches!(RotationNumber::new(1.5), Err(Error::RotationOutOfRange(_))));
    }

    #[test]
    fn golden_and_silver_pass() {
        let g = RotationNumber::new(crate::circle::golden_mean()).unwrap();
        // Golden-mean convergents are Fibonacci ratios.
        let c = g.convergents();
        assert_eq!(c[1], (1, 1));
        assert_eq!(c[5], (5, 8));
        assert_eq!(c[10], (55, 89));
        RotationNumber::new(2f64.sqrt() - 1.0).unwrap();
        RotationNumber::new(std::f64::consts::PI - 3.0).unwrap();
        assert!(RotationNumber::new(1.0 / 3.0).is_err());
    }

    #[test]
    fn rigid_rotation_number_is_exact() {
        assert_eq!(rotation_number_estimate(&RigidRotation::new(0.25), 1000), 0.25);
        assert_eq!(rotation_number_estimate(&IdentityMap, 1000), 0.0);
    }
}
