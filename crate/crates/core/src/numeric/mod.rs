//! Special functions for the standard normal family.
//!
//! Everything downstream (Fisher p-values, tail areas, KS p-values, cohort
//! sampling) goes through this module, so none of it depends on a platform
//! `libm` beyond `exp`, `ln` and `sqrt`.

#[allow(clippy::excessive_precision)]
mod erf;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("non-finite argument {0}")]
    NonFinite(f64),
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("quantile undefined at p = {0}; p must lie strictly inside (0, 1)")]
    InfiniteQuantile(f64),
    #[error("correlation {0} outside the open interval (-1, 1)")]
    CorrelationOutOfRange(f64),
}

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);
    pub const HALF: Probability = Probability(0.5);

    pub fn new(value: f64) -> Result<Self, NumericError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(NumericError::ProbabilityOutOfRange(value))
        }
    }

    /// Clamps into `[0, 1]`. Only for values already known to be
    /// probabilities up to rounding.
    pub(crate) fn saturating(value: f64) -> Self {
        Probability(value.clamp(0.0, 1.0))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `1 - p`.
    pub fn complement(self) -> Self {
        Probability(1.0 - self.0)
    }
}

impl TryFrom<f64> for Probability {
    type Error = NumericError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn finite(x: f64) -> Result<f64, NumericError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(NumericError::NonFinite(x))
    }
}

/// Error function, accurate to about one ulp.
pub fn erf(x: f64) -> Result<f64, NumericError> {
    finite(x).map(erf::erf_unchecked)
}

/// Complementary error function `1 - erf(x)`, without cancellation for large `x`.
pub fn erfc(x: f64) -> Result<f64, NumericError> {
    finite(x).map(erf::erfc_unchecked)
}

/// `P(X > x)` for `X ~ N(0, 1)`.
pub fn std_normal_sf(x: f64) -> Result<Probability, NumericError> {
    finite(x).map(sf_unchecked)
}

/// `P(X <= x)` for `X ~ N(0, 1)`.
pub fn std_normal_cdf(x: f64) -> Result<Probability, NumericError> {
    finite(x).map(|x| sf_unchecked(-x))
}

pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

pub(crate) fn sf_unchecked(x: f64) -> Probability {
    Probability::saturating(0.5 * erf::erfc_unchecked(x * std::f64::consts::FRAC_1_SQRT_2))
}

/// Inverse of the standard normal CDF.
///
/// Solves `sf(x) = min(p, 1 - p)` on the upper half-line with a
/// bracketed Newton iteration in log space, then reflects. Working on the
/// smaller tail keeps relative precision for both extremes.
pub fn std_normal_quantile(p: Probability) -> Result<f64, NumericError> {
    let p = p.value();
    if p <= 0.0 || p >= 1.0 {
        return Err(NumericError::InfiniteQuantile(p));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let tail = p.min(1.0 - p);
    let x = upper_tail_inverse(tail);
    Ok(if p < 0.5 { -x } else { x })
}

/// Returns `x >= 0` with `sf(x) = q`, for `0 < q < 0.5`.
fn upper_tail_inverse(q: f64) -> f64 {
    let target = q.ln();
    // Abramowitz & Stegun 26.2.23 as the starting point.
    let t = (-2.0 * target).sqrt();
    let mut x = t
        - (2.515_517 + t * (0.802_853 + t * 0.010_328))
            / (1.0 + t * (1.432_788 + t * (0.189_269 + t * 0.001_308)));
    let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
    x = x.clamp(lo, hi);

    for _ in 0..100 {
        let sf = sf_unchecked(x).value();
        // g(x) = ln sf(x) - ln q is strictly decreasing
        let g = sf.ln() - target;
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = -std_normal_pdf(x) / sf;
        let mut next = x - g / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1.0) {
            return next;
        }
        x = next;
    }
    x
}

/// Fisher's transformation `0.5 * ln((1 + r) / (1 - r))`.
pub fn arctanh(r: f64) -> Result<f64, NumericError> {
    if !r.is_finite() {
        return Err(NumericError::NonFinite(r));
    }
    if r.abs() >= 1.0 {
        return Err(NumericError::CorrelationOutOfRange(r));
    }
    // ln_1p form avoids the cancellation in (1 + r) / (1 - r) near zero;
    // evaluated on |r| so that arctanh(-r) == -arctanh(r) exactly
    let a = r.abs();
    Ok((0.5 * (2.0 * a / (1.0 - a)).ln_1p()).copysign(r))
}
