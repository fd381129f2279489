//! Tail areas of two Normal group distributions and their ratios.
//!
//! Thresholds are in units of the reference distribution's SD. The
//! reference group is conventionally Normal(0, 1).

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::numeric::{self, Probability};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TailError {
    #[error("sigma must be positive and finite (got {0})")]
    InvalidSigma(f64),
    #[error("mean must be finite (got {0})")]
    InvalidMean(f64),
    #[error("threshold must be finite (got {0})")]
    InvalidThreshold(f64),
    #[error("thresholds must be strictly ascending")]
    UnsortedThresholds,
    #[error("range must satisfy lo < hi (got {0}..{1})")]
    DegenerateRange(f64, f64),
    #[error("need at least 2 curve points (got {0})")]
    TooFewPoints(usize),
    #[error("unknown preset {0:?} (expected `g` or `things`)")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub label: String,
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianSpec {
    pub fn new(label: impl Into<String>, mu: f64, sigma: f64) -> Result<Self, TailError> {
        let spec = GaussianSpec { label: label.into(), mu, sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn standard(label: impl Into<String>) -> Self {
        GaussianSpec { label: label.into(), mu: 0.0, sigma: 1.0 }
    }

    pub fn validate(&self) -> Result<(), TailError> {
        if !self.mu.is_finite() {
            return Err(TailError::InvalidMean(self.mu));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(TailError::InvalidSigma(self.sigma));
        }
        Ok(())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        numeric::std_normal_pdf((x - self.mu) / self.sigma) / self.sigma
    }
}

/// A reference/comparison pair, e.g. male and female distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecPair {
    pub name: String,
    pub reference: GaussianSpec,
    pub other: GaussianSpec,
}

impl SpecPair {
    /// General intelligence: females Normal(-0.262, 0.916) against males Normal(0, 1).
    pub fn g() -> Self {
        SpecPair {
            name: "g".into(),
            reference: GaussianSpec::standard("males"),
            other: GaussianSpec { label: "females".into(), mu: -0.262, sigma: 0.916 },
        }
    }

    /// Things-people interests: females Normal(-0.93, 1) against males Normal(0, 1).
    pub fn things() -> Self {
        SpecPair {
            name: "things".into(),
            reference: GaussianSpec::standard("males"),
            other: GaussianSpec { label: "females".into(), mu: -0.93, sigma: 1.0 },
        }
    }

    pub fn preset(name: &str) -> Result<Self, TailError> {
        match name {
            "g" => Ok(SpecPair::g()),
            "things" => Ok(SpecPair::things()),
            other => Err(TailError::UnknownPreset(other.to_string())),
        }
    }
}

/// `P(X > threshold)` for `X ~ Normal(mu, sigma)`.
pub fn tail_area(spec: &GaussianSpec, threshold: f64) -> Result<Probability, TailError> {
    spec.validate()?;
    if !threshold.is_finite() {
        return Err(TailError::InvalidThreshold(threshold));
    }
    Ok(numeric::sf_unchecked((threshold - spec.mu) / spec.sigma))
}

/// Reference-to-other tail ratio. `Overflow` when the other tail vanishes;
/// serialized as the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailRatio {
    Finite(f64),
    Overflow,
}

impl TailRatio {
    pub fn value(self) -> f64 {
        match self {
            TailRatio::Finite(v) => v,
            TailRatio::Overflow => f64::INFINITY,
        }
    }

    /// One decimal below 10, whole numbers from 10 up.
    pub fn display(self) -> String {
        match self {
            TailRatio::Finite(v) if v.abs() < 10.0 => format!("{v:.1}"),
            TailRatio::Finite(v) => format!("{v:.0}"),
            TailRatio::Overflow => "inf".to_string(),
        }
    }
}

impl fmt::Display for TailRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display())
    }
}

impl Serialize for TailRatio {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            TailRatio::Finite(v) => serializer.serialize_f64(*v),
            TailRatio::Overflow => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for TailRatio {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Token(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(v) => Ok(TailRatio::Finite(v)),
            Raw::Token(t) if t == "inf" => Ok(TailRatio::Overflow),
            Raw::Token(t) => Err(serde::de::Error::custom(format!("invalid ratio token {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub threshold: f64,
    pub auc_ref: Probability,
    pub auc_other: Probability,
    pub ratio: TailRatio,
    pub auc_ref_display: String,
    pub auc_other_display: String,
    pub ratio_display: String,
    /// Set when the ratio could not be formed.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailTable {
    pub reference: GaussianSpec,
    pub other: GaussianSpec,
    pub thresholds: Vec<f64>,
    pub rows: Vec<TailRow>,
}

pub fn ratio_table(
    reference: &GaussianSpec,
    other: &GaussianSpec,
    thresholds: &[f64],
) -> Result<TailTable, TailError> {
    reference.validate()?;
    other.validate()?;
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TailError::UnsortedThresholds);
    }
    let mut rows = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let auc_ref = tail_area(reference, t)?;
        let auc_other = tail_area(other, t)?;
        let ratio = if auc_other.value() > 0.0 {
            TailRatio::Finite(auc_ref.value() / auc_other.value())
        } else {
            TailRatio::Overflow
        };
        rows.push(TailRow {
            threshold: t,
            auc_ref,
            auc_other,
            ratio,
            auc_ref_display: format!("{:.5}", auc_ref.value()),
            auc_other_display: format!("{:.5}", auc_other.value()),
            ratio_display: ratio.display(),
            flagged: ratio == TailRatio::Overflow,
        });
    }
    Ok(TailTable {
        reference: reference.clone(),
        other: other.clone(),
        thresholds: thresholds.to_vec(),
        rows,
    })
}

/// `count` evenly spaced `(x, density)` pairs over `[lo, hi]`.
pub fn curve_points(
    spec: &GaussianSpec,
    lo: f64,
    hi: f64,
    count: usize,
) -> Result<Vec<(f64, f64)>, TailError> {
    spec.validate()?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(TailError::DegenerateRange(lo, hi));
    }
    if count < 2 {
        return Err(TailError::TooFewPoints(count));
    }
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            let x = if i == count - 1 { hi } else { lo + i as f64 * step };
            (x, spec.pdf(x))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tail_area_table_values() {
        let male = GaussianSpec::standard("m");
        assert_abs_diff_eq!(tail_area(&male, 2.0).unwrap().value(), 0.02275, epsilon = 5e-6);
        let things = SpecPair::things().other;
        assert_abs_diff_eq!(tail_area(&things, 0.0).unwrap().value(), 0.17619, epsilon = 5e-6);
        let g = SpecPair::g().other;
        assert_abs_diff_eq!(tail_area(&g, 1.0).unwrap().value(), 0.08412, epsilon = 5e-4);
    }

    #[test]
    fn invalid_specs() {
        assert_eq!(GaussianSpec::new("x", 0.0, 0.0), Err(TailError::InvalidSigma(0.0)));
        assert!(GaussianSpec::new("x", f64::NAN, 1.0).is_err());
        let s = GaussianSpec::standard("s");
        assert!(tail_area(&s, f64::INFINITY).is_err());
        assert_eq!(ratio_table(&s, &s, &[1.0, 0.0]), Err(TailError::UnsortedThresholds));
        assert!(SpecPair::preset("iq").is_err());
    }

    #[test]
    fn ratio_rounding() {
        let g = SpecPair::g();
        let table = ratio_table(&g.reference, &g.other, &[0.0, 1.0, 2.0, 3.0]).unwrap();
        let shown: Vec<_> = table.rows.iter().map(|r| r.ratio_display.as_str()).collect();
        assert_eq!(shown, ["1.3", "1.9", "3.4", "7.3"]);

        let t = SpecPair::things();
        let table = ratio_table(&t.reference, &t.other, &[0.0, 1.0, 2.0, 3.0]).unwrap();
        let shown: Vec<_> = table.rows.iter().map(|r| r.ratio_display.as_str()).collect();
        assert_eq!(shown, ["2.8", "5.9", "13", "32"]);
    }

    #[test]
    fn identical_specs_give_unit_ratios() {
        let s = GaussianSpec::new("a", 0.3, 1.7).unwrap();
        let table = ratio_table(&s, &s.clone(), &[-1.0, 0.0, 2.5]).unwrap();
        assert!(table.rows.iter().all(|r| r.ratio == TailRatio::Finite(1.0)));
    }

    #[test]
    fn vanishing_denominator_is_flagged() {
        let reference = GaussianSpec::standard("m");
        let other = GaussianSpec::new("f", -30.0, 0.5).unwrap();
        let table = ratio_table(&reference, &other, &[0.0, 10.0]).unwrap();
        assert!(table.rows.iter().all(|r| r.flagged && r.ratio == TailRatio::Overflow));
        assert_eq!(serde_json::to_string(&TailRatio::Overflow).unwrap(), "\"inf\"");
        assert_eq!(serde_json::from_str::<TailRatio>("\"inf\"").unwrap(), TailRatio::Overflow);
        assert_eq!(serde_json::from_str::<TailRatio>("2.5").unwrap(), TailRatio::Finite(2.5));
    }

    #[test]
    fn curve_shape() {
        let pts = curve_points(&GaussianSpec::standard("s"), -4.0, 4.0, 9).unwrap();
        assert_eq!(pts.len(), 9);
        for i in 0..9 {
            assert_abs_diff_eq!(pts[i].1, pts[8 - i].1, epsilon = 1e-16);
        }
        let peak = pts.iter().cloned().fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        assert_eq!(peak.0, 0.0);

        let things = SpecPair::things().other;
        let pts = curve_points(&things, -4.0, 4.0, 801).unwrap();
        let peak = pts.iter().cloned().fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        assert_abs_diff_eq!(peak.0, -0.93, epsilon = 0.005);

        assert!(curve_points(&things, 1.0, 1.0, 5).is_err());
        assert!(curve_points(&things, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        // composite trapezoid, independent of the tail-area path
        for spec in [SpecPair::g().other, SpecPair::things().other, GaussianSpec::standard("m")] {
            let pts = curve_points(&spec, -8.0, 8.0, 16_001).unwrap();
            let area: f64 = pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
            assert_abs_diff_eq!(area, 1.0, epsilon = 1e-6);
        }
    }
}
