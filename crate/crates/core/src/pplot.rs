//! Rank-ordered p-value plots and their uniformity diagnostics.
//!
//! Under the null the sorted p-values track the plotting positions
//! `i / (n + 1)`, i.e. a 45° line on normalized axes. The diagnostics turn
//! that visual reading into numbers: a one-sample KS test against
//! Uniform(0, 1), the least-squares slope of p on plotting position, and
//! the fraction of p-values below alpha.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::CorrelationClass;
use crate::numeric::Probability;

pub const MIN_POINTS: usize = 3;
pub const WARN_BELOW_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlotError {
    #[error("a p-value plot needs at least {MIN_POINTS} values (got {0})")]
    TooFew(usize),
    #[error("alpha must lie strictly inside (0, 1) (got {0})")]
    InvalidAlpha(f64),
    #[error("KS test needs at least one value")]
    Empty,
    #[error("value {0} outside [0, 1]")]
    OutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    NullConsistent,
    EffectConsistent,
    Ambiguous,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::NullConsistent => "NullConsistent",
            Classification::EffectConsistent => "EffectConsistent",
            Classification::Ambiguous => "Ambiguous",
        }
    }
}

/// Thresholds of the three-way classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRules {
    /// Null requires `frac_below_alpha <= null_max_frac` ...
    pub null_max_frac: f64,
    /// ... and `ks_p > null_min_ks_p`.
    pub null_min_ks_p: f64,
    /// Effect requires `frac_below_alpha >= effect_min_frac` and `min_p < alpha`.
    pub effect_min_frac: f64,
}

impl Default for ClassifyRules {
    fn default() -> Self {
        ClassifyRules { null_max_frac: 0.1, null_min_ks_p: 0.05, effect_min_frac: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotDiagnostics {
    pub alpha: Probability,
    pub ks_statistic: f64,
    pub ks_p: Probability,
    pub slope_fit: f64,
    pub frac_below_alpha: Probability,
    pub min_p: Probability,
    pub classification: Classification,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub rank: usize,
    pub p: Probability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValuePlot {
    pub class: CorrelationClass,
    pub points: Vec<PlotPoint>,
    pub diagnostics: PlotDiagnostics,
    pub warnings: Vec<String>,
}

impl PValuePlot {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn build_plot(
    class: CorrelationClass,
    p_values: &[Probability],
    alpha: Probability,
    rules: &ClassifyRules,
) -> Result<PValuePlot, PlotError> {
    let n = p_values.len();
    if n < MIN_POINTS {
        return Err(PlotError::TooFew(n));
    }
    let a = alpha.value();
    if a <= 0.0 || a >= 1.0 {
        return Err(PlotError::InvalidAlpha(a));
    }

    // stable: equal p-values keep their input order
    let mut sorted = p_values.to_vec();
    sorted.sort_by(|x, y| x.value().total_cmp(&y.value()));
    let values: Vec<f64> = sorted.iter().map(|p| p.value()).collect();

    let (ks_statistic, ks_p) = ks_uniform_sorted(&values);
    let below = values.iter().filter(|&&p| p < a).count();
    let frac_below_alpha = Probability::saturating(below as f64 / n as f64);
    let min_p = sorted[0];
    let slope_fit = plotting_position_slope(&values);
    let classification = classify(frac_below_alpha.value(), ks_p.value(), min_p.value(), n, a, rules);

    let mut warnings = Vec::new();
    if n < WARN_BELOW_POINTS {
        warnings.push(format!(
            "only {n} p-values; plots with fewer than {WARN_BELOW_POINTS} points are hard to read"
        ));
    }

    Ok(PValuePlot {
        class,
        points: sorted.into_iter().enumerate().map(|(i, p)| PlotPoint { rank: i + 1, p }).collect(),
        diagnostics: PlotDiagnostics {
            alpha,
            ks_statistic,
            ks_p,
            slope_fit,
            frac_below_alpha,
            min_p,
            classification,
        },
        warnings,
    })
}

/// Three-way reading of a p-value plot.
///
/// On top of the frac/KS thresholds, a null reading is refused when the
/// smallest p-value is below `alpha * null_max_frac / n`.
pub fn classify(
    frac_below_alpha: f64,
    ks_p: f64,
    min_p: f64,
    n: usize,
    alpha: f64,
    rules: &ClassifyRules,
) -> Classification {
    let null_floor = alpha * rules.null_max_frac / n.max(1) as f64;
    if frac_below_alpha <= rules.null_max_frac && ks_p > rules.null_min_ks_p && min_p >= null_floor {
        Classification::NullConsistent
    } else if frac_below_alpha >= rules.effect_min_frac && min_p < alpha {
        Classification::EffectConsistent
    } else {
        Classification::Ambiguous
    }
}

/// One-sample KS test against Uniform(0, 1).
pub fn ks_uniform(values: &[f64]) -> Result<(f64, Probability), PlotError> {
    if values.is_empty() {
        return Err(PlotError::Empty);
    }
    if let Some(&bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(PlotError::OutOfRange(bad));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(ks_uniform_sorted(&sorted))
}

fn ks_uniform_sorted(sorted: &[f64]) -> (f64, Probability) {
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let above = (i + 1) as f64 / n - x;
            let below = x - i as f64 / n;
            above.max(below)
        })
        .fold(0.0_f64, f64::max);
    (d, kolmogorov_sf(n.sqrt() * d))
}

/// `P(K > lambda)` for the Kolmogorov distribution.
///
/// Uses the alternating series `2 sum (-1)^(k-1) exp(-2 k^2 lambda^2)` for
/// large `lambda` and the theta-function form
/// `1 - sqrt(2 pi)/lambda sum exp(-(2k-1)^2 pi^2 / (8 lambda^2))` for small
/// `lambda`, where the first series converges slowly.
pub fn kolmogorov_sf(lambda: f64) -> Probability {
    if lambda <= 0.0 {
        return Probability::ONE;
    }
    let p = if lambda < 1.0 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut cdf = 0.0;
        for k in 1..=50 {
            let odd = (2 * k - 1) as f64;
            let term = (-odd * odd * pi2 / (8.0 * lambda * lambda)).exp();
            cdf += term;
            if term < 1e-17 {
                break;
            }
        }
        1.0 - (std::f64::consts::TAU).sqrt() / lambda * cdf
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        2.0 * sum
    };
    Probability::saturating(p)
}

/// Least-squares slope (with intercept) of sorted p on `i / (n + 1)`.
fn plotting_position_slope(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    let xs: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = sorted.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(sorted) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}
