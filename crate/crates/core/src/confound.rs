//! Synthetic two-group cohorts and the gap between unadjusted and
//! confounder-adjusted group effects.
//!
//! Outcome model for row `i` with group indicator `g_i` (0 = reference,
//! 1 = comparison group):
//!
//! ```text
//! y_i = beta0 + beta1 * g_i + sum_k beta_k * x_ik + e_i
//! x_ik ~ Normal(g_i ? mean_f : mean_m, sigma_k),  e_i ~ Normal(0, noise_sigma)
//! ```
//!
//! The unadjusted gap regresses `y` on the indicator alone; the adjusted gap
//! adds every observed confounder. Confounders marked unobserved are still
//! generated but left out of the adjusted model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfoundError {
    #[error("n_per_group must be at least 2 + number of confounders ({required}), got {got}")]
    NotIdentifiable { required: usize, got: usize },
    #[error("confounder {index}: sigma_k must be positive and finite (got {sigma})")]
    InvalidSigma { index: usize, sigma: f64 },
    #[error("noise_sigma must be non-negative and finite (got {0})")]
    InvalidNoise(f64),
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("need at least one seed")]
    NoSeeds,
    #[error(transparent)]
    Ols(#[from] OlsError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OlsError {
    #[error("design has {rows} rows and {cols} columns; need rows >= cols >= 1")]
    Shape { rows: usize, cols: usize },
    #[error("outcome length {got} does not match {rows} design rows")]
    LengthMismatch { rows: usize, got: usize },
    #[error("design matrix is rank deficient (column {column} is linearly dependent on earlier columns)")]
    RankDeficient { column: usize },
}

fn default_observed() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confounder {
    pub beta_k: f64,
    pub mean_f: f64,
    pub mean_m: f64,
    pub sigma_k: f64,
    #[serde(default = "default_observed")]
    pub observed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    pub n_per_group: usize,
    pub beta0: f64,
    pub beta1: f64,
    #[serde(default)]
    pub confounders: Vec<Confounder>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl CohortConfig {
    pub fn validate(&self) -> Result<(), ConfoundError> {
        let required = 2 + self.confounders.len();
        if self.n_per_group < required {
            return Err(ConfoundError::NotIdentifiable { required, got: self.n_per_group });
        }
        if !self.beta0.is_finite() {
            return Err(ConfoundError::NonFinite("beta0"));
        }
        if !self.beta1.is_finite() {
            return Err(ConfoundError::NonFinite("beta1"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(ConfoundError::InvalidNoise(self.noise_sigma));
        }
        for (index, c) in self.confounders.iter().enumerate() {
            if !(c.beta_k.is_finite() && c.mean_f.is_finite() && c.mean_m.is_finite()) {
                return Err(ConfoundError::NonFinite("confounder parameters"));
            }
            if !(c.sigma_k.is_finite() && c.sigma_k > 0.0) {
                return Err(ConfoundError::InvalidSigma { index, sigma: c.sigma_k });
            }
        }
        Ok(())
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == rows), "ragged columns");
        let mut data = vec![0.0; rows * cols];
        for (j, column) in columns.iter().enumerate() {
            for (i, &v) in column.iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Matrix { rows: rows.len(), cols, data: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `sqrt(RSS / (rows - cols))`; zero when the fit is saturated.
    pub residual_sd: f64,
}

/// Relative size below which a pivot counts as zero.
const RANK_TOLERANCE: f64 = 1e-10;

/// Least squares via Householder QR.
pub fn ols_fit(x: &Matrix, y: &[f64]) -> Result<OlsFit, OlsError> {
    let (m, n) = (x.rows, x.cols);
    if n == 0 || m < n {
        return Err(OlsError::Shape { rows: m, cols: n });
    }
    if y.len() != m {
        return Err(OlsError::LengthMismatch { rows: m, got: y.len() });
    }

    let column_norms: Vec<f64> =
        (0..n).map(|j| (0..m).map(|i| x.get(i, j).powi(2)).sum::<f64>().sqrt()).collect();
    // column-major working copy
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| x.column(j)).collect();
    let mut qty = y.to_vec();

    for k in 0..n {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= RANK_TOLERANCE * column_norms[k] || column_norms[k] == 0.0 {
            return Err(OlsError::RankDeficient { column: k });
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        a[k][k] = alpha;
        for value in a[k][k + 1..].iter_mut() {
            *value = 0.0;
        }
        if vnorm2 == 0.0 {
            continue;
        }
        let reflect = |col: &mut [f64]| {
            let dot: f64 = v.iter().zip(col.iter()).map(|(p, q)| p * q).sum();
            let s = 2.0 * dot / vnorm2;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= s * vi;
            }
        };
        for col in a.iter_mut().skip(k + 1) {
            reflect(&mut col[k..]);
        }
        reflect(&mut qty[k..]);
    }

    // back substitution on R b = Q'y
    let r = |i: usize, j: usize| a[j][i];
    let mut beta = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| r(i, j) * beta[j]).sum();
        beta[i] = (qty[i] - s) / r(i, i);
    }

    // (X'X)^-1 = R^-1 R^-T; diagonal = squared row norms of R^-1
    let mut r_inv = vec![vec![0.0; n]; n];
    #[allow(clippy::needless_range_loop)]
    for j in 0..n {
        r_inv[j][j] = 1.0 / r(j, j);
        for i in (0..j).rev() {
            let s: f64 = (i + 1..=j).map(|l| r(i, l) * r_inv[l][j]).sum();
            r_inv[i][j] = -s / r(i, i);
        }
    }

    let fitted = x.mul_vec(&beta);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let dof = m - n;
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let residual_sd = if dof > 0 { (rss / dof as f64).sqrt() } else { 0.0 };
    let standard_errors =
        (0..n).map(|i| residual_sd * r_inv[i].iter().map(|v| v * v).sum::<f64>().sqrt()).collect();

    Ok(OlsFit { coefficients: beta, standard_errors, residuals, residual_sd })
}

/// A generated cohort; rows `0..n` are the reference group, `n..2n` the
/// comparison group.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub group: Vec<f64>,
    /// One column per configured confounder.
    pub confounders: Vec<Vec<f64>>,
    pub observed: Vec<bool>,
    pub outcome: Vec<f64>,
}

impl Cohort {
    pub fn len(&self) -> usize {
        self.outcome.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcome.is_empty()
    }

    /// Intercept and group indicator only.
    pub fn group_only_design(&self) -> Matrix {
        Matrix::from_columns(&[vec![1.0; self.len()], self.group.clone()])
    }

    /// Intercept, group indicator, then every observed confounder.
    pub fn adjusted_design(&self) -> Matrix {
        let mut columns = vec![vec![1.0; self.len()], self.group.clone()];
        columns.extend(
            self.confounders.iter().zip(&self.observed).filter(|(_, &seen)| seen).map(|(c, _)| c.clone()),
        );
        Matrix::from_columns(&columns)
    }
}

/// Draws a cohort. Per row: confounders in configured order, then the
/// noise term (always drawn, so the stream does not depend on `noise_sigma`).
pub fn generate_cohort(config: &CohortConfig) -> Result<Cohort, ConfoundError> {
    config.validate()?;
    let n = config.n_per_group;
    let k = config.confounders.len();
    let mut rng = SimRng::seed_from_u64(config.seed);

    let mut group = Vec::with_capacity(2 * n);
    let mut confounders = vec![Vec::with_capacity(2 * n); k];
    let mut outcome = Vec::with_capacity(2 * n);
    for row in 0..2 * n {
        let female = row >= n;
        let g = if female { 1.0 } else { 0.0 };
        let mut y = config.beta0 + config.beta1 * g;
        for (column, c) in confounders.iter_mut().zip(&config.confounders) {
            let mean = if female { c.mean_f } else { c.mean_m };
            let x = rng.normal(mean, c.sigma_k);
            y += c.beta_k * x;
            column.push(x);
        }
        let noise = rng.standard_normal();
        y += config.noise_sigma * noise;
        group.push(g);
        outcome.push(y);
    }
    Ok(Cohort {
        group,
        confounders,
        observed: config.confounders.iter().map(|c| c.observed).collect(),
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub seed: u64,
    /// Group coefficient of the indicator-only model (difference of means).
    pub gap_unadjusted: f64,
    /// Group coefficient with all observed confounders in the model.
    pub gap_adjusted: f64,
    pub gap_adjusted_se: f64,
    /// Adjusted model: intercept, group, observed confounders.
    pub coefficients: Vec<f64>,
    pub residual_sd: f64,
}

impl GapReport {
    /// `|adjusted| < |unadjusted|`
    pub fn shrinks(&self) -> bool {
        self.gap_adjusted.abs() < self.gap_unadjusted.abs()
    }
}

pub fn gap_decomposition(config: &CohortConfig) -> Result<GapReport, ConfoundError> {
    let cohort = generate_cohort(config)?;
    let unadjusted = ols_fit(&cohort.group_only_design(), &cohort.outcome)?;
    let adjusted = ols_fit(&cohort.adjusted_design(), &cohort.outcome)?;
    Ok(GapReport {
        seed: config.seed,
        gap_unadjusted: unadjusted.coefficients[1],
        gap_adjusted: adjusted.coefficients[1],
        gap_adjusted_se: adjusted.standard_errors[1],
        coefficients: adjusted.coefficients,
        residual_sd: adjusted.residual_sd,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanSd { mean, sd }
    }

    /// Standard error of the mean.
    pub fn se(&self, count: usize) -> f64 {
        self.sd / (count as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSeedReport {
    pub seeds: Vec<u64>,
    pub gap_unadjusted: MeanSd,
    pub gap_adjusted: MeanSd,
    /// `gap_unadjusted - gap_adjusted`, per seed.
    pub bias: MeanSd,
    pub reports: Vec<GapReport>,
}

/// Repeats the decomposition for seeds `config.seed, config.seed + 1, ...`.
pub fn gap_decomposition_seeds(
    config: &CohortConfig,
    count: usize,
) -> Result<MultiSeedReport, ConfoundError> {
    if count == 0 {
        return Err(ConfoundError::NoSeeds);
    }
    let seeds: Vec<u64> = (0..count as u64).map(|i| config.seed.wrapping_add(i)).collect();
    let reports = seeds
        .iter()
        .map(|&seed| gap_decomposition(&CohortConfig { seed, ..config.clone() }))
        .collect::<Result<Vec<_>, _>>()?;
    let unadjusted: Vec<f64> = reports.iter().map(|r| r.gap_unadjusted).collect();
    let adjusted: Vec<f64> = reports.iter().map(|r| r.gap_adjusted).collect();
    let bias: Vec<f64> = unadjusted.iter().zip(&adjusted).map(|(u, a)| u - a).collect();
    Ok(MultiSeedReport {
        seeds,
        gap_unadjusted: MeanSd::of(&unadjusted),
        gap_adjusted: MeanSd::of(&adjusted),
        bias: MeanSd::of(&bias),
        reports,
    })
}
