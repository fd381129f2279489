//! Per-study aggregation and Fisher Z p-values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{CorrelationClass, StudyGroup};
use crate::numeric::{self, NumericError, Probability};

pub const HISTOGRAM_BIN_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FisherError {
    #[error("study {study_id} has no {class} records")]
    ClassAbsent { study_id: String, class: CorrelationClass },
    #[error("sample size must exceed 3 (got {0})")]
    SampleTooSmall(u64),
    #[error("no {0} summaries to describe")]
    Empty(CorrelationClass),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    /// `p = 2 * sf(|z|)`
    #[default]
    TwoSided,
    /// `p = sf(z)`, upper tail (positive association).
    OneSided,
}

/// How several records of one class within a study become one statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationMode {
    /// Fisher Z of the mean r.
    #[default]
    MeanR,
    /// Mean of the per-record Fisher Z values.
    MeanZ,
}

/// Which `n` backs the standard error of an aggregated class statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleSizeMode {
    /// Sum of `n` over the class's records.
    #[default]
    ClassSum,
    /// The study's participant count, shared by all classes.
    StudyShared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub sidedness: Sidedness,
    pub aggregation: AggregationMode,
    pub sample_size: SampleSizeMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherStats {
    pub fisher_z: f64,
    pub se: f64,
    pub z_score: f64,
    pub p_value: Probability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub study_id: String,
    pub class: CorrelationClass,
    pub mean_r: f64,
    pub n: u64,
    pub fisher_z: f64,
    pub se: f64,
    pub z_score: f64,
    pub p_value: Probability,
}

/// Mean r and aggregated sample size of one class within a study.
pub fn aggregate_study(
    group: &StudyGroup,
    class: CorrelationClass,
    sample_size: SampleSizeMode,
) -> Result<(f64, u64), FisherError> {
    let records = group.records(class);
    if records.is_empty() {
        return Err(FisherError::ClassAbsent { study_id: group.study_id.clone(), class });
    }
    let mean_r = records.iter().map(|r| r.r).sum::<f64>() / records.len() as f64;
    let n = match sample_size {
        SampleSizeMode::ClassSum => records.iter().map(|r| u64::from(r.n)).sum(),
        SampleSizeMode::StudyShared => group.participants(),
    };
    Ok((mean_r, n))
}

pub fn standard_error(n: u64) -> Result<f64, FisherError> {
    if n <= 3 {
        return Err(FisherError::SampleTooSmall(n));
    }
    Ok((1.0 / (n - 3) as f64).sqrt())
}

pub fn z_to_pvalue(z_score: f64, sidedness: Sidedness) -> Result<Probability, FisherError> {
    let p = match sidedness {
        Sidedness::TwoSided => Probability::saturating(2.0 * numeric::std_normal_sf(z_score.abs())?.value()),
        Sidedness::OneSided => numeric::std_normal_sf(z_score)?,
    };
    Ok(p)
}

fn stats_from_z(fisher_z: f64, n: u64, sidedness: Sidedness) -> Result<FisherStats, FisherError> {
    let se = standard_error(n)?;
    let z_score = fisher_z / se;
    Ok(FisherStats { fisher_z, se, z_score, p_value: z_to_pvalue(z_score, sidedness)? })
}

/// Fisher Z, its standard error `1/sqrt(n-3)`, the z-score and its p-value.
pub fn r_to_pvalue(r: f64, n: u64, sidedness: Sidedness) -> Result<FisherStats, FisherError> {
    stats_from_z(numeric::arctanh(r)?, n, sidedness)
}

pub fn summarize_study(
    group: &StudyGroup,
    class: CorrelationClass,
    options: &PipelineOptions,
) -> Result<StudySummary, FisherError> {
    let (mean_r, n) = aggregate_study(group, class, options.sample_size)?;
    let fisher_z = match options.aggregation {
        AggregationMode::MeanR => numeric::arctanh(mean_r)?,
        AggregationMode::MeanZ => {
            let records = group.records(class);
            let mut sum = 0.0;
            for record in records {
                sum += numeric::arctanh(record.r)?;
            }
            sum / records.len() as f64
        }
    };
    let stats = stats_from_z(fisher_z, n, options.sidedness)?;
    Ok(StudySummary {
        study_id: group.study_id.clone(),
        class,
        mean_r,
        n,
        fisher_z: stats.fisher_z,
        se: stats.se,
        z_score: stats.z_score,
        p_value: stats.p_value,
    })
}

/// Summaries of one class across studies, in group order.
pub fn summarize_class(
    groups: &[StudyGroup],
    class: CorrelationClass,
    options: &PipelineOptions,
) -> Result<Vec<StudySummary>, FisherError> {
    groups.iter().map(|g| summarize_study(g, class, options)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Descriptive statistics of the z-scores of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZSummary {
    pub class: CorrelationClass,
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub histogram: Vec<HistogramBin>,
}

/// Quantile of sorted data by linear interpolation between closest ranks
/// (position `(n - 1) * q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Fixed-width bins aligned to multiples of `width`, covering `[min, max]`.
pub fn histogram(sorted: &[f64], width: f64) -> Vec<HistogramBin> {
    let (Some(&min), Some(&max)) = (sorted.first(), sorted.last()) else {
        return Vec::new();
    };
    let start = (min / width).floor() * width;
    let bins = (((max - start) / width).floor() as usize + 1).max(1);
    let mut counts = vec![0usize; bins];
    for &x in sorted {
        let i = (((x - start) / width).floor() as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            lo: start + i as f64 * width,
            hi: start + (i + 1) as f64 * width,
            count,
        })
        .collect()
}

pub fn summarize_z(summaries: &[StudySummary], class: CorrelationClass) -> Result<ZSummary, FisherError> {
    let mut z: Vec<f64> = summaries.iter().filter(|s| s.class == class).map(|s| s.z_score).collect();
    if z.is_empty() {
        return Err(FisherError::Empty(class));
    }
    z.sort_by(f64::total_cmp);
    Ok(ZSummary {
        class,
        count: z.len(),
        min: z[0],
        q1: quantile_sorted(&z, 0.25),
        median: quantile_sorted(&z, 0.5),
        q3: quantile_sorted(&z, 0.75),
        max: z[z.len() - 1],
        histogram: histogram(&z, HISTOGRAM_BIN_WIDTH),
    })
}
