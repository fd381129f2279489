//! Audit pipeline and its JSON / Markdown serializations.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::confound::GapReport;
use crate::fisher::{self, FisherError, PipelineOptions, StudySummary, ZSummary};
use crate::ingest::{self, CorrelationClass, DroppedStudy, IngestError, ParseMode};
use crate::numeric::Probability;
use crate::pplot::{self, ClassifyRules, PValuePlot, PlotError};
use crate::tails::TailTable;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Fisher(#[from] FisherError),
    #[error("{class}: {source}")]
    Plot { class: CorrelationClass, source: PlotError },
    #[error("no complete studies to audit: {0}")]
    NoStudies(String),
}

/// Settings of an audit run, echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub alpha: Probability,
    pub options: PipelineOptions,
    pub rules: ClassifyRules,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            alpha: Probability::new(0.05).expect("valid alpha"),
            options: PipelineOptions::default(),
            rules: ClassifyRules::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub tool_version: String,
    /// SHA-256 of the raw input bytes, hex.
    pub input_sha256: String,
    pub config: AuditConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingSummary {
    pub records: usize,
    pub retained_studies: usize,
    pub dropped: Vec<DroppedStudy>,
    /// Sum over retained studies of the largest `n` within each study.
    pub total_participants: u64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: CorrelationClass,
    pub studies: Vec<StudySummary>,
    /// p-values of `studies` at 4 decimals, same order.
    pub p_values_display: Vec<String>,
    pub z_summary: ZSummary,
    pub plot: PValuePlot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub metadata: Metadata,
    pub grouping: GroupingSummary,
    pub classes: Vec<ClassReport>,
    #[serde(default)]
    pub tails: Vec<TailTable>,
    #[serde(default)]
    pub gap: Option<GapReport>,
}

impl AuditReport {
    pub fn class(&self, class: CorrelationClass) -> Option<&ClassReport> {
        self.classes.iter().find(|c| c.class == class)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn display_p(p: Probability) -> String {
    format!("{:.4}", p.value())
}

/// Parse, group, summarize and plot every correlation class.
pub fn run_audit_pipeline(input: &[u8], config: &AuditConfig) -> Result<AuditReport, AuditError> {
    let records = ingest::parse_records(input, ParseMode::Collect)?;
    let grouping = ingest::group_complete_studies(&records);
    if grouping.groups.is_empty() {
        return Err(AuditError::NoStudies(grouping.warning.clone().unwrap_or_default()));
    }

    let mut classes = Vec::with_capacity(3);
    for class in CorrelationClass::ALL {
        let studies = fisher::summarize_class(&grouping.groups, class, &config.options)?;
        let z_summary = fisher::summarize_z(&studies, class)?;
        let p_values: Vec<Probability> = studies.iter().map(|s| s.p_value).collect();
        let plot = pplot::build_plot(class, &p_values, config.alpha, &config.rules)
            .map_err(|source| AuditError::Plot { class, source })?;
        classes.push(ClassReport {
            class,
            p_values_display: p_values.iter().map(|&p| display_p(p)).collect(),
            studies,
            z_summary,
            plot,
        });
    }

    Ok(AuditReport {
        metadata: Metadata {
            tool: "metaplot".into(),
            tool_version: crate::TOOL_VERSION.into(),
            input_sha256: sha256_hex(input),
            config: config.clone(),
        },
        grouping: GroupingSummary {
            records: records.len(),
            retained_studies: grouping.retained_count(),
            dropped: grouping.dropped,
            total_participants: grouping.total_participants,
            warning: grouping.warning,
        },
        classes,
        tails: Vec::new(),
        gap: None,
    })
}

/// Pretty JSON with a trailing newline. Key order follows field order.
pub fn render_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize infallibly");
    out.push(b'\n');
    out
}

pub fn parse_report(bytes: &[u8]) -> Result<AuditReport, serde_json::Error> {
    serde_json::from_slice(bytes)
}

pub fn tail_table_markdown(table: &TailTable) -> String {
    let mut md = String::new();
    let _ = writeln!(
        md,
        "| SD relative to {} | AUC {} | AUC {} | Ratio |",
        table.reference.label, table.reference.label, table.other.label
    );
    md.push_str("|---:|---:|---:|---:|\n");
    for row in &table.rows {
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} |",
            row.threshold, row.auc_ref_display, row.auc_other_display, row.ratio_display
        );
    }
    md
}

pub fn render_markdown(report: &AuditReport) -> String {
    let mut md = String::new();
    let cfg = &report.metadata.config;
    let _ = writeln!(md, "# p-value plot audit\n");
    let _ = writeln!(md, "- tool: {} {}", report.metadata.tool, report.metadata.tool_version);
    let _ = writeln!(md, "- input sha256: `{}`", report.metadata.input_sha256);
    let _ = writeln!(
        md,
        "- alpha: {}; sidedness: {:?}; aggregation: {:?}; sample size: {:?}",
        cfg.alpha, cfg.options.sidedness, cfg.options.aggregation, cfg.options.sample_size
    );
    let _ = writeln!(
        md,
        "- rules: null if frac(p < alpha) <= {} and KS p > {}; effect if frac(p < alpha) >= {}",
        cfg.rules.null_max_frac, cfg.rules.null_min_ks_p, cfg.rules.effect_min_frac
    );
    let g = &report.grouping;
    let _ = writeln!(
        md,
        "- studies: {} complete, {} dropped, {} records, summed per-study n = {}",
        g.retained_studies,
        g.dropped.len(),
        g.records,
        g.total_participants
    );
    if let Some(w) = &g.warning {
        let _ = writeln!(md, "- warning: {w}");
    }

    md.push_str("\n## Verdicts\n\n");
    md.push_str("| Class | Studies | KS D | KS p | Slope | frac(p < alpha) | min p | Verdict |\n");
    md.push_str("|---|---:|---:|---:|---:|---:|---:|---|\n");
    for c in &report.classes {
        let d = &c.plot.diagnostics;
        let _ = writeln!(
            md,
            "| {} | {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {} |",
            c.class,
            c.studies.len(),
            d.ks_statistic,
            d.ks_p.value(),
            d.slope_fit,
            d.frac_below_alpha.value(),
            d.min_p.value(),
            d.classification.label()
        );
    }

    md.push_str("\n## Z statistics\n\n");
    md.push_str("| Class | Min | Q1 | Median | Q3 | Max |\n|---|---:|---:|---:|---:|---:|\n");
    for c in &report.classes {
        let z = &c.z_summary;
        let _ = writeln!(
            md,
            "| {} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} |",
            z.class, z.min, z.q1, z.median, z.q3, z.max
        );
    }

    for c in &report.classes {
        let _ = writeln!(md, "\n## {} studies\n", c.class);
        let _ = writeln!(md, "![{} p-value plot](pvalue_{}.svg)\n", c.class, c.class.tag().to_lowercase());
        md.push_str("| Study | mean r | n | Fisher Z | SE | z | p |\n|---|---:|---:|---:|---:|---:|---:|\n");
        for (s, p) in c.studies.iter().zip(&c.p_values_display) {
            let _ = writeln!(
                md,
                "| {} | {:.4} | {} | {:.4} | {:.4} | {:.3} | {} |",
                s.study_id, s.mean_r, s.n, s.fisher_z, s.se, s.z_score, p
            );
        }
        for w in &c.plot.warnings {
            let _ = writeln!(md, "\n> {w}");
        }
    }

    for table in &report.tails {
        md.push_str("\n## Tail areas\n\n");
        md.push_str(&tail_table_markdown(table));
    }
    if let Some(gap) = &report.gap {
        let _ = writeln!(
            md,
            "\n## Group gap\n\n- unadjusted: {:.4}\n- adjusted: {:.4} (SE {:.4})",
            gap.gap_unadjusted, gap.gap_adjusted, gap.gap_adjusted_se
        );
    }
    md
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(rows: &[(&str, &str, f64, u32)]) -> Vec<u8> {
        let mut s = String::from("study_id,author,year,title,journal,class,r,n\n");
        for (id, class, r, n) in rows {
            s.push_str(&format!("{id},A,2001,,,{class},{r},{n}\n"));
        }
        s.into_bytes()
    }

    fn minimal() -> Vec<u8> {
        let mut rows = Vec::new();
        for (i, id) in ["a", "b", "c"].iter().enumerate() {
            for class in ["ICC", "ECC", "IEC"] {
                rows.push((*id, class, 0.05 * i as f64 - 0.05, 40 + i as u32));
            }
        }
        csv(&rows)
    }

    #[test]
    fn pipeline_on_minimal_input() {
        let report = run_audit_pipeline(&minimal(), &AuditConfig::default()).unwrap();
        assert_eq!(report.classes.len(), 3);
        assert_eq!(report.grouping.retained_studies, 3);
        assert_eq!(report.grouping.total_participants, 40 + 41 + 42);
        assert_eq!(report.metadata.input_sha256.len(), 64);
        let icc = report.class(CorrelationClass::Icc).unwrap();
        assert_eq!(icc.plot.len(), 3);
        assert_eq!(icc.p_values_display.len(), 3);
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let report = run_audit_pipeline(&minimal(), &AuditConfig::default()).unwrap();
        let a = render_json(&report);
        let b = render_json(&report);
        assert_eq!(a, b);
        assert_eq!(parse_report(&a).unwrap(), report);
    }

    #[test]
    fn too_few_studies_is_a_plot_error() {
        let input = csv(&[("a", "ICC", 0.1, 10), ("a", "ECC", 0.1, 10), ("a", "IEC", 0.1, 10)]);
        let err = run_audit_pipeline(&input, &AuditConfig::default()).unwrap_err();
        assert!(matches!(err, AuditError::Plot { source: PlotError::TooFew(1), .. }));
    }

    #[test]
    fn no_complete_studies() {
        let input = csv(&[("a", "ICC", 0.1, 10)]);
        assert!(matches!(run_audit_pipeline(&input, &AuditConfig::default()), Err(AuditError::NoStudies(_))));
    }

    #[test]
    fn markdown_mentions_every_class() {
        let report = run_audit_pipeline(&minimal(), &AuditConfig::default()).unwrap();
        let md = render_markdown(&report);
        for tag in ["ICC", "ECC", "IEC"] {
            assert!(md.contains(&format!("## {tag} studies")));
        }
        assert!(md.contains("pvalue_icc.svg"));
    }
}
