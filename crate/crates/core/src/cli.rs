//! `metaplot` command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 validation failure.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confound::{self, CohortConfig, GapReport, MultiSeedReport};
use crate::fisher::{AggregationMode, PipelineOptions, SampleSizeMode, Sidedness};
use crate::ingest::IngestError;
use crate::numeric::Probability;
use crate::pplot::{Classification, ClassifyRules};
use crate::report::{self, AuditConfig, AuditError};
use crate::svg;
use crate::tails::{self, GaussianSpec, SpecPair, TailTable};

pub const NO_COLOR_ENV: &str = "METAPLOT_NO_COLOR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Validation(_) => 2,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Parser)]
#[command(name = "metaplot", version, about = "Audit correlation meta-analyses with p-value plots")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fisher Z p-values and p-value plots for ICC, ECC and IEC correlations.
    Audit(AuditArgs),
    /// Tail areas and ratios for two Normal group distributions.
    Tails(TailsArgs),
    /// Unadjusted vs confounder-adjusted group gaps in a synthetic cohort.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Format {
    Json,
    Md,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggArg {
    MeanR,
    MeanZ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleSizeArg {
    ClassSum,
    StudyShared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    G,
    Things,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Study-level CSV (study_id,author,year,title,journal,class,r,n).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "metaplot-out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Upper-tail p-values instead of two-sided.
    #[arg(long)]
    pub one_sided: bool,
    #[arg(long, value_enum, default_value_t = AggArg::MeanR)]
    pub agg: AggArg,
    /// Sample size behind an aggregated class statistic.
    #[arg(long, value_enum, default_value_t = SampleSizeArg::ClassSum)]
    pub n_mode: SampleSizeArg,
    #[arg(long, default_value_t = 0.1)]
    pub null_max_frac: f64,
    #[arg(long, default_value_t = 0.05)]
    pub null_min_ks_p: f64,
    #[arg(long, default_value_t = 0.5)]
    pub effect_min_frac: f64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "json,md,svg")]
    pub format: Vec<Format>,
    /// Stop at the first invalid row.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct TailsArgs {
    #[arg(long, value_enum, conflicts_with_all = ["other_mu", "other_sigma"])]
    pub preset: Option<Preset>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3", allow_hyphen_values = true)]
    pub thresholds: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub ref_mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub ref_sigma: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub other_mu: Option<f64>,
    #[arg(long)]
    pub other_sigma: Option<f64>,
    #[arg(long, default_value = "metaplot-out")]
    pub out: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "json,md,svg")]
    pub format: Vec<Format>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Cohort configuration JSON.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "metaplot-out")]
    pub out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of consecutive seeds; above 1 reports mean and sd over seeds.
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
}

/// Console styling; plain when colour is off.
#[derive(Debug, Clone, Copy)]
pub struct Style {
    pub color: bool,
}

impl Style {
    pub fn from_env() -> Self {
        use std::io::IsTerminal;
        Style { color: std::env::var_os(NO_COLOR_ENV).is_none() && std::io::stdout().is_terminal() }
    }

    fn verdict(&self, c: Classification) -> String {
        if !self.color {
            return c.label().to_string();
        }
        let code = match c {
            Classification::NullConsistent => "32",
            Classification::EffectConsistent => "31",
            Classification::Ambiguous => "33",
        };
        format!("\x1b[{code}m{}\x1b[0m", c.label())
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, style: Style) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Audit(a) => run_audit(a, out, err, style),
        Command::Tails(a) => run_tails(a, out),
        Command::Simulate(a) => run_simulate(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn probability_arg(name: &str, v: f64, open: bool) -> Result<f64, CliError> {
    let ok = if open { v > 0.0 && v < 1.0 } else { (0.0..=1.0).contains(&v) };
    if ok {
        Ok(v)
    } else {
        Err(CliError::Validation(format!(
            "--{name} must lie in {} (got {v})",
            if open { "(0, 1)" } else { "[0, 1]" }
        )))
    }
}

fn write_artifacts(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (name, bytes) in files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

impl AuditArgs {
    pub fn audit_config(&self) -> Result<AuditConfig, CliError> {
        let alpha = probability_arg("alpha", self.alpha, true)?;
        Ok(AuditConfig {
            alpha: Probability::new(alpha).expect("checked"),
            options: PipelineOptions {
                sidedness: if self.one_sided { Sidedness::OneSided } else { Sidedness::TwoSided },
                aggregation: match self.agg {
                    AggArg::MeanR => AggregationMode::MeanR,
                    AggArg::MeanZ => AggregationMode::MeanZ,
                },
                sample_size: match self.n_mode {
                    SampleSizeArg::ClassSum => SampleSizeMode::ClassSum,
                    SampleSizeArg::StudyShared => SampleSizeMode::StudyShared,
                },
            },
            rules: ClassifyRules {
                null_max_frac: probability_arg("null-max-frac", self.null_max_frac, false)?,
                null_min_ks_p: probability_arg("null-min-ks-p", self.null_min_ks_p, false)?,
                effect_min_frac: probability_arg("effect-min-frac", self.effect_min_frac, false)?,
            },
        })
    }
}

pub fn run_audit(
    args: &AuditArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
    style: Style,
) -> Result<(), CliError> {
    let config = args.audit_config()?;
    let input = fs::read(&args.input).map_err(|e| CliError::io(&args.input, e))?;

    let parsed = if args.strict {
        crate::ingest::parse_records(input.as_slice(), crate::ingest::ParseMode::Strict).map(|_| ())
    } else {
        Ok(())
    };
    let report = parsed
        .map_err(AuditError::from)
        .and_then(|()| report::run_audit_pipeline(&input, &config))
        .map_err(|e| {
            if let AuditError::Ingest(IngestError::Rows(rows)) = &e {
                for row in rows {
                    let _ = writeln!(err, "{}: {row}", args.input.display());
                }
            }
            CliError::Validation(e.to_string())
        })?;

    let formats: BTreeSet<Format> = args.format.iter().copied().collect();
    let mut files = Vec::new();
    if formats.contains(&Format::Json) {
        files.push(("report.json".to_string(), report::render_json(&report)));
    }
    if formats.contains(&Format::Md) {
        files.push(("report.md".to_string(), report::render_markdown(&report).into_bytes()));
    }
    if formats.contains(&Format::Svg) {
        for c in &report.classes {
            files.push((
                format!("pvalue_{}.svg", c.class.tag().to_lowercase()),
                svg::render_svg_pplot(&c.plot).into_bytes(),
            ));
        }
        let z: Vec<_> = report.classes.iter().map(|c| c.z_summary.clone()).collect();
        files.push(("zstats.svg".to_string(), svg::render_svg_zpanel(&z).into_bytes()));
    }
    write_artifacts(&args.out, &files)?;

    if let Some(w) = &report.grouping.warning {
        let _ = writeln!(err, "warning: {w}");
    }
    for d in &report.grouping.dropped {
        let missing: Vec<&str> = d.missing.iter().map(|c| c.tag()).collect();
        let _ = writeln!(err, "dropped study {}: missing {}", d.study_id, missing.join(", "));
    }
    for c in &report.classes {
        let d = &c.plot.diagnostics;
        let below = (d.frac_below_alpha.value() * c.plot.len() as f64).round() as usize;
        let _ = writeln!(
            out,
            "{}: {} ({} studies, KS p = {:.4}, {below} below {})",
            c.class,
            style.verdict(d.classification),
            c.plot.len(),
            d.ks_p.value(),
            config.alpha
        );
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailsOutput {
    pub tool: String,
    pub tool_version: String,
    pub preset: Option<String>,
    pub table: TailTable,
}

impl TailsArgs {
    pub fn spec_pair(&self) -> Result<SpecPair, CliError> {
        let invalid = |e: tails::TailError| CliError::Validation(e.to_string());
        match (self.preset, self.other_mu, self.other_sigma) {
            (Some(Preset::G), ..) => Ok(SpecPair::g()),
            (Some(Preset::Things), ..) => Ok(SpecPair::things()),
            (None, Some(mu), sigma) => Ok(SpecPair {
                name: "custom".into(),
                reference: GaussianSpec::new("reference", self.ref_mu, self.ref_sigma).map_err(invalid)?,
                other: GaussianSpec::new("other", mu, sigma.unwrap_or(1.0)).map_err(invalid)?,
            }),
            (None, None, _) => Err(CliError::Validation(
                "give --preset g|things or --other-mu (and optionally --other-sigma)".into(),
            )),
        }
    }
}

pub fn run_tails(args: &TailsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let pair = args.spec_pair()?;
    let table = tails::ratio_table(&pair.reference, &pair.other, &args.thresholds)
        .map_err(|e| CliError::Validation(e.to_string()))?;

    let output = TailsOutput {
        tool: "metaplot".into(),
        tool_version: crate::TOOL_VERSION.into(),
        preset: args.preset.map(|p| match p {
            Preset::G => "g".to_string(),
            Preset::Things => "things".to_string(),
        }),
        table,
    };

    let formats: BTreeSet<Format> = args.format.iter().copied().collect();
    let mut files = Vec::new();
    if formats.contains(&Format::Json) {
        files.push(("tails.json".to_string(), report::render_json(&output)));
    }
    if formats.contains(&Format::Md) {
        files.push(("tails.md".to_string(), report::tail_table_markdown(&output.table).into_bytes()));
    }
    if formats.contains(&Format::Svg) {
        let specs = [pair.other.clone(), pair.reference.clone()];
        let lo = specs.iter().map(|s| s.mu - 4.0 * s.sigma).fold(f64::INFINITY, f64::min).floor();
        let hi = specs.iter().map(|s| s.mu + 4.0 * s.sigma).fold(f64::NEG_INFINITY, f64::max).ceil();
        let svg =
            svg::render_svg_gaussians(&specs, lo, hi).map_err(|e| CliError::Validation(e.to_string()))?;
        files.push(("tails.svg".to_string(), svg.into_bytes()));
    }
    write_artifacts(&args.out, &files)?;

    let _ = write!(out, "{}", report::tail_table_markdown(&output.table));
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOutput {
    pub tool: String,
    pub tool_version: String,
    pub config: CohortConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<GapReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multi_seed: Option<MultiSeedReport>,
}

pub fn parse_cohort_config(bytes: &[u8]) -> Result<CohortConfig, CliError> {
    let config: CohortConfig = serde_json::from_slice(bytes).map_err(|e| {
        CliError::Validation(format!(
            "invalid cohort config at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    config.validate().map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(config)
}

pub fn run_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let bytes = fs::read(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let mut config = parse_cohort_config(&bytes)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let invalid = |e: confound::ConfoundError| CliError::Validation(e.to_string());

    let output = if args.seeds > 1 {
        let multi = confound::gap_decomposition_seeds(&config, args.seeds).map_err(invalid)?;
        let _ = writeln!(
            out,
            "seeds {}..={}: unadjusted gap {:.4} ± {:.4}, adjusted gap {:.4} ± {:.4}, bias {:.4} ± {:.4}",
            multi.seeds[0],
            multi.seeds[multi.seeds.len() - 1],
            multi.gap_unadjusted.mean,
            multi.gap_unadjusted.sd,
            multi.gap_adjusted.mean,
            multi.gap_adjusted.sd,
            multi.bias.mean,
            multi.bias.sd
        );
        SimulateOutput {
            tool: "metaplot".into(),
            tool_version: crate::TOOL_VERSION.into(),
            config,
            report: None,
            multi_seed: Some(multi),
        }
    } else {
        let gap = confound::gap_decomposition(&config).map_err(invalid)?;
        let _ = writeln!(
            out,
            "unadjusted gap {:.4}, adjusted gap {:.4} (SE {:.4}): {}",
            gap.gap_unadjusted,
            gap.gap_adjusted,
            gap.gap_adjusted_se,
            if gap.shrinks() {
                "gap shrinks after adjustment"
            } else {
                "gap does not shrink after adjustment"
            }
        );
        SimulateOutput {
            tool: "metaplot".into(),
            tool_version: crate::TOOL_VERSION.into(),
            config,
            report: Some(gap),
            multi_seed: None,
        }
    };
    write_artifacts(&args.out, &[("gap_report.json".to_string(), report::render_json(&output))])?;
    Ok(())
}
