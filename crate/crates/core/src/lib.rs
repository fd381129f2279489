//! Reproducibility audits for correlation-based meta-analyses.
//!
//! * [`ingest`]: CSV study records, grouped into studies with all three
//!   correlation classes.
//! * [`fisher`]: per-study mean r, Fisher Z, standard error and p-value.
//! * [`pplot`]: rank-ordered p-value plots with uniformity diagnostics.
//! * [`tails`]: tail areas and ratios for two Normal group distributions.
//! * [`confound`]: synthetic cohorts showing omitted-confounder bias.
//! * [`report`] and [`svg`]: JSON, Markdown and SVG output.
//! * [`cli`]: the `metaplot` command line.

pub mod cli;
pub mod confound;
pub mod fisher;
pub mod ingest;
pub mod numeric;
pub mod pplot;
pub mod report;
pub mod rng;
pub mod svg;
pub mod tails;

pub use numeric::Probability;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
