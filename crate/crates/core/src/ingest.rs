//! CSV ingestion of study-level correlation records.
//!
//! Expected header (order free, names exact):
//!
//! ```text
//! study_id,author,year,title,journal,class,r,n
//! ```
//!
//! `title` and `journal` may be empty. `class` is one of `ICC`, `ECC`, `IEC`
//! (case-sensitive).

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const REQUIRED_COLUMNS: [&str; 8] = ["study_id", "author", "year", "title", "journal", "class", "r", "n"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CorrelationClass {
    /// implicit–criterion
    #[serde(rename = "ICC")]
    Icc,
    /// explicit–criterion
    #[serde(rename = "ECC")]
    Ecc,
    /// implicit–explicit
    #[serde(rename = "IEC")]
    Iec,
}

impl CorrelationClass {
    pub const ALL: [CorrelationClass; 3] =
        [CorrelationClass::Icc, CorrelationClass::Ecc, CorrelationClass::Iec];

    pub fn tag(self) -> &'static str {
        match self {
            CorrelationClass::Icc => "ICC",
            CorrelationClass::Ecc => "ECC",
            CorrelationClass::Iec => "IEC",
        }
    }
}

impl fmt::Display for CorrelationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for CorrelationClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ICC" => Ok(CorrelationClass::Icc),
            "ECC" => Ok(CorrelationClass::Ecc),
            "IEC" => Ok(CorrelationClass::Iec),
            other => Err(format!("unknown correlation class {other:?} (expected ICC, ECC or IEC)")),
        }
    }
}

/// One extracted correlation observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub study_id: String,
    pub author: String,
    pub year: i32,
    pub title: Option<String>,
    pub journal: Option<String>,
    pub class: CorrelationClass,
    pub r: f64,
    pub n: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct RowError {
    /// 1-based line in the input, header included.
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("CSV header is missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("{} invalid row(s); first: {}", .0.len(), .0[0])]
    Rows(Vec<RowError>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Collect every row error.
    #[default]
    Collect,
    /// Stop at the first row error.
    Strict,
}

/// Parses every row, in input order, into a record or a positioned error.
pub fn parse_rows<R: Read>(
    input: R,
    mode: ParseMode,
) -> Result<Vec<Result<StudyRecord, RowError>>, IngestError> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(input);

    let headers = reader.headers()?.clone();
    let mut index = [0usize; 8];
    for (slot, name) in index.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = headers.iter().position(|h| h == name).ok_or(IngestError::MissingColumn(name))?;
    }

    let mut rows = Vec::new();
    for result in reader.records() {
        let record = result?;
        let line = record.position().map_or(0, |p| p.line());
        let row = parse_row(&record, &index).map_err(|message| RowError { line, message });
        let failed = row.is_err();
        rows.push(row);
        if failed && mode == ParseMode::Strict {
            break;
        }
    }
    Ok(rows)
}

/// Parses and validates all records. Any row error fails the whole parse;
/// the error carries every offending row (or only the first, in strict mode).
pub fn parse_records<R: Read>(input: R, mode: ParseMode) -> Result<Vec<StudyRecord>, IngestError> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for row in parse_rows(input, mode)? {
        match row {
            Ok(r) => records.push(r),
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        Ok(records)
    } else {
        Err(IngestError::Rows(errors))
    }
}

fn parse_row(record: &csv::StringRecord, index: &[usize; 8]) -> Result<StudyRecord, String> {
    let field = |i: usize| -> Result<&str, String> {
        record.get(index[i]).ok_or_else(|| format!("missing column `{}`", REQUIRED_COLUMNS[i]))
    };
    let optional = |i: usize| -> Result<Option<String>, String> {
        let v = field(i)?;
        Ok((!v.is_empty()).then(|| v.to_string()))
    };

    let study_id = field(0)?;
    if study_id.is_empty() {
        return Err("study_id must not be empty".to_string());
    }
    let year_raw = field(2)?;
    let year = year_raw.parse::<i32>().map_err(|_| format!("unparseable year {year_raw:?}"))?;
    let class = field(5)?.parse::<CorrelationClass>()?;

    let r_raw = field(6)?;
    let r = r_raw
        .parse::<f64>()
        .ok()
        .filter(|r| r.is_finite())
        .ok_or_else(|| format!("unparseable correlation {r_raw:?}"))?;
    if r.abs() >= 1.0 {
        return Err(format!("correlation out of open interval (-1, 1): {r}"));
    }

    let n_raw = field(7)?;
    let n = n_raw.parse::<u32>().map_err(|_| format!("unparseable sample size {n_raw:?}"))?;
    if n <= 3 {
        return Err(format!("sample size must exceed 3 (got {n})"));
    }

    Ok(StudyRecord {
        study_id: study_id.to_string(),
        author: field(1)?.to_string(),
        year,
        title: optional(3)?,
        journal: optional(4)?,
        class,
        r,
        n,
    })
}

/// All records of one study, partitioned by class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyGroup {
    pub study_id: String,
    pub icc: Vec<StudyRecord>,
    pub ecc: Vec<StudyRecord>,
    pub iec: Vec<StudyRecord>,
}

impl StudyGroup {
    fn new(study_id: String) -> Self {
        StudyGroup { study_id, icc: Vec::new(), ecc: Vec::new(), iec: Vec::new() }
    }

    pub fn records(&self, class: CorrelationClass) -> &[StudyRecord] {
        match class {
            CorrelationClass::Icc => &self.icc,
            CorrelationClass::Ecc => &self.ecc,
            CorrelationClass::Iec => &self.iec,
        }
    }

    fn records_mut(&mut self, class: CorrelationClass) -> &mut Vec<StudyRecord> {
        match class {
            CorrelationClass::Icc => &mut self.icc,
            CorrelationClass::Ecc => &mut self.ecc,
            CorrelationClass::Iec => &mut self.iec,
        }
    }

    pub fn missing_classes(&self) -> Vec<CorrelationClass> {
        CorrelationClass::ALL.into_iter().filter(|&c| self.records(c).is_empty()).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_classes().is_empty()
    }

    pub fn record_count(&self) -> usize {
        self.icc.len() + self.ecc.len() + self.iec.len()
    }

    /// Participant count of the study: the largest `n` over its records,
    /// since every correlation in a study is computed on (a subset of) the
    /// same participants.
    pub fn participants(&self) -> u64 {
        CorrelationClass::ALL
            .into_iter()
            .flat_map(|c| self.records(c))
            .map(|r| u64::from(r.n))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedStudy {
    pub study_id: String,
    pub missing: Vec<CorrelationClass>,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grouping {
    /// Complete studies in ascending `study_id` order.
    pub groups: Vec<StudyGroup>,
    pub dropped: Vec<DroppedStudy>,
    /// Sum of per-study participant counts over retained studies
    /// (see [`StudyGroup::participants`]).
    pub total_participants: u64,
    pub warning: Option<String>,
}

impl Grouping {
    pub fn retained_count(&self) -> usize {
        self.groups.len()
    }

    pub fn dropped_count(&self) -> usize {
        self.dropped.len()
    }
}

/// Groups records by study and keeps only studies with all three classes.
pub fn group_complete_studies(records: &[StudyRecord]) -> Grouping {
    let mut by_study: BTreeMap<&str, StudyGroup> = BTreeMap::new();
    for record in records {
        by_study
            .entry(record.study_id.as_str())
            .or_insert_with(|| StudyGroup::new(record.study_id.clone()))
            .records_mut(record.class)
            .push(record.clone());
    }

    let mut groups = Vec::new();
    let mut dropped = Vec::new();
    for (_, group) in by_study {
        if group.is_complete() {
            groups.push(group);
        } else {
            dropped.push(DroppedStudy {
                study_id: group.study_id.clone(),
                missing: group.missing_classes(),
                records: group.record_count(),
            });
        }
    }

    let total_participants = groups.iter().map(StudyGroup::participants).sum();
    let warning = if records.is_empty() {
        Some("no records in input".to_string())
    } else if groups.is_empty() {
        Some("no study has records for all of ICC, ECC and IEC".to_string())
    } else {
        None
    };

    Grouping { groups, dropped, total_participants, warning }
}
