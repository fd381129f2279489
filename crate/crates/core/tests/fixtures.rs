//! Bundled fixtures are regenerated here and compared byte for byte.
//! Run with `METAPLOT_BLESS=1` to rewrite them.

mod common;

use common::*;
use metaplot::ingest::{group_complete_studies, parse_records, ParseMode};

#[test]
fn null_fixture_is_current() {
    assert_matches_file(&fixture("null_27.csv"), null_fixture_csv().as_bytes());
}

#[test]
fn effect_fixture_is_current() {
    assert_matches_file(&fixture("effect_icc.csv"), effect_fixture_csv().as_bytes());
}

#[test]
fn null_fixture_mirrors_the_extraction_structure() {
    let records = parse_records(null_fixture_csv().as_bytes(), ParseMode::Strict).unwrap();
    let grouping = group_complete_studies(&records);
    assert_eq!(grouping.retained_count(), 27);
    assert_eq!(grouping.dropped_count(), 0);
    assert_eq!(grouping.total_participants, 535);
}
