#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::PathBuf;

use metaplot::ingest::{CorrelationClass, StudyRecord};
use metaplot::numeric::{std_normal_quantile, Probability};
use metaplot::rng::SimRng;

pub const STUDIES: usize = 27;
pub const HEADER: &str = "study_id,author,year,title,journal,class,r,n\n";

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden").join(name)
}

/// Compares `actual` with a checked-in file; `METAPLOT_BLESS=1` rewrites it.
pub fn assert_matches_file(path: &PathBuf, actual: &[u8]) {
    if std::env::var_os("METAPLOT_BLESS").is_some() {
        std::fs::write(path, actual).unwrap();
        return;
    }
    let expected = std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == actual, "{} differs from regenerated output", path.display());
}

/// 22 studies of n = 20 and 5 of n = 19: 535 participants over 27 studies.
pub fn study_n(i: usize) -> u32 {
    if i < 5 {
        19
    } else {
        20
    }
}

/// Plotting-position rank of study `i` within a class; a different
/// permutation per class so the three plots do not share an order.
fn grid_rank(class: CorrelationClass, i: usize) -> usize {
    let mult = match class {
        CorrelationClass::Icc => 1,
        CorrelationClass::Ecc => 7,
        CorrelationClass::Iec => 11,
    };
    (mult * i) % STUDIES + 1
}

/// Inverts the two-sided Fisher pipeline: the r whose p-value is `p` at `n`.
pub fn r_for_pvalue(p: f64, n: u32, positive: bool) -> f64 {
    let z = std_normal_quantile(Probability::new(1.0 - p / 2.0).unwrap()).unwrap();
    let fisher_z = z / ((n - 3) as f64).sqrt();
    let r = fisher_z.tanh();
    if positive {
        r
    } else {
        -r
    }
}

fn push_row(csv: &mut String, i: usize, class: CorrelationClass, r: f64, n: u32) {
    let _ = writeln!(
        csv,
        "study{:02},Author{:02},{},,Synthetic Journal,{},{:.12},{}",
        i + 1,
        i + 1,
        2000 + (i % 19),
        class,
        r,
        n
    );
}

/// Null fixture: per class, p-values exactly on the grid k / 28.
pub fn null_fixture_csv() -> String {
    let mut csv = String::from(HEADER);
    for i in 0..STUDIES {
        for class in CorrelationClass::ALL {
            let p = grid_rank(class, i) as f64 / (STUDIES + 1) as f64;
            push_row(&mut csv, i, class, r_for_pvalue(p, study_n(i), i % 2 == 0), study_n(i));
        }
    }
    csv
}

/// ICC studies with r between 0.45 and 0.55 at n = 100; ECC and IEC null.
pub fn effect_fixture_csv() -> String {
    let mut csv = String::from(HEADER);
    for i in 0..STUDIES {
        for class in CorrelationClass::ALL {
            if class == CorrelationClass::Icc {
                let r = 0.45 + 0.1 * i as f64 / (STUDIES - 1) as f64;
                push_row(&mut csv, i, class, r, 100);
            } else {
                let p = grid_rank(class, i) as f64 / (STUDIES + 1) as f64;
                push_row(&mut csv, i, class, r_for_pvalue(p, study_n(i), i % 2 == 1), study_n(i));
            }
        }
    }
    csv
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Sample correlation of `n` draws from a bivariate normal with correlation `rho`.
pub fn sample_r(rng: &mut SimRng, rho: f64, n: usize) -> f64 {
    let scale = (1.0 - rho * rho).sqrt();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a = rng.standard_normal();
        let b = rng.standard_normal();
        x.push(a);
        y.push(rho * a + scale * b);
    }
    pearson(&x, &y)
}

/// One synthetic extraction: `studies` studies with one record per class,
/// each record a sample correlation from raw bivariate normal data.
pub fn synthetic_records(seed: u64, studies: usize, rho: f64, n_lo: u64, n_hi: u64) -> Vec<StudyRecord> {
    let mut rng = SimRng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(3 * studies);
    for i in 0..studies {
        let n = rng.int_inclusive(n_lo, n_hi) as u32;
        for class in CorrelationClass::ALL {
            records.push(StudyRecord {
                study_id: format!("s{i:03}"),
                author: String::new(),
                year: 2000,
                title: None,
                journal: None,
                class,
                r: sample_r(&mut rng, rho, n as usize),
                n,
            });
        }
    }
    records
}
