//! Column-wise comparison of a metrics CSV against a golden copy.

use std::collections::BTreeMap;
use std::fmt;

/// Default absolute tolerance for float columns.
pub const FLOAT_TOL: f64 = 1e-9;

/// Columns of the metrics log that hold counts and are compared exactly.
pub const INTEGER_COLUMNS: &[&str] = &["t", "candidates", "attempts", "safe_cells", "frontier_cells", "ticks"];

#[derive(Clone, Debug, PartialEq)]
pub enum Mismatch {
    Schema { missing: Vec<String>, extra: Vec<String> },
    RowCount { actual: usize, golden: usize },
    Cell { row: usize, column: String, actual: String, golden: String },
    Malformed { file: &'static str, row: usize, msg: String },
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mismatch::Schema { missing, extra } => {
                write!(f, "schema mismatch:")?;
                if !missing.is_empty() {
                    write!(f, " missing columns [{}]", missing.join(", "))?;
                }
                if !extra.is_empty() {
                    write!(f, " unexpected columns [{}]", extra.join(", "))?;
                }
                if missing.is_empty() && extra.is_empty() {
                    write!(f, " columns are in a different order")?;
                }
                Ok(())
            }
            Mismatch::RowCount { actual, golden } => write!(f, "row count {actual} != golden {golden}"),
            Mismatch::Cell { row, column, actual, golden } => {
                write!(f, "row {row}, column `{column}`: `{actual}` != golden `{golden}`")
            }
            Mismatch::Malformed { file, row, msg } => write!(f, "{file} row {row}: {msg}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Integer,
    Float(f64),
}

fn split(text: &str) -> Vec<Vec<&str>> {
    text.lines().filter(|l| !l.is_empty()).map(|l| l.split(',').collect()).collect()
}

fn cell_equal(a: &str, b: &str, kind: Kind) -> bool {
    if a == b {
        return true;
    }
    if a.is_empty() || b.is_empty() {
        return false;
    }
    match kind {
        Kind::Integer => matches!((a.parse::<i64>(), b.parse::<i64>()), (Ok(x), Ok(y)) if x == y),
        Kind::Float(tol) => match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) => x == y || (x - y).abs() <= tol,
            // Non-numeric cells (labels, flags) must match exactly.
            _ => false,
        },
    }
}

/// Compares `actual` with `golden`. Rows are numbered from 1 after the
/// header. `tolerances` overrides the float tolerance per column.
pub fn compare(actual: &str, golden: &str, tolerances: &BTreeMap<String, f64>) -> Vec<Mismatch> {
    let a = split(actual);
    let g = split(golden);
    let (Some(ah), Some(gh)) = (a.first(), g.first()) else {
        let file = if a.is_empty() { "metrics" } else { "golden" };
        return vec![Mismatch::Malformed { file, row: 0, msg: "missing header".into() }];
    };
    if ah != gh {
        let missing = gh.iter().filter(|c| !ah.contains(c)).map(|c| c.to_string()).collect();
        let extra = ah.iter().filter(|c| !gh.contains(c)).map(|c| c.to_string()).collect();
        return vec![Mismatch::Schema { missing, extra }];
    }
    let kinds: Vec<Kind> = gh
        .iter()
        .map(|c| match tolerances.get(*c) {
            Some(&t) => Kind::Float(t),
            None if INTEGER_COLUMNS.contains(c) => Kind::Integer,
            None => Kind::Float(FLOAT_TOL),
        })
        .collect();
    let mut out = Vec::new();
    if a.len() != g.len() {
        out.push(Mismatch::RowCount { actual: a.len() - 1, golden: g.len() - 1 });
    }
    for (row, (ar, gr)) in a.iter().zip(&g).enumerate().skip(1) {
        for (file, r) in [("metrics", ar), ("golden", gr)] {
            if r.len() != gh.len() {
                out.push(Mismatch::Malformed { file, row, msg: format!("{} fields, header has {}", r.len(), gh.len()) });
            }
        }
        if ar.len() != gh.len() || gr.len() != gh.len() {
            continue;
        }
        for (c, kind) in kinds.iter().enumerate() {
            if !cell_equal(ar[c], gr[c], *kind) {
                out.push(Mismatch::Cell {
                    row,
                    column: gh[c].to_string(),
                    actual: ar[c].to_string(),
                    golden: gr[c].to_string(),
                });
            }
        }
    }
    out
}
