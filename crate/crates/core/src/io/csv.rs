//! Minimal CSV emitter for benchmark records. Columns come from record keys
//! in first-seen order; numbers are printed in scientific notation with a
//! 10-digit mantissa, one guard digit past the nominal 9 significant digits
//! so a re-parse always recovers values to better than 1e-9 relative.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::Result;

/// One record: ordered (column, value) pairs.
pub type CsvRecord = Vec<(String, f64)>;

fn format_number(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.9e}")
    }
}

/// Writes records with a header row. Keys missing from a record leave the
/// cell empty. Output is deterministic for identical input.
pub fn write_csv(records: &[CsvRecord], path: &Path) -> Result<()> {
    let mut columns: Vec<&str> = Vec::new();
    for record in records {
        for (key, _) in record {
            if !columns.iter().any(|c| c == key) {
                columns.push(key);
            }
        }
    }
    let mut out = String::new();
    out.push_str(&columns.join(","));
    out.push('\n');
    for record in records {
        let cells: Vec<String> = columns
            .iter()
            .map(|col| {
                record
                    .iter()
                    .find(|(k, _)| k == col)
                    .map(|(_, v)| format_number(*v))
                    .unwrap_or_default()
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}
