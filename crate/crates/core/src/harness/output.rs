use std::io::Write;
use std::path::Path;

use csv::{Terminator, WriterBuilder};

use super::ResultRow;
use crate::error::Result;

pub const CSV_HEADER: [&str; 18] = [
    "scenario",
    "sa",
    "pa",
    "chunk_size",
    "snr_db",
    "trial",
    "seed",
    "group",
    "users",
    "rates",
    "min_rate",
    "min_weighted_rate",
    "sum_rate",
    "deviation",
    "norm_sum_rate",
    "norm_min_weighted_rate",
    "wall_time_us",
    "error",
];

/// Twelve significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.11e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn record(row: &ResultRow) -> Vec<String> {
    let m = row.metrics.as_ref();
    vec![
        row.scenario.label().to_string(),
        row.scheme.sa.label().to_string(),
        row.scheme.pa.label().to_string(),
        row.chunk_size.to_string(),
        opt(row.snr_db),
        row.trial.to_string(),
        row.seed.to_string(),
        row.group_label().to_string(),
        row.rates.len().to_string(),
        row.rates.iter().map(|&r| format_float(r)).collect::<Vec<_>>().join(";"),
        opt(m.map(|m| m.min_rate)),
        opt(m.map(|m| m.min_weighted_rate)),
        opt(m.map(|m| m.sum_rate)),
        opt(m.and_then(|m| m.deviation)),
        opt(row.norm_sum_rate),
        opt(row.norm_min_weighted_rate),
        row.wall_time_us.map(|t| t.to_string()).unwrap_or_default(),
        row.error.clone().unwrap_or_default(),
    ]
}

/// Header plus one line per row, LF-terminated.
pub fn write_rows<W: Write>(writer: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_rows(std::io::BufWriter::new(file), rows)
}
