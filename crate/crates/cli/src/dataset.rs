//! CSV ingestion and output for numeric matrices.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// A rectangular matrix of finite reals, one observation per row.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    pub series: Vec<Vec<f64>>,
    pub header: Option<Vec<String>>,
    pub source: Option<PathBuf>,
}

impl TimeSeriesDataset {
    pub fn n(&self) -> usize {
        self.series.len()
    }

    pub fn dims(&self) -> usize {
        self.series.first().map_or(0, Vec::len)
    }
}

/// Reads a comma-separated file. Rows are numbered from 1, counting data
/// rows only.
pub fn load_csv(path: &Path, has_header: bool, normalize: bool) -> CliResult<TimeSeriesDataset> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut data = parse_csv(file, has_header, normalize)?;
    data.source = Some(path.to_path_buf());
    Ok(data)
}

pub fn parse_csv<R: Read>(input: R, has_header: bool, normalize: bool) -> CliResult<TimeSeriesDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = if has_header {
        let h = reader.headers().map_err(|e| CliError::Data(format!("cannot read header: {e}")))?;
        Some(h.iter().map(str::to_string).collect())
    } else {
        None
    };

    let mut series: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| CliError::Data(format!("row {row}: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        let mut values = Vec::with_capacity(record.len());
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Data(format!(
                    "row {row}, column {} (line {line}): '{cell}' is not a number",
                    col + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Data(format!(
                    "row {row}, column {} (line {line}): non-finite value '{cell}'",
                    col + 1
                )));
            }
            values.push(v);
        }
        if let Some(first) = series.first() {
            if values.len() != first.len() {
                return Err(CliError::Data(format!(
                    "row {row} (line {line}) has {} columns, expected {}",
                    values.len(),
                    first.len()
                )));
            }
        }
        series.push(values);
    }
    if series.is_empty() || series[0].is_empty() {
        return Err(CliError::Data("input contains no data rows".into()));
    }
    if normalize {
        z_normalize(&mut series);
    }
    Ok(TimeSeriesDataset { series, header, source: None })
}

/// Scales every column to mean 0 and population standard deviation 1.
/// Constant columns become all zeros.
pub fn z_normalize(series: &mut [Vec<f64>]) {
    let n = series.len() as f64;
    let dims = series.first().map_or(0, Vec::len);
    for k in 0..dims {
        let mean = series.iter().map(|r| r[k]).sum::<f64>() / n;
        let var = series.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        for r in series.iter_mut() {
            r[k] = if sd > 0.0 { (r[k] - mean) / sd } else { 0.0 };
        }
    }
}

/// Writes rows with the shortest representation that parses back to the
/// same `f64`.
pub fn write_csv<W: Write>(out: W, rows: &[Vec<f64>]) -> io::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.write_record(row.iter().map(|v| format!("{v}")))?;
    }
    writer.flush()
}
