use crate::error::{Error, Result};

/// Largest work matrix the simulator will materialize (`l · n` cells).
pub const MAX_MATERIALIZED_CELLS: usize = 1 << 24;

/// The `l × n` matrix of per-(set, ground vector) partial losses.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

impl WorkMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows.saturating_mul(cols) > MAX_MATERIALIZED_CELLS {
            return Err(Error::TooLarge(format!(
                "a {rows}x{cols} work matrix exceeds {MAX_MATERIALIZED_CELLS} cells"
            )));
        }
        Ok(Self {
            rows,
            cols,
            cells: vec![0.0; rows * cols],
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged work matrix".into()));
        }
        let mut w = Self::zeros(rows.len(), cols)?;
        for (j, r) in rows.iter().enumerate() {
            w.cells[j * cols..(j + 1) * cols].copy_from_slice(r);
        }
        Ok(w)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.cells[j * self.cols + i]
    }

    pub fn set(&mut self, j: usize, i: usize, value: f64) {
        self.cells[j * self.cols + i] = value;
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.cells[j * self.cols..(j + 1) * self.cols]
    }
}

/// `W · 1`: row sums, each accumulated in column order.
pub fn reduce_work_matrix(w: &WorkMatrix) -> Vec<f64> {
    (0..w.rows())
        .map(|j| w.row(j).iter().fold(0.0, |acc, &c| acc + c))
        .collect()
}
