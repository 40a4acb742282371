//! Row-major numeric dataset: the universal `n x d` sample matrix.

use crate::error::Error;
use crate::Result;

/// An `n x d` matrix of finite real samples, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Dataset {
    /// Builds a dataset from row-major storage. Every cell must be finite.
    pub fn new(data: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "dataset must be non-empty, got {rows} x {cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "storage length {} does not match {rows} x {cols}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at row {} col {}",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { data, rows, cols })
    }

    /// Builds a dataset from a slice of equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("ragged rows".to_string()));
        }
        Self::new(rows.concat(), n, d)
    }

    /// Builds a single-column dataset.
    pub fn from_column(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(values, n, 1)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row `r` as a contiguous slice of length `cols`.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Copy of column `c`.
    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// New dataset keeping `columns` in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.cols) {
            return Err(Error::InvalidInput(format!(
                "column {bad} out of range for {} columns",
                self.cols
            )));
        }
        let mut data = Vec::with_capacity(self.rows * columns.len());
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend(columns.iter().map(|&c| row[c]));
        }
        Self::new(data, self.rows, columns.len())
    }

    /// New dataset keeping rows listed in `rows` in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.rows) {
            return Err(Error::InvalidInput(format!(
                "row {bad} out of range for {} rows",
                self.rows
            )));
        }
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self::new(data, rows.len(), self.cols)
    }

    /// Horizontal concatenation: rows of `self` extended by rows of `other`.
    pub fn hstack(&self, other: &Dataset) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::InvalidInput(format!(
                "row count mismatch: {} vs {}",
                self.rows, other.rows
            )));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        Self::new(data, self.rows, cols)
    }

    /// Applies `x -> scale[j] * x + shift[j]` per axis.
    pub fn affine_map(&self, scale: &[f64], shift: &[f64]) -> Result<Self> {
        if scale.len() != self.cols || shift.len() != self.cols {
            return Err(Error::InvalidInput(
                "scale/shift length must equal the column count".to_string(),
            ));
        }
        let mut data = Vec::with_capacity(self.data.len());
        for r in 0..self.rows {
            for (j, &v) in self.row(r).iter().enumerate() {
                data.push(scale[j] * v + shift[j]);
            }
        }
        Self::new(data, self.rows, self.cols)
    }

    /// Iterator over row slices.
    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }
}
