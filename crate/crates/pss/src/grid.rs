//! Axis-aligned equal-width partitioning of the sample space into `ell^d`
//! cells over the empirical range, with sparse occupied-cell storage.

use std::collections::HashMap;

use crate::dataset::Dataset;
use crate::error::Error;
use crate::Result;

/// Per-dimension range and cell-width metadata mapping points to cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionGrid {
    ell: usize,
    mins: Vec<f64>,
    maxs: Vec<f64>,
    widths: Vec<f64>,
}

/// Coordinates of one hyper-rectangular cell, each in `0..ell`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex(pub Vec<u32>);

/// Sparse map from occupied cells to the rows they contain.
#[derive(Debug, Clone)]
pub struct CellContents {
    cells: HashMap<CellIndex, Vec<usize>>,
}

impl PartitionGrid {
    pub fn dims(&self) -> usize {
        self.mins.len()
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn mins(&self) -> &[f64] {
        &self.mins
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Cell containing `point`. Points exactly on the maximum edge map to
    /// the last cell; a constant axis maps everything to index 0. Points
    /// outside the bounding box are an out-of-range error so callers can
    /// apply their own policy.
    pub fn cell_of(&self, point: &[f64]) -> Result<CellIndex> {
        if point.len() != self.dims() {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates, grid has {}",
                point.len(),
                self.dims()
            )));
        }
        let mut coords = Vec::with_capacity(point.len());
        for (j, &x) in point.iter().enumerate() {
            if x < self.mins[j] || x > self.maxs[j] {
                return Err(Error::OutOfRange {
                    axis: j,
                    value: x,
                    min: self.mins[j],
                    max: self.maxs[j],
                });
            }
            let idx = if self.widths[j] == 0.0 {
                0
            } else {
                let raw = ((x - self.mins[j]) / self.widths[j]).floor() as i64;
                raw.clamp(0, self.ell as i64 - 1) as u32
            };
            coords.push(idx);
        }
        Ok(CellIndex(coords))
    }
}

impl CellContents {
    pub fn cells(&self) -> &HashMap<CellIndex, Vec<usize>> {
        &self.cells
    }

    pub fn occupied(&self) -> usize {
        self.cells.len()
    }

    /// Sum of per-cell counts.
    pub fn total_rows(&self) -> usize {
        self.cells.values().map(Vec::len).sum()
    }
}

/// Builds the grid for `data` with `ell` partitions per axis. Ranges come
/// from the column minima and maxima.
pub fn build_grid(data: &Dataset, ell: usize) -> Result<PartitionGrid> {
    if ell == 0 {
        return Err(Error::InvalidInput(
            "partition parameter must be at least 1".to_string(),
        ));
    }
    if (ell).checked_pow(data.cols() as u32).is_none() {
        return Err(Error::InvalidInput(format!(
            "cell count {ell}^{} is not representable",
            data.cols()
        )));
    }
    let d = data.cols();
    let mut mins = vec![f64::INFINITY; d];
    let mut maxs = vec![f64::NEG_INFINITY; d];
    for row in data.iter_rows() {
        for j in 0..d {
            mins[j] = mins[j].min(row[j]);
            maxs[j] = maxs[j].max(row[j]);
        }
    }
    let widths = mins
        .iter()
        .zip(&maxs)
        .map(|(lo, hi)| (hi - lo) / ell as f64)
        .collect();
    Ok(PartitionGrid {
        ell,
        mins,
        maxs,
        widths,
    })
}

/// Assigns every row of `data` to its cell. Only occupied cells are stored;
/// row lists keep ascending row order.
pub fn partition_data(grid: &PartitionGrid, data: &Dataset) -> Result<CellContents> {
    let mut cells: HashMap<CellIndex, Vec<usize>> = HashMap::new();
    for (r, row) in data.iter_rows().enumerate() {
        let idx = grid.cell_of(row)?;
        cells.entry(idx).or_default().push(r);
    }
    Ok(CellContents { cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dataset(rows: &[&[f64]]) -> Dataset {
        Dataset::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn widths_follow_ranges() {
        let data = dataset(&[&[0.0, 0.0], &[1.0, 4.0], &[0.5, 2.0]]);
        let grid = build_grid(&data, 2).unwrap();
        assert_eq!(grid.widths(), &[0.5, 2.0]);
    }

    #[test]
    fn constant_column_has_zero_width() {
        let data = dataset(&[&[1.0, 7.0], &[2.0, 7.0]]);
        let grid = build_grid(&data, 3).unwrap();
        assert_eq!(grid.widths()[1], 0.0);
        assert_eq!(grid.cell_of(&[1.5, 7.0]).unwrap(), CellIndex(vec![1, 0]));
    }

    #[test]
    fn cell_of_edges() {
        let data = dataset(&[&[0.0], &[1.0]]);
        let grid = build_grid(&data, 2).unwrap();
        assert_eq!(grid.cell_of(&[0.5]).unwrap(), CellIndex(vec![1]));
        assert_eq!(grid.cell_of(&[1.0]).unwrap(), CellIndex(vec![1]));
        assert_eq!(grid.cell_of(&[0.0]).unwrap(), CellIndex(vec![0]));
        assert!(matches!(
            grid.cell_of(&[1.5]),
            Err(Error::OutOfRange { axis: 0, .. })
        ));
    }

    #[test]
    fn partition_small_fixture() {
        let data = dataset(&[&[0.0], &[0.5], &[1.0]]);
        let grid = build_grid(&data, 2).unwrap();
        let contents = partition_data(&grid, &data).unwrap();
        assert_eq!(contents.cells()[&CellIndex(vec![0])], vec![0]);
        assert_eq!(contents.cells()[&CellIndex(vec![1])], vec![1, 2]);
    }

    #[test]
    fn single_partition_holds_everything() {
        let data = dataset(&[&[0.0, 1.0], &[3.0, -2.0], &[1.0, 0.5]]);
        let grid = build_grid(&data, 1).unwrap();
        let contents = partition_data(&grid, &data).unwrap();
        assert_eq!(contents.occupied(), 1);
        assert_eq!(contents.total_rows(), 3);
    }

    #[test]
    fn singleton_dataset() {
        let data = dataset(&[&[2.0, 3.0]]);
        let grid = build_grid(&data, 4).unwrap();
        let contents = partition_data(&grid, &data).unwrap();
        assert_eq!(contents.occupied(), 1);
        assert_eq!(contents.total_rows(), 1);
    }

    #[test]
    fn overflow_cell_count_rejected() {
        let data = Dataset::new(vec![0.0; 64], 1, 64).unwrap();
        assert!(build_grid(&data, 7).is_err());
        assert!(build_grid(&data, 1).is_ok());
    }

    proptest! {
        #[test]
        fn partition_is_exhaustive_and_disjoint(
            rows in proptest::collection::vec(
                proptest::collection::vec(-50.0f64..50.0, 3), 1..80),
            ell in 1usize..6,
        ) {
            let data = Dataset::from_rows(&rows).unwrap();
            let grid = build_grid(&data, ell).unwrap();
            let contents = partition_data(&grid, &data).unwrap();
            prop_assert_eq!(contents.total_rows(), data.rows());
            let mut seen = vec![false; data.rows()];
            for rows in contents.cells().values() {
                for &r in rows {
                    prop_assert!(!seen[r]);
                    seen[r] = true;
                }
            }
        }

        #[test]
        fn cell_assignment_is_affine_stable(
            rows in proptest::collection::vec(
                proptest::collection::vec(-10.0f64..10.0, 2), 2..60),
            ell in 1usize..5,
            scale0 in 0.1f64..8.0,
            scale1 in 0.1f64..8.0,
            shift0 in -20.0f64..20.0,
            shift1 in -20.0f64..20.0,
        ) {
            let data = Dataset::from_rows(&rows).unwrap();
            let mapped = data.affine_map(&[scale0, scale1], &[shift0, shift1]).unwrap();
            let before = partition_data(&build_grid(&data, ell).unwrap(), &data).unwrap();
            let after = partition_data(&build_grid(&mapped, ell).unwrap(), &mapped).unwrap();
            let mut a: Vec<_> = before.cells().iter().collect();
            let mut b: Vec<_> = after.cells().iter().collect();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }
    }
}
