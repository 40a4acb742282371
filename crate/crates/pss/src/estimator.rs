//! The partitioned sample-spacing density model and the estimators built on
//! it: plug-in joint entropy, mutual information, and total correlation.
//!
//! Fitting partitions the data into `ell^d` equal-width cells, sorts each
//! occupied cell marginally, and precomputes the per-dimension spacing grids.
//! The log-density of a point in cell `k` is
//!
//! `log(n_k / n) + sum_j log(2 m_k / (n_k * (x_{j,(a_j+m_k)} - x_{j,(a_j-m_k)})))`
//!
//! with per-cell spacing parameter `m_k = floor(sqrt(n_k) + 1/2)`. Cells with
//! fewer than `min_cell_count` points are skipped and contribute nothing;
//! points with a zero spacing window or outside a cell's empirical sub-grid
//! have undefined density (never negative infinity).
//!
//! The window index `a_j` of a coordinate that coincides with a stored
//! sample value is that value's rank in the cell, so the entropy sum over
//! the training rows is the univariate spacing-entropy sum generalized per
//! cell (at one cell and one dimension it reproduces the Vasicek estimator
//! exactly). Points between sample values use the averaged-grid interval
//! they fall into. Locating training points through the grid instead of
//! their ranks inflates in-sample densities noticeably (the located window
//! is systematically wider than the rank window), which is why ranks, not
//! intervals, drive the entropy path.

use std::collections::HashMap;

use crate::dataset::Dataset;
use crate::error::Error;
use crate::grid::{build_grid, partition_data, CellIndex, PartitionGrid};
use crate::spacing::{default_m, xi_grid, SortedSample, SpacingGrid};
use crate::Result;

/// Configuration of the partitioned sample-spacing estimator.
#[derive(Debug, Clone)]
pub struct PssConfig {
    /// Partitions per axis.
    pub ell: usize,
    /// Fixed spacing parameter overriding the per-cell default
    /// `floor(sqrt(n_k) + 1/2)`; clamped to `[1, n_k - 1]` per cell.
    pub m_override: Option<usize>,
    /// Minimum points for a cell to be fitted rather than skipped.
    pub min_cell_count: usize,
    /// Divisor of the log-density sum in the entropy estimate.
    pub divisor: DivisorMode,
}

/// Divisor used when some rows are skipped: the full sample size (the
/// estimator's published form) or only the contributing rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivisorMode {
    FullSample,
    Contributing,
}

impl Default for PssConfig {
    fn default() -> Self {
        Self {
            ell: 1,
            m_override: None,
            min_cell_count: 2,
            divisor: DivisorMode::FullSample,
        }
    }
}

impl PssConfig {
    pub fn with_ell(ell: usize) -> Self {
        Self {
            ell,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ell == 0 {
            return Err(Error::InvalidInput(
                "partition parameter must be at least 1".to_string(),
            ));
        }
        if self.min_cell_count < 2 {
            return Err(Error::InvalidInput(
                "min_cell_count must be at least 2".to_string(),
            ));
        }
        if self.m_override == Some(0) {
            return Err(Error::InvalidInput(
                "spacing override must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// Natural-log density of a query point, with the two failure signals kept
/// distinct: `Undefined` for skipped cells, zero spacings, and points outside
/// a cell's empirical sub-grid; `OutOfRange` for points outside the training
/// bounding box. Never infinite or NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogDensity {
    Defined(f64),
    Undefined,
    OutOfRange,
}

impl LogDensity {
    pub fn value(self) -> Option<f64> {
        match self {
            LogDensity::Defined(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, LogDensity::Defined(_))
    }
}

struct CellMarginal {
    sample: SortedSample,
    grid: SpacingGrid,
    /// Rank (1-based) of each cell row's coordinate, in cell-row order.
    ranks: Vec<u32>,
}

/// One fitted cell: counts, spacing parameter, sorted marginals with their
/// grids, and the training rows it holds.
pub struct CellModel {
    count: usize,
    spacing_m: usize,
    rows: Vec<usize>,
    marginals: Vec<CellMarginal>,
}

impl CellModel {
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn spacing_m(&self) -> usize {
        self.spacing_m
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// Log-density of the cell's `slot`-th training row via rank windows.
    fn training_log_density(&self, total_n: usize) -> impl Iterator<Item = (usize, Option<f64>)> + '_ {
        let n_k = self.count as f64;
        let two_m = (2 * self.spacing_m) as f64;
        let m = self.spacing_m as i64;
        let base = (n_k / total_n as f64).ln();
        self.rows.iter().enumerate().map(move |(slot, &row)| {
            let mut log_f = base;
            for marginal in &self.marginals {
                let rank = marginal.ranks[slot] as i64;
                let delta =
                    marginal.sample.order_stat(rank + m) - marginal.sample.order_stat(rank - m);
                if delta <= 0.0 {
                    return (row, None);
                }
                log_f += (two_m / (n_k * delta)).ln();
            }
            (row, Some(log_f))
        })
    }
}

/// A fitted partitioned sample-spacing density model.
pub struct PssModel {
    grid: PartitionGrid,
    cells: HashMap<CellIndex, CellModel>,
    skipped: HashMap<CellIndex, usize>,
    n: usize,
}

/// Exact interior mass of the fitted density and its closed form
/// `sum_k (n_k/n) (1 - 1/n_k)^d`, equal on duplicate-free data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassDecomposition {
    pub interior: f64,
    pub closed_form: f64,
}

/// Plug-in entropy value with skip diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyEstimate {
    /// Estimated entropy in nats.
    pub value: f64,
    /// Training rows whose density was undefined (skipped cell or zero
    /// spacing); they contribute zero to the log-density sum.
    pub skipped_rows: usize,
    /// Rows that contributed a defined log-density.
    pub contributing: usize,
}

/// Fits the model: builds the grid, partitions the rows, and precomputes
/// marginal sorts and spacing grids for every cell with at least
/// `min_cell_count` points. Smaller occupied cells are recorded as skipped.
pub fn fit(data: &Dataset, cfg: &PssConfig) -> Result<PssModel> {
    cfg.validate()?;
    if data.rows() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 rows, got {}",
            data.rows()
        )));
    }
    let grid = build_grid(data, cfg.ell)?;
    let contents = partition_data(&grid, data)?;

    let mut cells = HashMap::new();
    let mut skipped = HashMap::new();
    for (idx, rows) in contents.cells() {
        let n_k = rows.len();
        if n_k < cfg.min_cell_count {
            skipped.insert(idx.clone(), n_k);
            continue;
        }
        let m = cfg
            .m_override
            .unwrap_or(default_m(n_k)?)
            .clamp(1, n_k - 1);
        let mut marginals = Vec::with_capacity(data.cols());
        for j in 0..data.cols() {
            let values: Vec<f64> = rows.iter().map(|&r| data.get(r, j)).collect();
            let mut order: Vec<usize> = (0..n_k).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
            let mut ranks = vec![0u32; n_k];
            for (pos, &slot) in order.iter().enumerate() {
                ranks[slot] = pos as u32 + 1;
            }
            let sample = SortedSample::new(values)?;
            let grid = xi_grid(&sample, m)?;
            marginals.push(CellMarginal {
                sample,
                grid,
                ranks,
            });
        }
        cells.insert(
            idx.clone(),
            CellModel {
                count: n_k,
                spacing_m: m,
                rows: rows.clone(),
                marginals,
            },
        );
    }
    Ok(PssModel {
        grid,
        cells,
        skipped,
        n: data.rows(),
    })
}

impl PssModel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> usize {
        self.grid.dims()
    }

    pub fn grid(&self) -> &PartitionGrid {
        &self.grid
    }

    pub fn cells(&self) -> &HashMap<CellIndex, CellModel> {
        &self.cells
    }

    /// Occupied cells that fell below the minimum count, with their sizes.
    pub fn skipped_cells(&self) -> &HashMap<CellIndex, usize> {
        &self.skipped
    }

    /// Rows living in skipped cells.
    pub fn skipped_rows(&self) -> usize {
        self.skipped.values().sum()
    }

    /// Rows living in stored cells.
    pub fn stored_rows(&self) -> usize {
        self.cells.values().map(|c| c.count).sum()
    }

    /// Evaluates the fitted log-density at `point` (length must equal the
    /// model dimension).
    ///
    /// A coordinate equal to a stored sample value uses the window at that
    /// value's rank (lowest rank under duplicates); other coordinates use
    /// the averaged-grid interval containing them.
    pub fn log_density(&self, point: &[f64]) -> LogDensity {
        assert_eq!(point.len(), self.dims(), "point dimension mismatch");
        let idx = match self.grid.cell_of(point) {
            Ok(idx) => idx,
            Err(_) => return LogDensity::OutOfRange,
        };
        let cell = match self.cells.get(&idx) {
            Some(cell) => cell,
            None => return LogDensity::Undefined,
        };
        let n_k = cell.count as f64;
        let two_m = (2 * cell.spacing_m) as f64;
        let mut log_f = (n_k / self.n as f64).ln();
        for (marginal, &x) in cell.marginals.iter().zip(point) {
            let values = marginal.sample.values();
            let below = values.partition_point(|&v| v < x);
            let window = if below < values.len() && values[below] == x {
                below + 1 // rank of the matching sample value
            } else {
                match marginal.grid.interval_of(x) {
                    Some(i) => i,
                    None => return LogDensity::Undefined,
                }
            };
            let m = cell.spacing_m as i64;
            let delta = marginal.sample.order_stat(window as i64 + m)
                - marginal.sample.order_stat(window as i64 - m);
            if delta <= 0.0 {
                return LogDensity::Undefined;
            }
            log_f += (two_m / (n_k * delta)).ln();
        }
        LogDensity::Defined(log_f)
    }

    /// Plug-in entropy over the model's own training rows, each evaluated
    /// at its per-dimension rank windows. Skipped rows contribute zero.
    pub fn training_entropy(&self, divisor: DivisorMode) -> Result<EntropyEstimate> {
        let mut log_densities: Vec<Option<f64>> = vec![None; self.n];
        for cell in self.cells.values() {
            for (row, value) in cell.training_log_density(self.n) {
                log_densities[row] = value;
            }
        }
        let mut sum = 0.0;
        let mut contributing = 0usize;
        for value in log_densities.into_iter().flatten() {
            sum += value;
            contributing += 1;
        }
        if contributing == 0 {
            return Err(Error::DegenerateSample(
                "no row has a defined log-density".to_string(),
            ));
        }
        let divisor = match divisor {
            DivisorMode::FullSample => self.n,
            DivisorMode::Contributing => contributing,
        };
        Ok(EntropyEstimate {
            value: -sum / divisor as f64,
            skipped_rows: self.n - contributing,
            contributing,
        })
    }

    /// Exact piecewise-constant integral of the density over every cell's
    /// interior sub-grid, next to its closed form. The per-axis factor
    /// integrates the marginal spacing density between `xi_1` and `xi_{n_k}`,
    /// so the product over axes is the exact integral over the interior box.
    pub fn density_mass(&self) -> MassDecomposition {
        let d = self.dims() as i32;
        let mut interior = 0.0;
        let mut closed_form = 0.0;
        for cell in self.cells.values() {
            let n_k = cell.count as f64;
            let weight = n_k / self.n as f64;
            let two_m = (2 * cell.spacing_m) as f64;
            let m = cell.spacing_m as i64;
            let mut product = 1.0;
            for marginal in &cell.marginals {
                let xi = marginal.grid.points();
                let mut axis = 0.0;
                for i in 1..cell.count {
                    let width = xi[i + 1] - xi[i];
                    if width <= 0.0 {
                        continue;
                    }
                    let delta = marginal.sample.order_stat(i as i64 + m)
                        - marginal.sample.order_stat(i as i64 - m);
                    axis += width * two_m / (n_k * delta);
                }
                product *= axis;
            }
            interior += weight * product;
            closed_form += weight * (1.0 - 1.0 / n_k).powi(d);
        }
        MassDecomposition {
            interior,
            closed_form,
        }
    }
}

/// Plug-in joint entropy: fits the model on `data` and averages the defined
/// log-densities over the training rows. Skipped rows contribute zero to the
/// sum; the divisor follows `cfg.divisor`.
pub fn entropy(data: &Dataset, cfg: &PssConfig) -> Result<EntropyEstimate> {
    let model = fit(data, cfg)?;
    entropy_under_model(&model, data, cfg.divisor)
}

/// Entropy of `data` under an already fitted model. Rows must lie inside the
/// model's bounding box.
pub fn entropy_under_model(
    model: &PssModel,
    data: &Dataset,
    divisor: DivisorMode,
) -> Result<EntropyEstimate> {
    let mut sum = 0.0;
    let mut contributing = 0usize;
    let mut skipped = 0usize;
    for row in data.iter_rows() {
        match model.log_density(row) {
            LogDensity::Defined(l) => {
                sum += l;
                contributing += 1;
            }
            LogDensity::Undefined | LogDensity::OutOfRange => skipped += 1,
        }
    }
    if contributing == 0 {
        return Err(Error::DegenerateSample(
            "no row has a defined log-density".to_string(),
        ));
    }
    let divisor = match divisor {
        DivisorMode::FullSample => data.rows(),
        DivisorMode::Contributing => contributing,
    };
    Ok(EntropyEstimate {
        value: -sum / divisor as f64,
        skipped_rows: skipped,
        contributing,
    })
}

/// Mutual information `H(X) + H(Y) - H(X, Y)`, all three entropies at the
/// same partition parameter.
pub fn mutual_information(x: &Dataset, y: &Dataset, cfg: &PssConfig) -> Result<f64> {
    if x.rows() != y.rows() {
        return Err(Error::InvalidInput(format!(
            "row count mismatch: {} vs {}",
            x.rows(),
            y.rows()
        )));
    }
    let hx = entropy(x, cfg)?.value;
    let hy = entropy(y, cfg)?.value;
    let hxy = entropy(&x.hstack(y)?, cfg)?.value;
    Ok(hx + hy - hxy)
}

/// Total correlation `sum_j H(X_j) - H(X)`, marginals fitted as univariate
/// models at the same partition parameter.
pub fn total_correlation(data: &Dataset, cfg: &PssConfig) -> Result<f64> {
    if data.cols() < 2 {
        return Err(Error::InvalidInput(
            "total correlation needs at least 2 columns".to_string(),
        ));
    }
    let mut marginal_sum = 0.0;
    for j in 0..data.cols() {
        let column = Dataset::from_column(data.column(j))?;
        marginal_sum += entropy(&column, cfg)?.value;
    }
    Ok(marginal_sum - entropy(data, cfg)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data_1d(values: &[f64]) -> Dataset {
        Dataset::from_column(values.to_vec()).unwrap()
    }

    #[test]
    fn fit_single_cell_fixture() {
        let data = data_1d(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let model = fit(&data, &PssConfig::with_ell(1)).unwrap();
        assert_eq!(model.cells().len(), 1);
        let cell = model.cells().values().next().unwrap();
        assert_eq!(cell.count(), 5);
        assert_eq!(cell.spacing_m(), 2);
        assert_eq!(
            cell.marginals[0].sample.values(),
            &[0.0, 1.0, 2.0, 3.0, 4.0]
        );
    }

    #[test]
    fn fit_skips_undersized_cells() {
        // ell = 4 over [0, 10]: cell 0 holds three points, cell 3 one point.
        let data = data_1d(&[0.0, 0.1, 0.2, 10.0]);
        let model = fit(&data, &PssConfig::with_ell(4)).unwrap();
        assert_eq!(model.cells().len(), 1);
        assert_eq!(model.skipped_cells().len(), 1);
        assert_eq!(model.skipped_rows(), 1);
        assert_eq!(model.stored_rows() + model.skipped_rows(), 4);
        assert_eq!(model.log_density(&[10.0]), LogDensity::Undefined);
    }

    #[test]
    fn log_density_fixture() {
        let data = data_1d(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let model = fit(&data, &PssConfig::with_ell(1)).unwrap();
        let ld = model.log_density(&[1.0]).value().unwrap();
        assert!((ld - (4.0f64 / 15.0).ln()).abs() <= 1e-12);
        assert_eq!(model.log_density(&[-0.5]), LogDensity::OutOfRange);
    }

    #[test]
    fn log_density_zero_spacing_is_undefined() {
        let data = data_1d(&[0.0, 0.0, 0.0, 1.0]);
        let model = fit(&data, &PssConfig::with_ell(1)).unwrap();
        assert_eq!(model.log_density(&[0.0]), LogDensity::Undefined);
        assert!(model.log_density(&[0.9]).is_defined());
    }

    #[test]
    fn entropy_fixture() {
        let data = data_1d(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let est = entropy(&data, &PssConfig::with_ell(1)).unwrap();
        let expected = -(0.8f64.ln()
            + (4.0f64 / 15.0).ln()
            + 0.2f64.ln()
            + (4.0f64 / 15.0).ln()
            + 0.4f64.ln())
            / 5.0;
        assert!((est.value - expected).abs() <= 1e-12);
        assert!((est.value - 1.07848).abs() <= 1e-5);
        assert_eq!(est.skipped_rows, 0);
        assert_eq!(est.contributing, 5);
    }

    #[test]
    fn entropy_divisor_modes() {
        let data = data_1d(&[0.0, 0.1, 0.2, 0.3, 10.0]);
        let full = entropy(&data, &PssConfig::with_ell(4)).unwrap();
        assert_eq!(full.skipped_rows, 1);
        let contrib = entropy(
            &data,
            &PssConfig {
                ell: 4,
                divisor: DivisorMode::Contributing,
                ..PssConfig::default()
            },
        )
        .unwrap();
        // Same log-density sum, different divisor.
        assert!((full.value * 5.0 - contrib.value * 4.0).abs() <= 1e-12);
    }

    #[test]
    fn entropy_degenerate_when_everything_skipped() {
        let data = data_1d(&[0.0, 0.0, 0.0]);
        assert!(matches!(
            entropy(&data, &PssConfig::with_ell(1)),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn density_mass_single_cell() {
        let data = data_1d(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let model = fit(&data, &PssConfig::with_ell(1)).unwrap();
        let mass = model.density_mass();
        assert!((mass.closed_form - 0.8).abs() <= 1e-15);
        assert!((mass.interior - mass.closed_form).abs() <= 1e-12);
    }

    #[test]
    fn density_mass_excludes_skipped_fraction() {
        let data = data_1d(&[0.0, 0.1, 0.2, 0.3, 10.0]);
        let model = fit(&data, &PssConfig::with_ell(4)).unwrap();
        let q = model.skipped_rows() as f64 / model.n() as f64;
        assert!(model.density_mass().closed_form <= 1.0 - q + 1e-15);
    }

    #[test]
    fn mi_is_symmetric_for_identical_inputs() {
        let x = data_1d(&[0.0, 0.3, 1.1, 2.0, 2.2, 3.0, 4.5, 5.0]);
        let cfg = PssConfig::with_ell(2);
        let a = mutual_information(&x, &x, &cfg).unwrap();
        let b = mutual_information(&x, &x, &cfg).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(a > 0.5, "self-MI should be large, got {a}");
    }

    #[test]
    fn total_correlation_needs_two_columns() {
        let x = data_1d(&[0.0, 1.0]);
        assert!(total_correlation(&x, &PssConfig::default()).is_err());
    }

    #[test]
    fn entropy_matches_log_density_sum() {
        let data = Dataset::from_rows(&[
            vec![0.1, 1.0],
            vec![0.4, -1.0],
            vec![0.9, 0.2],
            vec![1.4, 0.7],
            vec![2.0, -0.3],
            vec![2.3, 1.8],
        ])
        .unwrap();
        let cfg = PssConfig::with_ell(2);
        let est = entropy(&data, &cfg).unwrap();
        let model = fit(&data, &cfg).unwrap();
        let mut sum = 0.0;
        for row in data.iter_rows() {
            if let LogDensity::Defined(l) = model.log_density(row) {
                sum += l;
            }
        }
        assert_eq!(est.value.to_bits(), (-sum / 6.0).to_bits());
    }
}
