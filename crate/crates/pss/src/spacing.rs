//! Univariate m-spacing primitives: clamped order statistics, averaged grid
//! points, the spacing density, and the Vasicek entropy estimator.
//!
//! For a sorted sample `x_(1) <= ... <= x_(n)` and spacing parameter `m`, the
//! grid point `xi_i` is the mean of the 2m order statistics with indices
//! `i-m ..= i+m-1`, where indices below 1 read `x_(1)` and indices above `n`
//! read `x_(n)`. The density on the interval `(xi_i, xi_{i+1}]` is
//! `2m / (n * (x_(i+m) - x_(i-m)))`, and the Vasicek entropy is the average
//! of `log((n/2m) * (x_(i+m) - x_(i-m)))` over `i = 1..=n`.

use crate::error::Error;
use crate::Result;

/// A nondecreasing sample of at least two finite values.
#[derive(Debug, Clone)]
pub struct SortedSample {
    values: Vec<f64>,
}

impl SortedSample {
    /// Sorts `values` and wraps them. Requires `n >= 2` and finite entries.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "sample needs at least 2 values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample value".to_string()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    /// Wraps already-sorted values, verifying the order.
    pub fn from_sorted(values: Vec<f64>) -> Result<Self> {
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput("values are not sorted".to_string()));
        }
        Self::new(values)
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// 1-based order statistic with index clamping: `r < 1` reads the
    /// minimum, `r > n` reads the maximum.
    pub fn order_stat(&self, r: i64) -> f64 {
        let n = self.values.len() as i64;
        self.values[(r.clamp(1, n) - 1) as usize]
    }
}

/// The averaged grid points `xi_0 ..= xi_{n+1}` (length n + 2).
///
/// `xi_0` is the sample minimum and `xi_{n+1}` the sample maximum.
#[derive(Debug, Clone)]
pub struct SpacingGrid {
    xi: Vec<f64>,
}

impl SpacingGrid {
    pub fn points(&self) -> &[f64] {
        &self.xi
    }

    /// Index `i` of the interval containing `x`, where interval 0 is the
    /// closed `[xi_0, xi_1]` and interval `i >= 1` is `(xi_i, xi_{i+1}]`.
    /// Returns `None` outside `[xi_0, xi_{n+1}]`. Ties resolve toward the
    /// lower index.
    pub fn interval_of(&self, x: f64) -> Option<usize> {
        let last = self.xi.len() - 1;
        if x < self.xi[0] || x > self.xi[last] {
            return None;
        }
        let i = self.xi[1..].partition_point(|&v| v < x);
        Some(i.min(last - 1))
    }
}

/// Default spacing parameter: `floor(sqrt(n) + 1/2)`, clamped to `n - 1`.
pub fn default_m(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "spacing parameter needs n >= 2, got {n}"
        )));
    }
    let m = ((n as f64).sqrt() + 0.5).floor() as usize;
    Ok(m.clamp(1, n - 1))
}

fn check_m(n: usize, m: usize) -> Result<()> {
    if m == 0 || m >= n {
        return Err(Error::InvalidInput(format!(
            "spacing parameter m={m} must satisfy 1 <= m < n={n}"
        )));
    }
    Ok(())
}

/// Builds the grid of averaged points for sample `s` and spacing `m`.
pub fn xi_grid(s: &SortedSample, m: usize) -> Result<SpacingGrid> {
    check_m(s.n(), m)?;
    let n = s.n();
    let (lo, hi) = (s.order_stat(1), s.order_stat(n as i64));
    let mut xi = Vec::with_capacity(n + 2);
    xi.push(lo);
    for i in 1..=n as i64 {
        let sum: f64 = (i - m as i64..i + m as i64).map(|r| s.order_stat(r)).sum();
        // Rounding can push the mean an ulp past the sample range; the grid
        // must stay inside it and nondecreasing.
        let mean = (sum / (2 * m) as f64).clamp(lo, hi);
        let prev = *xi.last().unwrap();
        xi.push(mean.max(prev));
    }
    xi.push(hi);
    Ok(SpacingGrid { xi })
}

/// The m-spacing `x_(i+m) - x_(i-m)` at interval index `i`, with clamping.
fn window_spacing(s: &SortedSample, m: usize, i: usize) -> f64 {
    s.order_stat(i as i64 + m as i64) - s.order_stat(i as i64 - m as i64)
}

/// Evaluates the spacing density at `x`.
///
/// Returns `Some(0.0)` outside the sample range, `None` when the located
/// window has zero width (duplicate-saturated), and the density value
/// otherwise. `grid` must come from `xi_grid(s, m)`.
pub fn spacing_density(s: &SortedSample, m: usize, grid: &SpacingGrid, x: f64) -> Option<f64> {
    let i = match grid.interval_of(x) {
        Some(i) => i,
        None => return Some(0.0),
    };
    let delta = window_spacing(s, m, i);
    if delta <= 0.0 {
        return None;
    }
    Some((2 * m) as f64 / (s.n() as f64 * delta))
}

/// Vasicek entropy estimate in nats.
///
/// Terms with zero spacing are skipped and the divisor reduced to the count
/// of finite terms; a fully degenerate sample is an error.
pub fn vasicek_entropy(s: &SortedSample, m: usize) -> Result<f64> {
    check_m(s.n(), m)?;
    let n = s.n();
    let scale = n as f64 / (2 * m) as f64;
    let mut sum = 0.0;
    let mut kept = 0usize;
    for i in 1..=n {
        let delta = window_spacing(s, m, i);
        if delta > 0.0 {
            sum += (scale * delta).ln();
            kept += 1;
        }
    }
    if kept == 0 {
        return Err(Error::DegenerateSample(
            "all m-spacings are zero (constant sample)".to_string(),
        ));
    }
    Ok(sum / kept as f64)
}
