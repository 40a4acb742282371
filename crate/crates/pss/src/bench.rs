//! Seeded benchmark harness for RMSE/runtime sweeps against synthetic
//! oracles, plus whitening and total-correlation reports for real tables.
//!
//! A sweep point is one `(dimension, sample size, correlation)` triple; every
//! estimator at that point sees the identical seeded datasets, one per trial.
//! Hyperparameters follow the configured policy: oracle tuning picks the grid
//! value minimizing empirical MSE against the analytic entropy, fixed uses
//! the given value, and cross-validation selects per trial.

use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::Error;
use crate::estimator::{entropy, total_correlation, PssConfig};
use crate::knn::{kl_entropy_sweep, ksg_entropy_sweep, SearchMethod};
use crate::modelsel::{cv_select_ell, default_ell_candidates};
use crate::synthetic::{equicorrelation, oracle_entropy, sample, DistributionSpec, Seed};
use crate::table::format_g17;
use crate::Result;

/// Benchmark marginal family.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum BenchFamily {
    Normal,
    Gamma { shape: f64, scale: f64 },
}

impl BenchFamily {
    pub fn label(&self) -> &'static str {
        match self {
            BenchFamily::Normal => "normal",
            BenchFamily::Gamma { .. } => "gamma",
        }
    }

    fn spec(&self, dims: usize, rho: f64) -> Result<DistributionSpec> {
        let correlation = equicorrelation(dims, rho)?;
        match *self {
            BenchFamily::Normal => Ok(DistributionSpec::normal(correlation)),
            BenchFamily::Gamma { shape, scale } => {
                DistributionSpec::gamma_copula(correlation, shape, scale)
            }
        }
    }
}

/// Estimators the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Pss,
    Kl,
    Ksg,
}

impl EstimatorKind {
    pub fn label(&self) -> &'static str {
        match self {
            EstimatorKind::Pss => "pss",
            EstimatorKind::Kl => "kl",
            EstimatorKind::Ksg => "ksg",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pss" => Ok(EstimatorKind::Pss),
            "kl" => Ok(EstimatorKind::Kl),
            "ksg" => Ok(EstimatorKind::Ksg),
            other => Err(Error::InvalidInput(format!("unknown estimator {other:?}"))),
        }
    }
}

/// Hyperparameter policy for a sweep.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum TuningPolicy {
    /// Pick the grid value minimizing empirical MSE against the oracle.
    OracleMse,
    /// Use the given partition parameter / neighbor order everywhere.
    Fixed { ell: usize, k: usize },
    /// Likelihood cross-validation per trial (PSS only).
    Cv { folds: usize },
}

/// Full benchmark configuration; carried into every report for provenance.
#[derive(Debug, Clone, Serialize)]
pub struct BenchConfig {
    pub family: BenchFamily,
    pub dims: Vec<usize>,
    pub ns: Vec<usize>,
    pub rhos: Vec<f64>,
    pub estimators: Vec<EstimatorKind>,
    pub policy: TuningPolicy,
    pub trials: usize,
    pub seed: u64,
    /// Run trials on the worker pool. Disable when runtimes matter.
    pub parallel: bool,
    /// Oracle-tuning grid for the partition parameter; the default grid
    /// depends on `(n, d)`.
    pub pss_grid: Option<Vec<usize>>,
    /// Oracle-tuning grid for the neighbor order.
    pub knn_grid: Vec<usize>,
    pub search: SearchMethod,
}

impl BenchConfig {
    pub fn new(family: BenchFamily) -> Self {
        Self {
            family,
            dims: vec![1],
            ns: vec![1000],
            rhos: vec![0.0],
            estimators: vec![EstimatorKind::Pss],
            policy: TuningPolicy::OracleMse,
            trials: 10,
            seed: 1,
            parallel: true,
            pss_grid: None,
            knn_grid: vec![1, 2, 3, 4, 6, 8, 12, 16],
            search: SearchMethod::KdTree,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".to_string()));
        }
        if self.dims.is_empty() || self.ns.is_empty() || self.rhos.is_empty() {
            return Err(Error::InvalidInput("empty sweep axis".to_string()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidInput("no estimators selected".to_string()));
        }
        if matches!(self.policy, TuningPolicy::Cv { .. })
            && self.estimators.iter().any(|e| *e != EstimatorKind::Pss)
        {
            return Err(Error::InvalidInput(
                "cross-validated tuning is only available for the PSS estimator".to_string(),
            ));
        }
        Ok(())
    }
}

/// One report row: an estimator at a sweep point with its tuned
/// hyperparameter and trial statistics.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub estimator: String,
    pub family: String,
    pub n: usize,
    pub d: usize,
    pub rho: f64,
    /// `"ell"` for PSS, `"k"` for the kNN estimators.
    pub param_name: String,
    pub param: usize,
    pub oracle: f64,
    pub rmse: f64,
    pub bias: f64,
    pub variance: f64,
    pub mean_runtime_s: f64,
    pub median_runtime_s: f64,
    pub trials: usize,
    pub failed_trials: usize,
}

/// Sweep results plus the configuration that produced them.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
}

/// Per-trial estimates of one estimator over its candidate hyperparameters.
struct TrialEstimates {
    /// `(candidate, estimate, runtime_s)` per successful candidate.
    values: Vec<(usize, f64, f64)>,
    failed: bool,
}

fn pss_candidates(cfg: &BenchConfig, n: usize, d: usize) -> Vec<usize> {
    match &cfg.policy {
        TuningPolicy::Fixed { ell, .. } => vec![*ell],
        _ => cfg
            .pss_grid
            .clone()
            .unwrap_or_else(|| default_ell_candidates(n, d)),
    }
}

fn knn_candidates(cfg: &BenchConfig, n: usize) -> Vec<usize> {
    let grid = match &cfg.policy {
        TuningPolicy::Fixed { k, .. } => vec![*k],
        _ => cfg.knn_grid.clone(),
    };
    grid.into_iter().filter(|&k| k + 1 <= n).collect()
}

fn run_trial(
    cfg: &BenchConfig,
    estimator: EstimatorKind,
    data: &Dataset,
    trial: u64,
) -> TrialEstimates {
    let mut values = Vec::new();
    let mut failed = false;
    match estimator {
        EstimatorKind::Pss => {
            let ells = match &cfg.policy {
                TuningPolicy::Cv { folds } => {
                    let grid = cfg
                        .pss_grid
                        .clone()
                        .unwrap_or_else(|| default_ell_candidates(data.rows(), data.cols()));
                    match cv_select_ell(data, &grid, *folds, cfg.seed ^ trial) {
                        Ok(cv) => vec![cv.selected_ell],
                        Err(_) => {
                            return TrialEstimates {
                                values,
                                failed: true,
                            }
                        }
                    }
                }
                _ => pss_candidates(cfg, data.rows(), data.cols()),
            };
            for ell in ells {
                let started = Instant::now();
                match entropy(data, &PssConfig::with_ell(ell)) {
                    Ok(est) => values.push((ell, est.value, started.elapsed().as_secs_f64())),
                    Err(_) => failed = true,
                }
            }
        }
        EstimatorKind::Kl | EstimatorKind::Ksg => {
            let ks = knn_candidates(cfg, data.rows());
            if ks.is_empty() {
                return TrialEstimates {
                    values,
                    failed: true,
                };
            }
            let started = Instant::now();
            let sweep = if estimator == EstimatorKind::Kl {
                kl_entropy_sweep(data, &ks, cfg.search)
            } else {
                ksg_entropy_sweep(data, &ks, cfg.search)
            };
            // One neighbor search at max(k) serves the whole grid, so every
            // candidate shares its wall time.
            let elapsed = started.elapsed().as_secs_f64();
            match sweep {
                Ok(estimates) => {
                    for (&k, est) in ks.iter().zip(estimates) {
                        values.push((k, est, elapsed));
                    }
                }
                Err(_) => failed = true,
            }
        }
    }
    TrialEstimates { values, failed }
}

fn summarize(
    estimator: EstimatorKind,
    family: &BenchFamily,
    n: usize,
    d: usize,
    rho: f64,
    oracle: f64,
    trials: &[TrialEstimates],
) -> Result<BenchRow> {
    // Collect per-candidate series across trials.
    let mut by_param: std::collections::BTreeMap<usize, Vec<(f64, f64)>> =
        std::collections::BTreeMap::new();
    for trial in trials {
        for &(param, est, secs) in &trial.values {
            by_param.entry(param).or_default().push((est, secs));
        }
    }
    let failed_trials = trials.iter().filter(|t| t.failed).count();
    let mut best: Option<(usize, f64)> = None;
    for (&param, series) in &by_param {
        let mse = series
            .iter()
            .map(|(e, _)| (e - oracle) * (e - oracle))
            .sum::<f64>()
            / series.len() as f64;
        if best.map_or(true, |(_, b)| mse < b) {
            best = Some((param, mse));
        }
    }
    let (param, _) = best.ok_or_else(|| {
        Error::DegenerateSample(format!(
            "estimator {} failed on every trial at n={n}, d={d}, rho={rho}",
            estimator.label()
        ))
    })?;
    let series = &by_param[&param];
    let count = series.len() as f64;
    let mean = series.iter().map(|(e, _)| e).sum::<f64>() / count;
    let bias = mean - oracle;
    let variance = series.iter().map(|(e, _)| (e - mean) * (e - mean)).sum::<f64>() / count;
    let rmse = (series
        .iter()
        .map(|(e, _)| (e - oracle) * (e - oracle))
        .sum::<f64>()
        / count)
        .sqrt();
    let mut runtimes: Vec<f64> = series.iter().map(|&(_, s)| s).collect();
    runtimes.sort_by(f64::total_cmp);
    let mean_runtime = runtimes.iter().sum::<f64>() / count;
    let median_runtime = runtimes[runtimes.len() / 2];
    Ok(BenchRow {
        estimator: estimator.label().to_string(),
        family: family.label().to_string(),
        n,
        d,
        rho,
        param_name: match estimator {
            EstimatorKind::Pss => "ell".to_string(),
            _ => "k".to_string(),
        },
        param,
        oracle,
        rmse,
        bias,
        variance,
        mean_runtime_s: mean_runtime,
        median_runtime_s: median_runtime,
        trials: series.len(),
        failed_trials,
    })
}

/// Runs the configured sweep. Estimates are bitwise reproducible for a
/// fixed configuration; runtimes are not.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &d in &cfg.dims {
        for &n in &cfg.ns {
            for &rho in &cfg.rhos {
                let spec = cfg.family.spec(d, rho)?;
                let oracle = oracle_entropy(&spec);
                for &estimator in &cfg.estimators {
                    let trial_ids: Vec<u64> = (0..cfg.trials as u64).collect();
                    let run = |&trial: &u64| -> Result<TrialEstimates> {
                        let data = sample(&spec, n, Seed::new(cfg.seed, trial))?;
                        Ok(run_trial(cfg, estimator, &data, trial))
                    };
                    let trials: Vec<TrialEstimates> = if cfg.parallel {
                        trial_ids
                            .par_iter()
                            .map(run)
                            .collect::<Result<Vec<_>>>()?
                    } else {
                        trial_ids.iter().map(run).collect::<Result<Vec<_>>>()?
                    };
                    rows.push(summarize(estimator, &cfg.family, n, d, rho, oracle, &trials)?);
                }
            }
        }
    }
    Ok(BenchReport {
        config: cfg.clone(),
        rows,
    })
}

impl BenchReport {
    /// One row per sweep point and estimator; the full configuration rides
    /// along as a leading comment line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# config: {}\n",
            serde_json::to_string(&self.config).expect("config serializes")
        ));
        out.push_str(
            "estimator,family,n,d,rho,param_name,param,oracle,rmse,bias,variance,\
             mean_runtime_s,median_runtime_s,trials,failed_trials\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.estimator,
                r.family,
                r.n,
                r.d,
                format_g17(r.rho),
                r.param_name,
                r.param,
                format_g17(r.oracle),
                format_g17(r.rmse),
                format_g17(r.bias),
                format_g17(r.variance),
                format_g17(r.mean_runtime_s),
                format_g17(r.median_runtime_s),
                r.trials,
                r.failed_trials
            ));
        }
        out
    }

    /// JSON report nested by the sweep axes `(d, n, rho)`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut points: Vec<serde_json::Value> = Vec::new();
        for &d in &self.config.dims {
            for &n in &self.config.ns {
                for &rho in &self.config.rhos {
                    let rows: Vec<&BenchRow> = self
                        .rows
                        .iter()
                        .filter(|r| r.d == d && r.n == n && r.rho == rho)
                        .collect();
                    points.push(serde_json::json!({
                        "d": d,
                        "n": n,
                        "rho": rho,
                        "estimators": rows,
                    }));
                }
            }
        }
        serde_json::json!({
            "config": &self.config,
            "results": points,
        })
    }
}

/// Sample covariance of `data` (n - 1 divisor).
pub fn sample_covariance(data: &Dataset) -> DMatrix<f64> {
    let (n, d) = (data.rows(), data.cols());
    let means: Vec<f64> = (0..d)
        .map(|j| data.column(j).iter().sum::<f64>() / n as f64)
        .collect();
    let mut cov = DMatrix::zeros(d, d);
    for row in data.iter_rows() {
        for i in 0..d {
            let xi = row[i] - means[i];
            for j in 0..=i {
                cov[(i, j)] += xi * (row[j] - means[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            cov[(i, j)] /= (n - 1) as f64;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    cov
}

/// Relative eigenvalue threshold below which the covariance counts as rank
/// deficient.
pub const WHITEN_EIGENVALUE_THRESHOLD: f64 = 1e-12;

/// Zero-centers the data and applies the symmetric inverse square root of
/// the sample covariance, so the output has zero column means and identity
/// sample covariance.
pub fn whiten(data: &Dataset) -> Result<Dataset> {
    let (n, d) = (data.rows(), data.cols());
    if n <= d {
        return Err(Error::InvalidInput(format!(
            "whitening needs more rows than columns, got {n} x {d}"
        )));
    }
    let means: Vec<f64> = (0..d)
        .map(|j| data.column(j).iter().sum::<f64>() / n as f64)
        .collect();
    let cov = sample_covariance(data);
    let eigen = cov.symmetric_eigen();
    let max_eig = eigen.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let min_eig = eigen.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    if min_eig <= WHITEN_EIGENVALUE_THRESHOLD * max_eig {
        return Err(Error::DegenerateCovariance {
            eigenvalue: min_eig,
            threshold: WHITEN_EIGENVALUE_THRESHOLD,
        });
    }
    let inv_sqrt = DMatrix::from_diagonal(&eigen.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let transform = &eigen.eigenvectors * inv_sqrt * eigen.eigenvectors.transpose();
    let mut values = Vec::with_capacity(n * d);
    let mut centered = vec![0.0; d];
    for row in data.iter_rows() {
        for j in 0..d {
            centered[j] = row[j] - means[j];
        }
        for i in 0..d {
            values.push((0..d).map(|j| transform[(i, j)] * centered[j]).sum());
        }
    }
    Dataset::new(values, n, d)
}

/// Hyperparameter policy for total-correlation reports.
#[derive(Debug, Clone, Copy)]
pub enum TcPolicy {
    FixedEll(usize),
    Cv { folds: usize, seed: u64 },
}

/// Total-correlation report for one dataset.
#[derive(Debug, Clone, Serialize)]
pub struct TcReport {
    pub tc: f64,
    pub ell: usize,
    pub policy: String,
    pub wall_time_s: f64,
    pub nonnegative: bool,
    /// Optional kNN comparisons as `(estimator, k, tc)`.
    pub comparisons: Vec<(String, usize, f64)>,
}

/// Computes total correlation under the given policy, optionally alongside
/// KL/KSG comparisons at neighbor order `compare_k`.
pub fn tc_report(data: &Dataset, policy: TcPolicy, compare_k: Option<usize>) -> Result<TcReport> {
    let (ell, policy_name) = match policy {
        TcPolicy::FixedEll(ell) => (ell, "fixed"),
        TcPolicy::Cv { folds, seed } => {
            let grid = default_ell_candidates(data.rows(), data.cols());
            (cv_select_ell(data, &grid, folds, seed)?.selected_ell, "cv")
        }
    };
    let started = Instant::now();
    let tc = total_correlation(data, &PssConfig::with_ell(ell))?;
    let wall_time_s = started.elapsed().as_secs_f64();
    let mut comparisons = Vec::new();
    if let Some(k) = compare_k {
        comparisons.push(("kl".to_string(), k, knn_total_correlation(data, k, true)?));
        comparisons.push(("ksg".to_string(), k, knn_total_correlation(data, k, false)?));
    }
    Ok(TcReport {
        tc,
        ell,
        policy: policy_name.to_string(),
        wall_time_s,
        nonnegative: tc >= 0.0,
        comparisons,
    })
}

fn knn_total_correlation(data: &Dataset, k: usize, use_kl: bool) -> Result<f64> {
    let cfg = crate::knn::KnnConfig::new(k);
    let h = |d: &Dataset| {
        if use_kl {
            crate::knn::kl_entropy(d, &cfg)
        } else {
            crate::knn::ksg_entropy(d, &cfg)
        }
    };
    let mut marginal_sum = 0.0;
    for j in 0..data.cols() {
        marginal_sum += h(&Dataset::from_column(data.column(j))?)?;
    }
    Ok(marginal_sum - h(data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn single_trial_rmse_is_absolute_error() {
        let mut cfg = BenchConfig::new(BenchFamily::Normal);
        cfg.ns = vec![100];
        cfg.trials = 1;
        cfg.seed = 3;
        cfg.parallel = false;
        let report = run_benchmark(&cfg).unwrap();
        assert_eq!(report.rows.len(), 1);
        let row = &report.rows[0];
        assert!((row.oracle - 1.4189385332046727).abs() <= 1e-12);
        assert!(row.rmse.is_finite());
        assert!((row.rmse - row.bias.abs()).abs() <= 1e-12);
    }

    #[test]
    fn reports_are_reproducible() {
        let mut cfg = BenchConfig::new(BenchFamily::Normal);
        cfg.ns = vec![200];
        cfg.dims = vec![2];
        cfg.trials = 4;
        cfg.estimators = vec![EstimatorKind::Pss, EstimatorKind::Kl];
        let a = run_benchmark(&cfg).unwrap();
        let b = run_benchmark(&cfg).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.rmse.to_bits(), rb.rmse.to_bits());
            assert_eq!(ra.bias.to_bits(), rb.bias.to_bits());
            assert_eq!(ra.param, rb.param);
        }
    }

    #[test]
    fn rmse_decomposes_into_bias_and_variance() {
        let mut cfg = BenchConfig::new(BenchFamily::Gamma {
            shape: 0.4,
            scale: 0.3,
        });
        cfg.ns = vec![400];
        cfg.dims = vec![2];
        cfg.trials = 8;
        let report = run_benchmark(&cfg).unwrap();
        for row in &report.rows {
            assert!(row.rmse >= row.bias.abs());
            assert!((row.rmse * row.rmse - (row.bias * row.bias + row.variance)).abs() <= 1e-9);
        }
    }

    #[test]
    fn csv_and_json_carry_config() {
        let mut cfg = BenchConfig::new(BenchFamily::Normal);
        cfg.ns = vec![64];
        cfg.trials = 2;
        let report = run_benchmark(&cfg).unwrap();
        let csv = report.to_csv();
        assert!(csv.starts_with("# config:"));
        assert_eq!(csv.lines().count(), 2 + report.rows.len());
        let json = report.to_json();
        assert_eq!(json["config"]["seed"], 1);
        assert!(json["results"][0]["estimators"][0]["rmse"].is_number());
    }

    fn correlated_2d(n: usize, rho: f64, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let x: f64 = StandardNormal.sample(&mut rng);
            let e: f64 = StandardNormal.sample(&mut rng);
            rows.push(vec![x, rho * x + (1.0 - rho * rho).sqrt() * e]);
        }
        Dataset::from_rows(&rows).unwrap()
    }

    #[test]
    fn whitening_normalizes_first_two_moments() {
        let data = correlated_2d(4000, 0.9, 21);
        let white = whiten(&data).unwrap();
        for j in 0..2 {
            let mean = white.column(j).iter().sum::<f64>() / 4000.0;
            assert!(mean.abs() <= 1e-9, "mean = {mean}");
        }
        let cov = sample_covariance(&white);
        for i in 0..2 {
            for j in 0..2 {
                let target = f64::from(i == j);
                assert!((cov[(i, j)] - target).abs() <= 1e-6, "cov = {cov}");
            }
        }
        let corr = cov[(0, 1)] / (cov[(0, 0)] * cov[(1, 1)]).sqrt();
        assert!(corr.abs() <= 1e-6);
    }

    #[test]
    fn whitening_rejects_rank_deficient_input() {
        let base = correlated_2d(100, 0.2, 22);
        let dup = base.hstack(&base.select_columns(&[0]).unwrap()).unwrap();
        match whiten(&dup) {
            Err(Error::DegenerateCovariance { threshold, .. }) => {
                assert_eq!(threshold, WHITEN_EIGENVALUE_THRESHOLD);
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn tc_report_fixed_policy_smoke() {
        let data = correlated_2d(2000, 0.8, 23);
        let report = tc_report(&data, TcPolicy::FixedEll(6), Some(3)).unwrap();
        assert_eq!(report.ell, 6);
        assert_eq!(report.policy, "fixed");
        assert!(report.tc.is_finite());
        assert_eq!(report.comparisons.len(), 2);
    }
}
