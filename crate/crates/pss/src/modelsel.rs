//! Data-driven selection of the partition parameter via K-fold likelihood
//! cross-validation, and greedy forward feature selection by mutual
//! information with a discrete target.
//!
//! The cross-validation loss of a candidate `ell` is the average held-out
//! negative log-density: folds are contiguous blocks of a seeded shuffle,
//! the model is fitted on the training part, and validation points whose
//! density is undefined (skipped cell, outside a sub-grid, outside the
//! bounding box) are excluded from the average and counted. Candidates
//! excluding more than [`DEFAULT_MAX_EXCLUDED_FRACTION`] of their validation
//! points are infeasible.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::Error;
use crate::estimator::{entropy, fit, LogDensity, PssConfig};
use crate::Result;

/// Candidates excluding more than this fraction of held-out points are
/// rejected; a floor penalty would dominate the argmin arbitrarily.
pub const DEFAULT_MAX_EXCLUDED_FRACTION: f64 = 0.2;

/// Held-out loss of one candidate partition parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateLoss {
    pub ell: usize,
    /// Mean over folds of the per-fold mean negative log-density, when at
    /// least one fold evaluated at least one point.
    pub loss: Option<f64>,
    /// Held-out points with undefined density, per fold.
    pub excluded_per_fold: Vec<usize>,
    /// Excluded fraction of all held-out points.
    pub excluded_fraction: f64,
    /// A candidate is infeasible when every held-out point was undefined.
    pub feasible: bool,
}

/// Outcome of cross-validated selection.
#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub selected_ell: usize,
    pub candidates: Vec<CandidateLoss>,
}

/// Loss of a fitted model on a validation set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldoutLoss {
    /// Mean negative log-density over the evaluated points.
    pub mean_nll: f64,
    pub evaluated: usize,
    pub excluded: usize,
}

/// Fits on `train` and averages the negative log-density over the
/// `validation` points with defined density.
pub fn holdout_loss(train: &Dataset, validation: &Dataset, cfg: &PssConfig) -> Result<HoldoutLoss> {
    let model = fit(train, cfg)?;
    let mut sum = 0.0;
    let mut evaluated = 0usize;
    let mut excluded = 0usize;
    for row in validation.iter_rows() {
        match model.log_density(row) {
            LogDensity::Defined(l) => {
                sum += -l;
                evaluated += 1;
            }
            LogDensity::Undefined | LogDensity::OutOfRange => excluded += 1,
        }
    }
    if evaluated == 0 {
        return Err(Error::DegenerateSample(
            "no validation point has a defined density".to_string(),
        ));
    }
    Ok(HoldoutLoss {
        mean_nll: sum / evaluated as f64,
        evaluated,
        excluded,
    })
}

/// Default candidate grid: `1..=max(2, floor(n^(1/d)))`, capped at 30.
pub fn default_ell_candidates(n: usize, d: usize) -> Vec<usize> {
    let upper = (n as f64).powf(1.0 / d as f64).floor() as usize;
    (1..=upper.max(2).min(30)).collect()
}

/// Selects the partition parameter minimizing the K-fold held-out negative
/// log-density. Ties break toward the smaller candidate.
pub fn cv_select_ell(
    data: &Dataset,
    candidates: &[usize],
    folds: usize,
    seed: u64,
) -> Result<CvResult> {
    if folds < 2 {
        return Err(Error::InvalidInput("need at least 2 folds".to_string()));
    }
    if data.rows() < 2 * folds {
        return Err(Error::InvalidInput(format!(
            "need at least {} rows for {folds}-fold cross-validation, got {}",
            2 * folds,
            data.rows()
        )));
    }
    if candidates.is_empty() {
        return Err(Error::InvalidInput("empty candidate grid".to_string()));
    }
    if candidates.contains(&0) {
        return Err(Error::InvalidInput("candidates must be at least 1".to_string()));
    }

    let mut order: Vec<usize> = (0..data.rows()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let blocks = fold_blocks(&order, folds);

    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let mut results = Vec::with_capacity(sorted.len());
    for &ell in &sorted {
        let cfg = PssConfig::with_ell(ell);
        let mut fold_losses = Vec::with_capacity(folds);
        let mut excluded_per_fold = Vec::with_capacity(folds);
        let mut held_out_total = 0usize;
        for k in 0..folds {
            let validation = data.select_rows(&blocks[k])?;
            let train_rows: Vec<usize> = blocks
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != k)
                .flat_map(|(_, b)| b.iter().copied())
                .collect();
            let train = data.select_rows(&train_rows)?;
            held_out_total += validation.rows();
            match holdout_loss(&train, &validation, &cfg) {
                Ok(loss) => {
                    fold_losses.push(loss.mean_nll);
                    excluded_per_fold.push(loss.excluded);
                }
                Err(Error::DegenerateSample(_)) => {
                    excluded_per_fold.push(validation.rows());
                }
                Err(other) => return Err(other),
            }
        }
        let excluded_total: usize = excluded_per_fold.iter().sum();
        let excluded_fraction = excluded_total as f64 / held_out_total as f64;
        let loss = if fold_losses.is_empty() {
            None
        } else {
            Some(fold_losses.iter().sum::<f64>() / fold_losses.len() as f64)
        };
        results.push(CandidateLoss {
            ell,
            loss,
            excluded_per_fold,
            excluded_fraction,
            feasible: loss.is_some(),
        });
    }

    // Candidates excluding too many held-out points are rejected as long as
    // a better-behaved alternative exists.
    let argmin = |limit: f64| -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for cand in &results {
            if let Some(loss) = cand.loss.filter(|_| cand.excluded_fraction <= limit) {
                if best.map_or(true, |(_, b)| loss < b) {
                    best = Some((cand.ell, loss));
                }
            }
        }
        best
    };
    let best = argmin(DEFAULT_MAX_EXCLUDED_FRACTION).or_else(|| argmin(f64::INFINITY));
    match best {
        Some((selected_ell, _)) => Ok(CvResult {
            selected_ell,
            candidates: results,
        }),
        None => Err(Error::Selection(
            "every candidate was infeasible (all held-out densities undefined)".to_string(),
        )),
    }
}

fn fold_blocks(order: &[usize], folds: usize) -> Vec<Vec<usize>> {
    let n = order.len();
    let base = n / folds;
    let extra = n % folds;
    let mut blocks = Vec::with_capacity(folds);
    let mut start = 0;
    for k in 0..folds {
        let len = base + usize::from(k < extra);
        blocks.push(order[start..start + len].to_vec());
        start += len;
    }
    blocks
}

/// Per-row class identifiers from a finite label set.
#[derive(Debug, Clone)]
pub struct DiscreteLabels {
    ids: Vec<usize>,
    counts: Vec<usize>,
}

impl DiscreteLabels {
    /// Groups rows by exact label value; class ids follow value order.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidLabels("empty label column".to_string()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidLabels("non-finite label".to_string()));
        }
        let mut distinct: Vec<f64> = values.to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup_by(|a, b| a == b);
        let ids: Vec<usize> = values
            .iter()
            .map(|v| distinct.partition_point(|x| x < v))
            .collect();
        let mut counts = vec![0usize; distinct.len()];
        for &id in &ids {
            counts[id] += 1;
        }
        Ok(Self { ids, counts })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn class_count(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Rows belonging to class `c`, in ascending row order.
    pub fn class_rows(&self, c: usize) -> Vec<usize> {
        self.ids
            .iter()
            .enumerate()
            .filter(|(_, &id)| id == c)
            .map(|(r, _)| r)
            .collect()
    }
}

/// Mutual information between a feature set and a discrete target via the
/// class-conditional decomposition `H(S) - sum_c (n_c/n) H(S | Y = c)`.
/// Classes below the minimum cell count contribute zero.
pub fn class_conditional_mi(
    features: &Dataset,
    labels: &DiscreteLabels,
    ell: usize,
) -> Result<f64> {
    if labels.n() != features.rows() {
        return Err(Error::InvalidLabels(format!(
            "{} labels for {} rows",
            labels.n(),
            features.rows()
        )));
    }
    if features.rows() < 4 {
        return Err(Error::InvalidInput(
            "class-conditional MI needs at least 4 rows".to_string(),
        ));
    }
    let cfg = PssConfig::with_ell(ell);
    let usable = labels
        .counts()
        .iter()
        .filter(|&&c| c >= cfg.min_cell_count)
        .count();
    if labels.class_count() >= 2 && usable < 2 {
        return Err(Error::InvalidLabels(format!(
            "only {usable} of {} classes have enough rows",
            labels.class_count()
        )));
    }
    let h_joint = entropy(features, &cfg)?.value;
    let n = features.rows() as f64;
    let mut conditional = 0.0;
    for c in 0..labels.class_count() {
        let n_c = labels.counts()[c];
        if n_c < cfg.min_cell_count {
            continue; // degenerate class: prior weight times zero
        }
        let subset = features.select_rows(&labels.class_rows(c))?;
        let h_c = entropy(&subset, &cfg)?.value;
        conditional += n_c as f64 / n * h_c;
    }
    Ok(h_joint - conditional)
}

/// Greedy forward selection trace: chosen feature indices and the MI after
/// each addition.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTrace {
    pub selected: Vec<usize>,
    pub mi: Vec<f64>,
}

/// Adds `steps` features, each maximizing the class-conditional MI of the
/// augmented set; ties break toward the lowest feature index.
pub fn greedy_forward_select(
    features: &Dataset,
    labels: &DiscreteLabels,
    ell: usize,
    steps: usize,
) -> Result<SelectionTrace> {
    if steps > features.cols() {
        return Err(Error::InvalidInput(format!(
            "cannot select {steps} of {} features",
            features.cols()
        )));
    }
    let mut selected: Vec<usize> = Vec::with_capacity(steps);
    let mut mi_trace = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..features.cols() {
            if selected.contains(&j) {
                continue;
            }
            let mut cols = selected.clone();
            cols.push(j);
            let mi = class_conditional_mi(&features.select_columns(&cols)?, labels, ell)?;
            if best.map_or(true, |(_, b)| mi > b) {
                best = Some((j, mi));
            }
        }
        let (j, mi) = best.expect("steps <= feature count leaves a candidate");
        selected.push(j);
        mi_trace.push(mi);
    }
    Ok(SelectionTrace {
        selected,
        mi: mi_trace,
    })
}
