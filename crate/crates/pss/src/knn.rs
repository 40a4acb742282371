//! Baseline k-nearest-neighbor entropy estimators: Kozachenko-Leonenko (KL)
//! over Euclidean balls and Kraskov-Stoegbauer-Grassberger (KSG) over
//! max-norm hyper-rectangles.
//!
//! `H_KL  = -psi(k) + psi(n) + log V_d + (d/n) sum_i log R_{i,k}`
//! `H_KSG = -psi(k) + psi(n) + (d-1)/k + (1/n) sum_i sum_j log R_{i,j}`
//!
//! where `R_{i,k}` is the Euclidean distance from row `i` to its kth nearest
//! neighbor (self excluded), `V_d = pi^(d/2) / Gamma(1 + d/2)`, and `R_{i,j}`
//! is the absolute coordinate-`j` difference between row `i` and its kth
//! nearest neighbor under the max-norm.
//!
//! Neighbor search runs on an exact k-d tree or a brute-force scan; both
//! resolve distance ties by row index and produce identical results.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::dataset::Dataset;
use crate::error::Error;
use crate::Result;

/// Neighbor order and search backend.
#[derive(Debug, Clone, Copy)]
pub struct KnnConfig {
    /// Neighbor order, `1 <= k <= n - 1`.
    pub k: usize,
    pub search: SearchMethod,
    pub ksg_widths: KsgWidths,
}

impl KnnConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            search: SearchMethod::KdTree,
            ksg_widths: KsgWidths::CoordinateDistance,
        }
    }
}

/// Marginal width convention for the KSG rectangle.
///
/// `CoordinateDistance` takes `R_{i,j}` as the absolute coordinate-`j`
/// difference to the kth max-norm neighbor. `FullEdge` uses twice that
/// (the full rectangle edge), which removes the `d log 2` offset between
/// the two conventions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KsgWidths {
    CoordinateDistance,
    FullEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    KdTree,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    Chebyshev,
}

fn distance(a: &[f64], b: &[f64], metric: Metric) -> f64 {
    match metric {
        Metric::Euclidean => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
        Metric::Chebyshev => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max),
    }
}

/// Candidate ordering: distance first, row index as the tie-break, so both
/// search backends pick the same neighbors.
fn candidate_lt(a: (f64, usize), b: (f64, usize)) -> bool {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => a.1 < b.1,
    }
}

/// Fixed-capacity worst-on-top container for the k best candidates.
struct KBest {
    k: usize,
    items: Vec<(f64, usize)>,
}

impl KBest {
    fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    fn worst(&self) -> Option<(f64, usize)> {
        if self.items.len() == self.k {
            self.items.last().copied()
        } else {
            None
        }
    }

    fn offer(&mut self, cand: (f64, usize)) {
        if self.items.len() == self.k {
            if !candidate_lt(cand, *self.items.last().unwrap()) {
                return;
            }
            self.items.pop();
        }
        let pos = self.items.partition_point(|&it| candidate_lt(it, cand));
        self.items.insert(pos, cand);
    }

    fn into_sorted(self) -> Vec<(f64, usize)> {
        self.items
    }
}

struct KdNode {
    point: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

struct KdTree<'a> {
    data: &'a Dataset,
    nodes: Vec<KdNode>,
    root: Option<usize>,
}

impl<'a> KdTree<'a> {
    fn build(data: &'a Dataset) -> Self {
        let mut indices: Vec<usize> = (0..data.rows()).collect();
        let mut nodes = Vec::with_capacity(data.rows());
        let root = Self::build_rec(data, &mut indices, 0, &mut nodes);
        Self { data, nodes, root }
    }

    fn build_rec(
        data: &Dataset,
        indices: &mut [usize],
        depth: usize,
        nodes: &mut Vec<KdNode>,
    ) -> Option<usize> {
        if indices.is_empty() {
            return None;
        }
        let axis = depth % data.cols();
        let mid = indices.len() / 2;
        indices.select_nth_unstable_by(mid, |&a, &b| {
            data.get(a, axis)
                .total_cmp(&data.get(b, axis))
                .then(a.cmp(&b))
        });
        let point = indices[mid];
        let id = nodes.len();
        nodes.push(KdNode {
            point,
            axis,
            left: None,
            right: None,
        });
        let (lower, rest) = indices.split_at_mut(mid);
        let left = Self::build_rec(data, lower, depth + 1, nodes);
        let right = Self::build_rec(data, &mut rest[1..], depth + 1, nodes);
        nodes[id].left = left;
        nodes[id].right = right;
        Some(id)
    }

    fn knn(&self, query: &[f64], k: usize, exclude: usize, metric: Metric) -> Vec<(f64, usize)> {
        let mut best = KBest::new(k);
        if let Some(root) = self.root {
            self.search(root, query, exclude, metric, &mut best);
        }
        best.into_sorted()
    }

    fn search(&self, node: usize, query: &[f64], exclude: usize, metric: Metric, best: &mut KBest) {
        let n = &self.nodes[node];
        let point = self.data.row(n.point);
        if n.point != exclude {
            best.offer((distance(query, point, metric), n.point));
        }
        let diff = query[n.axis] - point[n.axis];
        let (near, far) = if diff <= 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        if let Some(child) = near {
            self.search(child, query, exclude, metric, best);
        }
        // The axis gap lower-bounds both metrics; on a tie the far side may
        // still hold an equal-distance neighbor with a smaller index.
        let visit_far = match best.worst() {
            Some((worst, _)) => diff.abs() <= worst,
            None => true,
        };
        if visit_far {
            if let Some(child) = far {
                self.search(child, query, exclude, metric, best);
            }
        }
    }
}

fn brute_force_knn(
    data: &Dataset,
    query_row: usize,
    k: usize,
    metric: Metric,
) -> Vec<(f64, usize)> {
    let query = data.row(query_row);
    let mut best = KBest::new(k);
    for j in 0..data.rows() {
        if j != query_row {
            best.offer((distance(query, data.row(j), metric), j));
        }
    }
    best.into_sorted()
}

/// For every row, the `k` nearest neighbors (self excluded) as
/// `(distance, row)` pairs sorted ascending, ties broken by row index.
pub fn neighbor_lists(
    data: &Dataset,
    k: usize,
    metric: Metric,
    method: SearchMethod,
) -> Result<Vec<Vec<(f64, usize)>>> {
    if k == 0 || k >= data.rows() {
        return Err(Error::InvalidInput(format!(
            "neighbor order k={k} must satisfy 1 <= k <= n-1 with n={}",
            data.rows()
        )));
    }
    match method {
        SearchMethod::KdTree => {
            let tree = KdTree::build(data);
            Ok((0..data.rows())
                .map(|i| tree.knn(data.row(i), k, i, metric))
                .collect())
        }
        SearchMethod::BruteForce => Ok((0..data.rows())
            .map(|i| brute_force_knn(data, i, k, metric))
            .collect()),
    }
}

/// Per-row distance to the kth nearest neighbor.
pub fn kth_neighbor_distances(
    data: &Dataset,
    k: usize,
    metric: Metric,
    method: SearchMethod,
) -> Result<Vec<f64>> {
    Ok(neighbor_lists(data, k, metric, method)?
        .iter()
        .map(|list| list[k - 1].0)
        .collect())
}

/// Returns a copy of `data` with deterministic jitter of magnitude
/// `1e-10 x column range` when exact duplicate rows exist; otherwise a plain
/// copy. Keeps kNN log terms finite on tied samples.
fn deduplicated(data: &Dataset) -> Dataset {
    let mut order: Vec<usize> = (0..data.rows()).collect();
    order.sort_by(|&a, &b| {
        data.row(a)
            .iter()
            .zip(data.row(b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let has_duplicates = order
        .windows(2)
        .any(|w| data.row(w[0]) == data.row(w[1]));
    if !has_duplicates {
        return data.clone();
    }
    let d = data.cols();
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
    for row in data.iter_rows() {
        for (j, &v) in row.iter().enumerate() {
            ranges[j].0 = ranges[j].0.min(v);
            ranges[j].1 = ranges[j].1.max(v);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b6e6e5f6a697474); // "knn_jitt"
    let mut values = Vec::with_capacity(data.rows() * d);
    for row in data.iter_rows() {
        for (j, &v) in row.iter().enumerate() {
            let scale = 1e-10 * (ranges[j].1 - ranges[j].0);
            let u: f64 = rng.random_range(-1.0..1.0);
            values.push(v + scale * u);
        }
    }
    Dataset::new(values, data.rows(), d).expect("jittered data stays finite")
}

fn log_unit_ball_volume(d: usize) -> f64 {
    let half_d = d as f64 / 2.0;
    half_d * PI.ln() - ln_gamma(1.0 + half_d)
}

/// Kozachenko-Leonenko entropy estimate in nats.
pub fn kl_entropy(data: &Dataset, cfg: &KnnConfig) -> Result<f64> {
    let data = deduplicated(data);
    let dists = kth_neighbor_distances(&data, cfg.k, Metric::Euclidean, cfg.search)?;
    kl_from_distances(&dists, data.rows(), data.cols(), cfg.k)
}

fn kl_from_distances(kth: &[f64], n: usize, d: usize, k: usize) -> Result<f64> {
    let mut log_sum = 0.0;
    for &r in kth {
        if r <= 0.0 {
            return Err(Error::DegenerateGeometry(
                "zero kth-neighbor distance after de-duplication".to_string(),
            ));
        }
        log_sum += r.ln();
    }
    Ok(-digamma(k as f64) + digamma(n as f64)
        + log_unit_ball_volume(d)
        + d as f64 / n as f64 * log_sum)
}

/// KSG entropy estimate in nats.
pub fn ksg_entropy(data: &Dataset, cfg: &KnnConfig) -> Result<f64> {
    let data = deduplicated(data);
    let lists = neighbor_lists(&data, cfg.k, Metric::Chebyshev, cfg.search)?;
    ksg_from_lists(&data, &lists, cfg.k, cfg.ksg_widths)
}

fn ksg_from_lists(
    data: &Dataset,
    lists: &[Vec<(f64, usize)>],
    k: usize,
    widths: KsgWidths,
) -> Result<f64> {
    let (n, d) = (data.rows(), data.cols());
    let scale = match widths {
        KsgWidths::CoordinateDistance => 1.0,
        KsgWidths::FullEdge => 2.0,
    };
    let mut log_sum = 0.0;
    for (i, list) in lists.iter().enumerate() {
        let neighbor = data.row(list[k - 1].1);
        for (x, y) in data.row(i).iter().zip(neighbor) {
            let width = scale * (x - y).abs();
            if width <= 0.0 {
                return Err(Error::DegenerateGeometry(
                    "zero marginal width to the kth neighbor".to_string(),
                ));
            }
            log_sum += width.ln();
        }
    }
    Ok(-digamma(k as f64)
        + digamma(n as f64)
        + (d as f64 - 1.0) / k as f64
        + log_sum / n as f64)
}

/// KL estimates for every `k` in `ks` from a single neighbor search at
/// `max(ks)`.
pub fn kl_entropy_sweep(data: &Dataset, ks: &[usize], method: SearchMethod) -> Result<Vec<f64>> {
    let data = deduplicated(data);
    let k_max = *ks.iter().max().ok_or_else(|| {
        Error::InvalidInput("empty neighbor-order grid".to_string())
    })?;
    let lists = neighbor_lists(&data, k_max, Metric::Euclidean, method)?;
    ks.iter()
        .map(|&k| {
            let kth: Vec<f64> = lists.iter().map(|l| l[k - 1].0).collect();
            kl_from_distances(&kth, data.rows(), data.cols(), k)
        })
        .collect()
}

/// KSG estimates for every `k` in `ks` from a single neighbor search.
pub fn ksg_entropy_sweep(data: &Dataset, ks: &[usize], method: SearchMethod) -> Result<Vec<f64>> {
    let data = deduplicated(data);
    let k_max = *ks.iter().max().ok_or_else(|| {
        Error::InvalidInput("empty neighbor-order grid".to_string())
    })?;
    let lists = neighbor_lists(&data, k_max, Metric::Chebyshev, method)?;
    ks.iter()
        .map(|&k| ksg_from_lists(&data, &lists, k, KsgWidths::CoordinateDistance))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn data_1d(values: &[f64]) -> Dataset {
        Dataset::from_column(values.to_vec()).unwrap()
    }

    fn random_data(n: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
        Dataset::new(values, n, d).unwrap()
    }

    #[test]
    fn kl_fixtures() {
        let h2 = kl_entropy(&data_1d(&[0.0, 1.0]), &KnnConfig::new(1)).unwrap();
        assert!((h2 - (1.0 + 2.0f64.ln())).abs() <= 1e-9, "h2 = {h2}");
        let h3 = kl_entropy(&data_1d(&[0.0, 1.0, 2.0]), &KnnConfig::new(1)).unwrap();
        assert!((h3 - (1.5 + 2.0f64.ln())).abs() <= 1e-9, "h3 = {h3}");
    }

    #[test]
    fn ksg_fixtures() {
        let h2 = ksg_entropy(&data_1d(&[0.0, 1.0]), &KnnConfig::new(1)).unwrap();
        assert!((h2 - 1.0).abs() <= 1e-9, "h2 = {h2}");
        let h3 = ksg_entropy(&data_1d(&[0.0, 1.0, 2.0]), &KnnConfig::new(1)).unwrap();
        assert!((h3 - 1.5).abs() <= 1e-9, "h3 = {h3}");
    }

    #[test]
    fn invalid_k_rejected() {
        let data = data_1d(&[0.0, 1.0]);
        assert!(kl_entropy(&data, &KnnConfig::new(0)).is_err());
        assert!(kl_entropy(&data, &KnnConfig::new(2)).is_err());
    }

    #[test]
    fn duplicates_are_jittered_not_fatal() {
        let data = Dataset::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![2.0, 0.5],
        ])
        .unwrap();
        let h = kl_entropy(&data, &KnnConfig::new(1)).unwrap();
        assert!(h.is_finite());
        let h2 = kl_entropy(&data, &KnnConfig::new(1)).unwrap();
        assert_eq!(h.to_bits(), h2.to_bits(), "jitter must be deterministic");
    }

    #[test]
    fn translation_exact_scaling_adds_d_log_a() {
        let data = random_data(300, 3, 9);
        let cfg = KnnConfig::new(3);
        let h = kl_entropy(&data, &cfg).unwrap();

        let shifted = data.affine_map(&[1.0; 3], &[5.0, -2.0, 0.25]).unwrap();
        assert_eq!(kl_entropy(&shifted, &cfg).unwrap().to_bits(), h.to_bits());

        let a = 2.5;
        let scaled = data.affine_map(&[a; 3], &[0.0; 3]).unwrap();
        let ha = kl_entropy(&scaled, &cfg).unwrap();
        assert!((ha - (h + 3.0 * a.ln())).abs() <= 1e-9);

        let hk = ksg_entropy(&data, &cfg).unwrap();
        let hka = ksg_entropy(&scaled, &cfg).unwrap();
        assert!((hka - (hk + 3.0 * a.ln())).abs() <= 1e-9);
    }

    #[test]
    fn kd_tree_matches_brute_force() {
        for (seed, n, d, k) in [(1u64, 200, 2, 1), (2, 151, 3, 4), (3, 400, 5, 7), (4, 97, 1, 2)] {
            let data = random_data(n, d, seed);
            for metric in [Metric::Euclidean, Metric::Chebyshev] {
                let a = neighbor_lists(&data, k, metric, SearchMethod::KdTree).unwrap();
                let b = neighbor_lists(&data, k, metric, SearchMethod::BruteForce).unwrap();
                assert_eq!(a, b, "seed {seed} metric {metric:?}");
            }
        }
    }

    #[test]
    fn gaussian_oracle_kl_1d() {
        let data = random_data(10_000, 1, 77);
        let oracle = 0.5 * (2.0 * PI * std::f64::consts::E).ln();
        let best = (1..=16)
            .map(|k| {
                let h = kl_entropy(&data, &KnnConfig::new(k)).unwrap();
                (h - oracle).abs()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best <= 0.05, "best |err| = {best}");
    }

    #[test]
    fn gaussian_oracle_ksg_2d_full_edge() {
        // The coordinate-distance convention sits d log 2 below the
        // full-edge one; only the latter tracks the Gaussian oracle.
        let data = random_data(10_000, 2, 78);
        let oracle = (2.0 * PI * std::f64::consts::E).ln();
        let best = (1..=16)
            .map(|k| {
                let cfg = KnnConfig {
                    ksg_widths: KsgWidths::FullEdge,
                    ..KnnConfig::new(k)
                };
                let h = ksg_entropy(&data, &cfg).unwrap();
                (h - oracle).abs()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best <= 0.1, "best |err| = {best}");
    }

    #[test]
    fn ksg_conventions_differ_by_d_log_2() {
        let data = random_data(500, 3, 79);
        let base = ksg_entropy(&data, &KnnConfig::new(2)).unwrap();
        let full = ksg_entropy(
            &data,
            &KnnConfig {
                ksg_widths: KsgWidths::FullEdge,
                ..KnnConfig::new(2)
            },
        )
        .unwrap();
        assert!((full - base - 3.0 * 2.0f64.ln()).abs() <= 1e-12);
    }
}
