//! Lloyd's k-means with k-means++ seeding and best-of-restarts selection.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::ColumnLabels;
use crate::seed;

pub const DEFAULT_RESTARTS: usize = 20;
pub const DEFAULT_MAX_ITERS: usize = 300;
const REL_IMPROVEMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: ColumnLabels,
    /// `k × d` cluster centers.
    pub centers: DMatrix<f64>,
    /// Total within-cluster squared distance.
    pub cost: f64,
    pub restarts_used: usize,
    /// Index of the restart that produced this result.
    pub best_restart: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iters: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: DEFAULT_RESTARTS,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

fn sq_dist(x: &DMatrix<f64>, i: usize, c: &DMatrix<f64>, k: usize) -> f64 {
    (0..x.ncols())
        .map(|d| (x[(i, d)] - c[(k, d)]).powi(2))
        .sum()
}

/// Cluster the rows of `x` into `k` groups.
pub fn kmeans_rows(
    x: &DMatrix<f64>,
    k: usize,
    seed: u64,
    opts: KMeansOptions,
) -> Result<KMeansResult> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!(
            "k = {k} clusters outside 1..={n}"
        )));
    }
    if opts.restarts == 0 {
        return Err(Error::Parameter(
            "k-means needs at least one restart".into(),
        ));
    }
    let mut best: Option<(usize, Vec<usize>, DMatrix<f64>, f64)> = None;
    for restart in 0..opts.restarts {
        let mut rng = seed::rng(seed::derive(
            seed,
            seed::purpose::KMEANS_RESTART,
            restart as u64,
        ));
        let init = plus_plus_init(x, k, &mut rng);
        let (labels, centers, cost) = lloyd(x, init, opts.max_iters, &mut |_| {});
        // strict improvement keeps the lowest restart index on ties
        if best.as_ref().is_none_or(|b| cost < b.3) {
            best = Some((restart, labels, centers, cost));
        }
    }
    let (best_restart, labels, centers, cost) = best.expect("at least one restart");
    Ok(KMeansResult {
        labels: ColumnLabels::new(labels, k)?,
        centers,
        cost,
        restarts_used: opts.restarts,
        best_restart,
    })
}

/// k-means++: first center uniform, later centers drawn with probability
/// proportional to squared distance from the nearest chosen center.
fn plus_plus_init<R: Rng>(x: &DMatrix<f64>, k: usize, rng: &mut R) -> DMatrix<f64> {
    let (n, d) = x.shape();
    let mut centers = DMatrix::zeros(k, d);
    let first = rng.random_range(0..n);
    centers.row_mut(0).copy_from(&x.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(x, i, &centers, 0)).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, w) in nearest.iter().enumerate() {
                acc += w;
                if acc > target && *w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).copy_from(&x.row(pick));
        for (i, w) in nearest.iter_mut().enumerate() {
            *w = w.min(sq_dist(x, i, &centers, c));
        }
    }
    centers
}

fn assign(x: &DMatrix<f64>, centers: &DMatrix<f64>) -> (Vec<usize>, Vec<f64>) {
    let k = centers.nrows();
    (0..x.nrows())
        .map(|i| {
            let mut best = (0, sq_dist(x, i, centers, 0));
            for c in 1..k {
                let dist = sq_dist(x, i, centers, c);
                if dist < best.1 {
                    best = (c, dist);
                }
            }
            best
        })
        .unzip()
}

/// Move each non-empty cluster's center to the mean of its points; returns
/// cluster sizes.
fn update_centers(x: &DMatrix<f64>, labels: &[usize], centers: &mut DMatrix<f64>) -> Vec<usize> {
    let (k, d) = centers.shape();
    let mut sums = DMatrix::<f64>::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for j in 0..d {
            sums[(l, j)] += x[(i, j)];
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            for j in 0..d {
                centers[(c, j)] = sums[(c, j)] / counts[c] as f64;
            }
        }
    }
    counts
}

/// Lloyd iterations from `centers`. `observe` sees the cost after each
/// assignment step.
pub(crate) fn lloyd(
    x: &DMatrix<f64>,
    mut centers: DMatrix<f64>,
    max_iters: usize,
    observe: &mut dyn FnMut(f64),
) -> (Vec<usize>, DMatrix<f64>, f64) {
    let n = x.nrows();
    let k = centers.nrows();
    let (mut labels, mut dists) = assign(x, &centers);
    let mut cost: f64 = dists.iter().sum();
    observe(cost);

    for _ in 0..max_iters {
        let mut counts = update_centers(x, &labels, &mut centers);
        // Empty clusters take the point farthest from its current center.
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n).filter(|&i| counts[labels[i]] > 1).fold(
                    None,
                    |acc: Option<usize>, i| match acc {
                        Some(a) if dists[a] >= dists[i] => Some(a),
                        _ => Some(i),
                    },
                );
                if let Some(i) = far {
                    counts[labels[i]] -= 1;
                    counts[c] = 1;
                    labels[i] = c;
                    dists[i] = 0.0;
                    centers.row_mut(c).copy_from(&x.row(i));
                }
            }
        }

        let (new_labels, new_dists) = assign(x, &centers);
        let new_cost: f64 = new_dists.iter().sum();
        observe(new_cost);
        let unchanged = new_labels == labels;
        let small_gain = cost - new_cost <= REL_IMPROVEMENT_TOL * cost.abs();
        labels = new_labels;
        dists = new_dists;
        cost = new_cost;
        if unchanged || small_gain {
            break;
        }
    }
    // centers consistent with final labels
    update_centers(x, &labels, &mut centers);
    let cost = (0..n).map(|i| sq_dist(x, i, &centers, labels[i])).sum();
    (labels, centers, cost)
}
