//! Error criteria for estimated memberships and labels.
//!
//! * MHamm: `min_π ‖Π̂_r π − Π_r‖₁ / n_r` over column permutations.
//! * Hamm: the same criterion on one-hot label matrices.
//! * f̂_c: `min_π max_k (|T_k ∩ T̂ᶜ_π(k)| + |Tᶜ_k ∩ T̂_π(k)|) / n_{c,k}`.
//!
//! MHamm and Hamm are sums of per-column-pair costs, so the optimal
//! permutation comes from an assignment problem. f̂_c is a min-max and is
//! searched exhaustively (with pruning).
//!
//! Permutations are reported as `perm[k] = l`: true community `k` is matched
//! with estimated community `l`. Among optimal permutations the
//! lexicographically smallest is returned.

use serde::Serialize;

use crate::assignment::{assignment_cost, lexicographic_optimal};
use crate::error::{Error, Result};
use crate::model::{ColumnLabels, RowMembership};

/// Largest `K_c` accepted by [`f_c_error`].
pub const F_C_MAX_COMMUNITIES: usize = 10;
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub mhamm: f64,
    pub hamm: f64,
    pub f_c: f64,
    pub best_row_perm: Vec<usize>,
    pub best_col_perm: Vec<usize>,
}

/// `cost[k][l] = Σ_i |Π̂(i,l) − Π(i,k)|`
pub fn membership_cost_matrix(
    pi_hat: &RowMembership,
    pi_true: &RowMembership,
) -> Result<Vec<Vec<f64>>> {
    let (a, b) = (pi_hat.matrix(), pi_true.matrix());
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "membership shapes differ: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let k = b.ncols();
    Ok((0..k)
        .map(|t| {
            (0..k)
                .map(|e| (0..b.nrows()).map(|i| (a[(i, e)] - b[(i, t)]).abs()).sum())
                .collect()
        })
        .collect())
}

/// Mixed-Hamming error rate and its optimal column permutation.
pub fn mhamm(pi_hat: &RowMembership, pi_true: &RowMembership) -> Result<(f64, Vec<usize>)> {
    let cost = membership_cost_matrix(pi_hat, pi_true)?;
    let perm = lexicographic_optimal(&cost, TIE_TOL);
    Ok((
        assignment_cost(&cost, &perm) / pi_true.n_nodes() as f64,
        perm,
    ))
}

fn check_labels(labels_hat: &ColumnLabels, labels_true: &ColumnLabels, k_c: usize) -> Result<()> {
    if labels_hat.len() != labels_true.len() {
        return Err(Error::Dimension(format!(
            "label vectors have lengths {} and {}",
            labels_hat.len(),
            labels_true.len()
        )));
    }
    if labels_hat.is_empty() {
        return Err(Error::Dimension("label vectors are empty".into()));
    }
    for l in [labels_hat, labels_true] {
        if l.n_communities() > k_c {
            return Err(Error::Parameter(format!(
                "labels use {} communities, more than K_c = {k_c}",
                l.n_communities()
            )));
        }
    }
    Ok(())
}

/// `conf[k][l] = |{i : true(i) = k, est(i) = l}|`
fn confusion(labels_hat: &ColumnLabels, labels_true: &ColumnLabels, k_c: usize) -> Vec<Vec<usize>> {
    let mut conf = vec![vec![0usize; k_c]; k_c];
    for (&e, &t) in labels_hat.labels().iter().zip(labels_true.labels()) {
        conf[t][e] += 1;
    }
    conf
}

/// `cost[k][l] = ‖Π_c(:,k) − Π̂_c(:,l)‖₁`
pub fn label_cost_matrix(
    labels_hat: &ColumnLabels,
    labels_true: &ColumnLabels,
    k_c: usize,
) -> Result<Vec<Vec<f64>>> {
    check_labels(labels_hat, labels_true, k_c)?;
    let conf = confusion(labels_hat, labels_true, k_c);
    let true_sizes: Vec<usize> = conf.iter().map(|r| r.iter().sum()).collect();
    let est_sizes: Vec<usize> = (0..k_c).map(|l| conf.iter().map(|r| r[l]).sum()).collect();
    Ok((0..k_c)
        .map(|t| {
            (0..k_c)
                .map(|e| (true_sizes[t] + est_sizes[e] - 2 * conf[t][e]) as f64)
                .collect()
        })
        .collect())
}

/// Hamming error rate of column labels and its optimal label permutation.
pub fn hamm(
    labels_hat: &ColumnLabels,
    labels_true: &ColumnLabels,
    k_c: usize,
) -> Result<(f64, Vec<usize>)> {
    let cost = label_cost_matrix(labels_hat, labels_true, k_c)?;
    let perm = lexicographic_optimal(&cost, TIE_TOL);
    Ok((
        assignment_cost(&cost, &perm) / labels_true.len() as f64,
        perm,
    ))
}

/// The min-max partition criterion f̂_c.
pub fn f_c_error(
    partition_hat: &ColumnLabels,
    partition_true: &ColumnLabels,
    k_c: usize,
) -> Result<f64> {
    check_labels(partition_hat, partition_true, k_c)?;
    if k_c > F_C_MAX_COMMUNITIES {
        return Err(Error::Parameter(format!(
            "f̂_c is evaluated exhaustively and supports K_c ≤ {F_C_MAX_COMMUNITIES}, got {k_c}"
        )));
    }
    let conf = confusion(partition_hat, partition_true, k_c);
    let true_sizes: Vec<usize> = conf.iter().map(|r| r.iter().sum()).collect();
    if let Some(k) = true_sizes.iter().position(|s| *s == 0) {
        return Err(Error::Parameter(format!(
            "true column community {} is empty; f̂_c is undefined",
            k + 1
        )));
    }
    let est_sizes: Vec<usize> = (0..k_c).map(|l| conf.iter().map(|r| r[l]).sum()).collect();
    let term: Vec<Vec<f64>> = (0..k_c)
        .map(|k| {
            (0..k_c)
                .map(|l| {
                    let miss = true_sizes[k] - conf[k][l];
                    let extra = est_sizes[l] - conf[k][l];
                    (miss + extra) as f64 / true_sizes[k] as f64
                })
                .collect()
        })
        .collect();

    fn search(term: &[Vec<f64>], k: usize, used: &mut [bool], current: f64, best: &mut f64) {
        if current >= *best {
            return;
        }
        if k == term.len() {
            *best = current;
            return;
        }
        for l in 0..term.len() {
            if !used[l] {
                used[l] = true;
                search(term, k + 1, used, current.max(term[k][l]), best);
                used[l] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    search(&term, 0, &mut vec![false; k_c], 0.0, &mut best);
    Ok(best)
}

/// All three criteria at once.
pub fn evaluate(
    pi_hat: &RowMembership,
    pi_true: &RowMembership,
    labels_hat: &ColumnLabels,
    labels_true: &ColumnLabels,
) -> Result<ErrorReport> {
    let k_c = labels_true.n_communities().max(labels_hat.n_communities());
    let (mhamm, best_row_perm) = mhamm(pi_hat, pi_true)?;
    let (hamm, best_col_perm) = hamm(labels_hat, labels_true, k_c)?;
    let f_c = f_c_error(labels_hat, labels_true, k_c)?;
    Ok(ErrorReport {
        mhamm,
        hamm,
        f_c,
        best_row_perm,
        best_col_perm,
    })
}
