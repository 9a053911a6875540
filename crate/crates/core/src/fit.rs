//! Spectral estimators for row memberships and column labels.
//!
//! Both estimators share the row branch: top-`K_r` SVD, successive projection
//! on the rows of `Û_r` for the corner matrix `B̂_r`, then
//! `Ŷ_r = Û_r B̂_r' (B̂_r B̂_r')⁻¹` clipped at zero and L1-normalized.
//! The column branch runs k-means on the rows of `Û_c` (ONA) or on the
//! row-normalized `Û_{c,*}` (ODCNA).
//!
//! Applied to a population matrix `Ω` these are the ideal algorithms; there is
//! no separate code path.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::{kmeans_rows, KMeansOptions};
use crate::linalg::{row_normalize, top_k_svd, MatrixOperator, SpectralTriple};
use crate::model::{ColumnLabels, RowMembership};
use crate::seed;
use crate::sp::{successive_projection, CornerSet};

/// Largest admissible condition number of `B̂_r B̂_r'`.
pub const CORNER_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ona,
    Odcna,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Ona, Method::Odcna];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ona => "ONA",
            Method::Odcna => "ODCNA",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ona" => Ok(Method::Ona),
            "odcna" => Ok(Method::Odcna),
            other => Err(Error::Parameter(format!(
                "unknown method '{other}' (expected ona or odcna)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticBundle {
    /// Retained singular values, descending.
    pub sigma: Vec<f64>,
    /// Minimum pairwise distance between the k-means centers; `None` when
    /// there is a single column community.
    pub delta_c_hat: Option<f64>,
    /// Negative entries of `Ŷ_r` set to zero.
    pub clipped_count: usize,
    /// Rows of `Ŷ_r` that were all zero after clipping and received the
    /// one-hot membership of their nearest corner.
    pub zero_membership_rows: Vec<usize>,
    /// Rows of `Û_c` too small to normalize (ODCNA only).
    pub zero_column_rows: Vec<usize>,
    pub kmeans_cost: f64,
    pub kmeans_restarts: usize,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub method: Method,
    pub pi_r_hat: RowMembership,
    pub labels_hat: ColumnLabels,
    pub corners: CornerSet,
    pub spectral: SpectralTriple,
    pub diagnostics: DiagnosticBundle,
}

/// Output of the row branch.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipRecovery {
    pub pi_r: RowMembership,
    pub clipped_count: usize,
    pub zero_rows: Vec<usize>,
}

/// ONA: k-means on the rows of `Û_c`.
pub fn fit_ona<M: MatrixOperator + ?Sized>(
    a: &M,
    k_r: usize,
    k_c: usize,
    seed: u64,
) -> Result<FitResult> {
    fit(a, Method::Ona, k_r, k_c, seed)
}

/// ODCNA: k-means on the row-normalized `Û_{c,*}`.
pub fn fit_odcna<M: MatrixOperator + ?Sized>(
    a: &M,
    k_r: usize,
    k_c: usize,
    seed: u64,
) -> Result<FitResult> {
    fit(a, Method::Odcna, k_r, k_c, seed)
}

pub fn check_dimensions(n_r: usize, n_c: usize, k_r: usize, k_c: usize) -> Result<()> {
    if k_r == 0 {
        return Err(Error::Parameter("K_r must be ≥ 1".into()));
    }
    if k_r > k_c {
        return Err(Error::Identifiability {
            condition: "K_r ≤ K_c",
            detail: format!("K_r = {k_r} exceeds K_c = {k_c}; the model is not identifiable"),
        });
    }
    if k_c > n_c {
        return Err(Error::Parameter(format!(
            "K_c = {k_c} exceeds the {n_c} column nodes"
        )));
    }
    if k_r > n_r {
        return Err(Error::Parameter(format!(
            "K_r = {k_r} exceeds the {n_r} row nodes"
        )));
    }
    Ok(())
}

pub fn fit<M: MatrixOperator + ?Sized>(
    a: &M,
    method: Method,
    k_r: usize,
    k_c: usize,
    seed: u64,
) -> Result<FitResult> {
    check_dimensions(a.nrows(), a.ncols(), k_r, k_c)?;
    let spectral = top_k_svd(a, k_r)?;
    fit_spectral(spectral, method, k_c, seed)
}

/// Run both branches on a precomputed decomposition.
pub fn fit_spectral(
    spectral: SpectralTriple,
    method: Method,
    k_c: usize,
    seed: u64,
) -> Result<FitResult> {
    let k_r = spectral.rank();
    check_dimensions(spectral.u_r.nrows(), spectral.u_c.nrows(), k_r, k_c)?;
    let (corners, rows) = row_branch(&spectral.u_r)?;
    let columns = column_branch(&spectral.u_c, method, k_c, seed)?;
    Ok(assemble(spectral, method, corners, rows, columns))
}

/// Fit both estimators from one decomposition, sharing the row branch.
pub fn fit_both(spectral: SpectralTriple, k_c: usize, seed: u64) -> Result<[FitResult; 2]> {
    let k_r = spectral.rank();
    check_dimensions(spectral.u_r.nrows(), spectral.u_c.nrows(), k_r, k_c)?;
    let (corners, rows) = row_branch(&spectral.u_r)?;
    let ona = column_branch(&spectral.u_c, Method::Ona, k_c, seed)?;
    let odcna = column_branch(&spectral.u_c, Method::Odcna, k_c, seed)?;
    Ok([
        assemble(
            spectral.clone(),
            Method::Ona,
            corners.clone(),
            rows.clone(),
            ona,
        ),
        assemble(spectral, Method::Odcna, corners, rows, odcna),
    ])
}

struct ColumnBranch {
    labels: ColumnLabels,
    delta_c_hat: Option<f64>,
    zero_rows: Vec<usize>,
    cost: f64,
    restarts: usize,
}

fn assemble(
    spectral: SpectralTriple,
    method: Method,
    corners: CornerSet,
    rows: MembershipRecovery,
    columns: ColumnBranch,
) -> FitResult {
    FitResult {
        method,
        pi_r_hat: rows.pi_r,
        labels_hat: columns.labels,
        corners,
        diagnostics: DiagnosticBundle {
            sigma: spectral.lambda.clone(),
            delta_c_hat: columns.delta_c_hat,
            clipped_count: rows.clipped_count,
            zero_membership_rows: rows.zero_rows,
            zero_column_rows: columns.zero_rows,
            kmeans_cost: columns.cost,
            kmeans_restarts: columns.restarts,
        },
        spectral,
    }
}

fn row_branch(u_r: &DMatrix<f64>) -> Result<(CornerSet, MembershipRecovery)> {
    let corners = successive_projection(u_r, u_r.ncols())?;
    let rows = recover_memberships(u_r, &corners)?;
    Ok((corners, rows))
}

/// `Ŷ_r = U_r B' (B B')⁻¹`, negatives clipped, rows L1-normalized.
pub fn recover_memberships(u_r: &DMatrix<f64>, corners: &CornerSet) -> Result<MembershipRecovery> {
    let b = &corners.corner_matrix;
    if b.ncols() != u_r.ncols() {
        return Err(Error::Dimension(format!(
            "corner matrix has {} columns, embedding has {}",
            b.ncols(),
            u_r.ncols()
        )));
    }
    let gram = b * b.transpose();
    let sv = gram.singular_values();
    let condition = sv.max() / sv.min();
    if !(condition <= CORNER_CONDITION_LIMIT) {
        return Err(Error::DegenerateCorners {
            condition,
            limit: CORNER_CONDITION_LIMIT,
        });
    }
    // (B B')⁻¹ B U_r' solved column-wise, then transposed back.
    let rhs = b * u_r.transpose();
    let solved = gram.lu().solve(&rhs).ok_or(Error::DegenerateCorners {
        condition: f64::INFINITY,
        limit: CORNER_CONDITION_LIMIT,
    })?;
    let mut y = solved.transpose();

    let mut clipped_count = 0;
    for v in y.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
            clipped_count += 1;
        }
    }

    let mut zero_rows = Vec::new();
    for i in 0..y.nrows() {
        let total: f64 = y.row(i).sum();
        if total > 0.0 {
            y.row_mut(i).unscale_mut(total);
        } else {
            let nearest = (0..b.nrows())
                .map(|c| (c, (u_r.row(i) - b.row(c)).norm_squared()))
                .fold(
                    (0, f64::INFINITY),
                    |acc, x| if x.1 < acc.1 { x } else { acc },
                )
                .0;
            y.row_mut(i).fill(0.0);
            y[(i, nearest)] = 1.0;
            zero_rows.push(i);
        }
    }
    Ok(MembershipRecovery {
        pi_r: RowMembership::from_matrix_unchecked(y),
        clipped_count,
        zero_rows,
    })
}

fn min_center_distance(centers: &DMatrix<f64>) -> Option<f64> {
    let k = centers.nrows();
    let mut best: Option<f64> = None;
    for a in 0..k {
        for b in a + 1..k {
            let d = (centers.row(a) - centers.row(b)).norm();
            best = Some(best.map_or(d, |x| x.min(d)));
        }
    }
    best
}

fn column_branch(
    u_c: &DMatrix<f64>,
    method: Method,
    k_c: usize,
    seed: u64,
) -> Result<ColumnBranch> {
    let km_seed = seed::derive(seed, seed::purpose::KMEANS, 0);
    let opts = KMeansOptions::default();
    match method {
        Method::Ona => {
            let km = kmeans_rows(u_c, k_c, km_seed, opts)?;
            Ok(ColumnBranch {
                delta_c_hat: min_center_distance(&km.centers),
                labels: km.labels,
                zero_rows: vec![],
                cost: km.cost,
                restarts: km.restarts_used,
            })
        }
        Method::Odcna => {
            let (normalized, zero_rows) = row_normalize(u_c);
            if zero_rows.is_empty() {
                let km = kmeans_rows(&normalized, k_c, km_seed, opts)?;
                return Ok(ColumnBranch {
                    delta_c_hat: min_center_distance(&km.centers),
                    labels: km.labels,
                    zero_rows,
                    cost: km.cost,
                    restarts: km.restarts_used,
                });
            }
            let nonzero: Vec<usize> = (0..u_c.nrows())
                .filter(|i| zero_rows.binary_search(i).is_err())
                .collect();
            if nonzero.len() < k_c {
                return Err(Error::Parameter(format!(
                    "only {} column nodes have a nonzero embedding, fewer than K_c = {k_c}",
                    nonzero.len()
                )));
            }
            let km = kmeans_rows(&normalized.select_rows(&nonzero), k_c, km_seed, opts)?;

            // Centers of the unnormalized rows for placing the zero rows.
            let mut raw_centers = DMatrix::zeros(k_c, u_c.ncols());
            let mut counts = vec![0usize; k_c];
            for (pos, &i) in nonzero.iter().enumerate() {
                let l = km.labels.labels()[pos];
                counts[l] += 1;
                let mut row = raw_centers.row_mut(l);
                row += u_c.row(i);
            }
            for (l, c) in counts.iter().enumerate() {
                raw_centers.row_mut(l).unscale_mut((*c).max(1) as f64);
            }
            let mut labels = vec![0usize; u_c.nrows()];
            for (pos, &i) in nonzero.iter().enumerate() {
                labels[i] = km.labels.labels()[pos];
            }
            for &i in &zero_rows {
                labels[i] = (0..k_c)
                    .map(|l| (l, (u_c.row(i) - raw_centers.row(l)).norm_squared()))
                    .fold(
                        (0, f64::INFINITY),
                        |acc, x| if x.1 < acc.1 { x } else { acc },
                    )
                    .0;
            }
            Ok(ColumnBranch {
                delta_c_hat: min_center_distance(&km.centers),
                labels: ColumnLabels::new(labels, k_c)?,
                zero_rows,
                cost: km.cost,
                restarts: km.restarts_used,
            })
        }
    }
}
