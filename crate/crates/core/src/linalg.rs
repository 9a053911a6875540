//! Truncated singular value decomposition and row normalization.
//!
//! Inputs whose smaller dimension is at most [`DENSE_LIMIT`] go through a full
//! dense SVD; larger ones use a thick-restarted Lanczos bidiagonalization that
//! only needs products with the matrix and its transpose.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{BiAdjacency, PopulationMatrix};
use crate::seed;

/// Largest `min(n_r, n_c)` handled by the dense path.
pub const DENSE_LIMIT: usize = 512;
pub const LANCZOS_TOL: f64 = 1e-10;
pub const LANCZOS_MAX_RESTARTS: usize = 1000;
const ZERO_ROW_TOL: f64 = 1e-12;

/// A real matrix seen through its products with vectors.
pub trait MatrixOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = M x`
    fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64>;
    /// `y = M' x`
    fn tr_mul_vec(&self, x: &DVector<f64>) -> DVector<f64>;
    fn to_dense(&self) -> DMatrix<f64>;
}

impl MatrixOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }
    fn ncols(&self) -> usize {
        self.ncols()
    }
    fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        self * x
    }
    fn tr_mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        self.tr_mul(x)
    }
    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

impl MatrixOperator for PopulationMatrix {
    fn nrows(&self) -> usize {
        self.omega().nrows()
    }
    fn ncols(&self) -> usize {
        self.omega().ncols()
    }
    fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        self.omega() * x
    }
    fn tr_mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        self.omega().tr_mul(x)
    }
    fn to_dense(&self) -> DMatrix<f64> {
        self.omega().clone()
    }
}

impl MatrixOperator for BiAdjacency {
    fn nrows(&self) -> usize {
        BiAdjacency::nrows(self)
    }
    fn ncols(&self) -> usize {
        BiAdjacency::ncols(self)
    }
    fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(BiAdjacency::nrows(self), |i, _| {
            self.row(i).iter().map(|&j| x[j]).sum()
        })
    }
    fn tr_mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(BiAdjacency::ncols(self));
        for i in 0..BiAdjacency::nrows(self) {
            for &j in self.row(i) {
                y[j] += x[i];
            }
        }
        y
    }
    fn to_dense(&self) -> DMatrix<f64> {
        BiAdjacency::to_dense(self)
    }
}

struct Transposed<'a, M: ?Sized>(&'a M);

impl<M: MatrixOperator + ?Sized> MatrixOperator for Transposed<'_, M> {
    fn nrows(&self) -> usize {
        self.0.ncols()
    }
    fn ncols(&self) -> usize {
        self.0.nrows()
    }
    fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        self.0.tr_mul_vec(x)
    }
    fn tr_mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        self.0.mul_vec(x)
    }
    fn to_dense(&self) -> DMatrix<f64> {
        self.0.to_dense().transpose()
    }
}

/// Rank-`k` factorization `U_r diag(λ) U_c'`.
///
/// Columns of `u_r` and `u_c` are orthonormal, `lambda` is descending, and in
/// each column of `u_r` the entry of largest magnitude is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTriple {
    pub u_r: DMatrix<f64>,
    pub lambda: Vec<f64>,
    pub u_c: DMatrix<f64>,
}

impl SpectralTriple {
    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    /// `U_r diag(λ) U_c'`
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.u_r.clone();
        for (j, l) in self.lambda.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*l);
        }
        scaled * self.u_c.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SvdMethod {
    /// Dense below [`DENSE_LIMIT`], Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// Top-`k` singular triplets of `m`.
pub fn top_k_svd<M: MatrixOperator + ?Sized>(m: &M, k: usize) -> Result<SpectralTriple> {
    top_k_svd_with(m, k, SvdMethod::Auto)
}

pub fn top_k_svd_with<M: MatrixOperator + ?Sized>(
    m: &M,
    k: usize,
    method: SvdMethod,
) -> Result<SpectralTriple> {
    let min_dim = m.nrows().min(m.ncols());
    if k == 0 || k > min_dim {
        return Err(Error::Parameter(format!(
            "rank k = {k} outside 1..={min_dim} for a {}×{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let dense = match method {
        SvdMethod::Auto => min_dim <= DENSE_LIMIT,
        SvdMethod::Dense => true,
        SvdMethod::Lanczos => false,
    };
    let (mut u, s, mut v) = if dense {
        dense_svd(&m.to_dense(), k)?
    } else if m.nrows() < m.ncols() {
        // the right basis must be able to span the whole domain
        let (v, s, u) = lanczos_svd(&Transposed(m), k)?;
        (u, s, v)
    } else {
        lanczos_svd(m, k)?
    };
    fix_signs(&mut u, &mut v);
    Ok(SpectralTriple {
        u_r: u,
        lambda: s,
        u_c: v,
    })
}

/// Sort singular triplets by descending value; equal values keep their
/// original order.
fn sorted_order(s: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    order
}

/// SVD as `(u, s, v)` keeping at least `min_rank` triplets, with the
/// reconstruction checked. A column-pivoted QR first drops the numerically
/// zero part of the row space; the remaining block has full row rank.
fn checked_svd(
    m: &DMatrix<f64>,
    min_rank: usize,
    solver: &'static str,
) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let fail = |residual: f64| Error::NoConvergence {
        solver,
        iterations: 0,
        residual,
        tolerance: f64::EPSILON,
    };
    let norm = m.norm();
    let qr = m.clone().col_piv_qr();
    let (q, mut r, p) = (qr.q(), qr.r(), qr.p());
    let d = r.nrows();
    let tol = f64::EPSILON * norm * m.nrows().max(m.ncols()) as f64;
    let rank = (0..d)
        .take_while(|&i| r[(i, i)].abs() > tol)
        .count()
        .max(min_rank.min(d))
        .max(1);
    p.inv_permute_columns(&mut r);

    let x = faer::Mat::<f64>::from_fn(rank, m.ncols(), |i, j| r[(i, j)]);
    let svd = x.thin_svd().map_err(|_| fail(f64::NAN))?;
    let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
    let u = q.columns(0, rank) * DMatrix::from_fn(rank, fu.ncols(), |i, j| fu[(i, j)]);
    let v = DMatrix::from_fn(fv.nrows(), fv.ncols(), |i, j| fv[(i, j)]);
    let s: Vec<f64> = (0..fs.nrows()).map(|i| fs[i]).collect();

    let rec = &u * DMatrix::from_diagonal(&DVector::from_column_slice(&s)) * v.transpose();
    let err = (rec - m).norm();
    if !(err <= 1e-10 * norm.max(f64::MIN_POSITIVE)) {
        return Err(fail(err));
    }
    Ok((u, s, v))
}

fn dense_svd(m: &DMatrix<f64>, k: usize) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (u, s, v) = checked_svd(m, k, "dense SVD")?;
    let order = sorted_order(&s);
    let pick = &order[..k];
    let u_k = DMatrix::from_fn(m.nrows(), k, |i, j| u[(i, pick[j])]);
    let v_k = DMatrix::from_fn(m.ncols(), k, |i, j| v[(i, pick[j])]);
    let s_k = pick.iter().map(|&j| s[j]).collect();
    Ok((u_k, s_k, v_k))
}

/// Flip column pairs so the largest-magnitude entry of each `u` column is
/// positive (lowest index on ties).
fn fix_signs(u: &mut DMatrix<f64>, v: &mut DMatrix<f64>) {
    for j in 0..u.ncols() {
        let mut best = 0;
        for i in 1..u.nrows() {
            if u[(i, j)].abs() > u[(best, j)].abs() {
                best = i;
            }
        }
        if u[(best, j)] < 0.0 {
            u.column_mut(j).neg_mut();
            v.column_mut(j).neg_mut();
        }
    }
}

/// Deterministic unit vector orthogonal to the first `count` columns of `basis`.
fn fresh_direction(basis: &DMatrix<f64>, count: usize, salt: u64) -> DVector<f64> {
    let mut rng = seed::rng(seed::derive(0x4c41_4e43_5a4f_5300, 0, salt));
    for _ in 0..16 {
        let mut x = DVector::from_fn(basis.nrows(), |_, _| rng.random::<f64>() - 0.5);
        orthogonalize(&mut x, basis, count);
        let norm = x.norm();
        if norm > 1e-8 {
            return x / norm;
        }
    }
    DVector::zeros(basis.nrows())
}

/// Two passes of classical Gram-Schmidt against the first `count` columns.
/// Returns the accumulated coefficients.
fn orthogonalize(x: &mut DVector<f64>, basis: &DMatrix<f64>, count: usize) -> Vec<f64> {
    let mut coef = vec![0.0; count];
    for _ in 0..2 {
        for (i, c) in coef.iter_mut().enumerate() {
            let col = basis.column(i);
            let d = col.dot(x);
            x.axpy(-d, &col, 1.0);
            *c += d;
        }
    }
    coef
}

/// Thick-restarted Golub-Kahan-Lanczos bidiagonalization with full
/// reorthogonalization.
///
/// Maintains `A V = P B` with `B` upper triangular (bidiagonal apart from the
/// restart column) and `A' P = V B' + r e'`. After each sweep the small `B` is
/// decomposed; Ritz triplets whose residual `‖r‖·|U_B(last, i)|` is below
/// `LANCZOS_TOL·σ₁` are accepted, otherwise the leading Ritz vectors seed the
/// next sweep.
fn lanczos_svd<M: MatrixOperator + ?Sized>(
    a: &M,
    k: usize,
) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (m, n) = (a.nrows(), a.ncols());
    let work = (2 * k + 16).max(k + 24).min(m.min(n));
    let mut v_basis = DMatrix::<f64>::zeros(n, work);
    let mut p_basis = DMatrix::<f64>::zeros(m, work);
    let mut b = DMatrix::<f64>::zeros(work, work);
    let mut salt = 0u64;

    let v0 = fresh_direction(&v_basis, 0, salt);
    v_basis.set_column(0, &v0);
    let mut kept = 0;
    let mut last_residual = f64::INFINITY;

    for restart in 0..LANCZOS_MAX_RESTARTS {
        let mut r = DVector::zeros(n);
        let mut beta = 0.0;
        for j in kept..work {
            let mut p = a.mul_vec(&v_basis.column(j).into_owned());
            let coef = orthogonalize(&mut p, &p_basis, j);
            for (i, c) in coef.into_iter().enumerate() {
                b[(i, j)] = c;
            }
            let alpha = p.norm();
            if alpha > 1e-14 {
                b[(j, j)] = alpha;
                p_basis.set_column(j, &(p / alpha));
            } else {
                b[(j, j)] = 0.0;
                salt += 1;
                let fresh = fresh_direction(&p_basis, j, salt);
                p_basis.set_column(j, &fresh);
            }

            r = a.tr_mul_vec(&p_basis.column(j).into_owned());
            orthogonalize(&mut r, &v_basis, j + 1);
            beta = r.norm();
            if j + 1 < work {
                if beta > 1e-14 {
                    v_basis.set_column(j + 1, &(&r / beta));
                } else {
                    salt += 1;
                    let fresh = fresh_direction(&v_basis, j + 1, salt);
                    v_basis.set_column(j + 1, &fresh);
                }
            }
        }

        let (ub, sv, vb) = checked_svd(&b, k, "Lanczos inner SVD").map_err(|e| match e {
            Error::NoConvergence {
                solver,
                residual,
                tolerance,
                ..
            } => Error::NoConvergence {
                solver,
                iterations: restart,
                residual,
                tolerance,
            },
            other => other,
        })?;
        let order = sorted_order(&sv);
        let s: Vec<f64> = order.iter().map(|&i| sv[i]).collect();
        let scale = s[0].max(f64::MIN_POSITIVE);
        last_residual = order[..k]
            .iter()
            .map(|&i| beta * ub[(work - 1, i)].abs())
            .fold(0.0, f64::max);

        let converged = last_residual <= LANCZOS_TOL * scale;
        let exhausted = work == m.min(n);
        if converged || exhausted {
            let ub_k = DMatrix::from_fn(work, k, |i, j| ub[(i, order[j])]);
            let vb_k = DMatrix::from_fn(work, k, |i, j| vb[(i, order[j])]);
            return Ok((&p_basis * ub_k, s[..k].to_vec(), &v_basis * vb_k));
        }

        kept = (k + (work - k) / 2).min(work - 1);
        let ub_kept = DMatrix::from_fn(work, kept, |i, j| ub[(i, order[j])]);
        let vb_kept = DMatrix::from_fn(work, kept, |i, j| vb[(i, order[j])]);
        let new_p = &p_basis * ub_kept;
        let new_v = &v_basis * vb_kept;
        p_basis.fill(0.0);
        v_basis.fill(0.0);
        b.fill(0.0);
        for j in 0..kept {
            p_basis.set_column(j, &new_p.column(j));
            v_basis.set_column(j, &new_v.column(j));
            b[(j, j)] = s[j];
        }
        let next = if beta > 1e-14 {
            r / beta
        } else {
            salt += 1;
            fresh_direction(&v_basis, kept, salt)
        };
        v_basis.set_column(kept, &next);
    }
    Err(Error::NoConvergence {
        solver: "Lanczos bidiagonalization",
        iterations: LANCZOS_MAX_RESTARTS,
        residual: last_residual,
        tolerance: LANCZOS_TOL,
    })
}

/// Scale each row to unit Euclidean norm. Rows with norm below `1e-12` are
/// left as they are and their indices returned.
pub fn row_normalize(u: &DMatrix<f64>) -> (DMatrix<f64>, Vec<usize>) {
    let mut out = u.clone();
    let mut zero_rows = Vec::new();
    for i in 0..u.nrows() {
        let norm = u.row(i).norm();
        if norm < ZERO_ROW_TOL {
            zero_rows.push(i);
        } else {
            out.row_mut(i).unscale_mut(norm);
        }
    }
    (out, zero_rows)
}

/// Number of singular values above `rel_tol·σ₁`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = m.singular_values();
    let max = s.max();
    if max <= 0.0 {
        return 0;
    }
    s.iter().filter(|v| **v > rel_tol * max).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = seed::rng(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    fn assert_orthonormal(q: &DMatrix<f64>) {
        let g = q.tr_mul(q);
        let err = (g - DMatrix::identity(q.ncols(), q.ncols())).norm();
        assert!(err < 1e-8, "orthonormality error {err}");
    }

    #[test]
    fn padded_diagonal() {
        let mut m = DMatrix::zeros(4, 3);
        m[(0, 0)] = 3.0;
        m[(1, 1)] = 2.0;
        m[(2, 2)] = 1.0;
        let t = top_k_svd(&m, 2).unwrap();
        assert!((t.lambda[0] - 3.0).abs() < 1e-14);
        assert!((t.lambda[1] - 2.0).abs() < 1e-14);
        assert_orthonormal(&t.u_r);
        assert_orthonormal(&t.u_c);
    }

    #[test]
    fn rank_out_of_range() {
        let m = DMatrix::<f64>::zeros(3, 4);
        assert!(top_k_svd(&m, 0).is_err());
        assert!(top_k_svd(&m, 4).is_err());
    }

    #[test]
    fn full_rank_reconstruction() {
        let m = random_matrix(6, 5, 3);
        let t = top_k_svd(&m, 5).unwrap();
        assert!((t.reconstruct() - &m).norm() < 1e-10);
    }

    #[test]
    fn truncation_residual_is_tail_energy() {
        let m = random_matrix(9, 7, 4);
        let all = m.singular_values();
        let mut s: Vec<f64> = all.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        let t = top_k_svd(&m, 3).unwrap();
        let resid = (t.reconstruct() - &m).norm_squared();
        let tail: f64 = s[3..].iter().map(|v| v * v).sum();
        assert!((resid - tail).abs() < 1e-10 * s[0] * s[0]);
    }

    #[test]
    fn sign_convention_and_determinism() {
        let m = random_matrix(20, 15, 8);
        let t = top_k_svd(&m, 4).unwrap();
        for j in 0..4 {
            let col = t.u_r.column(j);
            let idx = col.iamax();
            assert!(col[idx] > 0.0);
        }
        assert_eq!(t, top_k_svd(&m, 4).unwrap());
    }

    #[test]
    fn lanczos_matches_dense_on_small_matrix() {
        let m = random_matrix(60, 45, 21);
        let d = top_k_svd_with(&m, 4, SvdMethod::Dense).unwrap();
        let l = top_k_svd_with(&m, 4, SvdMethod::Lanczos).unwrap();
        for (a, b) in d.lambda.iter().zip(&l.lambda) {
            assert!((a - b).abs() < 1e-9 * d.lambda[0], "{a} vs {b}");
        }
        assert!((d.u_r.clone() - &l.u_r).abs().max() < 1e-6);
        assert!((d.u_c.clone() - &l.u_c).abs().max() < 1e-6);
    }

    #[test]
    fn lanczos_on_large_sparse_pattern() {
        let mut rng = seed::rng(77);
        let edges: Vec<(usize, usize)> = (0..700)
            .flat_map(|i| (0..600).map(move |j| (i, j)))
            .filter(|_| rng.random::<f64>() < 0.02)
            .collect();
        let a = BiAdjacency::from_edges(700, 600, &edges).unwrap();
        // auto selects Lanczos here
        let l = top_k_svd(&a, 3).unwrap();
        let d = top_k_svd_with(&a, 3, SvdMethod::Dense).unwrap();
        for (x, y) in d.lambda.iter().zip(&l.lambda) {
            assert!((x - y).abs() < 1e-8 * d.lambda[0], "{x} vs {y}");
        }
        assert_orthonormal(&l.u_r);
        assert_orthonormal(&l.u_c);
        // singular vectors agree where the gap is clear
        let g = l.u_r.tr_mul(&d.u_r);
        assert!((g[(0, 0)].abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn low_rank_lanczos_exact() {
        let left = random_matrix(600, 2, 5);
        let right = random_matrix(2, 550, 6);
        let m = &left * &right;
        let t = top_k_svd_with(&m, 2, SvdMethod::Lanczos).unwrap();
        let err = (t.reconstruct() - &m).norm();
        assert!(err < 1e-8 * t.lambda[0], "err {err} sigma {:?}", t.lambda);
    }

    #[test]
    fn row_normalization() {
        let u = DMatrix::from_row_slice(3, 2, &[3.0, 4.0, 0.0, 0.0, 0.6, 0.8]);
        let (n, zeros) = row_normalize(&u);
        assert!((n[(0, 0)] - 0.6).abs() < 1e-15 && (n[(0, 1)] - 0.8).abs() < 1e-15);
        assert_eq!(zeros, vec![1]);
        assert_eq!(n.row(1).norm(), 0.0);
        assert!((n[(2, 0)] - 0.6).abs() < 1e-15 && (n[(2, 1)] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn rank_counts() {
        let left = random_matrix(10, 3, 1);
        let right = random_matrix(3, 8, 2);
        assert_eq!(numerical_rank(&(left * right), 1e-10), 3);
        assert_eq!(numerical_rank(&DMatrix::zeros(3, 3), 1e-10), 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn triple_invariants(rows in 2usize..12, cols in 2usize..12, k_frac in 0.0f64..1.0, s in any::<u64>()) {
            let m = random_matrix(rows, cols, s);
            let k = 1 + ((rows.min(cols) - 1) as f64 * k_frac) as usize;
            let t = top_k_svd(&m, k).unwrap();
            prop_assert_eq!(t.lambda.len(), k);
            prop_assert!(t.lambda.windows(2).all(|w| w[0] >= w[1] - 1e-12));
            prop_assert!((t.u_r.tr_mul(&t.u_r) - DMatrix::identity(k, k)).norm() < 1e-8);
            prop_assert!((t.u_c.tr_mul(&t.u_c) - DMatrix::identity(k, k)).norm() < 1e-8);
        }

        #[test]
        fn normalized_rows_have_unit_norm(vals in proptest::collection::vec(-5.0f64..5.0, 12)) {
            let u = DMatrix::from_row_slice(4, 3, &vals);
            let (n, zeros) = row_normalize(&u);
            for i in 0..4 {
                if !zeros.contains(&i) {
                    prop_assert!((n.row(i).norm() - 1.0).abs() < 1e-14);
                }
            }
        }
    }
}
