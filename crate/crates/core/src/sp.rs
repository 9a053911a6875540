//! Successive projection: greedy corner finding for near-separable data.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const VANISH_TOL: f64 = 1e-12;
const REORTH_EVERY: usize = 8;

/// Row indices chosen as corners, in selection order, with the rows themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerSet {
    pub indices: Vec<usize>,
    pub corner_matrix: DMatrix<f64>,
}

/// Pick `r` rows of `y` as simplex corners.
///
/// Each step takes the row of largest residual norm (lowest index on ties) and
/// projects every residual row onto the orthogonal complement of it.
pub fn successive_projection(y: &DMatrix<f64>, r: usize) -> Result<CornerSet> {
    let (m, n) = y.shape();
    if r == 0 || r > m.min(n) {
        return Err(Error::Parameter(format!(
            "number of corners r = {r} outside 1..={} for a {m}×{n} matrix",
            m.min(n)
        )));
    }
    let mut residual = y.clone();
    let mut indices = Vec::with_capacity(r);
    // unit directions already projected out
    let mut directions: Vec<DVector<f64>> = Vec::with_capacity(r);

    for step in 0..r {
        let mut best = 0;
        let mut best_norm = f64::NEG_INFINITY;
        for i in 0..m {
            let norm = residual.row(i).norm_squared();
            if norm > best_norm {
                best = i;
                best_norm = norm;
            }
        }
        if best_norm.sqrt() < VANISH_TOL {
            return Err(Error::RankDeficient {
                found: step,
                requested: r,
            });
        }
        indices.push(best);

        let u = residual.row(best).transpose() / best_norm.sqrt();
        project_out(&mut residual, &u);
        directions.push(u);

        if (step + 1) % REORTH_EVERY == 0 {
            for d in &directions {
                project_out(&mut residual, d);
            }
        }
    }

    let corner_matrix = y.select_rows(&indices);
    Ok(CornerSet {
        indices,
        corner_matrix,
    })
}

/// `R(i,:) ← R(i,:) − (R(i,:)·u) u'` for unit `u`.
fn project_out(residual: &mut DMatrix<f64>, u: &DVector<f64>) {
    let coef = &*residual * u;
    residual.ger(-1.0, &coef, u, 1.0);
}
