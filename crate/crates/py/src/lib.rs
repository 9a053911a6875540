//! Python bindings. Matrices travel as lists of rows; labels and indices are
//! 0-based on the Python side.

use dinet::experiments::{builtin_config, run_experiment as run_sweep};
use dinet::fit::Method;
use dinet::kmeans::{kmeans_rows, KMeansOptions};
use dinet::model::{
    self, BiAdjacency, ColumnLabels, ConnectivityMatrix, DegreeRole, DegreeVector, Degrees,
    RowMembership,
};
use nalgebra::DMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Rows = Vec<Vec<f64>>;

fn err(e: dinet::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err(
            "expected a non-empty rectangular list of rows",
        ));
    }
    Ok(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn labels(l: Vec<usize>, k: usize) -> PyResult<ColumnLabels> {
    ColumnLabels::new(l, k).map_err(err)
}

fn method(name: &str) -> PyResult<Method> {
    name.parse().map_err(err)
}

/// Population matrix `Ω`. Pass `theta_c` for ODCNM or `theta_r` for DCONM.
#[pyfunction]
#[pyo3(signature = (pi_r, labels_c, p, theta_c=None, theta_r=None))]
fn build_omega(
    pi_r: Vec<Vec<f64>>,
    labels_c: Vec<usize>,
    p: Vec<Vec<f64>>,
    theta_c: Option<Vec<f64>>,
    theta_r: Option<Vec<f64>>,
) -> PyResult<Vec<Vec<f64>>> {
    let p = ConnectivityMatrix::from_probabilities(to_matrix(&p)?).map_err(err)?;
    let pi_r = RowMembership::from_rows(&pi_r).map_err(err)?;
    let l = labels(labels_c, p.k_col())?;
    let degrees = match (theta_c, theta_r) {
        (None, None) => Degrees::None,
        (Some(t), None) => Degrees::Column(DegreeVector::new(t, DegreeRole::Column).map_err(err)?),
        (None, Some(t)) => Degrees::Row(DegreeVector::new(t, DegreeRole::Row).map_err(err)?),
        (Some(_), Some(_)) => {
            return Err(PyValueError::new_err("give theta_c or theta_r, not both"))
        }
    };
    let omega = model::build_omega(&pi_r, &l, &p, &degrees).map_err(err)?;
    Ok(to_rows(omega.omega()))
}

/// Bernoulli draw of `A` from `Ω`; returns the edges as `(row, column)` pairs.
#[pyfunction]
fn sample_adjacency(omega: Vec<Vec<f64>>, seed: u64) -> PyResult<Vec<(usize, usize)>> {
    let omega =
        model::PopulationMatrix::new(to_matrix(&omega)?, model::ModelKind::Onm).map_err(err)?;
    Ok(model::sample_adjacency(&omega, seed).edges().collect())
}

/// Column degrees with `1/θ ~ U(1, z_c)`.
#[pyfunction]
fn sample_column_degrees(n_c: usize, z_c: f64, seed: u64) -> PyResult<Vec<f64>> {
    Ok(model::sample_column_degrees(n_c, z_c, seed)
        .map_err(err)?
        .theta()
        .to_vec())
}

/// Fit ONA or ODCNA on an edge list of an `n_r × n_c` bi-adjacency matrix.
#[pyfunction]
#[pyo3(signature = (n_r, n_c, edges, k_r, k_c, method="ona", seed=42))]
#[allow(clippy::too_many_arguments)]
fn fit<'py>(
    py: Python<'py>,
    n_r: usize,
    n_c: usize,
    edges: Vec<(usize, usize)>,
    k_r: usize,
    k_c: usize,
    method: &str,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let method = self::method(method)?;
    let a = BiAdjacency::from_edges(n_r, n_c, &edges).map_err(err)?;
    let r = py
        .detach(|| dinet::fit::fit(&a, method, k_r, k_c, seed))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("method", r.method.name())?;
    d.set_item("pi_r", to_rows(r.pi_r_hat.matrix()))?;
    d.set_item("labels", r.labels_hat.labels().to_vec())?;
    d.set_item("corners", r.corners.indices.clone())?;
    d.set_item("sigma", r.diagnostics.sigma.clone())?;
    d.set_item("delta_c_hat", r.diagnostics.delta_c_hat)?;
    d.set_item("clipped_count", r.diagnostics.clipped_count)?;
    d.set_item(
        "zero_membership_rows",
        r.diagnostics.zero_membership_rows.clone(),
    )?;
    d.set_item("zero_column_rows", r.diagnostics.zero_column_rows.clone())?;
    d.set_item("kmeans_cost", r.diagnostics.kmeans_cost)?;
    Ok(d)
}

/// Top-`k` singular triplets `(u_r, lambda, u_c)`.
#[pyfunction]
fn top_k_svd(m: Rows, k: usize) -> PyResult<(Rows, Vec<f64>, Rows)> {
    let t = dinet::linalg::top_k_svd(&to_matrix(&m)?, k).map_err(err)?;
    Ok((to_rows(&t.u_r), t.lambda, to_rows(&t.u_c)))
}

/// Row indices picked as simplex corners, in selection order.
#[pyfunction]
fn successive_projection(y: Vec<Vec<f64>>, r: usize) -> PyResult<Vec<usize>> {
    Ok(dinet::sp::successive_projection(&to_matrix(&y)?, r)
        .map_err(err)?
        .indices)
}

/// k-means on the rows of `x`; returns `(labels, centers, cost)`.
#[pyfunction]
#[pyo3(signature = (x, k, seed=42, restarts=20, max_iters=300))]
fn kmeans(
    x: Vec<Vec<f64>>,
    k: usize,
    seed: u64,
    restarts: usize,
    max_iters: usize,
) -> PyResult<(Vec<usize>, Vec<Vec<f64>>, f64)> {
    let r = kmeans_rows(
        &to_matrix(&x)?,
        k,
        seed,
        KMeansOptions {
            restarts,
            max_iters,
        },
    )
    .map_err(err)?;
    Ok((r.labels.labels().to_vec(), to_rows(&r.centers), r.cost))
}

#[pyfunction]
fn mhamm(pi_hat: Vec<Vec<f64>>, pi_true: Vec<Vec<f64>>) -> PyResult<f64> {
    let a = RowMembership::from_rows(&pi_hat).map_err(err)?;
    let b = RowMembership::from_rows(&pi_true).map_err(err)?;
    Ok(dinet::metrics::mhamm(&a, &b).map_err(err)?.0)
}

#[pyfunction]
fn hamm(labels_hat: Vec<usize>, labels_true: Vec<usize>, k_c: usize) -> PyResult<f64> {
    let (a, b) = (labels(labels_hat, k_c)?, labels(labels_true, k_c)?);
    Ok(dinet::metrics::hamm(&a, &b, k_c).map_err(err)?.0)
}

#[pyfunction]
fn f_c(labels_hat: Vec<usize>, labels_true: Vec<usize>, k_c: usize) -> PyResult<f64> {
    let (a, b) = (labels(labels_hat, k_c)?, labels(labels_true, k_c)?);
    dinet::metrics::f_c_error(&a, &b, k_c).map_err(err)
}

/// Run a builtin experiment and return its CSV summary.
#[pyfunction]
#[pyo3(signature = (name, repetitions=None, seed=None))]
fn run_experiment(
    py: Python<'_>,
    name: &str,
    repetitions: Option<usize>,
    seed: Option<u64>,
) -> PyResult<String> {
    let mut cfg = builtin_config(name).map_err(err)?;
    if let Some(r) = repetitions {
        cfg.repetitions = r;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let res = py.detach(|| run_sweep(&cfg)).map_err(err)?;
    Ok(res.to_csv(false))
}

#[pymodule]
fn dinet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(build_omega, m)?)?;
    m.add_function(wrap_pyfunction!(sample_adjacency, m)?)?;
    m.add_function(wrap_pyfunction!(sample_column_degrees, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(top_k_svd, m)?)?;
    m.add_function(wrap_pyfunction!(successive_projection, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(mhamm, m)?)?;
    m.add_function(wrap_pyfunction!(hamm, m)?)?;
    m.add_function(wrap_pyfunction!(f_c, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
