//! Generative models for directed networks whose row nodes carry mixed
//! memberships and whose column nodes carry a single label.
//!
//! Three models share one parameter set `(Π_r, ℓ, P)`:
//!
//! * ONM:   `Ω = Π_r P Π_c'`
//! * ODCNM: `Ω = Π_r P Π_c' Θ_c` (column degree heterogeneity)
//! * DCONM: `Ω = Θ_r Π_r P Π_c'` (row degree heterogeneity, needs `P(k,k) = 1`)
//!
//! The adjacency matrix is sampled entrywise as `A(i,j) ~ Bernoulli(Ω(i,j))`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::numerical_rank;
use crate::seed;

const ROW_SUM_TOL: f64 = 1e-12;
const PURE_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;

/// Mixed memberships of row nodes: an `n_r × K_r` row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMembership {
    matrix: DMatrix<f64>,
}

impl RowMembership {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.ncols() == 0 {
            return Err(Error::Dimension("membership matrix has no columns".into()));
        }
        for (i, row) in matrix.row_iter().enumerate() {
            if let Some(v) = row.iter().find(|v| !(**v >= 0.0)) {
                return Err(Error::Parameter(format!(
                    "membership row {i} has negative or non-finite entry {v}"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Parameter(format!(
                    "membership row {i} sums to {s}, expected 1"
                )));
            }
        }
        Ok(Self { matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Dimension(
                "membership rows have unequal lengths".into(),
            ));
        }
        Self::new(DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]))
    }

    /// `pure_per_community` pure nodes for each of the `K` communities
    /// (community by community), followed by `n_mixed` nodes sharing the
    /// membership vector `mixing`.
    pub fn pure_then_mixed(
        pure_per_community: usize,
        n_mixed: usize,
        mixing: &[f64],
    ) -> Result<Self> {
        let k = mixing.len();
        let n = pure_per_community * k + n_mixed;
        let mut m = DMatrix::zeros(n, k);
        for c in 0..k {
            for i in 0..pure_per_community {
                m[(c * pure_per_community + i, c)] = 1.0;
            }
        }
        for i in pure_per_community * k..n {
            for (c, w) in mixing.iter().enumerate() {
                m[(i, c)] = *w;
            }
        }
        Self::new(m)
    }

    /// Trusted constructor for estimator output that is row-stochastic by
    /// construction.
    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_nodes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_communities(&self) -> usize {
        self.matrix.ncols()
    }

    /// Whether row `i` equals a standard basis vector; returns its community.
    pub fn pure_community(&self, i: usize) -> Option<usize> {
        let row = self.matrix.row(i);
        let (k, &max) = row
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, (j, v)| {
                if *v > *acc.1 {
                    (j, v)
                } else {
                    acc
                }
            });
        let pure = (max - 1.0).abs() <= PURE_TOL
            && row
                .iter()
                .enumerate()
                .all(|(j, v)| j == k || v.abs() <= PURE_TOL);
        pure.then_some(k)
    }
}

/// Labels of column nodes, stored zero-based in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnLabels {
    labels: Vec<usize>,
    k: usize,
}

impl ColumnLabels {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Parameter(
                "number of column communities must be ≥ 1".into(),
            ));
        }
        if let Some((i, l)) = labels.iter().enumerate().find(|(_, l)| **l >= k) {
            return Err(Error::Parameter(format!(
                "column label {} at node {i} outside 1..={k}",
                l + 1
            )));
        }
        Ok(Self { labels, k })
    }

    /// Build from one-based labels as used in files.
    pub fn from_one_based(labels: &[usize], k: usize) -> Result<Self> {
        if let Some(i) = labels.iter().position(|l| *l == 0) {
            return Err(Error::Parameter(format!(
                "column label 0 at node {i}; labels are 1-based"
            )));
        }
        Self::new(labels.iter().map(|l| l - 1).collect(), k)
    }

    /// Labels drawn iid uniformly on `0..k`, redrawn until every community
    /// is non-empty. Returns the labels and the number of redraws.
    pub fn random_uniform(n: usize, k: usize, seed: u64) -> Result<(Self, usize)> {
        if k == 0 || n < k {
            return Err(Error::Parameter(format!(
                "cannot fill {k} column communities with {n} nodes"
            )));
        }
        let mut rng = seed::rng(seed);
        let mut resamples = 0;
        loop {
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let out = Self::new(labels, k)?;
            if out.sizes().iter().all(|s| *s > 0) {
                return Ok((out, resamples));
            }
            resamples += 1;
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_communities(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Community sizes `n_{c,k}`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }

    /// The `n_c × K_c` one-hot matrix `Π_c`.
    pub fn one_hot(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.labels.len(), self.k);
        for (i, &l) in self.labels.iter().enumerate() {
            m[(i, l)] = 1.0;
        }
        m
    }
}

/// Connectivity matrix `P = ρ·P̃` with `max P̃ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityMatrix {
    p_tilde: DMatrix<f64>,
    rho: f64,
}

impl ConnectivityMatrix {
    pub fn new(p_tilde: DMatrix<f64>, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::Parameter(format!(
                "sparsity ρ = {rho} outside (0, 1]"
            )));
        }
        if p_tilde.is_empty() {
            return Err(Error::Dimension("connectivity matrix is empty".into()));
        }
        if p_tilde.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Parameter("entries of P̃ must lie in [0, 1]".into()));
        }
        let max = p_tilde.max();
        if (max - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!(
                "max entry of P̃ is {max}, expected 1"
            )));
        }
        Ok(Self { p_tilde, rho })
    }

    pub fn from_rows(rows: &[Vec<f64>], rho: f64) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Dimension(
                "connectivity rows have unequal lengths".into(),
            ));
        }
        Self::new(DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]), rho)
    }

    /// Split a probability matrix into `ρ = max P` and `P̃ = P / ρ`.
    pub fn from_probabilities(p: DMatrix<f64>) -> Result<Self> {
        let rho = p.max();
        if !(rho > 0.0) {
            return Err(Error::Parameter(
                "connectivity matrix has no positive entry".into(),
            ));
        }
        Self::new(p / rho, rho)
    }

    pub fn p_tilde(&self) -> &DMatrix<f64> {
        &self.p_tilde
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `P = ρ·P̃`.
    pub fn p(&self) -> DMatrix<f64> {
        &self.p_tilde * self.rho
    }

    pub fn k_row(&self) -> usize {
        self.p_tilde.nrows()
    }

    pub fn k_col(&self) -> usize {
        self.p_tilde.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeRole {
    Row,
    Column,
}

/// Degree heterogeneity parameters `θ`, all strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector {
    theta: Vec<f64>,
    role: DegreeRole,
}

impl DegreeVector {
    pub fn new(theta: Vec<f64>, role: DegreeRole) -> Result<Self> {
        if let Some((i, t)) = theta
            .iter()
            .enumerate()
            .find(|(_, t)| !(**t > 0.0 && t.is_finite()))
        {
            return Err(Error::Parameter(format!(
                "degree parameter θ[{i}] = {t} is not positive"
            )));
        }
        Ok(Self { theta, role })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn role(&self) -> DegreeRole {
        self.role
    }
}

/// Selects the model through the presence and role of degree parameters.
#[derive(Debug, Clone, Default)]
pub enum Degrees {
    #[default]
    None,
    Column(DegreeVector),
    Row(DegreeVector),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Onm,
    Odcnm,
    Dconm,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Onm => "onm",
            ModelKind::Odcnm => "odcnm",
            ModelKind::Dconm => "dconm",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "onm" => Ok(ModelKind::Onm),
            "odcnm" => Ok(ModelKind::Odcnm),
            "dconm" => Ok(ModelKind::Dconm),
            other => Err(Error::Parameter(format!("unknown model '{other}'"))),
        }
    }
}

/// The expectation `Ω = E[A]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationMatrix {
    omega: DMatrix<f64>,
    model: ModelKind,
}

impl PopulationMatrix {
    /// Wrap an arbitrary matrix with entries in `[0, 1]`.
    pub fn new(omega: DMatrix<f64>, model: ModelKind) -> Result<Self> {
        check_unit_interval(&omega)?;
        Ok(Self { omega, model })
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn nrows(&self) -> usize {
        self.omega.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.omega.ncols()
    }
}

fn check_unit_interval(omega: &DMatrix<f64>) -> Result<()> {
    if let Some(idx) = omega.iter().position(|v| !(0.0..=1.0).contains(v)) {
        let (i, j) = (idx % omega.nrows(), idx / omega.nrows());
        return Err(Error::Parameter(format!(
            "Ω({i},{j}) = {} lies outside [0, 1]",
            omega[(i, j)]
        )));
    }
    Ok(())
}

/// Binary bi-adjacency matrix stored as a row-compressed pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiAdjacency {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl BiAdjacency {
    /// Build from zero-based `(row, col)` pairs. Duplicates collapse.
    pub fn from_edges(n_rows: usize, n_cols: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if let Some((r, c)) = edges.iter().find(|(r, c)| *r >= n_rows || *c >= n_cols) {
            return Err(Error::Dimension(format!(
                "edge ({r},{c}) outside a {n_rows}×{n_cols} matrix"
            )));
        }
        let mut sorted = edges.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut row_ptr = vec![0; n_rows + 1];
        for &(r, _) in &sorted {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = sorted.into_iter().map(|(_, c)| c).collect();
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
        })
    }

    /// Nonzero entries become edges.
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut row_ptr = Vec::with_capacity(a.nrows() + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    col_idx.push(j);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n_rows: a.nrows(),
            n_cols: a.ncols(),
            row_ptr,
            col_idx,
        }
    }

    pub fn nrows(&self) -> usize {
        self.n_rows
    }

    pub fn ncols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Column indices of the edges leaving row node `i`, ascending.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Zero-based edges in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_rows).flat_map(move |i| self.row(i).iter().map(move |&j| (i, j)))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j) in self.edges() {
            m[(i, j)] = 1.0;
        }
        m
    }
}

/// One identifiability condition and whether it holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    /// Condition tag, e.g. `(I1)`.
    pub tag: &'static str,
    pub description: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ConditionCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Turn the first failing condition into an error.
    pub fn into_result(self) -> Result<()> {
        match self.checks.into_iter().find(|c| !c.passed) {
            None => Ok(()),
            Some(c) => Err(Error::Identifiability {
                condition: c.tag,
                detail: format!("{}: {}", c.description, c.detail),
            }),
        }
    }
}

fn check_dimensions(
    pi_r: &RowMembership,
    labels: &ColumnLabels,
    p: &ConnectivityMatrix,
) -> Result<()> {
    let (k_r, k_c) = (p.k_row(), p.k_col());
    if pi_r.n_communities() != k_r {
        return Err(Error::Dimension(format!(
            "Π_r has {} columns but P has {k_r} rows",
            pi_r.n_communities()
        )));
    }
    if labels.n_communities() != k_c {
        return Err(Error::Dimension(format!(
            "labels use {} communities but P has {k_c} columns",
            labels.n_communities()
        )));
    }
    if k_r > k_c {
        return Err(Error::Identifiability {
            condition: "K_r ≤ K_c",
            detail: format!("K_r = {k_r} exceeds K_c = {k_c}"),
        });
    }
    Ok(())
}

/// Check conditions (I1) and (I2).
///
/// Dimension problems are returned as `Err`; condition failures are listed in
/// the report.
pub fn validate_onm_params(
    pi_r: &RowMembership,
    labels: &ColumnLabels,
    p: &ConnectivityMatrix,
) -> Result<ValidationReport> {
    check_dimensions(pi_r, labels, p)?;
    let (k_r, k_c) = (p.k_row(), p.k_col());

    let rank_p = numerical_rank(&p.p(), RANK_TOL);
    let rank_pi_r = numerical_rank(pi_r.matrix(), RANK_TOL);
    let sizes = labels.sizes();
    let rank_pi_c = sizes.iter().filter(|s| **s > 0).count();

    let mut has_pure = vec![false; k_r];
    for i in 0..pi_r.n_nodes() {
        if let Some(k) = pi_r.pure_community(i) {
            has_pure[k] = true;
        }
    }
    let missing: Vec<usize> = (0..k_r).filter(|k| !has_pure[*k]).map(|k| k + 1).collect();

    let checks = vec![
        ConditionCheck {
            tag: "(I1)",
            description: "rank(P) = K_r",
            passed: rank_p == k_r,
            detail: format!("rank(P) = {rank_p}, K_r = {k_r}"),
        },
        ConditionCheck {
            tag: "(I1)",
            description: "rank(Π_r) = K_r",
            passed: rank_pi_r == k_r,
            detail: format!("rank(Π_r) = {rank_pi_r}, K_r = {k_r}"),
        },
        ConditionCheck {
            tag: "(I1)",
            description: "rank(Π_c) = K_c",
            passed: rank_pi_c == k_c,
            detail: format!("column community sizes {sizes:?}"),
        },
        ConditionCheck {
            tag: "(I2)",
            description: "at least one pure row node per row community",
            passed: missing.is_empty(),
            detail: if missing.is_empty() {
                "every row community has a pure node".into()
            } else {
                format!("no pure node in row communities {missing:?}")
            },
        },
    ];
    Ok(ValidationReport { checks })
}

/// Check conditions (II1) and (II2): those of ONM plus a unit diagonal of `P`.
pub fn validate_dconm_params(
    pi_r: &RowMembership,
    labels: &ColumnLabels,
    p: &ConnectivityMatrix,
) -> Result<ValidationReport> {
    let mut report = validate_onm_params(pi_r, labels, p)?;
    for c in &mut report.checks {
        c.tag = if c.tag == "(I1)" { "(II1)" } else { "(II2)" };
    }
    let pm = p.p();
    let off: Vec<String> = (0..p.k_row())
        .filter(|k| (pm[(*k, *k)] - 1.0).abs() > 1e-12)
        .map(|k| format!("P({},{}) = {}", k + 1, k + 1, pm[(k, k)]))
        .collect();
    report.checks.insert(
        3,
        ConditionCheck {
            tag: "(II1)",
            description: "P(k,k) = 1 for k ∈ [K_r]",
            passed: off.is_empty(),
            detail: if off.is_empty() {
                "unit diagonal".into()
            } else {
                off.join(", ")
            },
        },
    );
    Ok(report)
}

/// Assemble `Ω` for the model selected by `degrees`.
pub fn build_omega(
    pi_r: &RowMembership,
    labels: &ColumnLabels,
    p: &ConnectivityMatrix,
    degrees: &Degrees,
) -> Result<PopulationMatrix> {
    check_dimensions(pi_r, labels, p)?;
    let (n_r, n_c) = (pi_r.n_nodes(), labels.len());
    // Π_r P, then column selection by label: multiplying by the one-hot Π_c'
    // only adds exact zeros, so this equals the full product bit for bit.
    let row_block = pi_r.matrix() * p.p();
    let ell = labels.labels();

    let (omega, model) = match degrees {
        Degrees::None => (
            DMatrix::from_fn(n_r, n_c, |i, j| row_block[(i, ell[j])]),
            ModelKind::Onm,
        ),
        Degrees::Column(theta) => {
            if theta.role() != DegreeRole::Column || theta.theta().len() != n_c {
                return Err(Error::Dimension(format!(
                    "ODCNM needs {n_c} column degree parameters, got {} ({:?})",
                    theta.theta().len(),
                    theta.role()
                )));
            }
            let t = theta.theta();
            (
                DMatrix::from_fn(n_r, n_c, |i, j| row_block[(i, ell[j])] * t[j]),
                ModelKind::Odcnm,
            )
        }
        Degrees::Row(theta) => {
            if theta.role() != DegreeRole::Row || theta.theta().len() != n_r {
                return Err(Error::Dimension(format!(
                    "DCONM needs {n_r} row degree parameters, got {} ({:?})",
                    theta.theta().len(),
                    theta.role()
                )));
            }
            let pm = p.p();
            if let Some(k) = (0..p.k_row()).find(|k| (pm[(*k, *k)] - 1.0).abs() > 1e-12) {
                return Err(Error::Identifiability {
                    condition: "(II1)",
                    detail: format!(
                        "P(k,k) = 1 for k ∈ [K_r] fails: P({},{}) = {}",
                        k + 1,
                        k + 1,
                        pm[(k, k)]
                    ),
                });
            }
            let t = theta.theta();
            (
                DMatrix::from_fn(n_r, n_c, |i, j| t[i] * row_block[(i, ell[j])]),
                ModelKind::Dconm,
            )
        }
    };
    check_unit_interval(&omega)?;
    Ok(PopulationMatrix { omega, model })
}

/// Draw `A(i,j) ~ Bernoulli(Ω(i,j))` independently, row-major.
pub fn sample_adjacency(omega: &PopulationMatrix, seed: u64) -> BiAdjacency {
    let m = omega.omega();
    let mut rng = seed::rng(seed);
    let mut row_ptr = Vec::with_capacity(m.nrows() + 1);
    let mut col_idx = Vec::new();
    row_ptr.push(0);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let u: f64 = rng.random();
            if u < m[(i, j)] {
                col_idx.push(j);
            }
        }
        row_ptr.push(col_idx.len());
    }
    BiAdjacency {
        n_rows: m.nrows(),
        n_cols: m.ncols(),
        row_ptr,
        col_idx,
    }
}

/// Column degrees with `1/θ(i) ~ U(1, z_c)` iid.
pub fn sample_column_degrees(n_c: usize, z_c: f64, seed: u64) -> Result<DegreeVector> {
    if !(z_c >= 1.0) || !z_c.is_finite() {
        return Err(Error::Parameter(format!("z_c = {z_c} must be ≥ 1")));
    }
    let mut rng = seed::rng(seed);
    let theta = (0..n_c)
        .map(|_| {
            if z_c == 1.0 {
                1.0
            } else {
                1.0 / rng.random_range(1.0..=z_c)
            }
        })
        .collect();
    DegreeVector::new(theta, DegreeRole::Column)
}
