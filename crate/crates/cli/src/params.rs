//! Generator parameter files (TOML).

use std::path::Path;

use anyhow::{bail, Context, Result};
use dinet::experiments::{builtin_config, BUILTIN_NAMES};
use dinet::model::{
    sample_column_degrees, ColumnLabels, ConnectivityMatrix, DegreeRole, DegreeVector, Degrees,
    ModelKind, RowMembership,
};
use dinet::seed::{self, purpose};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Everything needed to build `Ω`. Exactly one of `p` and `p_tilde` must be
/// given; `rho` scales `p_tilde`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_tilde: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    pub rows: RowSpec,
    pub columns: ColumnSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowSpec {
    /// Explicit membership rows; overrides the pure/mixed layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memberships: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pure_per_community: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_mixed: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixing: Option<Vec<f64>>,
    /// DCONM degrees, given explicitly or drawn with `1/θ ~ U(1, z)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub n: usize,
    /// 1-based labels; drawn uniformly when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
    /// ODCNM degrees, given explicitly or drawn with `1/θ ~ U(1, z)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

/// Parameters resolved into library types.
pub struct Resolved {
    pub pi_r: RowMembership,
    pub labels: ColumnLabels,
    pub label_resamples: usize,
    pub p: ConnectivityMatrix,
    pub degrees: Degrees,
}

impl GenerateParams {
    /// Read a TOML file, or take the base setting of a builtin experiment.
    pub fn load(spec: &str) -> Result<Self> {
        if BUILTIN_NAMES.contains(&spec) {
            let cfg = builtin_config(spec)?;
            let n_pure = cfg.pure_per_community * cfg.k_r;
            return Ok(Self {
                model: Some(cfg.model),
                p: None,
                p_tilde: Some(cfg.p_tilde),
                rho: Some(cfg.rho),
                rows: RowSpec {
                    memberships: None,
                    pure_per_community: Some(cfg.pure_per_community),
                    n_mixed: Some(cfg.n_r - n_pure),
                    mixing: Some(cfg.mixing),
                    theta: None,
                    z: None,
                },
                columns: ColumnSpec {
                    n: cfg.n_c,
                    labels: None,
                    theta: None,
                    z: (cfg.model == ModelKind::Odcnm).then_some(cfg.z_c),
                },
            });
        }
        let path = Path::new(spec);
        let text = std::fs::read_to_string(path).with_context(|| {
            format!(
                "cannot read parameter file {spec} (builtin names: {})",
                BUILTIN_NAMES.join(", ")
            )
        })?;
        toml::from_str(&text).with_context(|| format!("invalid parameter file {spec}"))
    }

    pub fn resolve(&self, model: ModelKind, master: u64) -> Result<Resolved> {
        let p = match (&self.p, &self.p_tilde) {
            (Some(p), None) => {
                if self.rho.is_some() {
                    bail!("rho only applies to p_tilde");
                }
                ConnectivityMatrix::from_probabilities(to_matrix(p, "p")?)?
            }
            (None, Some(pt)) => ConnectivityMatrix::from_rows(pt, self.rho.unwrap_or(1.0))?,
            _ => bail!("give exactly one of p and p_tilde"),
        };
        let k_c = p.k_col();

        let rows = &self.rows;
        let pi_r = match (&rows.memberships, &rows.mixing) {
            (Some(m), None) => RowMembership::from_rows(m)?,
            (None, Some(mixing)) => RowMembership::pure_then_mixed(
                rows.pure_per_community.unwrap_or(1),
                rows.n_mixed.unwrap_or(0),
                mixing,
            )?,
            _ => bail!("rows need exactly one of memberships and mixing"),
        };
        let n_r = pi_r.n_nodes();

        let (labels, label_resamples) = match &self.columns.labels {
            Some(l) => {
                if l.len() != self.columns.n {
                    bail!(
                        "columns.labels has {} entries, n = {}",
                        l.len(),
                        self.columns.n
                    );
                }
                (ColumnLabels::from_one_based(l, k_c)?, 0)
            }
            None => ColumnLabels::random_uniform(
                self.columns.n,
                k_c,
                seed::derive(master, purpose::COLUMN_LABELS, 0),
            )?,
        };

        let column_degrees = degrees(
            &self.columns.theta,
            self.columns.z,
            self.columns.n,
            DegreeRole::Column,
            seed::derive(master, purpose::COLUMN_DEGREES, 0),
        )?;
        let row_degrees = degrees(
            &rows.theta,
            rows.z,
            n_r,
            DegreeRole::Row,
            seed::derive(master, purpose::ROW_DEGREES, 0),
        )?;
        let degrees = match model {
            ModelKind::Onm => {
                if column_degrees.is_some() || row_degrees.is_some() {
                    bail!("onm takes no degree parameters");
                }
                Degrees::None
            }
            ModelKind::Odcnm => {
                if row_degrees.is_some() {
                    bail!("odcnm takes column degrees only");
                }
                Degrees::Column(column_degrees.context("odcnm needs columns.theta or columns.z")?)
            }
            ModelKind::Dconm => {
                if column_degrees.is_some() {
                    bail!("dconm takes row degrees only");
                }
                Degrees::Row(row_degrees.context("dconm needs rows.theta or rows.z")?)
            }
        };
        Ok(Resolved {
            pi_r,
            labels,
            label_resamples,
            p,
            degrees,
        })
    }
}

fn degrees(
    theta: &Option<Vec<f64>>,
    z: Option<f64>,
    n: usize,
    role: DegreeRole,
    seed: u64,
) -> Result<Option<DegreeVector>> {
    Ok(match (theta, z) {
        (Some(_), Some(_)) => bail!("give θ or z, not both"),
        (Some(t), None) => {
            if t.len() != n {
                bail!("θ has {} entries, expected {n}", t.len());
            }
            Some(DegreeVector::new(t.clone(), role)?)
        }
        (None, Some(z)) => {
            let sampled = sample_column_degrees(n, z, seed)?;
            Some(DegreeVector::new(sampled.theta().to_vec(), role)?)
        }
        (None, None) => None,
    })
}

fn to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || n == 0 || rows.iter().any(|r| r.len() != n) {
        bail!("{what} must be a non-empty rectangular array");
    }
    Ok(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
}
