//! Seeded simulation sweeps comparing ONA and ODCNA.
//!
//! Each (sweep value, repetition) pair draws fresh column labels, fresh
//! column degrees under ODCNM, and a fresh adjacency matrix from streams
//! derived from `(master seed, cell, repetition)`, so results do not depend on
//! how the work is scheduled across threads.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_both, Method};
use crate::io::fmt_g;
use crate::linalg::top_k_svd;
use crate::metrics::{hamm, mhamm};
use crate::model::{
    build_omega, sample_adjacency, sample_column_degrees, validate_onm_params, ColumnLabels,
    ConnectivityMatrix, Degrees, ModelKind, RowMembership,
};
use crate::seed::{self, purpose};

pub const CSV_HEADER: &str =
    "sweep_value,method,mean_mhamm,sd_mhamm,mean_hamm,sd_hamm,failures,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    NC,
    Rho,
    ZC,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::NC => "n_c",
            SweepVariable::Rho => "rho",
            SweepVariable::ZC => "z_c",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: ModelKind,
    pub sweep: Sweep,
    pub n_r: usize,
    pub n_c: usize,
    pub k_r: usize,
    pub k_c: usize,
    pub rho: f64,
    /// Upper end of `U(1, z_c)` for `1/θ_c`; ignored under ONM.
    pub z_c: f64,
    pub p_tilde: Vec<Vec<f64>>,
    /// Membership shared by every mixed row node.
    pub mixing: Vec<f64>,
    pub pure_per_community: usize,
    pub repetitions: usize,
    pub seed: u64,
}

pub const BUILTIN_NAMES: [&str; 4] = [
    "experiment-1",
    "experiment-2",
    "experiment-3",
    "experiment-4",
];

fn rho_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

/// The four simulation settings: `n_r = 400`, `n_c = 300`, `K_r = 3`,
/// `K_c = 4`, 100 pure row nodes per community, mixed rows at
/// `(0.6, 0.3, 0.1)`, 50 repetitions.
pub fn builtin_config(name: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig {
        name: name.to_string(),
        model: ModelKind::Onm,
        sweep: Sweep {
            variable: SweepVariable::NC,
            values: vec![],
        },
        n_r: 400,
        n_c: 300,
        k_r: 3,
        k_c: 4,
        rho: 0.5,
        z_c: 1.0,
        p_tilde: vec![
            vec![1.0, 0.3, 0.2, 0.3],
            vec![0.2, 0.9, 0.1, 0.2],
            vec![0.3, 0.2, 0.8, 0.3],
        ],
        mixing: vec![0.6, 0.3, 0.1],
        pure_per_community: 100,
        repetitions: 50,
        seed: 42,
    };
    match name {
        "experiment-1" => {
            cfg.sweep = Sweep {
                variable: SweepVariable::NC,
                values: (1..=6).map(|i| 50.0 * i as f64).collect(),
            };
        }
        "experiment-2" => {
            cfg.sweep = Sweep {
                variable: SweepVariable::Rho,
                values: rho_grid(),
            };
        }
        "experiment-3" => {
            cfg.model = ModelKind::Odcnm;
            cfg.sweep = Sweep {
                variable: SweepVariable::ZC,
                values: (1..=8).map(f64::from).collect(),
            };
        }
        "experiment-4" => {
            cfg.model = ModelKind::Odcnm;
            cfg.z_c = 3.0;
            cfg.sweep = Sweep {
                variable: SweepVariable::Rho,
                values: rho_grid(),
            };
        }
        other => {
            return Err(Error::Parameter(format!(
                "unknown experiment '{other}'; expected one of {}",
                BUILTIN_NAMES.join(", ")
            )))
        }
    }
    Ok(cfg)
}

/// Fixed parameters of one sweep cell.
#[derive(Debug, Clone)]
struct CellParams {
    n_c: usize,
    rho: f64,
    z_c: f64,
}

impl ExperimentConfig {
    fn cell(&self, value: f64) -> Result<CellParams> {
        let mut c = CellParams {
            n_c: self.n_c,
            rho: self.rho,
            z_c: self.z_c,
        };
        match self.sweep.variable {
            SweepVariable::NC => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::Parameter(format!(
                        "n_c sweep value {value} is not a positive integer"
                    )));
                }
                c.n_c = value as usize;
            }
            SweepVariable::Rho => c.rho = value,
            SweepVariable::ZC => c.z_c = value,
        }
        Ok(c)
    }

    pub fn row_membership(&self) -> Result<RowMembership> {
        let n_pure = self.pure_per_community * self.k_r;
        if n_pure > self.n_r {
            return Err(Error::Parameter(format!(
                "{n_pure} pure row nodes do not fit in n_r = {}",
                self.n_r
            )));
        }
        if self.mixing.len() != self.k_r {
            return Err(Error::Dimension(format!(
                "mixing vector has {} entries, K_r = {}",
                self.mixing.len(),
                self.k_r
            )));
        }
        RowMembership::pure_then_mixed(self.pure_per_community, self.n_r - n_pure, &self.mixing)
    }

    fn connectivity(&self, rho: f64) -> Result<ConnectivityMatrix> {
        let p = ConnectivityMatrix::from_rows(&self.p_tilde, rho)?;
        if p.k_row() != self.k_r || p.k_col() != self.k_c {
            return Err(Error::Dimension(format!(
                "P̃ is {}×{}, expected {}×{}",
                p.k_row(),
                p.k_col(),
                self.k_r,
                self.k_c
            )));
        }
        Ok(p)
    }

    /// Check every cell's parameters against the model requirements.
    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            return Err(Error::Parameter("repetitions ≥ 1 required".into()));
        }
        if self.sweep.values.is_empty() {
            return Err(Error::Parameter("sweep has no values".into()));
        }
        if !matches!(self.model, ModelKind::Onm | ModelKind::Odcnm) {
            return Err(Error::Parameter(format!(
                "experiments support onm and odcnm, not {}",
                self.model
            )));
        }
        let pi_r = self.row_membership()?;
        for &v in &self.sweep.values {
            let cell = self.cell(v)?;
            if cell.n_c < self.k_c {
                return Err(Error::Parameter(format!(
                    "n_c = {} is smaller than K_c = {}",
                    cell.n_c, self.k_c
                )));
            }
            if self.model == ModelKind::Odcnm && !(cell.z_c >= 1.0) {
                return Err(Error::Parameter(format!("z_c = {} must be ≥ 1", cell.z_c)));
            }
            let p = self.connectivity(cell.rho)?;
            let labels =
                ColumnLabels::new((0..cell.n_c).map(|i| i % self.k_c).collect(), self.k_c)?;
            validate_onm_params(&pi_r, &labels, &p)?.into_result()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub sweep_value: f64,
    pub method: Method,
    pub mean_mhamm: f64,
    pub sd_mhamm: f64,
    pub mean_hamm: f64,
    pub sd_hamm: f64,
    pub failures: usize,
    pub wall_ms: f64,
    /// Per-repetition values of successful repetitions, in repetition order.
    pub mhamm_values: Vec<f64>,
    pub hamm_values: Vec<f64>,
    /// Repetitions whose column labels had to be redrawn.
    pub label_resamples: usize,
    pub failure_messages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResults {
    pub config: ExperimentConfig,
    /// One entry per (sweep value, method), sweep order then ONA before ODCNA.
    pub cells: Vec<CellResult>,
}

impl SweepResults {
    pub fn cell(&self, sweep_index: usize, method: Method) -> &CellResult {
        let offset = Method::ALL
            .iter()
            .position(|m| *m == method)
            .expect("known method");
        &self.cells[sweep_index * Method::ALL.len() + offset]
    }

    /// Series of `(mean MHamm, mean Hamm)` over the sweep for one method.
    pub fn series(&self, method: Method) -> (Vec<f64>, Vec<f64>) {
        (0..self.config.sweep.values.len())
            .map(|i| {
                let c = self.cell(i, method);
                (c.mean_mhamm, c.mean_hamm)
            })
            .unzip()
    }

    /// Results table. `wall_ms` is written as 0 unless `include_timing`, so
    /// the default output is byte-reproducible.
    pub fn to_csv(&self, include_timing: bool) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            let wall = if include_timing { c.wall_ms } else { 0.0 };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                fmt_g(c.sweep_value, 6),
                c.method.name(),
                fmt_g(c.mean_mhamm, 6),
                fmt_g(c.sd_mhamm, 6),
                fmt_g(c.mean_hamm, 6),
                fmt_g(c.sd_hamm, 6),
                c.failures,
                fmt_g(wall, 6),
            );
        }
        out
    }
}

struct RepOutcome {
    scores: std::result::Result<[(f64, f64); 2], String>,
    label_resampled: bool,
    elapsed_ms: f64,
}

fn run_repetition(
    cfg: &ExperimentConfig,
    pi_r: &RowMembership,
    cell_idx: usize,
    rep: usize,
) -> RepOutcome {
    let start = Instant::now();
    let idx = seed::cell_rep_index(cell_idx, rep);
    let mut label_resampled = false;
    let scores = (|| -> Result<[(f64, f64); 2]> {
        let cell = cfg.cell(cfg.sweep.values[cell_idx])?;
        let p = cfg.connectivity(cell.rho)?;
        let (labels, resamples) = ColumnLabels::random_uniform(
            cell.n_c,
            cfg.k_c,
            seed::derive(cfg.seed, purpose::COLUMN_LABELS, idx),
        )?;
        label_resampled = resamples > 0;
        let degrees = match cfg.model {
            ModelKind::Odcnm => Degrees::Column(sample_column_degrees(
                cell.n_c,
                cell.z_c,
                seed::derive(cfg.seed, purpose::COLUMN_DEGREES, idx),
            )?),
            _ => Degrees::None,
        };
        let omega = build_omega(pi_r, &labels, &p, &degrees)?;
        let a = sample_adjacency(&omega, seed::derive(cfg.seed, purpose::ADJACENCY, idx));
        let spectral = top_k_svd(&a, cfg.k_r)?;
        let fits = fit_both(spectral, cfg.k_c, seed::derive(cfg.seed, purpose::FIT, idx))?;
        let mut out = [(0.0, 0.0); 2];
        for (slot, f) in out.iter_mut().zip(&fits) {
            *slot = (
                mhamm(&f.pi_r_hat, pi_r)?.0,
                hamm(&f.labels_hat, &labels, cfg.k_c)?.0,
            );
        }
        Ok(out)
    })()
    .map_err(|e| e.to_string());
    RepOutcome {
        scores,
        label_resampled,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Run every (sweep value, repetition) pair and aggregate per method.
///
/// Work runs on the current rayon pool; results are identical for any pool
/// size.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SweepResults> {
    cfg.validate()?;
    let pi_r = cfg.row_membership()?;
    let n_cells = cfg.sweep.values.len();
    let tasks: Vec<(usize, usize)> = (0..n_cells)
        .flat_map(|c| (0..cfg.repetitions).map(move |r| (c, r)))
        .collect();
    let outcomes: Vec<RepOutcome> = tasks
        .par_iter()
        .map(|&(c, r)| run_repetition(cfg, &pi_r, c, r))
        .collect();

    let mut cells = Vec::with_capacity(n_cells * 2);
    for (c, chunk) in outcomes.chunks(cfg.repetitions).enumerate() {
        let wall_ms: f64 = chunk.iter().map(|o| o.elapsed_ms).sum();
        let label_resamples = chunk.iter().filter(|o| o.label_resampled).count();
        for (m, method) in Method::ALL.into_iter().enumerate() {
            let ok: Vec<(f64, f64)> = chunk
                .iter()
                .filter_map(|o| o.scores.as_ref().ok().map(|s| s[m]))
                .collect();
            let failure_messages: Vec<String> = chunk
                .iter()
                .filter_map(|o| o.scores.as_ref().err().cloned())
                .collect();
            let mh: Vec<f64> = ok.iter().map(|s| s.0).collect();
            let hm: Vec<f64> = ok.iter().map(|s| s.1).collect();
            let (mean_mhamm, sd_mhamm) = mean_sd(&mh);
            let (mean_hamm, sd_hamm) = mean_sd(&hm);
            cells.push(CellResult {
                sweep_value: cfg.sweep.values[c],
                method,
                mean_mhamm,
                sd_mhamm,
                mean_hamm,
                sd_hamm,
                failures: failure_messages.len(),
                wall_ms,
                mhamm_values: mh,
                hamm_values: hm,
                label_resamples,
                failure_messages,
            });
        }
    }
    Ok(SweepResults {
        config: cfg.clone(),
        cells,
    })
}
