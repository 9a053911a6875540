mod manifest;
mod params;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dinet::experiments::{builtin_config, run_experiment, ExperimentConfig, BUILTIN_NAMES};
use dinet::fit::{fit, Method};
use dinet::io::{
    fmt_g, read_csv, read_labels, read_matrix_file, write_adjacency_file, write_csv, write_labels,
    MatrixFile,
};
use dinet::metrics::evaluate;
use dinet::model::{
    build_omega, sample_adjacency, validate_dconm_params, validate_onm_params, Degrees, ModelKind,
    RowMembership,
};
use dinet::seed::{self, purpose};
use manifest::{Outputs, RunManifest, MANIFEST_NAME};
use params::GenerateParams;
use serde_json::json;

const DEFAULT_SEED: u64 = 42;
const THREADS_ENV: &str = "DINET_THREADS";

#[derive(Parser)]
#[command(
    name = "dinet",
    version,
    about = "Overlapping community detection in directed networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a bi-adjacency matrix and write the ground truth.
    Generate {
        #[arg(long, value_parser = parse_model)]
        model: Option<ModelKind>,
        /// TOML parameter file or a builtin experiment name.
        #[arg(long)]
        params: String,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Output matrix, `.mtx` or `.tsv`.
        #[arg(long)]
        out_adjacency: PathBuf,
        #[arg(long)]
        out_truth: PathBuf,
    },
    /// Estimate row memberships and column labels.
    Fit {
        #[arg(long, value_parser = parse_method)]
        method: Method,
        /// Input matrix, `.mtx`, `.tsv` or `.csv`.
        #[arg(long)]
        adjacency: PathBuf,
        #[arg(long)]
        k_r: usize,
        #[arg(long)]
        k_c: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score an estimate directory against a truth directory.
    Evaluate {
        #[arg(long)]
        truth_dir: PathBuf,
        #[arg(long)]
        estimate_dir: PathBuf,
        /// Also write the metrics JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a simulation sweep and write the summary CSV.
    Experiment {
        /// Builtin name or TOML config file.
        name: String,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Write measured wall times instead of zeros.
        #[arg(long)]
        timing: bool,
    },
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: dinet::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: dinet::Error| e.to_string())
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .with_context(|| format!("{THREADS_ENV} must be a non-negative integer, got {v:?}"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Generate {
            model,
            params,
            seed,
            out_adjacency,
            out_truth,
        } => generate(model, &params, seed, &out_adjacency, &out_truth),
        Command::Fit {
            method,
            adjacency,
            k_r,
            k_c,
            seed,
            out_dir,
        } => run_fit(method, &adjacency, k_r, k_c, seed, &out_dir),
        Command::Evaluate {
            truth_dir,
            estimate_dir,
            out,
        } => run_evaluate(&truth_dir, &estimate_dir, out.as_deref()),
        Command::Experiment {
            name,
            reps,
            seed,
            out,
            timing,
        } => experiment(&name, reps, seed, &out, timing),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn csv_bytes(m: &nalgebra::DMatrix<f64>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(m, &mut buf)?;
    Ok(buf)
}

fn label_bytes(l: &dinet::ColumnLabels) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_labels(l, &mut buf)?;
    Ok(buf)
}

fn generate(
    model: Option<ModelKind>,
    spec: &str,
    seed: u64,
    out_adjacency: &Path,
    out_truth: &Path,
) -> Result<()> {
    eprintln!("seed: {seed}");
    let params = GenerateParams::load(spec)?;
    let model = model.or(params.model).unwrap_or(ModelKind::Onm);
    let r = params.resolve(model, seed)?;
    let report = match model {
        ModelKind::Dconm => validate_dconm_params(&r.pi_r, &r.labels, &r.p)?,
        _ => validate_onm_params(&r.pi_r, &r.labels, &r.p)?,
    };
    report.into_result()?;
    let omega = build_omega(&r.pi_r, &r.labels, &r.p, &r.degrees)?;
    let a = sample_adjacency(&omega, seed::derive(seed, purpose::ADJACENCY, 0));

    let mut out = Outputs::default();
    out.file(out_adjacency)?;
    write_adjacency_file(&a, out_adjacency)?;
    out.dir(out_truth)?;
    let pi_path = out_truth.join("pi_r.csv");
    let labels_path = out_truth.join("labels.txt");
    out.write(&pi_path, csv_bytes(r.pi_r.matrix())?)?;
    out.write(&labels_path, label_bytes(&r.labels)?)?;

    let mut resolved = params.clone();
    resolved.model = Some(model);
    let mut m = RunManifest::new(
        "generate",
        Some(seed),
        json!({
            "params": resolved,
            "k_r": r.p.k_row(),
            "k_c": r.p.k_col(),
            "n_r": r.pi_r.n_nodes(),
            "n_c": r.labels.len(),
            "label_resamples": r.label_resamples,
            "edges": a.nnz(),
        }),
    );
    m.outputs
        .insert("adjacency".into(), out_adjacency.to_path_buf());
    m.outputs.insert("pi_r".into(), pi_path);
    m.outputs.insert("labels".into(), labels_path);
    let theta = match &r.degrees {
        Degrees::None => None,
        Degrees::Column(t) => Some(("theta_c", t)),
        Degrees::Row(t) => Some(("theta_r", t)),
    };
    if let Some((name, t)) = theta {
        let path = out_truth.join(format!("{name}.csv"));
        let text: String = t.theta().iter().map(|v| fmt_g(*v, 17) + "\n").collect();
        out.write(&path, text)?;
        m.outputs.insert(name.into(), path);
    }
    write_manifests(&mut out, &m, &[out_truth])?;
    out.commit();
    eprintln!(
        "{} {}×{} with {} edges",
        model,
        a.nrows(),
        a.ncols(),
        a.nnz()
    );
    Ok(())
}

/// Write the manifest into each output directory (once per directory).
fn write_manifests(out: &mut Outputs, m: &RunManifest, dirs: &[&Path]) -> Result<()> {
    let mut seen: Vec<PathBuf> = Vec::new();
    let mut targets: Vec<PathBuf> = dirs.iter().map(|d| d.join(MANIFEST_NAME)).collect();
    for p in m.outputs.values() {
        if let Some(parent) = p.parent() {
            let name = p
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default();
            if !dirs.contains(&parent) {
                targets.push(parent.join(format!("{name}.{MANIFEST_NAME}")));
            }
        }
    }
    let text = m.to_json();
    for t in targets {
        if !seen.contains(&t) {
            out.write(&t, &text)?;
            seen.push(t);
        }
    }
    Ok(())
}

fn run_fit(
    method: Method,
    adjacency: &Path,
    k_r: usize,
    k_c: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<()> {
    eprintln!("seed: {seed}");
    if k_r > k_c {
        return Err(dinet::Error::Identifiability {
            condition: "K_r ≤ K_c",
            detail: format!("K_r = {k_r} exceeds K_c = {k_c}"),
        }
        .into());
    }
    let input = read_matrix_file(adjacency)
        .with_context(|| format!("cannot read {}", adjacency.display()))?;
    let result = match &input {
        MatrixFile::Sparse(a) => fit(a, method, k_r, k_c, seed)?,
        MatrixFile::Dense(a) => fit(a, method, k_r, k_c, seed)?,
    };

    let mut out = Outputs::default();
    out.dir(out_dir)?;
    let pi_path = out_dir.join("pi_r.csv");
    let labels_path = out_dir.join("labels.txt");
    let diag_path = out_dir.join("diagnostics.json");
    out.write(&pi_path, csv_bytes(result.pi_r_hat.matrix())?)?;
    out.write(&labels_path, label_bytes(&result.labels_hat)?)?;
    let mut diag = serde_json::to_string_pretty(&result.diagnostics)?;
    diag.push('\n');
    out.write(&diag_path, diag)?;

    let mut m = RunManifest::new(
        "fit",
        Some(seed),
        json!({ "method": method.name(), "k_r": k_r, "k_c": k_c }),
    );
    m.inputs.insert("adjacency".into(), adjacency.to_path_buf());
    m.outputs.insert("pi_r".into(), pi_path);
    m.outputs.insert("labels".into(), labels_path);
    m.outputs.insert("diagnostics".into(), diag_path);
    write_manifests(&mut out, &m, &[out_dir])?;
    out.commit();
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| {
        format!("cannot open {}", path.display())
    })?))
}

fn run_evaluate(truth_dir: &Path, estimate_dir: &Path, out_path: Option<&Path>) -> Result<()> {
    let load = |dir: &Path| -> Result<(RowMembership, dinet::ColumnLabels)> {
        let pi = RowMembership::new(read_csv(open(&dir.join("pi_r.csv"))?)?)
            .with_context(|| format!("{}: invalid memberships", dir.display()))?;
        let labels = read_labels(open(&dir.join("labels.txt"))?, None)?;
        Ok((pi, labels))
    };
    let (pi_true, l_true) = load(truth_dir)?;
    let (pi_hat, l_hat) = load(estimate_dir)?;
    if pi_true.matrix().shape() != pi_hat.matrix().shape() {
        bail!(
            "row memberships have shapes {:?} (truth) and {:?} (estimate)",
            pi_true.matrix().shape(),
            pi_hat.matrix().shape()
        );
    }
    if l_true.len() != l_hat.len() {
        bail!(
            "label files have {} (truth) and {} (estimate) entries",
            l_true.len(),
            l_hat.len()
        );
    }
    let report = evaluate(&pi_hat, &pi_true, &l_hat, &l_true)?;
    let one_based = |p: &[usize]| p.iter().map(|x| x + 1).collect::<Vec<_>>();
    let mut text = serde_json::to_string_pretty(&json!({
        "mhamm": report.mhamm,
        "hamm": report.hamm,
        "f_c": report.f_c,
        "best_row_perm": one_based(&report.best_row_perm),
        "best_col_perm": one_based(&report.best_col_perm),
    }))?;
    text.push('\n');
    print!("{text}");
    if let Some(p) = out_path {
        let mut out = Outputs::default();
        out.write(p, &text)?;
        let mut m = RunManifest::new("evaluate", None, json!({}));
        m.inputs.insert("truth_dir".into(), truth_dir.to_path_buf());
        m.inputs
            .insert("estimate_dir".into(), estimate_dir.to_path_buf());
        m.outputs.insert("metrics".into(), p.to_path_buf());
        write_manifests(&mut out, &m, &[])?;
        out.commit();
    }
    Ok(())
}

fn load_experiment(name: &str) -> Result<ExperimentConfig> {
    if BUILTIN_NAMES.contains(&name) {
        return Ok(builtin_config(name)?);
    }
    let path = Path::new(name);
    if path.extension().and_then(|e| e.to_str()) != Some("toml") {
        bail!(
            "unknown experiment {name:?}; use one of {} or a .toml config",
            BUILTIN_NAMES.join(", ")
        );
    }
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("invalid experiment config {name}"))
}

fn experiment(
    name: &str,
    reps: Option<usize>,
    seed: Option<u64>,
    out_path: &Path,
    timing: bool,
) -> Result<()> {
    let mut cfg = load_experiment(name)?;
    if let Some(r) = reps {
        cfg.repetitions = r;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    eprintln!("seed: {}", cfg.seed);
    let start = Instant::now();
    let res = run_experiment(&cfg)?;
    let secs = start.elapsed().as_secs_f64();

    let mut out = Outputs::default();
    out.write(out_path, res.to_csv(timing))?;
    let mut m = RunManifest::new(
        "experiment",
        Some(cfg.seed),
        json!({ "config": cfg, "timing": timing }),
    );
    m.outputs.insert("results".into(), out_path.to_path_buf());
    write_manifests(&mut out, &m, &[])?;
    out.commit();

    let failures: usize = res.cells.iter().map(|c| c.failures).sum::<usize>() / Method::ALL.len();
    if failures > 0 {
        eprintln!("{failures} repetitions failed and are excluded from the means");
    }
    eprintln!("total wall time: {secs:.2} s");
    Ok(())
}
