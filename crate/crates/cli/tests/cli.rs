use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn dinet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dinet"))
        .args(args)
        .env_remove("DINET_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = dinet(args);
    assert!(
        out.status.success(),
        "dinet {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn fails_with(args: &[&str], needle: &str) {
    let out = dinet(args);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(!out.status.success(), "dinet {args:?} should fail");
    assert!(err.contains(needle), "stderr {err:?} lacks {needle:?}");
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Generate the experiment-1 base instance and return (adjacency, truth dir).
fn generate(dir: &Path, seed: &str, ext: &str) -> (PathBuf, PathBuf) {
    let a = dir.join(format!("a.{ext}"));
    let truth = dir.join("truth");
    ok(&[
        "generate",
        "--params",
        "experiment-1",
        "--seed",
        seed,
        "--out-adjacency",
        s(&a),
        "--out-truth",
        s(&truth),
    ]);
    (a, truth)
}

fn fit(a: &Path, method: &str, out: &Path) {
    ok(&[
        "fit",
        "--method",
        method,
        "--adjacency",
        s(a),
        "--k-r",
        "3",
        "--k-c",
        "4",
        "--out-dir",
        s(out),
    ]);
}

fn write_truth(dir: &Path, pi: &str, labels: &str) {
    fs::create_dir_all(dir).unwrap();
    fs::write(dir.join("pi_r.csv"), pi).unwrap();
    fs::write(dir.join("labels.txt"), labels).unwrap();
}

fn evaluate(truth: &Path, est: &Path) -> Value {
    let out = ok(&[
        "evaluate",
        "--truth-dir",
        s(truth),
        "--estimate-dir",
        s(est),
    ]);
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn generate_is_reproducible() {
    let t = TempDir::new().unwrap();
    let (a, truth) = generate(t.path(), "7", "mtx");
    let first = fs::read(&a).unwrap();
    for f in ["pi_r.csv", "labels.txt", "manifest.json"] {
        assert!(truth.join(f).exists(), "{f} missing");
    }
    assert!(first.starts_with(b"%%MatrixMarket matrix coordinate pattern general\n"));
    generate(t.path(), "7", "mtx");
    assert_eq!(fs::read(&a).unwrap(), first);

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(truth.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "generate");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["parameters"]["params"]["model"], "onm");
    let text = serde_json::to_string(&manifest).unwrap();
    assert_eq!(serde_json::from_str::<Value>(&text).unwrap(), manifest);
}

#[test]
fn pipeline_on_edge_list() {
    let t = TempDir::new().unwrap();
    let (a, truth) = generate(t.path(), "3", "tsv");
    let (ona, odcna) = (t.path().join("ona"), t.path().join("odcna"));
    fit(&a, "ona", &ona);
    fit(&a, "odcna", &odcna);
    assert_eq!(
        fs::read(ona.join("pi_r.csv")).unwrap(),
        fs::read(odcna.join("pi_r.csv")).unwrap()
    );
    for f in ["labels.txt", "diagnostics.json", "manifest.json"] {
        assert!(ona.join(f).exists(), "{f} missing");
    }
    let diag: Value =
        serde_json::from_str(&fs::read_to_string(ona.join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["sigma"].as_array().unwrap().len(), 3);

    let m = evaluate(&truth, &ona);
    for key in ["mhamm", "hamm", "f_c"] {
        let v = m[key].as_f64().unwrap();
        assert!(v.is_finite() && v >= 0.0, "{key} = {v}");
    }
    assert!(m["mhamm"].as_f64().unwrap() < 1.0);
}

#[test]
fn evaluate_examples() {
    let t = TempDir::new().unwrap();
    let truth = t.path().join("truth");
    write_truth(&truth, "1,0\n0,1\n0.5,0.5\n", "1\n1\n1\n2\n2\n2\n");

    let m = evaluate(&truth, &truth);
    assert_eq!(
        (m["mhamm"].as_f64(), m["hamm"].as_f64(), m["f_c"].as_f64()),
        (Some(0.0), Some(0.0), Some(0.0))
    );

    let swapped = t.path().join("swapped");
    write_truth(&swapped, "0,1\n1,0\n0.5,0.5\n", "2\n2\n2\n1\n1\n1\n");
    let m = evaluate(&truth, &swapped);
    assert_eq!(
        (m["mhamm"].as_f64(), m["hamm"].as_f64(), m["f_c"].as_f64()),
        (Some(0.0), Some(0.0), Some(0.0))
    );
    assert_eq!(m["best_row_perm"], serde_json::json!([2, 1]));

    let est = t.path().join("est");
    write_truth(&est, "1,0\n0,1\n0.5,0.5\n", "1\n1\n2\n2\n2\n2\n");
    let m = evaluate(&truth, &est);
    assert!((m["f_c"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert!((m["hamm"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);

    let short = t.path().join("short");
    write_truth(&short, "1,0\n0,1\n", "1\n1\n2\n2\n2\n2\n");
    fails_with(
        &[
            "evaluate",
            "--truth-dir",
            s(&truth),
            "--estimate-dir",
            s(&short),
        ],
        "shapes",
    );
}

#[test]
fn condition_failures_are_named() {
    let t = TempDir::new().unwrap();
    let no_pure = t.path().join("no_pure.toml");
    fs::write(
        &no_pure,
        "p_tilde = [[1.0, 0.2], [0.3, 0.9]]\nrho = 0.5\n\n[rows]\nmemberships = [[0.5, 0.5], [1.0, 0.0], [0.3, 0.7]]\n\n[columns]\nn = 10\n",
    )
    .unwrap();
    let truth = t.path().join("out/truth");
    let adj = t.path().join("out/a.mtx");
    let args = |params: &Path, model: &'static str| -> Vec<String> {
        vec![
            "generate".into(),
            "--model".into(),
            model.into(),
            "--params".into(),
            s(params).into(),
            "--out-adjacency".into(),
            s(&adj).into(),
            "--out-truth".into(),
            s(&truth).into(),
        ]
    };
    let run = |a: Vec<String>, needle: &str| {
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        fails_with(&a, needle);
    };
    run(args(&no_pure, "onm"), "(I2)");
    assert!(!t.path().join("out").exists(), "partial output left behind");

    let dconm = t.path().join("dconm.toml");
    fs::write(
        &dconm,
        "p_tilde = [[0.9, 0.2], [0.3, 1.0]]\n\n[rows]\nmixing = [0.5, 0.5]\npure_per_community = 2\nn_mixed = 4\nz = 2.0\n\n[columns]\nn = 12\n",
    )
    .unwrap();
    run(args(&dconm, "dconm"), "(II1)");
    run(args(&dconm, "dconm"), "P(k,k) = 1");

    let rank = t.path().join("rank.toml");
    fs::write(
        &rank,
        "p_tilde = [[1.0, 0.5], [1.0, 0.5]]\n\n[rows]\nmixing = [0.5, 0.5]\n\n[columns]\nn = 12\n",
    )
    .unwrap();
    run(args(&rank, "onm"), "(I1)");
}

#[test]
fn fit_rejects_more_row_than_column_communities() {
    let t = TempDir::new().unwrap();
    let (a, _) = generate(t.path(), "1", "mtx");
    let out = t.path().join("est");
    fails_with(
        &[
            "fit",
            "--method",
            "ona",
            "--adjacency",
            s(&a),
            "--k-r",
            "5",
            "--k-c",
            "3",
            "--out-dir",
            s(&out),
        ],
        "K_r ≤ K_c",
    );
    assert!(!out.exists());
    fails_with(
        &[
            "fit",
            "--method",
            "ona",
            "--adjacency",
            s(&t.path().join("missing.mtx")),
            "--k-r",
            "3",
            "--k-c",
            "4",
            "--out-dir",
            s(&out),
        ],
        "cannot read",
    );
}

#[test]
fn experiment_outputs() {
    let t = TempDir::new().unwrap();
    let csv = t.path().join("e1.csv");
    let out = ok(&[
        "experiment",
        "experiment-1",
        "--reps",
        "50",
        "--seed",
        "1",
        "--out",
        s(&csv),
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("total wall time"));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "sweep_value,method,mean_mhamm,sd_mhamm,mean_hamm,sd_hamm,failures,wall_ms"
    );
    assert_eq!(lines.len(), 13);
    assert!(lines[1].starts_with("50,ONA,"));
    assert!(lines[12].starts_with("300,ODCNA,"));
    assert!(t.path().join("e1.csv.manifest.json").exists());

    fails_with(
        &[
            "experiment",
            "experiment-1",
            "--reps",
            "0",
            "--out",
            s(&t.path().join("zero.csv")),
        ],
        "repetitions ≥ 1",
    );
    assert!(!t.path().join("zero.csv").exists());
    fails_with(
        &[
            "experiment",
            "experiment-9",
            "--out",
            s(&t.path().join("x.csv")),
        ],
        "unknown experiment",
    );
}

#[test]
fn experiment_is_reproducible_across_thread_counts() {
    let t = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "4", "0"].iter().enumerate() {
        let csv = t.path().join(format!("run{i}.csv"));
        let out = Command::new(env!("CARGO_BIN_EXE_dinet"))
            .args([
                "experiment",
                "experiment-3",
                "--reps",
                "2",
                "--seed",
                "5",
                "--out",
                s(&csv),
            ])
            .env("DINET_THREADS", threads)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        outputs.push(fs::read(&csv).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn experiment_from_config_file() {
    let t = TempDir::new().unwrap();
    let cfg = t.path().join("small.toml");
    fs::write(
        &cfg,
        r#"name = "small"
model = "odcnm"
n_r = 60
n_c = 40
k_r = 2
k_c = 3
rho = 0.8
z_c = 2.0
p_tilde = [[1.0, 0.2, 0.4], [0.3, 0.9, 0.1]]
mixing = [0.5, 0.5]
pure_per_community = 20
repetitions = 2
seed = 3

[sweep]
variable = "z_c"
values = [1.0, 2.0]
"#,
    )
    .unwrap();
    let csv = t.path().join("small.csv");
    ok(&["experiment", s(&cfg), "--out", s(&csv)]);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 5);
}
