use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

fn config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/sphere_vmf.toml")
}

fn rdmix(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_rdmix"))
        .args(args)
        .env_remove("MM_SEED")
        .output()
        .expect("spawn rdmix");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

const SMALL: [&str; 14] = [
    "--set",
    "train.iterations=10",
    "--set",
    "data.n=200",
    "--set",
    "net.hidden=16",
    "--set",
    "train.val_interval=5",
    "--set",
    "eval.n_samples=20",
    "--set",
    "eval.nll_steps=10",
    "--set",
    "eval.sample_steps=10",
];

fn train_small(dir: &Path) -> (i32, String) {
    let cfg = config();
    let mut args = vec!["train", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()];
    args.extend(SMALL);
    let (code, _, err) = rdmix(&args);
    (code, err)
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn train_writes_one_metric_line_per_iteration_and_is_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let (code, err) = train_small(a.path());
    assert_eq!(code, 0, "{err}");
    assert_eq!(train_small(b.path()).0, 0);

    let metrics = fs::read_to_string(a.path().join("metrics.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = metrics.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 10);
    for l in &lines {
        assert!(l.get("git").is_some() && l.get("config_hash").is_some() && l.get("seed").is_some());
    }
    for f in ["metrics.jsonl", "checkpoint.ckpt", "test.csv", "summary.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f} differs between identical runs"
        );
    }
}

#[test]
fn sample_and_nll_round_trip() {
    let dir = TempDir::new().unwrap();
    assert_eq!(train_small(dir.path()).0, 0);
    let ck = dir.path().join("checkpoint.ckpt");
    let ck = ck.to_str().unwrap();

    let out = dir.path().join("samples.csv");
    let (code, _, err) = rdmix(&["sample", "--checkpoint", ck, "--n", "25", "--steps", "20", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with('#'));
    let rows = data_lines(&text);
    assert_eq!(rows.len(), 26);
    for r in &rows[1..] {
        let v: Vec<f64> = r.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((v.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() < 1e-9);
    }

    let test = dir.path().join("test.csv");
    let (code, stdout, err) = rdmix(&["nll", "--checkpoint", ck, "--data", test.to_str().unwrap(), "--steps", "10"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(v["nll_mean"].as_f64().unwrap().is_finite());
    assert_eq!(v["nll_steps"], 10);
}

#[test]
fn zero_samples_give_header_only_csv() {
    let dir = TempDir::new().unwrap();
    assert_eq!(train_small(dir.path()).0, 0);
    let out = dir.path().join("none.csv");
    let ck = dir.path().join("checkpoint.ckpt");
    let (code, _, err) = rdmix(&["sample", "--checkpoint", ck.to_str().unwrap(), "--n", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(data_lines(&text), vec!["x0,x1,x2"]);
}

#[test]
fn untrained_checkpoint_gives_uniform_sphere_nll() {
    let dir = TempDir::new().unwrap();
    let cfg = config();
    let mut args = vec!["train", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()];
    args.extend(SMALL);
    args.extend(["--set", "train.iterations=0"]);
    let (code, _, err) = rdmix(&args);
    assert_eq!(code, 0, "{err}");
    let ck = dir.path().join("checkpoint.ckpt");
    let test = dir.path().join("test.csv");
    let (code, stdout, err) = rdmix(&["nll", "--checkpoint", ck.to_str().unwrap(), "--data", test.to_str().unwrap(), "--steps", "5"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let nll = v["nll_mean"].as_f64().unwrap();
    assert!((nll - (4.0 * std::f64::consts::PI).ln()).abs() < 1e-9, "{nll}");
}

#[test]
fn input_errors_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.csv");
    let file_cfg = dir.path().join("file.toml");
    fs::write(
        &file_cfg,
        format!(
            "[manifold]\nkind = \"sphere\"\ndim = 2\n[data]\nsource = \"file\"\npath = \"{}\"\n",
            missing.display()
        ),
    )
    .unwrap();
    let out = dir.path().join("x.csv");
    let (code, _, _) = rdmix(&["data-gen", "--config", file_cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);

    let (code, _, _) = rdmix(&["--threads", "0", "data-gen", "--config", file_cfg.to_str().unwrap(), "--out", "x"]);
    assert_eq!(code, 2);
    let (code, _, _) = rdmix(&["diagnose", "--task", "nonsense", "--out", "x"]);
    assert_eq!(code, 2);
    let (code, _, _) = rdmix(&["sample", "--checkpoint", missing.to_str().unwrap(), "--out", "x"]);
    assert_eq!(code, 2);
}

#[test]
fn manifold_mismatch_is_rejected() {
    let dir = TempDir::new().unwrap();
    assert_eq!(train_small(dir.path()).0, 0);
    let ck = dir.path().join("checkpoint.ckpt");
    let out = dir.path().join("s.csv");
    let (code, _, err) = rdmix(&[
        "sample", "--checkpoint", ck.to_str().unwrap(), "--manifold", "torus", "--n", "3", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn data_gen_writes_csv_and_manifest() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("vmf.csv");
    let cfg = config();
    let (code, _, err) = rdmix(&["data-gen", "--config", cfg.to_str().unwrap(), "--set", "data.n=50", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(data_lines(&text).len(), 51);
    let manifest = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .any(|e| e.path().extension().is_some_and(|x| x == "json"));
    assert!(manifest);
}

#[test]
fn diagnose_two_way_steps_writes_rows() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("steps.csv");
    let (code, _, err) = rdmix(&[
        "diagnose", "--task", "two-way-steps", "--n", "100", "--steps", "5,15", "--reference-steps", "50", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(&out).unwrap();
    let rows = data_lines(&text);
    assert_eq!(rows[0], "mode,n_steps,mmd");
    assert_eq!(rows.len(), 5);
}

#[test]
fn diagnose_convergence_from_checkpoint() {
    let dir = TempDir::new().unwrap();
    assert_eq!(train_small(dir.path()).0, 0);
    let ck = dir.path().join("checkpoint.ckpt");
    let out = dir.path().join("conv.csv");
    let (code, _, err) = rdmix(&[
        "diagnose", "--task", "convergence", "--checkpoint", ck.to_str().unwrap(), "--n", "20", "--sample-steps", "20",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(&out).unwrap();
    assert!(data_lines(&text).len() > 1);
}

#[test]
fn mesh_basis_writes_eigenvalues() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("basis.bin");
    let (code, _, err) = rdmix(&["mesh-basis", "--mesh", "square:6", "--k", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.exists());
    let json = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .find(|e| e.path().extension().is_some_and(|x| x == "json"))
        .expect("eigenvalue json");
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(json.path()).unwrap()).unwrap();
    let eig = v["eigenvalues"].as_array().expect("eigenvalues");
    assert_eq!(eig.len(), 5);
    let eig: Vec<f64> = eig.iter().map(|e| e.as_f64().unwrap()).collect();
    assert!(eig[0] > 0.0 && eig.windows(2).all(|w| w[0] <= w[1]));
    // Neumann spectrum of the unit square: π², π², 2π², 4π², 4π²
    let pi2 = std::f64::consts::PI.powi(2);
    for (got, want) in eig.iter().zip([pi2, pi2, 2.0 * pi2, 4.0 * pi2, 4.0 * pi2]) {
        assert!((got - want).abs() < 0.1 * want, "{got} vs {want}");
    }
}
