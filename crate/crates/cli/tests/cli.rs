use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use idpath_cli::config::{parse_str, Format};
use serde_json::{json, Value};
use tempfile::TempDir;

fn base(dir: &Path) -> Value {
    json!({
        "rep": {"type": "gamma", "a": 1.0, "beta": 1.0},
        "kernel": {"type": "indicator"},
        "trunc": {"m": 20.0, "window": [0.0, 1.0]},
        "grid": {"J": 10, "T": 1.0},
        "n_paths": 100,
        "seed": 11,
        "mode": "simulate",
        "output": {"dir": dir.join("out")}
    })
}

fn invoke(sub: &str, config: &Value, dir: &Path, extra: &[&str]) -> i32 {
    let path = dir.join("config.in.json");
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    Command::new(env!("CARGO_BIN_EXE_idpath"))
        .arg(sub)
        .arg("--config")
        .arg(&path)
        .args(extra)
        .env("IDPATH_THREADS", "4")
        .status()
        .unwrap()
        .code()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// `(path_id, t, dim, value)` rows, checking the schema and header lines.
fn read_paths_csv(path: &Path) -> Vec<(usize, f64, usize, f64)> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# idpath-paths/1"));
    assert_eq!(lines.next(), Some("path_id,t,dim,value"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
                f[3].parse().unwrap(),
            )
        })
        .collect()
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn simulate_writes_one_row_per_path_and_time() {
    let tmp = TempDir::new().unwrap();
    let cfg = base(tmp.path());
    assert_eq!(invoke("simulate", &cfg, tmp.path(), &[]), 0);
    let out = tmp.path().join("out");
    let rows = read_paths_csv(&out.join("paths.csv"));
    assert_eq!(rows.len(), 100 * 11);
    assert!(!out.join("error.json").exists());
    for name in ["config.json", "run.json", "summary.csv"] {
        assert!(out.join(name).exists(), "{name}");
    }
}

#[test]
fn summary_is_recomputable_from_paths() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = base(tmp.path());
    cfg["rep"] =
        json!({"type": "stable", "alpha": 1.4, "atoms": [{"xi": [1.0, 0.0], "w": 1.0}, {"xi": [0.0, -1.0], "w": 2.0}]});
    cfg["kernel"] = json!({"type": "ou", "lambda": 2.0, "x0": 0.5});
    cfg["n_paths"] = json!(37);
    assert_eq!(invoke("simulate", &cfg, tmp.path(), &[]), 0);
    let out = tmp.path().join("out");
    let rows = read_paths_csv(&out.join("paths.csv"));
    assert_eq!(rows.len(), 37 * 11 * 2);

    let mut groups: BTreeMap<(u64, usize), Vec<f64>> = BTreeMap::new();
    for (_, t, d, v) in &rows {
        groups.entry((t.to_bits(), *d)).or_default().push(*v);
    }
    let text = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# idpath-summary/1"));
    assert_eq!(lines.next(), Some("t,dim,mean,var"));
    let mut n = 0;
    for l in lines {
        let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        let xs = &groups[&(f[0].to_bits(), f[1] as usize)];
        let k = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / k;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
        let tol = 1e-14 * (1.0 + mean.abs().max(var));
        assert!((f[2] - mean).abs() <= tol && (f[3] - var).abs() <= tol, "{l}");
        n += 1;
    }
    assert_eq!(n, 11 * 2);
}

#[test]
fn json_format_mirrors_csv() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = base(tmp.path());
    cfg["n_paths"] = json!(5);
    assert_eq!(invoke("simulate", &cfg, tmp.path(), &[]), 0);
    let csv = read_paths_csv(&tmp.path().join("out/paths.csv"));
    cfg["output"]["format"] = json!("json");
    cfg["output"]["dir"] = json!(tmp.path().join("json"));
    assert_eq!(invoke("simulate", &cfg, tmp.path(), &[]), 0);
    let doc = read_json(&tmp.path().join("json/paths.json"));
    assert_eq!(doc["schema"], "idpath-paths/1");
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), csv.len());
    for (r, c) in rows.iter().zip(&csv) {
        assert_eq!(r["path_id"].as_u64().unwrap() as usize, c.0);
        assert_eq!(r["value"].as_f64().unwrap(), c.3);
    }
    assert!(read_json(&tmp.path().join("json/summary.json"))["rows"].is_array());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = base(tmp.path());
    cfg["rep"] = json!({"type": "tempered_stable", "alpha": 0.7, "atoms": [{"xi": [1.0], "w": 1.0, "theta": 2.0}]});
    let out = tmp.path().join("out");
    for mode in ["simulate", "qband", "refine"] {
        assert_eq!(invoke(mode, &cfg, tmp.path(), &[]), 0);
        let first = dir_bytes(&out);
        assert_eq!(invoke(mode, &cfg, tmp.path(), &["--out", out.to_str().unwrap()]), 0);
        assert_eq!(first, dir_bytes(&out), "{mode}");
    }
    assert_eq!(invoke("simulate", &cfg, tmp.path(), &["--seed", "12"]), 0);
    let other = read_paths_csv(&out.join("paths.csv"));
    assert_eq!(invoke("simulate", &cfg, tmp.path(), &[]), 0);
    assert_ne!(other, read_paths_csv(&out.join("paths.csv")));
}

#[test]
fn diagnose_gamma_flags_lindeberg_failure() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = base(tmp.path());
    cfg["n_paths"] = json!(10);
    cfg["diagnostics"] = json!({"n_marks": 1000});
    assert_eq!(invoke("diagnose", &cfg, tmp.path(), &[]), 0);
    let report = read_json(&tmp.path().join("out/report.json"));
    assert_eq!(report["schema"], "idpath-diag/1");
    assert_eq!(report["assumption_3b"]["status"], "fail");
    assert_eq!(report["assumption_3a"]["status"], "pass");
    assert!(report["cf_distance"].is_null());
    let run = read_json(&tmp.path().join("out/run.json"));
    let warnings = run["warnings"].as_array().unwrap();
    assert!(
        warnings.iter().any(|w| w.as_str().unwrap().contains("skipped")),
        "{run}"
    );
}

#[test]
fn refine_on_gamma_warns() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = base(tmp.path());
    cfg["trunc"]["m"] = json!(2.0);
    cfg["refine"] = json!({"resolution": 256});
    assert_eq!(invoke("refine", &cfg, tmp.path(), &[]), 0);
    let run = read_json(&tmp.path().join("out/run.json"));
    assert_eq!(run["mode"], "refine");
    assert!(run["warnings"]
        .as_array()
        .unwrap()
        .iter()
        .any(|w| w == "GAUSSIAN_INVALID"));
}

#[test]
fn validate_writes_cf_comparison() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = base(tmp.path());
    cfg["n_paths"] = json!(2000);
    cfg["grid"] = json!({"J": 2, "T": 1.0});
    assert_eq!(invoke("validate", &cfg, tmp.path(), &[]), 0);
    let v = read_json(&tmp.path().join("out/validation.json"));
    assert_eq!(v["cf"]["rows"].as_array().unwrap().len(), 21);
    assert_eq!(v["pass"], true, "{v}");

    cfg["n_paths"] = json!(10);
    assert_eq!(invoke("validate", &cfg, tmp.path(), &[]), 2);
    assert_eq!(read_json(&tmp.path().join("out/error.json"))["code"], "TOO_FEW_PATHS");
}

#[test]
fn refused_runs_leave_error_artifacts() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");

    let mut cfg = base(tmp.path());
    cfg["kernel"] = json!({"type": "log_frac"});
    cfg["trunc"]["window"] = json!([-3.0, 1.0]);
    assert_eq!(invoke("simulate", &cfg, tmp.path(), &[]), 2);
    assert_eq!(read_json(&out.join("error.json"))["code"], "KERNEL_UNBOUNDED");

    let mut cfg = base(tmp.path());
    cfg["rep"] =
        json!({"type": "stable", "alpha": 1.5, "atoms": [{"xi": [1.0, 0.0], "w": 1.0}, {"xi": [-1.0, 0.0], "w": 1.0}]});
    assert_eq!(invoke("refine", &cfg, tmp.path(), &[]), 2);
    assert_eq!(read_json(&out.join("error.json"))["code"], "ASSUMPTION_3A");

    let mut cfg = base(tmp.path());
    cfg["n_paths"] = json!(0);
    cfg["grid"]["J"] = json!(0);
    assert_eq!(
        invoke("simulate", &cfg, tmp.path(), &["--out", out.to_str().unwrap()]),
        2
    );
    let err = read_json(&out.join("error.json"));
    assert_eq!(err["code"], "CONFIG_INVALID");
    assert_eq!(err["details"].as_array().unwrap().len(), 2, "{err}");

    // A later successful run clears the stale error.
    assert_eq!(invoke("simulate", &base(tmp.path()), tmp.path(), &[]), 0);
    assert!(!out.join("error.json").exists());
}

#[test]
fn emitted_config_reparses_to_the_effective_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = base(tmp.path());
    assert_eq!(
        invoke("qband", &cfg, tmp.path(), &["--seed", "99", "--quadrature-tol", "1e-9"]),
        0
    );
    let emitted = std::fs::read_to_string(tmp.path().join("out/config.json")).unwrap();
    let parsed = parse_str(&emitted).unwrap();
    assert!(parsed.warnings.is_empty());
    let c = parsed.config;
    assert_eq!(c.seed, 99);
    assert_eq!(c.quadrature_tol, Some(1e-9));
    assert_eq!(c.mode, idpath_cli::Mode::Qband);
    assert_eq!(c.output.format, Format::Csv);
    assert_eq!(c.emit(), emitted);
}
