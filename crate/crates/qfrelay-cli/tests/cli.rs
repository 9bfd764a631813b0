//! End-to-end tests of the binary: exit codes, output layout, and the
//! determinism contract.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qfrelay"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qfrelay-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_small_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(
        &path,
        r#"
[channel]
p1_db = 0.0
p2_db = 0.0
pr_db = 9.3
nr_db = 0.0
n1_db = 0.0
n2_db = 0.0
downlink_capacity_bits = 1.5

[grid]
bins = 16

[solver]
levels = 4
lambda_points = 10
lambda_max = 10.0
max_iters = 800
restarts = 5
seed = 11

[mc]
samples = 30000

[oracle]
levels = 2
c_budget = 1.0
"#,
    )
    .unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn missing_config_file_is_a_usage_error() {
    let dir = tmp_dir("missing");
    let out = run(&[
        "--config",
        dir.join("nope.toml").to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "icurve",
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tmp_dir("malformed");
    let path = dir.join("bad.toml");
    fs::write(&path, "[channel]\np1_db = \"loud\"\n").unwrap();
    let out = run(&[
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "icurve",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn conflicting_units_are_rejected() {
    let dir = tmp_dir("conflict");
    let path = dir.join("conflict.toml");
    fs::write(&path, "[channel]\np1 = 1.0\np1_db = 0.0\n").unwrap();
    let out = run(&[
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "icurve",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not both"));
}

#[test]
fn oversized_oracle_trips_the_numeric_guard() {
    let dir = tmp_dir("guard");
    let path = dir.join("big.toml");
    fs::write(&path, "[grid]\nbins = 24\n\n[oracle]\nlevels = 4\n").unwrap();
    let out = run(&[
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "oracle",
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn icurve_reruns_are_byte_identical() {
    let dir = tmp_dir("determinism");
    let config = write_small_config(&dir);
    for sub in ["a", "b"] {
        let out = run(&[
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.join(sub).to_str().unwrap(),
            "icurve",
        ]);
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let csv_a = fs::read(dir.join("a/icurve.csv")).unwrap();
    let csv_b = fs::read(dir.join("b/icurve.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "CSV payloads differ between identical runs");
    let json_a = fs::read(dir.join("a/icurve.json")).unwrap();
    let json_b = fs::read(dir.join("b/icurve.json")).unwrap();
    assert_eq!(json_a, json_b);

    // The CSV starts with the manifest hash comment and the header row.
    let text = String::from_utf8(csv_a).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# manifest fnv1a64:"));
    assert_eq!(
        lines.next().unwrap(),
        "lambda,C_bits,I_bits,converged,iters"
    );
}

#[test]
fn seed_flag_changes_the_manifest_hash() {
    let dir = tmp_dir("seeds");
    let config = write_small_config(&dir);
    let hash_of = |out_dir: &Path| {
        let manifest: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(out_dir.join("icurve_manifest.json")).unwrap(),
        )
        .unwrap();
        manifest["manifest_hash"].as_str().unwrap().to_string()
    };
    for (sub, seed) in [("s1", "11"), ("s2", "12")] {
        let out = run(&[
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.join(sub).to_str().unwrap(),
            "--seed",
            seed,
            "icurve",
        ]);
        assert!(out.status.success());
    }
    assert_ne!(hash_of(&dir.join("s1")), hash_of(&dir.join("s2")));
}

#[test]
fn design_then_validate_round_trip() {
    let dir = tmp_dir("roundtrip");
    let config = write_small_config(&dir);
    let out_dir = dir.join("run");

    let out = run(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "design",
        "--alpha",
        "0.3333333333333333",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    // quantizer.csv has the documented header and one row per bin.
    let csv = fs::read_to_string(out_dir.join("quantizer.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert!(rows[0].starts_with("# manifest"));
    assert_eq!(rows[2], "bin,yr_center,p_yr,level");
    assert_eq!(rows.len(), 3 + 16);

    let out = run(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "validate",
        "--design",
        out_dir.join("design.json").to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("validate.json")).unwrap()).unwrap();
    for name in ["i1", "i2", "c_value", "h_yhat"] {
        let sigmas = report["estimates"][name]["sigmas"].as_f64().unwrap();
        assert!(sigmas <= 5.0, "{name} off by {sigmas} sigma");
    }
}

#[test]
fn validate_rejects_soft_designs() {
    let dir = tmp_dir("soft");
    let config = write_small_config(&dir);
    let out_dir = dir.join("run");

    // A mid-curve operating point is genuinely soft.
    let out = run(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "design",
        "--alpha",
        "0.6",
    ]);
    assert!(out.status.success());
    let design: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("design.json")).unwrap()).unwrap();
    assert!(
        design["design"]["extraction"].get("NotScalar").is_some(),
        "expected a soft design"
    );

    let out = run(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "validate",
        "--design",
        out_dir.join("design.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no scalar quantizer"));
}

#[test]
fn gaussian_sweep_orderings_hold() {
    let dir = tmp_dir("sweep");
    let config = write_small_config(&dir);
    let out_dir = dir.join("run");
    let out = run(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "gaussian-sweep",
    ]);
    assert!(out.status.success());
    let csv = fs::read_to_string(out_dir.join("gaussian_sweep.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().skip(2) {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let (rsum_cf, rsum_nosw, ub) = (cols[2], cols[4], cols[5]);
        assert!(rsum_nosw >= 0.0 && rsum_nosw <= rsum_cf + 1e-12 && rsum_cf <= ub + 1e-9);
        rows += 1;
    }
    assert_eq!(rows, 26);
}

#[test]
fn envelopes_grow_with_level_count() {
    let dir = tmp_dir("levels");
    let config = write_small_config(&dir);
    let mut saturation = Vec::new();
    for levels in ["2", "4"] {
        let out_dir = dir.join(format!("l{levels}"));
        let out = run(&[
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--levels",
            levels,
            "icurve",
        ]);
        assert!(out.status.success());
        let doc: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out_dir.join("icurve.json")).unwrap())
                .unwrap();
        let points = doc["curve"]["points"].as_array().unwrap();
        let max_i = points
            .iter()
            .map(|p| p["i_value"].as_f64().unwrap())
            .fold(0.0f64, f64::max);
        saturation.push(max_i);
    }
    assert!(
        saturation[1] >= saturation[0] - 1e-9,
        "more levels must not lose rate: {saturation:?}"
    );
}
