//! Black-box tests of the installed binary: exit codes, output files, and
//! the stability guarantees the CSV/SVG consumers rely on.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_epsgeo");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn write_config(dir: &Path, out_dir: &Path) -> std::path::PathBuf {
    let text = format!(
        r#"
[domain]
lo = [0.0, 0.0]
hi = [1.0, 1.0]

[kernel]
family = "power_norm"
p = 1.0

[experiment]
a = [0.1, 0.1]
b = [0.9, 0.9]
delta = 0.3
n_list = [60, 120]
seeds = [1, 2]
cost_kinds = ["H", "L"]

[oracle]
mode = "fixed"
value = 1.1313708498984762

[output]
dir = "{}"
"#,
        out_dir.display()
    );
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn sample_writes_csv_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), dir.path());
    let out = run(&["sample", "--config", cfg.to_str().unwrap(), "--n", "50"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1,x2"));
    assert_eq!(lines.count(), 50);
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "[domain]\nlo = [0.0]\nhi = [1.0]\nfrobnicate = 3\n",
    )
    .unwrap();
    let out = run(&["sample", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn delta_violation_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), dir.path());
    let text = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("delta = 0.3", "delta = 0.6");
    std::fs::write(&cfg, text).unwrap();
    let out = run(&["dist", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("delta"), "stderr: {}", err);
}

#[test]
fn missing_file_fails_without_panicking() {
    let out = run(&["dist", "--config", "/nonexistent/run.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn dist_emits_json_with_positive_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), dir.path());
    let out = run(&["dist", "--config", cfg.to_str().unwrap(), "--kind", "H"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["cost_kind"], "H");
    assert_eq!(v["n"], 60);
    assert!(v["value"].as_f64().unwrap() > 1.0);
    assert!(v["hops"].as_u64().unwrap() >= 2);
}

#[test]
fn geodesic_reports_the_fixed_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), dir.path());
    let out = run(&["geodesic", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["value"].as_f64().unwrap(), 1.1313708498984762);
}

#[test]
fn sweep_writes_csv_summary_and_figure() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let cfg = write_config(dir.path(), &out_dir);
    let out = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "n,seed,cost_kind,epsilon,status,min_cost,oracle_value,rel_gap,hausdorff,\
         hausdorff_interp,uniform_cs,boxes_visited,max_pts_box,theta_hops,Rn_est,\
         wall_ms,peak_mem_kb"
            .replace(' ', "")
    );
    // 2 n values x 2 seeds x 2 kinds
    assert_eq!(csv.lines().count(), 1 + 8);

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["n_rows"], 8);

    let svg = std::fs::read_to_string(out_dir.join("figure.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("<polyline"));
}

#[test]
fn fit_rate_needs_three_distinct_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let cfg = write_config(dir.path(), &out_dir);
    assert!(run(&["sweep", "--config", cfg.to_str().unwrap()]).status.success());

    let csv_path = out_dir.join("sweep.csv");
    let out = run(&["fit-rate", "--csv", csv_path.to_str().unwrap(), "--kind", "H"]);
    assert_eq!(out.status.code(), Some(3), "two sizes cannot pin a slope");
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn render_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), dir.path());
    let (svg1, svg2) = (dir.path().join("one.svg"), dir.path().join("two.svg"));
    for out_path in [&svg1, &svg2] {
        let out = run(&[
            "render",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
            "--path",
        ]);
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let (b1, b2) = (std::fs::read(&svg1).unwrap(), std::fs::read(&svg2).unwrap());
    assert!(!b1.is_empty());
    assert_eq!(b1, b2);
}

#[test]
fn check_kernel_reports_all_audits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), dir.path());
    let out = run(&[
        "check-kernel",
        "--config",
        cfg.to_str().unwrap(),
        "--condition",
        "all",
        "--samples",
        "500",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let reports = v.as_array().expect("array of per-condition reports");
    assert_eq!(reports.len(), 7);
    for report in reports {
        assert_eq!(report["verdict"], "pass", "report: {}", report);
    }
}
