use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn brownian() -> PathBuf {
    configs().join("brownian.json")
}

fn cramer_lundberg() -> PathBuf {
    configs().join("cramer_lundberg.json")
}

fn impulse(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impulse")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(2).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let header: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    data_rows(csv).into_iter().map(|r| r[k].clone()).collect()
}

fn edit_config(src: &Path, from: &str, to: &str, dst: &Path) {
    let text = fs::read_to_string(src).unwrap();
    assert!(text.contains(from));
    fs::write(dst, text.replace(from, to)).unwrap();
}

#[test]
fn bv_drift_retention_violation_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    edit_config(&cramer_lundberg(), "\"delta\": 0.15", "\"delta\": 3.0", &bad);
    let o = impulse(dir.path(), &["validate", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("drift_retention"), "{}", stderr(&o));

    let o = impulse(dir.path(), &["optimize", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("drift_retention"));
}

#[test]
fn usage_and_parse_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let mal = dir.path().join("mal.json");
    fs::write(&mal, "{\"model\": ").unwrap();
    let o = impulse(dir.path(), &["validate", "--config", mal.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("malformed"));

    assert_eq!(impulse(dir.path(), &["optimize", "--frobnicate"]).status.code(), Some(1));
    assert_eq!(impulse(dir.path(), &["theta-eval"]).status.code(), Some(1));
    assert_eq!(impulse(dir.path(), &["figures", "--panel", "nope"]).status.code(), Some(1));
    let b = brownian();
    let o = impulse(dir.path(), &["theta-eval", "--config", b.to_str().unwrap(), "--grid", "3:1:4"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(impulse(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn reference_configs_validate() {
    let dir = tempfile::tempdir().unwrap();
    for c in [brownian(), cramer_lundberg()] {
        let o = impulse(dir.path(), &["validate", "--quiet", "--config", c.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
}

#[test]
fn csv_carries_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let b = brownian();
    let o = impulse(dir.path(), &["theta-eval", "--quiet", "--config", b.to_str().unwrap(), "--grid", "-l:b:7", "--derivs", "0,2"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = String::from_utf8(o.stdout).unwrap();
    let head = csv.lines().next().unwrap().strip_prefix("# ").expect("header comment");
    let manifest: serde_json::Value = serde_json::from_str(head).unwrap();
    assert_eq!(manifest["command"], "theta-eval");
    assert_eq!(manifest["spec"]["model"]["type"], "brownian");
    assert_eq!(csv.lines().nth(1).unwrap(), "x,segment,theta,theta_second");
    assert_eq!(data_rows(&csv).len(), 7);
    // 17 significant digits
    assert!(column(&csv, "theta").iter().all(|v| v.split('e').next().unwrap().trim_start_matches('-').len() == 18));
}

#[test]
fn sweep_over_b_has_25_rows_and_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let b = brownian();
    let run = |out: &str| {
        let o = impulse(dir.path(), &["sweep", "--quiet", "--config", b.to_str().unwrap(), "--param", "b", "--range", "0:6:25", "--out", out]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read(dir.path().join(out)).unwrap()
    };
    let first = run("a.csv");
    assert_eq!(first, run("b.csv"));
    let csv = String::from_utf8(first).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 25);
    let bs: Vec<f64> = column(&csv, "value").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!((bs[0], bs[24]), (0.0, 6.0));
    let c2: Vec<f64> = column(&csv, "c2").iter().map(|v| v.parse().unwrap()).collect();
    assert!(c2.iter().all(|c| c.is_finite() && *c > 0.0));

    let sidecar: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(sidecar["outputs"][0], "a.csv");
    assert!(sidecar["duration_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let c = cramer_lundberg();
    let cases: [&[&str]; 4] = [
        &["value", "--c1", "1", "--c2", "4", "--grid", "-l:10:40", "--out", "v.csv"],
        &["optimize", "--oracle", "--oracle-step", "1e-2", "--out", "o.json"],
        &["simulate", "--x0", "2", "--policy", "1,4", "--paths", "2000", "--seed", "7", "--out", "s.csv"],
        &["hjb-check", "--grid", "-l:c2+l:50", "--out", "h.csv"],
    ];
    for args in cases {
        let mut full = vec!["--quiet", "--config", c.to_str().unwrap()];
        full.splice(0..0, [args[0]]);
        full.extend_from_slice(&args[1..]);
        let o = impulse(dir.path(), &full);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
        let out = args[args.len() - 1];
        let again = format!("again.{out}");
        for source in [out.to_string(), format!("{out}.manifest.json")] {
            let o = impulse(dir.path(), &["replay", "--quiet", "--manifest", &source, "--out", &again]);
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            assert_eq!(fs::read(dir.path().join(out)).unwrap(), fs::read(dir.path().join(&again)).unwrap(), "{source}");
        }
    }
}

#[test]
fn simulate_is_deterministic_across_execution_modes() {
    let dir = tempfile::tempdir().unwrap();
    let c = cramer_lundberg();
    let run = |extra: &[&str]| {
        let mut args = vec!["simulate", "--quiet", "--config", c.to_str().unwrap(), "--x0", "1", "--paths", "5000", "--estimator", "killing", "--out", "csv"];
        args.extend_from_slice(extra);
        impulse(dir.path(), &args).stdout
    };
    let parallel = String::from_utf8(run(&[])).unwrap();
    let sequential = String::from_utf8(run(&["--sequential"])).unwrap();
    // the manifests differ in the flag; the data must not
    assert_eq!(parallel.lines().skip(1).collect::<Vec<_>>(), sequential.lines().skip(1).collect::<Vec<_>>());
}

#[test]
fn compare_value_z_scores_within_3() {
    let dir = tempfile::tempdir().unwrap();
    let c = cramer_lundberg();
    let o = impulse(dir.path(), &["compare", "--quiet", "--config", c.to_str().unwrap(), "--what", "value", "--paths", "100000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = String::from_utf8(o.stdout).unwrap();
    let z: Vec<f64> = column(&csv, "z_score").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(z.len(), 6);
    assert!(z.iter().all(|z| z.abs() < 3.0), "{z:?}");
}

#[test]
fn compare_exit_z_scores_within_3() {
    let dir = tempfile::tempdir().unwrap();
    let c = cramer_lundberg();
    let o = impulse(dir.path(), &["compare", "--quiet", "--config", c.to_str().unwrap(), "--what", "exit", "--paths", "50000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = String::from_utf8(o.stdout).unwrap();
    for (a, z) in column(&csv, "analytic").iter().zip(column(&csv, "z_score")) {
        let (a, z): (f64, f64) = (a.parse().unwrap(), z.parse().unwrap());
        assert!(a > 0.0 && a < 1.0);
        assert!(z.abs() < 3.0, "{z}");
    }
}

#[test]
fn figures_bundle_for_cramer_lundberg() {
    let dir = tempfile::tempdir().unwrap();
    let c = cramer_lundberg();
    let o = impulse(dir.path(), &["figures", "--quiet", "--config", c.to_str().unwrap(), "--out-dir", "figs"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let figs = dir.path().join("figs");
    for name in impulse_cli::figures::PANELS {
        assert!(figs.join(format!("{name}.csv")).exists(), "{name}");
        assert!(figs.join(format!("{name}.csv.manifest.json")).exists(), "{name}");
    }

    // derivative jumps reported at 0 and b for every curve
    let markers = fs::read_to_string(figs.join("theta_prime_markers.csv")).unwrap();
    let xs = column(&markers, "x");
    let jumps = column(&markers, "jump");
    assert_eq!(xs.len(), 24);
    for (x, j) in xs.iter().zip(&jumps) {
        let x: f64 = x.parse().unwrap();
        assert!(x == 0.0 || x >= 2.0, "{x}");
        assert!(j.parse::<f64>().unwrap().abs() > 1e-4, "no jump at {x}");
    }

    // theta increases with m pointwise
    let theta = fs::read_to_string(figs.join("theta_m.csv")).unwrap();
    let rows = data_rows(&theta);
    let per = rows.len() / 3;
    for k in 0..per {
        let t: Vec<f64> = (0..3).map(|c| rows[c * per + k][3].parse().unwrap()).collect();
        assert_eq!(rows[k][2], rows[per + k][2]);
        assert!(t[0] <= t[1] && t[1] <= t[2], "{k}: {t:?}");
    }
}

#[test]
fn single_panel_replays() {
    let dir = tempfile::tempdir().unwrap();
    let b = brownian();
    let o = impulse(dir.path(), &["figures", "--quiet", "--config", b.to_str().unwrap(), "--out-dir", ".", "--panel", "breakpoints"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = impulse(dir.path(), &["replay", "--quiet", "--manifest", "breakpoints.csv", "--out", "again.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read(dir.path().join("breakpoints.csv")).unwrap(), fs::read(dir.path().join("again.csv")).unwrap());
}
