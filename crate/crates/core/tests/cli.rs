use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fraceig::cli::read_grid_function;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fraceig"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn first_line(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn version_prints_crate_version() {
    let out = bin().arg("version").output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), format!("fraceig {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn validate_accepts_every_shipped_config() {
    for entry in std::fs::read_dir(config("")).unwrap() {
        let path = entry.unwrap().path();
        let out = bin().arg("validate").arg(&path).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn malformed_config_exits_2_with_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.json",
        "{\n  \"experiment\": \"eigen\",\n  \"kernel\": {\"dim_n\": 1, \"order_s\": 0.5 \"exponent_p\": 2}\n}\n",
    );
    let out = run(&cfg, &tmp.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json:3:"), "{err}");
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn unknown_experiment_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("eigen.json")).unwrap().replace("\"eigen\"", "\"eigenn\"");
    let cfg = write(tmp.path(), "c.json", &text);
    let out = bin().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("c.json:2:"));
}

#[test]
fn eigen_reference_run_matches_baseline() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&config("eigen.json"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(tmp.path());
    let lambda = s["results"]["lambda"].as_f64().unwrap();
    // Baseline from the first verified run; the dense oracle gives the same value.
    assert!((lambda - 3.361663101904803).abs() < 1e-9, "{lambda}");
    assert_eq!(s["experiment"], "eigen");
    assert_eq!(s["provenance"]["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(s["provenance"]["version"], env!("CARGO_PKG_VERSION"));
    let u = read_grid_function(&tmp.path().join("eigenfunction.csv")).unwrap();
    assert_eq!(u.len(), 64);
    assert!(u.values().iter().all(|&v| v >= 0.0));
    assert!(std::fs::read_to_string(tmp.path().join("plot.txt")).unwrap().contains("[plot]"));
}

#[test]
fn spectrum_with_p3_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("spectrum.json"))
        .unwrap()
        .replace("\"exponent_p\": 2", "\"exponent_p\": 3");
    let cfg = write(tmp.path(), "s.json", &text);
    let out = run(&cfg, &tmp.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spectrum requires p=2"));
}

#[test]
fn budget_override_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .env("FRACEIG_BUDGET", "32")
        .arg("run")
        .arg(config("eigen.json"))
        .arg("--out")
        .arg(tmp.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn iteration_cap_exits_3_and_keeps_results() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("eigen.json"))
        .unwrap()
        .replace("\"seed\": 0", "\"seed\": 0,\n  \"solver\": {\"max_iterations\": 3}");
    let cfg = write(tmp.path(), "e.json", &text);
    let out = run(&cfg, &tmp.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(summary(&tmp.path().join("o"))["unconverged"][0], "eigen");
}

#[test]
fn table_headers_are_fixed() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("scaling");
    assert!(run(&config("scaling_study.json"), &a, &[]).status.success());
    assert_eq!(first_line(&a.join("scaling_study.csv")), "R,mu1,mu1_times_R_sp,points_per_radius,runtime_s");
    let rows: Vec<String> = std::fs::read_to_string(a.join("scaling_study.csv")).unwrap().lines().map(String::from).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].ends_with(",32,"), "runtime column stays empty: {}", rows[1]);

    let b = tmp.path().join("decay");
    assert!(run(&config("decay_regimes.json"), &b, &[]).status.success());
    assert_eq!(first_line(&b.join("decay_regimes.csv")), "r,op_value,abs_value,local_slope");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run(&config("picone.json"), &a, &["--workers", "1"]).status.success());
    assert!(run(&config("picone.json"), &b, &["--workers", "3"]).status.success());
    for name in ["picone.csv", "picone_proportional.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn unwritable_output_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = write(tmp.path(), "file", "x");
    let out = run(&config("seminorm.json"), &blocker.join("sub"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot write results"));
}
