use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_privsplit"));
    c.env("RUST_LOG", "error");
    c
}

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn desk() -> PathBuf {
    data("scenarios/desk.toml")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Desk scenario text with absolute catalog paths, edited by `f`.
fn scenario_variant(dir: &Path, f: impl Fn(String) -> String) -> PathBuf {
    let catalog = data("catalog");
    let text = fs::read_to_string(desk())
        .unwrap()
        .replace("../catalog", catalog.to_str().unwrap());
    let p = dir.join("variant.toml");
    fs::write(&p, f(text)).unwrap();
    p
}

#[test]
fn validate_shipped_scenarios() {
    for s in ["desk", "full"] {
        let o = bin().args(["validate", "--scenario"]).arg(data(&format!("scenarios/{s}.toml"))).output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).starts_with("ok:"));
        assert!(!stdout(&o).contains("warning"));
    }
}

#[test]
fn zero_storage_is_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let p = scenario_variant(dir.path(), |t| t.replace(r#"storage = ["2 GB", "5 GB"]"#, r#"storage = "0 GB""#));
    let o = bin().args(["validate", "--scenario"]).arg(&p).output().unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("fallback"), "{}", stdout(&o));
}

#[test]
fn bad_possibility_names_model_and_layer() {
    let dir = tempfile::tempdir().unwrap();
    let lenet = fs::read_to_string(data("catalog/lenet.toml"))
        .unwrap()
        .replacen("possibility = 0.5167", "possibility = 1.5", 1);
    fs::write(dir.path().join("lenet.toml"), lenet).unwrap();
    let p = scenario_variant(dir.path(), |t| {
        let catalog = data("catalog");
        t.replace(
            &format!("{}/lenet.toml", catalog.to_str().unwrap()),
            &dir.path().join("lenet.toml").to_string_lossy(),
        )
    });
    let o = bin().args(["validate", "--scenario"]).arg(&p).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    let e = stderr(&o);
    assert!(e.contains("LeNet12") && e.contains("Conv4") && e.contains("1.5"), "{e}");
}

#[test]
fn missing_unit_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = scenario_variant(dir.path(), |t| t.replace(r#"tx_power = "23 dBm""#, r#"tx_power = "23""#));
    let o = bin().args(["validate", "--scenario"]).arg(&p).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("tx_power"), "{}", stderr(&o));
}

#[test]
fn missing_file_is_an_io_error() {
    let o = bin().args(["validate", "--scenario", "/nonexistent/x.toml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn full_local_reports_zero_loss() {
    let out = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["run", "--policy", "fl", "--slots", "5", "--scenario"])
        .arg(desk())
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("privacy loss 0.00%"), "{}", stdout(&o));
    let names: Vec<String> = fs::read_dir(out.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.len(), 4);
    assert!(names.iter().all(|n| n.contains("_fl_s0_")));
}

#[test]
fn same_seed_gives_identical_bundles() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = bin()
            .args(["run", "--seed", "42", "--slots", "8", "--scenario"])
            .arg(desk())
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut files: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert_eq!(files.len(), 4);
    for f in files {
        assert_eq!(fs::read(a.path().join(&f)).unwrap(), fs::read(b.path().join(&f)).unwrap(), "{f:?}");
    }
}

#[test]
fn overrides_change_the_scenario_hash() {
    let out = tempfile::tempdir().unwrap();
    let stem = |extra: &[&str]| {
        let o = bin()
            .args(["run", "--policy", "fl", "--slots", "1", "--scenario"])
            .arg(desk())
            .arg("--out")
            .arg(out.path())
            .args(extra)
            .output()
            .unwrap();
        assert!(o.status.success());
    };
    stem(&[]);
    stem(&["--alpha", "10", "--g-period", "5", "--per-md-queues", "--cold-start"]);
    let summaries = fs::read_dir(out.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with("summary.json"))
        .count();
    assert_eq!(summaries, 2);
}

#[test]
fn bad_flags_are_usage_errors() {
    for args in [
        vec!["run", "--alpha", "0"],
        vec!["run", "--g-period", "0"],
        vec!["run", "--slots", "0"],
        vec!["run", "--policy", "lydqn"],
        vec!["sweep", "--sweep-axis", "colour", "--sweep-values", "1"],
    ] {
        let o = bin().args(&args).arg("--scenario").arg(desk()).output().unwrap();
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn sweep_row_count() {
    let out = tempfile::tempdir().unwrap();
    let o = bin()
        .args([
            "sweep", "--sweep-axis", "servers", "--sweep-values", "4,8,12", "--policy", "proposed,fl",
            "--seeds", "2", "--slots", "2", "--scenario",
        ])
        .arg(desk())
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let mut tables: Vec<_> = fs::read_dir(out.path()).unwrap().map(|e| e.unwrap().path()).collect();
    tables.sort();
    assert_eq!(tables.len(), 2);
    let rows = |p: &Path| csv::Reader::from_path(p).unwrap().records().count();
    assert_eq!(rows(&tables[0]), 6 * 2);
    assert_eq!(rows(&tables[1]), 6);
}

#[test]
fn bad_sweep_value_is_a_validation_error() {
    let o = bin()
        .args(["sweep", "--sweep-axis", "storage", "--sweep-values", "3", "--scenario"])
        .arg(desk())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn desk_horizon_within_a_minute() {
    let out = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let o = bin()
        .args(["run", "--policy", "proposed", "--slots", "100", "--scenario"])
        .arg(desk())
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    let secs = start.elapsed().as_secs_f64();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(secs < 60.0, "took {secs:.1} s");
}
