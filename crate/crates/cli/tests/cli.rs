use std::process::{Command, Output};

fn lmcma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmcma")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_cell_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = lmcma(&["run", "--function", "sphere", "--dim", "6", "--runs", "3", "--seed", "4", "--no-timing", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(summary["successes"], 3);
    assert_eq!(summary["censored"], false);
    let cell = dir.path().join("cell00_lmcma_sphere_n6");
    for f in ["run000.csv", "run002.json", "summary.json"] {
        assert!(cell.join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(cell.join("run000.csv")).unwrap();
    assert!(csv.starts_with("evals,best_f,sigma,ms\n"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cell.cfg");
    std::fs::write(&cfg, "# sweep\nfunction = elli\ndim = 40\nruns = 2\nbudget = 200\n").unwrap();
    let o = lmcma(&["run", "--config", cfg.to_str().unwrap(), "--dim", "5", "--function", "cigar"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(summary["label"], "lmcma_cigar_n5");
    assert_eq!(summary["runs"], 2);
    assert_eq!(summary["cell"]["budget"], 200);
}

#[test]
fn bad_specs_exit_with_two() {
    for args in [
        &["run", "--function", "rastrigin"][..],
        &["run", "--dim", "0"],
        &["run", "--algo", "cholcma", "--m", "5"],
        &["run", "--budget", "3"],
        &["run", "--config", "/nonexistent/cell.cfg"],
        &["run", "--bogus-flag"],
        &["memory", "--algo", "cholcma", "--dim", "100000"],
    ] {
        let o = lmcma(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn memory_reports_slots() {
    let o = lmcma(&["memory", "--dim", "10000", "--m", "5", "--lambda", "10"]);
    assert_eq!(o.status.code(), Some(0));
    // (2·5 + 10 + 6)·10⁴ + 5·5
    assert!(stdout(&o).contains(" 260025 doubles"), "{}", stdout(&o));
}

#[test]
fn unreachable_server_is_not_a_spec_error() {
    let o = lmcma(&["run", "--server", "http://127.0.0.1:1", "--dim", "4"]);
    assert_eq!(o.status.code(), Some(1));
}
