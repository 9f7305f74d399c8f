use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ghomog(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ghomog"))
        .args(args)
        .env("GHOMOG_OUT", out)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn list_names_every_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ghomog(&["list"], tmp.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for kind in ["field-check", "percolation-tail", "unicoherence", "detour", "rearrange", "shape", "fluctuation", "homog-error", "continuity", "skeleton-gap"] {
        assert!(text.contains(kind), "{kind}");
    }
}

#[test]
fn validate_reports_errors_with_exit_code_one() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = write(tmp.path(), "empty.toml", "");
    let o = ghomog(&["validate", &empty], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kind"));

    let cfl = write(tmp.path(), "cfl.toml", "kind = \"shape\"\n[field]\namplitude = 0.8\n[grid]\nh = 0.25\ndt = 1.0\n");
    let o = ghomog(&["validate", &cfl], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.dt"));

    let good = write(tmp.path(), "good.toml", "kind = \"detour\"\n");
    let o = ghomog(&["validate", &good], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let echo = String::from_utf8(o.stdout).unwrap();
    assert!(echo.starts_with("ok\n"));
    assert!(echo.contains("radius_2d = 14"));
    let again = write(tmp.path(), "again.toml", echo.trim_start_matches("ok\n"));
    let o = ghomog(&["validate", &again], tmp.path());
    assert_eq!(String::from_utf8(o.stdout).unwrap(), echo);
}

#[test]
fn run_writes_identical_csv_for_any_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "r.toml", "kind = \"rearrange\"\nseed = 11\ntrials = 60\n");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let oa = ghomog(&["run", &cfg, "--workers", "1", "--out", a.to_str().unwrap()], tmp.path());
    let ob = ghomog(&["run", &cfg, "--workers", "3", "--out", b.to_str().unwrap()], tmp.path());
    assert!(oa.status.success() && ob.status.success());
    let csv = |d: &Path| {
        let f = fs::read_dir(d).unwrap().map(|e| e.unwrap().path()).find(|p| p.extension().is_some_and(|e| e == "csv")).unwrap();
        fs::read(f).unwrap()
    };
    assert_eq!(csv(&a), csv(&b));
    let jsons = fs::read_dir(&a).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|e| e == "json")).count();
    assert_eq!(jsons, 1);
}

#[test]
fn run_uses_the_output_env_var() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "f.toml", "kind = \"field-check\"\ntrials = 2\n");
    let out = tmp.path().join("env-out");
    let o = ghomog(&["run", &cfg], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_dir(&out).unwrap().count(), 2);
}

#[test]
fn budget_overrun_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "u.toml", "kind = \"unicoherence\"\ntrials = 1000000\nbudget_secs = 0.05\n");
    let o = ghomog(&["run", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("partial"));
}
