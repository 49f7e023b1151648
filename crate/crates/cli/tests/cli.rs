use std::path::Path;
use std::process::{Command, Output};

fn rlab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rlab")).args(args).env("RLAB_OUT", out).output().expect("rlab runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn certify_run_lands_under_rlab_out_and_report_rebuilds_it() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sweep.json",
        r#"{"seed": 11, "experiment": "certify_sweep", "trials": 12,
            "sigma": {"family": "radius_squared"}, "resolution": {"n1": 12, "n2": 12},
            "output_dir": "runs/sweep"}"#,
    );
    let out = rlab(tmp.path(), &["certify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run_dir = tmp.path().join("runs/sweep");
    for f in ["config.json", "certificates.json", "run.json", "summary.json", "slack_histogram.csv", "trajectory.csv"] {
        assert!(run_dir.join(f).is_file(), "missing {f}");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("certificates 36"), "{stdout}");

    let before = std::fs::read(run_dir.join("summary.json")).unwrap();
    std::fs::remove_file(run_dir.join("summary.json")).unwrap();
    let out = rlab(tmp.path(), &["report", run_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(run_dir.join("summary.json")).unwrap(), before);
}

#[test]
fn zero_trials_report_gives_header_only_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "empty.json",
        r#"{"seed": 1, "experiment": "corollary1_sweep", "output_dir": "empty"}"#,
    );
    assert_eq!(rlab(tmp.path(), &["certify", "--config", &cfg]).status.code(), Some(0));
    let dir = tmp.path().join("empty");
    assert!(dir.join("config.json").is_file());
    assert!(!dir.join("certificates.json").exists());
    let out = rlab(tmp.path(), &["report", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(dir.join("slack_histogram.csv")).unwrap(), "bin_lower,bin_upper,count\n");
}

#[test]
fn bad_config_exits_with_one_and_names_every_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{"seed": 1, "experiment": "certify_sweep", "trials": 3, "output_dir": "x",
            "resolution": {"n1": 0, "n2": 4}, "tolerances": {"status_rel": -1.0, "oracle_rel": 1e-9}}"#,
    );
    let out = rlab(tmp.path(), &["certify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("n1") && err.contains("status_rel"), "{err}");

    let unknown = write_config(tmp.path(), "unknown.json", r#"{"seed": 1, "experiment": "certify_sweep", "output_dir": "x", "bogus": 3}"#);
    let out = rlab(tmp.path(), &["certify", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn subcommand_must_match_experiment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"seed": 1, "experiment": "euler_disc_certify", "output_dir": "x"}"#);
    let out = rlab(tmp.path(), &["vp", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("euler_disc_certify"));
}
