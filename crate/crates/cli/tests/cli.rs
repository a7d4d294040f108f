use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use densflow_cli::store::Manifest;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn densflow(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_densflow"));
    cmd.args(args);
    match out {
        Some(dir) => cmd.env("DENSFLOW_OUT", dir),
        None => cmd.env_remove("DENSFLOW_OUT"),
    };
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn cfg(name: &str) -> String {
    configs().join(name).display().to_string()
}

#[test]
fn validate_flat_model() {
    let o = densflow(&["validate", &cfg("flat_b1.cfg")], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("rho = inf"));
}

#[test]
fn validate_sphere_model_reports_rho() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.cfg");
    fs::write(&path, "model.kind = sphere_log\nmodel.b = 3\n").unwrap();
    let o = densflow(&["validate", path.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o).lines().find(|l| l.starts_with("rho = ")).unwrap().to_string();
    let rho: f64 = line.trim_start_matches("rho = ").parse().unwrap();
    assert!((rho - 3f64.sqrt().atan()).abs() < 1e-10);
}

#[test]
fn cylinder_run_writes_consistent_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cyl");
    let o = densflow(&["run", &cfg("cylinder.cfg")], Some(&out));
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));

    let m = Manifest::read(&out).unwrap();
    let t_est = m.get_num("run.t_est").unwrap();
    assert!((t_est - 0.5).abs() < 1e-3, "{t_est}");
    assert_eq!(m.get("run.termination"), Some("axis_reached"));
    assert!(m.mismatched_files(&out).is_empty());
    assert!(m.verdicts().all(|(_, s)| s == "pass"));

    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(series.starts_with(
        "t,r_min,kappa_psi_min,u_max,zero_count,q_max,q_max_times_gap,k2_over_kpsi_max,abs_k_over_k2_max\n"
    ));
    let snap = fs::read_to_string(out.join("snapshots/snap_00000.csv")).unwrap();
    assert!(snap.starts_with("z,r\n"));
    assert_eq!(snap.lines().count(), 257);

    let report = densflow(&["report", out.to_str().unwrap()], None);
    assert_eq!(report.status.code(), Some(0));
    assert!(stdout(&report).contains("overall: pass"));

    // Tampering is caught by the digest table.
    fs::write(out.join("steps.csv"), "t\n").unwrap();
    let report = densflow(&["report", out.to_str().unwrap()], None);
    assert_eq!(report.status.code(), Some(1));
    assert!(stdout(&report).contains("digest mismatch: steps.csv"));
}

#[test]
fn runs_are_deterministic_and_not_overwritten() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let config = cfg("sphere_interval.cfg");
    assert_eq!(densflow(&["run", &config], Some(&a)).status.code(), Some(0));
    assert_eq!(densflow(&["run", &config], Some(&b)).status.code(), Some(0));
    for file in ["series.csv", "steps.csv", "snapshots/index.csv", "snapshots/snap_00003.csv"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    let (ma, mb) = (Manifest::read(&a).unwrap(), Manifest::read(&b).unwrap());
    assert_eq!(ma.get("run.t_est"), mb.get("run.t_est"));

    let again = densflow(&["run", &config], Some(&a));
    assert_eq!(again.status.code(), Some(2));
    assert!(stderr(&again).contains("--force"));
    assert_eq!(densflow(&["run", &config, "--force"], Some(&a)).status.code(), Some(0));
}

#[test]
fn initial_data_outside_band_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = densflow(&["run", &cfg("sphere_outside_band.cfg")], Some(&tmp.path().join("x")));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("admissible band"), "{}", stderr(&o));
}

#[test]
fn malformed_config_reports_line_and_key() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.cfg");
    fs::write(&path, "model.kind = flat_log\nmodel.b = 1\nsolver.tolerance = 3\n").unwrap();
    let o = densflow(&["validate", path.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3, key `solver.tolerance`: unknown key"), "{}", stderr(&o));
}

#[test]
fn missing_run_directory_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    let o = densflow(&["blowup", &cfg("perturbed.cfg"), missing.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let o = densflow(&["report", missing.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let o = densflow(&["frobnicate"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cylinder_post_processing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cyl");
    assert_eq!(densflow(&["run", &cfg("cylinder.cfg")], Some(&out)).status.code(), Some(0));
    let run_dir = out.to_str().unwrap();

    let o = densflow(&["blowup", &cfg("perturbed.cfg"), run_dir], None);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("degenerate_minimum = true"));
    let m = Manifest::read(&out.join("blowup")).unwrap();
    assert!(m.mismatched_files(&out.join("blowup")).is_empty());
    let stage2 = fs::read_to_string(out.join("blowup/stage2_02.csv")).unwrap();
    let mut lines = stage2.lines();
    assert_eq!(lines.next(), Some("z_tilde,r_tilde,residual"));
    for line in lines {
        let r: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((r - 1.0).abs() < 1e-3, "{line}");
    }

    let o = densflow(&["monotonicity", &cfg("perturbed.cfg"), run_dir], None);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let table = fs::read_to_string(out.join("monotonicity/monotonicity.csv")).unwrap();
    assert!(table.starts_with("t,value,dissipation,dvalue_dt\n"));

    let o = densflow(&["report", run_dir], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("[blowup]") && stdout(&o).contains("[monotonicity]"));
}

#[test]
fn blowup_needs_flat_ambient() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    assert_eq!(densflow(&["run", &cfg("sphere_interval.cfg")], Some(&out)).status.code(), Some(0));
    let o = densflow(&["blowup", &cfg("perturbed.cfg"), out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("flat"));
}
