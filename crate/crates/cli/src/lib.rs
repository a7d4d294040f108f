//! Command-line driver: validates models, runs the flow, and post-processes
//! run directories (blow-up, Gaussian functional, verdict report).

pub mod config;
pub mod store;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use densflow::blowup::{self, sup_within, BlowupCenter, Window};
use densflow::curve_geometry::{differentiate_window, node_geometry};
use densflow::flow_solver::{self, FlowTrajectory};
use densflow::monitors::{self, MonitorReport, SERIES_HEADER};
use densflow::monotonicity::{self, MONOTONICITY_HEADER};
use densflow::surface_density::validate_default;
use densflow::SurfaceDensityModel;

use config::RunConfig;
use store::{num, Manifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "densflow", version, about = "Curve shortening flow with an axis-singular density")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the model of a config and print its admissible radius.
    Validate { config: PathBuf },
    /// Integrate the flow and write a run directory.
    Run {
        config: PathBuf,
        /// Replace an existing output directory.
        #[arg(long)]
        force: bool,
    },
    /// Two-stage blow-up of a finished run (flat ambient only).
    Blowup {
        config: PathBuf,
        run_dir: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Weighted Gaussian functional along a finished run (flat ambient only).
    Monotonicity {
        config: PathBuf,
        run_dir: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Verify digests and print the verdicts recorded in a run directory.
    Report { run_dir: PathBuf },
}

/// Failure of a subcommand before any verdict could be formed.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

type Outcome = std::result::Result<bool, Fatal>;

/// Runs the command line `argv` (program name first) and returns the exit
/// status: 0 if every verdict passes, 1 on a failed verdict, 2 on usage,
/// configuration or input errors.
pub fn execute<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Validate { config } => validate(&config),
        Command::Run { config, force } => run(&config, force),
        Command::Blowup { config, run_dir, force } => blowup_cmd(&config, &run_dir, force),
        Command::Monotonicity { config, run_dir, force } => monotonicity_cmd(&config, &run_dir, force),
        Command::Report { run_dir } => report(&run_dir),
    };
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VERDICT,
        Err(Fatal(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Fatal> {
    RunConfig::load(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn status(passed: bool, skipped: bool) -> &'static str {
    match (skipped, passed) {
        (true, _) => "skipped",
        (false, true) => "pass",
        (false, false) => "fail",
    }
}

fn validate(path: &Path) -> Outcome {
    let cfg = load_config(path)?;
    let report = validate_default(&cfg.model);
    println!("model = {} (b = {}, r_max = {})", cfg.model.kind(), cfg.model.b(), cfg.model.r_max());
    println!("rho = {}", report.rho);
    println!("first_zero_phi_plus_psi = {}", report.first_zero_phi_plus_psi);
    println!("concavity_radius = {}", report.concavity_radius);
    println!("third_order_sup = {}", report.third_order_sup);
    for c in &report.checks {
        println!("{:<32} {:<4} worst r = {:e}, value = {:e} {}", c.name, status(c.passed, false), c.worst_r, c.worst_value, c.detail);
    }
    println!("passed = {}", report.passed);
    Ok(report.passed)
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), num)
}

fn series_rows(report: &MonitorReport) -> impl Iterator<Item = String> + '_ {
    report.rows.iter().map(|r| {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            num(r.t),
            num(r.r_min),
            num(r.kappa_psi_min),
            num(r.u_max),
            r.zero_count,
            num(r.q_max),
            num(r.q_max_times_gap),
            num(r.k2_over_kpsi_max),
            num(r.abs_k_over_k2_max)
        )
    })
}

fn run(path: &Path, force: bool) -> Outcome {
    let cfg = load_config(path)?;
    let started = Instant::now();
    let init = flow_solver::initial_curve(cfg.domain, cfg.n, cfg.init)?;
    let trajectory = flow_solver::run(&init, &cfg.model, &cfg.solver)?;
    let report = monitors::monitor(&trajectory, &cfg.model, &cfg.monitor)?;
    let rho = validate_default(&cfg.model).rho;

    let dir = cfg.output_dir();
    store::prepare_dir(&dir, force).map_err(Fatal)?;
    std::fs::write(dir.join(store::CONFIG_ECHO), cfg.echo())?;
    let mut files = vec![store::CONFIG_ECHO.to_string()];
    files.extend(store::write_trajectory(&dir, &trajectory)?);
    store::write_csv(&dir.join("series.csv"), SERIES_HEADER, series_rows(&report))?;
    files.push("series.csv".into());
    store::write_csv(
        &dir.join("rescaled_derivatives.csv"),
        "t,ds_kpsi_sup_ord1,ds_kpsi_sup_ord2",
        report.rows.iter().map(|r| format!("{},{},{}", num(r.t), num(r.ds_kpsi_sup_ord1), num(r.ds_kpsi_sup_ord2))),
    )?;
    files.push("rescaled_derivatives.csv".into());

    let mut m = Manifest::default();
    m.set("tool.version", env!("CARGO_PKG_VERSION"));
    for (k, v) in &cfg.entries {
        m.set(format!("config.{k}"), v.clone());
    }
    m.set("model.rho", num(rho));
    m.set("run.termination", trajectory.termination.as_str());
    m.set("run.steps", (trajectory.series.len() - 1).to_string());
    m.set("run.snapshots", trajectory.snapshots.len().to_string());
    m.set("run.t_final", num(trajectory.series.last().map_or(0.0, |s| s.t)));
    m.set("run.eps_stop", num(trajectory.eps_stop));
    m.set("run.t_est", opt_num(trajectory.t_est));
    m.set("run.c4_est", opt_num(trajectory.c4_est));
    m.set("run.c_est", opt_num(trajectory.c_est));
    m.set("monitor.burn_in_until", num(report.burn_in_until));
    for w in trajectory.warnings.iter().chain(&report.warnings) {
        m.set("warning", w.clone());
    }
    for v in &report.verdicts {
        m.set(format!("verdict.{}", v.name), status(v.passed, v.skipped));
        m.set(format!("detail.{}", v.name), v.detail.clone());
        if let Some(t) = v.first_failure {
            m.set(format!("first_failure.{}", v.name), num(t));
        }
    }
    m.set("wall_clock_seconds", format!("{:.3}", started.elapsed().as_secs_f64()));
    m.write(&dir, &files)?;

    println!("output = {}", dir.display());
    println!("termination = {}", trajectory.termination.as_str());
    println!("T_est = {}", opt_num(trajectory.t_est));
    println!("C4_est = {}", opt_num(trajectory.c4_est));
    println!("C_est = {}", opt_num(trajectory.c_est));
    for v in &report.verdicts {
        println!("{:<30} {:<7} {}", v.name, status(v.passed, v.skipped), v.detail);
    }
    Ok(report.passed())
}

/// A finished run directory with the configuration it was produced from.
struct LoadedRun {
    cfg: RunConfig,
    trajectory: FlowTrajectory,
}

fn load_run(run_dir: &Path) -> Result<LoadedRun, Fatal> {
    if !run_dir.is_dir() {
        return Err(Fatal(format!("run directory {} does not exist", run_dir.display())));
    }
    let manifest = Manifest::read(run_dir).map_err(|e| Fatal(format!("{}: {e}", run_dir.display())))?;
    let cfg = load_config(&run_dir.join(store::CONFIG_ECHO))?;
    let trajectory = store::load_trajectory(run_dir, cfg.domain, &manifest)?;
    Ok(LoadedRun { cfg, trajectory })
}

fn require_flat(model: &SurfaceDensityModel) -> Result<(), Fatal> {
    if model.is_flat() {
        Ok(())
    } else {
        Err(Fatal(format!("model {} is not flat; rescaling and the Gaussian functional need a flat ambient", model.kind())))
    }
}

fn nonincreasing(values: &[f64], rel_tol: f64, abs_tol: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + rel_tol * w[0].abs() + abs_tol)
}

fn blowup_cmd(config_path: &Path, run_dir: &Path, force: bool) -> Outcome {
    let cfg = load_config(config_path)?;
    let run = load_run(run_dir)?;
    let model = &run.cfg.model;
    require_flat(model)?;
    let b = model.b();
    let tr = &run.trajectory;
    let center = blowup::locate_center(tr)?;
    let t_singular = tr.t_est.ok_or_else(|| Fatal("run has no singular-time estimate".into()))?;
    let c = tr.c_est.ok_or_else(|| Fatal("run has no type-I constant estimate".into()))?;
    let a = &cfg.analysis;
    let window = Window { half_width: a.window, samples: a.window_samples };
    let times: Vec<f64> = (0..a.blowup_levels).map(|j| t_singular * (1.0 - 0.5f64.powi(j as i32))).collect();
    let taus: Vec<f64> = (0..a.tau_count)
        .map(|k| {
            let top = c * (1.0 - 1e-3);
            if a.tau_count == 1 { -1.0 } else { -1.0 + (top + 1.0) * k as f64 / (a.tau_count - 1) as f64 }
        })
        .collect();
    let stage1 = blowup::rescale_stage1(tr, center.z_p, t_singular, c, &times, &taus, window)?;
    let stage2 = blowup::rescale_stage2(tr, center.z_p, t_singular, c, a.stage2_start, &a.tau_tilde, window)?;

    let out = run_dir.join("blowup");
    store::prepare_dir(&out, force).map_err(Fatal)?;
    let mut files = Vec::new();
    let line = b.sqrt();
    let mut residual_sups = Vec::new();
    let mut deviation_sups = Vec::new();
    let gaussian = monotonicity::stage2_gaussian(&stage2, b);
    for (k, s) in stage2.iter().enumerate() {
        let res = blowup::shrinker_residual(&s.curve, b)?;
        let dev: Vec<f64> = s.curve.r().iter().map(|r| r - line).collect();
        residual_sups.push(sup_within(&s.curve, &res, 1.0));
        deviation_sups.push(sup_within(&s.curve, &dev, 1.0));
        let name = format!("stage2_{k:02}.csv");
        let curve = &s.curve;
        store::write_csv(
            &out.join(&name),
            "z_tilde,r_tilde,residual",
            (0..curve.len()).map(|i| format!("{},{},{}", num(curve.z(i)), num(curve.r()[i]), num(res[i]))),
        )?;
        files.push(name);
    }
    let mut stage1_rows = Vec::new();
    let mut inheritance: f64 = 0.0;
    for level in &stage1 {
        for cell in &level.cells {
            let Some(curve) = &cell.curve else { continue };
            let (dr, d2r) = differentiate_window(curve.r(), curve.dz());
            let q_max = (0..curve.len()).map(|i| node_geometry(model, curve.r()[i], dr[i], d2r[i]).q).fold(0.0, f64::max);
            inheritance = inheritance.max(q_max * (c - cell.tau));
            for i in 0..curve.len() {
                stage1_rows.push(format!("{},{},{},{}", level.j, num(cell.tau), num(curve.z(i)), num(curve.r()[i])));
            }
        }
    }
    store::write_csv(&out.join("stage1.csv"), "j,tau,z_tilde,r_tilde", stage1_rows)?;
    files.push("stage1.csv".into());

    let residual_ok = nonincreasing(&residual_sups, 0.0, blowup::RESIDUAL_FLOOR);
    let gaussian_ok = nonincreasing(&gaussian.iter().map(|g| g.1).collect::<Vec<_>>(), monotonicity::MONOTONE_TOL, 0.0);
    let inheritance_ok = inheritance <= c * 1.05;

    let mut m = Manifest::default();
    m.set("tool.version", env!("CARGO_PKG_VERSION"));
    m.set("run.directory", run_dir.display().to_string());
    write_center(&mut m, &center);
    m.set("blowup.c", num(c));
    m.set("blowup.t_singular", num(t_singular));
    m.set("blowup.b", num(b));
    for level in &stage1 {
        m.set(format!("stage1.{}.t_j", level.j), num(level.t_j));
        m.set(format!("stage1.{}.lambda", level.j), num(level.lambda));
    }
    m.set("stage1.max_q_times_c_minus_tau", num(inheritance));
    for (k, s) in stage2.iter().enumerate() {
        m.set(
            format!("stage2.{k:02}"),
            format!(
                "tau_tilde={} t={} scale={} sup_dev_line={} sup_residual={} gaussian={}",
                num(s.tau_tilde),
                num(s.t),
                num(s.scale),
                num(deviation_sups[k]),
                num(residual_sups[k]),
                num(gaussian[k].1)
            ),
        );
    }
    m.set("verdict.blowup_residual_nonincreasing", status(residual_ok, false));
    m.set("verdict.blowup_gaussian_nonincreasing", status(gaussian_ok, false));
    m.set("verdict.blowup_type_one_inherited", status(inheritance_ok, false));
    m.write(&out, &files)?;

    println!("z_p = {} (degenerate_minimum = {})", center.z_p, center.degenerate_minimum);
    println!("C = {c}, T = {t_singular}");
    println!("{:>10} {:>14} {:>14} {:>14}", "tau_tilde", "sup|r-sqrt b|", "sup|residual|", "gaussian");
    for (k, s) in stage2.iter().enumerate() {
        println!("{:>10} {:>14.6e} {:>14.6e} {:>14.8}", s.tau_tilde, deviation_sups[k], residual_sups[k], gaussian[k].1);
    }
    println!("residual nonincreasing: {}", status(residual_ok, false));
    println!("gaussian nonincreasing: {}", status(gaussian_ok, false));
    println!("type-I inherited (max Q(C - tau) = {inheritance:.6e}): {}", status(inheritance_ok, false));
    Ok(residual_ok && gaussian_ok && inheritance_ok)
}

fn write_center(m: &mut Manifest, center: &BlowupCenter) {
    m.set("blowup.z_p", num(center.z_p));
    m.set("blowup.degenerate_minimum", center.degenerate_minimum.to_string());
}

fn monotonicity_cmd(config_path: &Path, run_dir: &Path, force: bool) -> Outcome {
    let cfg = load_config(config_path)?;
    let run = load_run(run_dir)?;
    if !cfg.analysis.monotonicity {
        println!("monotonicity disabled by analysis.monotonicity");
        return Ok(true);
    }
    require_flat(&run.cfg.model)?;
    let b = run.cfg.model.b();
    let tr = &run.trajectory;
    let center = blowup::locate_center(tr)?;
    let t_singular = tr.t_est.ok_or_else(|| Fatal("run has no singular-time estimate".into()))?;
    let samples: Vec<(f64, &densflow::GraphCurve)> =
        tr.snapshots.iter().filter(|s| s.t < t_singular).map(|s| (s.t, &s.curve)).collect();
    let (series, verdict) = monotonicity::monotonicity_check(&samples, center.z_p, t_singular, b)?;

    let out = run_dir.join("monotonicity");
    store::prepare_dir(&out, force).map_err(Fatal)?;
    store::write_csv(
        &out.join("monotonicity.csv"),
        MONOTONICITY_HEADER,
        series.rows.iter().map(|r| format!("{},{},{},{}", num(r.t), num(r.value), num(r.dissipation), num(r.dvalue_dt))),
    )?;
    let mut m = Manifest::default();
    m.set("tool.version", env!("CARGO_PKG_VERSION"));
    m.set("run.directory", run_dir.display().to_string());
    write_center(&mut m, &center);
    m.set("monotonicity.t_singular", num(t_singular));
    m.set("monotonicity.max_mismatch", num(verdict.max_mismatch));
    m.set("monotonicity.max_increase", num(verdict.max_increase));
    m.set("monotonicity.checked_rows", verdict.checked_rows.to_string());
    m.set("monotonicity.unresolved_rows", verdict.unresolved_rows.to_string());
    m.set("verdict.gaussian_nonincreasing", status(verdict.monotone, false));
    m.set("verdict.dissipation_identity", status(verdict.identity, false));
    m.write(&out, &["monotonicity.csv".to_string()])?;

    println!("samples = {}, checked = {}, unresolved = {}", series.rows.len(), verdict.checked_rows, verdict.unresolved_rows);
    println!("max relative increase = {:e}", verdict.max_increase);
    println!("max identity mismatch = {:e}", verdict.max_mismatch);
    println!("gaussian nonincreasing: {}", status(verdict.monotone, false));
    println!("dissipation identity: {}", status(verdict.identity, false));
    Ok(verdict.passed)
}

fn report(run_dir: &Path) -> Outcome {
    if !run_dir.is_dir() {
        return Err(Fatal(format!("run directory {} does not exist", run_dir.display())));
    }
    let mut all_ok = true;
    let mut out = String::new();
    for (label, dir) in [("run", run_dir.to_path_buf()), ("blowup", run_dir.join("blowup")), ("monotonicity", run_dir.join("monotonicity"))] {
        if !dir.join(store::MANIFEST).exists() {
            if label == "run" {
                return Err(Fatal(format!("{} has no {}", run_dir.display(), store::MANIFEST)));
            }
            continue;
        }
        let m = Manifest::read(&dir)?;
        let bad = m.mismatched_files(&dir);
        let _ = writeln!(out, "[{label}] {} files, {} digest mismatches", m.files.len(), bad.len());
        for f in &bad {
            let _ = writeln!(out, "  digest mismatch: {f}");
        }
        all_ok &= bad.is_empty();
        if label == "run" {
            for key in ["config.model.kind", "config.model.b", "model.rho", "run.termination", "run.t_est", "run.c4_est", "run.c_est"] {
                let _ = writeln!(out, "  {key:<20} {}", m.get(key).unwrap_or("-"));
            }
        }
        for (name, st) in m.verdicts() {
            let _ = writeln!(out, "  {name:<36} {st}");
            all_ok &= st != "fail";
        }
    }
    print!("{out}");
    println!("overall: {}", if all_ok { "pass" } else { "fail" });
    Ok(all_ok)
}
