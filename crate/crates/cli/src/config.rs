//! Run configuration: flat `section.key = value` lines, `#` comments.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};

use densflow::flow_solver::{InitFamily, SolverConfig};
use densflow::monitors::MonitorConfig;
use densflow::{Domain, SurfaceDensityModel};

pub const OUT_ENV: &str = "DENSFLOW_OUT";

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}, key `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "key `{k}`: {}", self.message),
            (None, None) => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

const KEYS: &[&str] = &[
    "model.kind",
    "model.b",
    "model.r_max",
    "domain.kind",
    "domain.period",
    "domain.a1",
    "domain.a2",
    "grid.n",
    "init.family",
    "init.c",
    "init.a",
    "init.k",
    "solver.sigma",
    "solver.eps_stop",
    "solver.max_steps",
    "snapshots.every",
    "snapshots.shrink",
    "monitor.burn_in",
    "monitor.type_one_cap",
    "monitor.quotient_cap",
    "monitor.ds_kpsi_cap",
    "analysis.blowup_levels",
    "analysis.tau_count",
    "analysis.stage2_start",
    "analysis.tau_tilde",
    "analysis.window",
    "analysis.window_samples",
    "analysis.monotonicity",
    "output.directory",
];

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    /// Number of stage-one levels `t_j = T(1 − 2^{−j})`, `j = 0..levels`.
    pub blowup_levels: usize,
    pub tau_count: usize,
    pub stage2_start: f64,
    pub tau_tilde: Vec<f64>,
    pub window: f64,
    pub window_samples: usize,
    pub monotonicity: bool,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: SurfaceDensityModel,
    pub domain: Domain,
    pub n: usize,
    pub init: InitFamily,
    pub solver: SolverConfig,
    pub monitor: MonitorConfig,
    pub analysis: AnalysisConfig,
    pub output: PathBuf,
    /// Normalised `key = value` lines as read, for echoing into manifests.
    pub entries: BTreeMap<String, String>,
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn err(&self, key: &str, message: String) -> ConfigError {
        ConfigError { line: self.map.get(key).map(|e| e.0), key: Some(key.to_string()), message }
    }

    fn text(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|e| e.1.as_str())
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.f64_opt(key).map(|v| v.unwrap_or(default))
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.text(key) {
            None => Ok(None),
            Some(s) => match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => Err(self.err(key, format!("expected a finite number, got `{s}`"))),
            },
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.text(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| self.err(key, format!("expected a nonnegative integer, got `{s}`"))),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.text(key) {
            None => Ok(default),
            Some("on" | "true" | "yes") => Ok(true),
            Some("off" | "false" | "no") => Ok(false),
            Some(s) => Err(self.err(key, format!("expected on/off, got `{s}`"))),
        }
    }

    fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.text(key) {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split(',')
                .map(|x| x.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| self.err(key, format!("expected a comma-separated list of numbers, got `{s}`"))),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            key: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError {
                    line: Some(line_no),
                    key: None,
                    message: format!("expected `section.key = value`, got `{line}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            let err = |message: String| ConfigError { line: Some(line_no), key: Some(key.to_string()), message };
            if !KEYS.contains(&key) {
                return Err(err("unknown key".into()));
            }
            if value.is_empty() {
                return Err(err("missing value".into()));
            }
            if let Some((first, _)) = map.get(key) {
                return Err(err(format!("duplicate key (first set on line {first})")));
            }
            map.insert(key.to_string(), (line_no, value.to_string()));
        }
        let e = Entries { map };
        Self::from_entries(&e)
    }

    fn from_entries(e: &Entries) -> Result<Self, ConfigError> {
        let kind = e.text("model.kind").ok_or_else(|| e.err("model.kind", "required".into()))?;
        let b = e.f64_opt("model.b")?.ok_or_else(|| e.err("model.b", "required".into()))?;
        let default_r_max = if kind == "sphere_log" { 1.5 } else { 1e6 };
        let r_max = e.f64_or("model.r_max", default_r_max)?;
        let model = SurfaceDensityModel::builtin(kind, b, r_max).map_err(|err| {
            let key = match err {
                densflow::Error::UnknownModel(_) => "model.kind",
                densflow::Error::InvalidExponent(_) => "model.b",
                _ => "model.r_max",
            };
            e.err(key, err.to_string())
        })?;

        let domain = match e.text("domain.kind").unwrap_or("periodic") {
            "periodic" => {
                let period = e.f64_or("domain.period", TAU)?;
                if period <= 0.0 {
                    return Err(e.err("domain.period", "must be positive".into()));
                }
                Domain::Periodic { period }
            }
            "interval" => {
                let a1 = e.f64_or("domain.a1", 0.0)?;
                let a2 = e.f64_or("domain.a2", TAU / 2.0)?;
                if a2 <= a1 {
                    return Err(e.err("domain.a2", format!("must exceed domain.a1 = {a1}")));
                }
                Domain::Interval { a1, a2 }
            }
            other => return Err(e.err("domain.kind", format!("expected periodic or interval, got `{other}`"))),
        };
        let n = e.usize_or("grid.n", 256)?;
        if n < densflow::curve_geometry::MIN_NODES {
            return Err(e.err("grid.n", format!("need at least {} nodes", densflow::curve_geometry::MIN_NODES)));
        }

        let c = e.f64_or("init.c", 1.0)?;
        let init = match e.text("init.family").unwrap_or("cosine") {
            "constant" => InitFamily::Constant { c },
            "cosine" => {
                let k = e.usize_or("init.k", 1)?;
                let k = u32::try_from(k).map_err(|_| e.err("init.k", "too large".into()))?;
                InitFamily::Cosine { c, a: e.f64_or("init.a", 0.0)?, k }
            }
            other => return Err(e.err("init.family", format!("expected constant or cosine, got `{other}`"))),
        };

        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            sigma: e.f64_or("solver.sigma", defaults.sigma)?,
            eps_stop: e.f64_opt("solver.eps_stop")?,
            max_steps: e.usize_or("solver.max_steps", defaults.max_steps)?,
            snapshot_every: e.usize_or("snapshots.every", defaults.snapshot_every)?,
            snapshot_shrink: e.f64_or("snapshots.shrink", defaults.snapshot_shrink)?,
        };
        if !(solver.sigma > 0.0) {
            return Err(e.err("solver.sigma", "must be positive".into()));
        }
        if solver.snapshot_every == 0 {
            return Err(e.err("snapshots.every", "must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&solver.snapshot_shrink) {
            return Err(e.err("snapshots.shrink", "must lie in [0, 1)".into()));
        }

        let md = MonitorConfig::default();
        let quotient_cap = e.f64_or("monitor.quotient_cap", md.k2_over_kpsi_cap)?;
        let ds_cap = e.f64_or("monitor.ds_kpsi_cap", md.ds_kpsi_caps[0])?;
        let monitor = MonitorConfig {
            burn_in_fraction: e.f64_or("monitor.burn_in", md.burn_in_fraction)?,
            eps_z: None,
            type_one_cap: e.f64_or("monitor.type_one_cap", md.type_one_cap)?,
            k2_over_kpsi_cap: quotient_cap,
            k_over_k2_cap: quotient_cap,
            ds_kpsi_caps: [ds_cap, ds_cap],
        };
        if !(0.0..1.0).contains(&monitor.burn_in_fraction) {
            return Err(e.err("monitor.burn_in", "must lie in [0, 1)".into()));
        }

        let analysis = AnalysisConfig {
            blowup_levels: e.usize_or("analysis.blowup_levels", 4)?,
            tau_count: e.usize_or("analysis.tau_count", 9)?,
            stage2_start: e.f64_or("analysis.stage2_start", 0.0)?,
            tau_tilde: e.list_or("analysis.tau_tilde", &[1.0, 2.0, 3.0])?,
            window: e.f64_or("analysis.window", 6.0)?,
            window_samples: e.usize_or("analysis.window_samples", 241)?,
            monotonicity: e.bool_or("analysis.monotonicity", true)?,
        };
        if analysis.window <= 0.0 {
            return Err(e.err("analysis.window", "must be positive".into()));
        }
        if analysis.window_samples < densflow::curve_geometry::MIN_NODES {
            return Err(e.err("analysis.window_samples", "too few samples".into()));
        }

        let output = PathBuf::from(e.text("output.directory").unwrap_or("densflow-run"));
        let entries = e.map.iter().map(|(k, (_, v))| (k.clone(), v.clone())).collect();
        Ok(Self { model, domain, n, init, solver, monitor, analysis, output, entries })
    }

    /// Output directory after applying the environment override.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output.clone(),
        }
    }

    /// The configuration as `key = value` lines.
    pub fn echo(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
