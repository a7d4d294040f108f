//! Run-directory files: CSV tables, snapshot curves and the manifest with
//! its SHA-256 file table.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use densflow::flow_solver::{FlowTrajectory, Snapshot, StepSample, Termination};
use densflow::{Domain, GraphCurve};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.txt";
pub const CONFIG_ECHO: &str = "config.cfg";
pub const STEPS: &str = "steps.csv";
pub const STEPS_HEADER: &str = "t,r_min,dt,q_max";
pub const SNAPSHOT_INDEX: &str = "snapshots/index.csv";
const FILES_MARKER: &str = "[files]";

/// Seventeen significant digits, enough to round-trip every `f64`.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn parse_num(s: &str) -> Option<f64> {
    s.trim().parse().ok()
}

/// Writes a CSV file from a header and pre-formatted rows.
pub fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> io::Result<()> {
    let mut body = String::with_capacity(4096);
    body.push_str(header);
    body.push('\n');
    for row in rows {
        body.push_str(&row);
        body.push('\n');
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, body)
}

pub fn read_csv(path: &Path) -> io::Result<(String, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().to_string();
    let rows = lines.filter(|l| !l.is_empty()).map(|l| l.split(',').map(str::to_string).collect()).collect();
    Ok((header, rows))
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let bytes = fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

/// Key/value section followed by a digest table of the files it covers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
    /// `(digest, path relative to the manifest)`.
    pub files: Vec<(String, String)>,
}

impl Manifest {
    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.push((key.into(), value.into()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_num(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(parse_num)
    }

    /// Entries under `verdict.` as `(name, status)`.
    pub fn verdicts(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("verdict.").map(|name| (name, v.as_str())))
    }

    /// Digests `files` (relative to `dir`) and writes the manifest there.
    pub fn write(&mut self, dir: &Path, files: &[String]) -> io::Result<()> {
        self.files = files.iter().map(|f| Ok((sha256_file(&dir.join(f))?, f.clone()))).collect::<io::Result<_>>()?;
        let mut text = String::from("# densflow manifest\n");
        for (k, v) in &self.entries {
            let _ = writeln!(text, "{k} = {v}");
        }
        text.push_str(FILES_MARKER);
        text.push('\n');
        for (digest, path) in &self.files {
            let _ = writeln!(text, "{digest}  {path}");
        }
        fs::write(dir.join(MANIFEST), text)
    }

    pub fn read(dir: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST))?;
        let mut m = Manifest::default();
        let mut in_files = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == FILES_MARKER {
                in_files = true;
            } else if in_files {
                if let Some((digest, path)) = line.split_once("  ") {
                    m.files.push((digest.to_string(), path.to_string()));
                }
            } else if let Some((k, v)) = line.split_once(" = ") {
                m.entries.push((k.to_string(), v.to_string()));
            }
        }
        Ok(m)
    }

    /// Files whose current digest differs from the recorded one.
    pub fn mismatched_files(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|(digest, path)| sha256_file(&dir.join(path)).map_or(true, |d| &d != digest))
            .map(|(_, path)| path.clone())
            .collect()
    }
}

/// Creates `dir` for fresh output, refusing to touch existing content
/// unless `force` is set, in which case the old content is removed.
pub fn prepare_dir(dir: &Path, force: bool) -> Result<(), String> {
    if dir.exists() {
        let non_empty = fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))?.next().is_some();
        if non_empty && !force {
            return Err(format!("{} already exists; pass --force to overwrite", dir.display()));
        }
        if non_empty {
            fs::remove_dir_all(dir).map_err(|e| format!("cannot clear {}: {e}", dir.display()))?;
        }
    }
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))
}

pub fn snapshot_file(index: usize) -> String {
    format!("snapshots/snap_{index:05}.csv")
}

/// Writes snapshots, the step log and the index; returns the relative
/// paths written.
pub fn write_trajectory(dir: &Path, trajectory: &FlowTrajectory) -> io::Result<Vec<String>> {
    let mut files = Vec::with_capacity(trajectory.snapshots.len() + 2);
    let mut index_rows = Vec::with_capacity(trajectory.snapshots.len());
    for (k, snap) in trajectory.snapshots.iter().enumerate() {
        let name = snapshot_file(k);
        let c = &snap.curve;
        write_csv(&dir.join(&name), "z,r", (0..c.len()).map(|i| format!("{},{}", num(c.z(i)), num(c.r()[i]))))?;
        index_rows.push(format!("{k},{},{},{name}", snap.step, num(snap.t)));
        files.push(name);
    }
    write_csv(&dir.join(SNAPSHOT_INDEX), "index,step,t,file", index_rows)?;
    files.push(SNAPSHOT_INDEX.to_string());
    write_csv(
        &dir.join(STEPS),
        STEPS_HEADER,
        trajectory.series.iter().map(|s| format!("{},{},{},{}", num(s.t), num(s.r_min), num(s.dt), num(s.q_max))),
    )?;
    files.push(STEPS.to_string());
    Ok(files)
}

fn bad(path: &Path, what: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("{}: {what}", path.display()))
}

/// Rebuilds a trajectory from a run directory written by
/// [`write_trajectory`] and its manifest.
pub fn load_trajectory(dir: &Path, domain: Domain, manifest: &Manifest) -> io::Result<FlowTrajectory> {
    let index_path = dir.join(SNAPSHOT_INDEX);
    let (_, rows) = read_csv(&index_path)?;
    let mut snapshots = Vec::with_capacity(rows.len());
    for row in rows {
        let [_, step, t, file] = row.as_slice() else {
            return Err(bad(&index_path, "malformed row"));
        };
        let path: PathBuf = dir.join(file);
        let (_, points) = read_csv(&path)?;
        let r = points
            .iter()
            .map(|p| p.get(1).and_then(|v| parse_num(v)))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| bad(&path, "malformed radius"))?;
        let curve = GraphCurve::new(domain, r).map_err(|e| bad(&path, &e.to_string()))?;
        snapshots.push(Snapshot {
            t: parse_num(t).ok_or_else(|| bad(&index_path, "malformed time"))?,
            step: step.parse().map_err(|_| bad(&index_path, "malformed step"))?,
            curve,
        });
    }
    let steps_path = dir.join(STEPS);
    let (_, rows) = read_csv(&steps_path)?;
    let series = rows
        .iter()
        .map(|row| {
            let v: Option<Vec<f64>> = row.iter().map(|x| parse_num(x)).collect();
            match v.as_deref() {
                Some(&[t, r_min, dt, q_max]) => Some(StepSample { t, r_min, dt, q_max }),
                _ => None,
            }
        })
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| bad(&steps_path, "malformed row"))?;
    let termination = manifest
        .get("run.termination")
        .and_then(Termination::parse)
        .ok_or_else(|| bad(dir, "manifest lacks run.termination"))?;
    Ok(FlowTrajectory {
        snapshots,
        series,
        termination,
        eps_stop: manifest.get_num("run.eps_stop").unwrap_or(f64::NAN),
        t_est: manifest.get_num("run.t_est").filter(|v| v.is_finite()),
        c4_est: manifest.get_num("run.c4_est").filter(|v| v.is_finite()),
        c_est: manifest.get_num("run.c_est").filter(|v| v.is_finite()),
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2f64.sqrt() * 1e-300, -7.25e17, f64::MIN_POSITIVE] {
            assert_eq!(parse_num(&num(v)), Some(v));
        }
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(parse_num("inf"), Some(f64::INFINITY));
    }

    #[test]
    fn manifest_round_trip_and_digests() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.csv"), "x\n1\n").unwrap();
        let mut m = Manifest::default();
        m.set("run.t_est", num(0.5));
        m.set("verdict.graph_preserved", "pass");
        m.write(dir.path(), &["a.csv".to_string()]).unwrap();
        let back = Manifest::read(dir.path()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.get_num("run.t_est"), Some(0.5));
        assert!(back.mismatched_files(dir.path()).is_empty());
        fs::write(dir.path().join("a.csv"), "x\n2\n").unwrap();
        assert_eq!(back.mismatched_files(dir.path()), vec!["a.csv".to_string()]);
    }

    #[test]
    fn prepare_dir_refuses_existing_content() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        prepare_dir(&out, false).unwrap();
        fs::write(out.join("x"), "1").unwrap();
        assert!(prepare_dir(&out, false).is_err());
        prepare_dir(&out, true).unwrap();
        assert!(!out.join("x").exists());
    }
}
