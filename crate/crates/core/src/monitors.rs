//! Runtime checks of the qualitative behaviour along a trajectory:
//! positivity of `κψ`, graph preservation (`u < 0`), Sturmian zero
//! counting of `ṙ`, the type-I product `Q_max (T − t)`, the quotients
//! `k₂/κψ` and `κ/k₂`, and arclength derivatives of `κψ` at the
//! self-similar scale around the blow-up point.

use crate::blowup::minimum_location;
use crate::curve_geometry::{differentiate, pointwise_geometry, GeometryFields, GraphCurve};
use crate::error::Result;
use crate::flow_solver::{FlowTrajectory, BOUNDARY_LAYER_STEPS};
use crate::surface_density::SurfaceDensityModel;

/// Number of strict sign alternations of `ṙ`, after treating
/// `|ṙ| ≤ eps_z` as zero and dropping zeros. Periodic curves are counted
/// cyclically.
pub fn zero_count(curve: &GraphCurve, eps_z: f64) -> usize {
    let (dr, _) = differentiate(curve);
    let signs: Vec<bool> = dr.iter().filter(|d| d.abs() > eps_z).map(|&d| d > 0.0).collect();
    if signs.is_empty() {
        return 0;
    }
    let mut count = signs.windows(2).filter(|w| w[0] != w[1]).count();
    if curve.domain().is_periodic() && signs[0] != signs[signs.len() - 1] {
        count += 1;
    }
    count
}

/// Default zero threshold for a grid of spacing `dz`.
pub fn default_eps_z(dz: f64) -> f64 {
    1e-10 * dz
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorConfig {
    /// Fraction of the run, from `t = 0`, exempt from the positivity check.
    pub burn_in_fraction: f64,
    /// `None` selects [`default_eps_z`].
    pub eps_z: Option<f64>,
    pub type_one_cap: f64,
    pub k2_over_kpsi_cap: f64,
    pub k_over_k2_cap: f64,
    /// Caps for the first and second rescaled arclength derivatives of `κψ`.
    pub ds_kpsi_caps: [f64; 2],
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            burn_in_fraction: 0.01,
            eps_z: None,
            type_one_cap: 10.0,
            k2_over_kpsi_cap: 100.0,
            k_over_k2_cap: 100.0,
            ds_kpsi_caps: [100.0, 100.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRow {
    pub t: f64,
    pub r_min: f64,
    pub kappa_psi_min: f64,
    pub u_max: f64,
    pub zero_count: usize,
    pub q_max: f64,
    /// `NaN` when no singular-time estimate is available.
    pub q_max_times_gap: f64,
    pub k2_over_kpsi_max: f64,
    pub abs_k_over_k2_max: f64,
    pub ds_kpsi_sup_ord1: f64,
    pub ds_kpsi_sup_ord2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: &'static str,
    pub passed: bool,
    pub skipped: bool,
    pub first_failure: Option<f64>,
    pub detail: String,
}

impl Verdict {
    fn from_failures(name: &'static str, failures: impl IntoIterator<Item = f64>, detail: String) -> Self {
        let first_failure = failures.into_iter().next();
        Self { name, passed: first_failure.is_none(), skipped: false, first_failure, detail }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub rows: Vec<MonitorRow>,
    pub verdicts: Vec<Verdict>,
    pub burn_in_until: f64,
    pub warnings: Vec<String>,
}

impl MonitorReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

pub const SERIES_HEADER: &str =
    "t,r_min,kappa_psi_min,u_max,zero_count,q_max,q_max_times_gap,k2_over_kpsi_max,abs_k_over_k2_max";

fn max_of(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(f64::NEG_INFINITY, f64::max)
}

/// Sup of `|∂ₛ^m κψ| Λ^{−(m+1)}` for `m = 1, 2` over the nodes within
/// `|z − z_p| ≤ 1/Λ`, with `Λ = 1/√(2 gap)`: the arclength derivatives of
/// `κψ` on the second-stage blow-up curve over `|z̃| ≤ 1`.
fn rescaled_ds_kpsi(curve: &GraphCurve, g: &GeometryFields, z_p: f64, gap: f64) -> (f64, f64) {
    let n = curve.len();
    let periodic = curve.domain().is_periodic();
    let dz = curve.dz();
    // Across an interval end `κψ` continues evenly and its derivative oddly.
    let ds = |f: &[f64], i: usize, parity: f64| -> f64 {
        let (left, right) = if periodic {
            (f[(i + n - 1) % n], f[(i + 1) % n])
        } else {
            let left = if i == 0 { parity * f[1] } else { f[i - 1] };
            let right = if i == n - 1 { parity * f[n - 2] } else { f[i + 1] };
            (left, right)
        };
        (right - left) / (2.0 * dz * g.ds_weight[i])
    };
    let d1: Vec<f64> = (0..n).map(|i| ds(&g.kappa_psi, i, 1.0)).collect();
    let d2: Vec<f64> = (0..n).map(|i| ds(&d1, i, -1.0)).collect();
    let length = curve.domain().length();
    let reach = (2.0 * gap).sqrt().max(1.01 * dz);
    let (s1, s2) = ((2.0 * gap).sqrt().powi(2), (2.0 * gap).sqrt().powi(3));
    let mut sup = (0.0f64, 0.0f64);
    for i in 0..n {
        let mut off = (curve.z(i) - z_p).abs();
        if periodic {
            off = off.min(length - off);
        }
        if off <= reach {
            sup.0 = sup.0.max(d1[i].abs() * s1);
            sup.1 = sup.1.max(d2[i].abs() * s2);
        }
    }
    sup
}

/// Evaluates the monitored quantities on every snapshot and the verdicts
/// (a) positivity of `κψ` after burn-in, (b) `u < 0`, (c) nonincreasing
/// zero count, (d) type-I product below its cap, (e) quotient caps and
/// (f) rescaled arclength derivatives of `κψ` below their caps.
pub fn monitor(trajectory: &FlowTrajectory, model: &SurfaceDensityModel, config: &MonitorConfig) -> Result<MonitorReport> {
    let mut warnings = Vec::new();
    let t_est = trajectory.t_est;
    if t_est.is_none() {
        warnings.push("no singular-time estimate; type-I and rescaled-derivative checks skipped".to_string());
    }
    let z_p = trajectory.final_snapshot().map(|s| minimum_location(&s.curve).z_p).unwrap_or(0.0);
    let mut rows = Vec::with_capacity(trajectory.snapshots.len());
    for snap in &trajectory.snapshots {
        let curve = &snap.curve;
        let g = pointwise_geometry(curve, model)?;
        let eps_z = config.eps_z.unwrap_or_else(|| default_eps_z(curve.dz()));
        let gap = t_est.map(|t| t - snap.t);
        let (ds1, ds2) = match gap {
            Some(gap) if gap > 0.0 => rescaled_ds_kpsi(curve, &g, z_p, gap),
            _ => (f64::NAN, f64::NAN),
        };
        let q_max = max_of(g.q.iter().copied());
        rows.push(MonitorRow {
            t: snap.t,
            r_min: curve.r_min(),
            kappa_psi_min: g.kappa_psi.iter().copied().fold(f64::INFINITY, f64::min),
            u_max: max_of(g.u.iter().copied()),
            zero_count: zero_count(curve, eps_z),
            q_max,
            q_max_times_gap: gap.map_or(f64::NAN, |gap| q_max * gap),
            k2_over_kpsi_max: max_of(g.k2.iter().zip(&g.kappa_psi).map(|(k2, kp)| k2 / kp)),
            abs_k_over_k2_max: max_of(g.kappa.iter().zip(&g.k2).map(|(k, k2)| (k / k2).abs())),
            ds_kpsi_sup_ord1: ds1,
            ds_kpsi_sup_ord2: ds2,
        });
    }

    let t_final = rows.last().map_or(0.0, |r| r.t);
    let burn_in_until = config.burn_in_fraction * t_final;
    let settled = || rows.iter().filter(move |r| r.t >= burn_in_until);
    let resolved_gap = BOUNDARY_LAYER_STEPS * trajectory.last_dt();
    let resolved = || rows.iter().filter(move |r| t_est.is_some_and(|t| t - r.t > resolved_gap));

    let mut verdicts = Vec::new();
    let kpsi_initial = rows.first().map_or(0.0, |r| r.kappa_psi_min);
    let mut positivity = Verdict::from_failures(
        "kappa_psi_positive",
        settled().filter(|r| !(r.kappa_psi_min > 0.0)).map(|r| r.t),
        format!("min kappa_psi after t = {burn_in_until:.6e}: {:.6e}", settled().map(|r| r.kappa_psi_min).fold(f64::INFINITY, f64::min)),
    );
    if kpsi_initial < 0.0 {
        positivity.skipped = true;
        positivity.passed = true;
        positivity.detail = format!("initial kappa_psi min {kpsi_initial:.6e} < 0; hypothesis not met, not asserted");
    }
    verdicts.push(positivity);

    verdicts.push(Verdict::from_failures(
        "graph_preserved",
        rows.iter().filter(|r| !(r.u_max < 0.0)).map(|r| r.t),
        format!("max u over run: {:.6e}", max_of(rows.iter().map(|r| r.u_max))),
    ));

    verdicts.push(Verdict::from_failures(
        "zero_count_nonincreasing",
        rows.windows(2).filter(|w| w[1].zero_count > w[0].zero_count).map(|w| w[1].t),
        format!(
            "zero count {} -> {}",
            rows.first().map_or(0, |r| r.zero_count),
            rows.last().map_or(0, |r| r.zero_count)
        ),
    ));

    let type_one = if t_est.is_some() {
        let cap = config.type_one_cap;
        Verdict::from_failures(
            "type_one_product",
            resolved().filter(|r| !(r.q_max_times_gap <= cap)).map(|r| r.t),
            format!("max Q (T - t) = {:.6e}, cap {cap}", max_of(resolved().map(|r| r.q_max_times_gap))),
        )
    } else {
        Verdict { name: "type_one_product", passed: true, skipped: true, first_failure: None, detail: "no T_est".into() }
    };
    verdicts.push(type_one);

    let (c2, c3) = (config.k2_over_kpsi_cap, config.k_over_k2_cap);
    verdicts.push(Verdict::from_failures(
        "quotients_bounded",
        settled()
            .filter(|r| !(r.k2_over_kpsi_max.is_finite() && r.k2_over_kpsi_max <= c2 && r.abs_k_over_k2_max <= c3))
            .map(|r| r.t),
        format!(
            "max k2/kappa_psi = {:.6e} (cap {c2}), max |kappa/k2| = {:.6e} (cap {c3})",
            max_of(settled().map(|r| r.k2_over_kpsi_max)),
            max_of(settled().map(|r| r.abs_k_over_k2_max))
        ),
    ));

    let ds = if t_est.is_some() {
        let [d1, d2] = config.ds_kpsi_caps;
        Verdict::from_failures(
            "rescaled_derivatives_bounded",
            resolved().filter(|r| !(r.ds_kpsi_sup_ord1 <= d1 && r.ds_kpsi_sup_ord2 <= d2)).map(|r| r.t),
            format!(
                "sup order 1 = {:.6e} (cap {d1}), order 2 = {:.6e} (cap {d2})",
                max_of(resolved().map(|r| r.ds_kpsi_sup_ord1)),
                max_of(resolved().map(|r| r.ds_kpsi_sup_ord2))
            ),
        )
    } else {
        Verdict {
            name: "rescaled_derivatives_bounded",
            passed: true,
            skipped: true,
            first_failure: None,
            detail: "no T_est".into(),
        }
    };
    verdicts.push(ds);

    Ok(MonitorReport { rows, verdicts, burn_in_until, warnings })
}
