//! Method-of-lines integration of the graph form of the flow,
//!
//! ```text
//! ∂r/∂t = κψ / u = (r̈ − ṙ²φ′)/(ṙ² + e^{2φ}) − φ′ − ψ′,
//! ```
//!
//! with explicit RK4 in time and central differences in `z`. The step size
//! respects both the diffusive limit and the drift `−ψ′ ~ −b/r` that
//! stiffens as the curve approaches the axis. Runs stop once `min r` drops
//! below a threshold; the singular time is then extrapolated from the
//! `min r²` history.

use std::fmt;

use crate::curve_geometry::{check_domain, neighbours, node_geometry, Domain, GraphCurve};
use crate::error::{Error, Result};
use crate::numerics::{bisect, dopri5, fit_line};
use crate::surface_density::{validate_default, SurfaceDensityModel};

/// Largest tolerated `|ṙ|` before a run is aborted (no remeshing is done).
pub const SLOPE_LIMIT: f64 = 1e3;
const MAX_REJECTIONS: usize = 60;

/// Initial data families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitFamily {
    Constant { c: f64 },
    /// `c + a cos(k·2πz/L)` on periodic domains and
    /// `c + a cos(kπ(z − a1)/(a2 − a1))` on intervals, which meets both
    /// ends with zero slope.
    Cosine { c: f64, a: f64, k: u32 },
}

pub fn initial_curve(domain: Domain, n: usize, family: InitFamily) -> Result<GraphCurve> {
    match family {
        InitFamily::Constant { c } => GraphCurve::constant(domain, n, c),
        InitFamily::Cosine { c, a, k } => {
            let k = k as f64;
            match domain {
                Domain::Periodic { period } => {
                    let w = k * std::f64::consts::TAU / period;
                    GraphCurve::from_fn(domain, n, |z| c + a * (w * z).cos())
                }
                Domain::Interval { a1, a2 } => {
                    let w = k * std::f64::consts::PI / (a2 - a1);
                    GraphCurve::from_fn(domain, n, |z| c + a * (w * (z - a1)).cos())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Safety factor on the step-size budget.
    pub sigma: f64,
    /// Stop once `min r` is below this; `None` means `1e-3 · min r(0)`.
    pub eps_stop: Option<f64>,
    pub max_steps: usize,
    /// Snapshot cadence in steps.
    pub snapshot_every: usize,
    /// Extra snapshot whenever `min r` has shrunk below this fraction of its
    /// value at the previous snapshot; keeps the approach to the axis
    /// densely sampled. `0` disables it.
    pub snapshot_shrink: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { sigma: 0.2, eps_stop: None, max_steps: 2_000_000, snapshot_every: 100, snapshot_shrink: 0.97 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub curve: GraphCurve,
    pub step_count: usize,
    pub last_dt: f64,
}

impl FlowState {
    pub fn new(curve: GraphCurve) -> Self {
        Self { t: 0.0, curve, step_count: 0, last_dt: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub step: usize,
    pub curve: GraphCurve,
}

/// One entry of the per-step scalar log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSample {
    pub t: f64,
    pub r_min: f64,
    /// Step that led to this sample (0 for the initial sample).
    pub dt: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    AxisReached,
    MaxSteps,
    BlowUpOfRhs,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::AxisReached => "axis_reached",
            Termination::MaxSteps => "max_steps",
            Termination::BlowUpOfRhs => "blow_up_of_rhs",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "axis_reached" => Some(Termination::AxisReached),
            "max_steps" => Some(Termination::MaxSteps),
            "blow_up_of_rhs" => Some(Termination::BlowUpOfRhs),
            _ => None,
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory {
    pub snapshots: Vec<Snapshot>,
    pub series: Vec<StepSample>,
    pub termination: Termination,
    pub eps_stop: f64,
    pub t_est: Option<f64>,
    pub c4_est: Option<f64>,
    /// `sup q_max · (T_est − t)` outside the final boundary layer.
    pub c_est: Option<f64>,
    pub warnings: Vec<String>,
}

impl FlowTrajectory {
    pub fn last_dt(&self) -> f64 {
        self.series.last().map_or(0.0, |s| s.dt)
    }

    pub fn final_snapshot(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    /// Fills `t_est`, `c4_est` and `c_est` from the step log.
    pub fn estimate(&mut self) {
        match estimate_t(&self.series) {
            Ok(est) => {
                self.t_est = Some(est.t_est);
                self.c4_est = Some(est.c4_est);
                self.c_est = observed_type_one_constant(&self.series, est.t_est, self.last_dt());
            }
            Err(e) => {
                self.t_est = None;
                self.c4_est = None;
                self.c_est = None;
                self.warnings.push(e.to_string());
            }
        }
    }
}

/// Rows closer to the estimated singular time than this many final steps
/// are excluded from type-I products; the extrapolation error of `T_est`
/// is comparable to the gap there.
pub const BOUNDARY_LAYER_STEPS: f64 = 10.0;

fn observed_type_one_constant(series: &[StepSample], t_est: f64, last_dt: f64) -> Option<f64> {
    series
        .iter()
        .filter(|s| t_est - s.t > BOUNDARY_LAYER_STEPS * last_dt)
        .map(|s| s.q_max * (t_est - s.t))
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
}

#[inline]
fn velocity(model: &SurfaceDensityModel, r: f64, dr: f64, d2r: f64) -> f64 {
    let e2phi = (2.0 * model.phi(r)).exp();
    let dphi = model.dphi(r);
    (d2r - dr * dr * dphi) / (dr * dr + e2phi) - dphi - model.dpsi(r)
}

fn rhs_into(periodic: bool, dz: f64, r: &[f64], model: &SurfaceDensityModel, out: &mut [f64]) {
    let (inv2, inv_sq) = (0.5 / dz, 1.0 / (dz * dz));
    for (i, o) in out.iter_mut().enumerate() {
        let (left, right) = neighbours(periodic, r, i);
        let dr = (right - left) * inv2;
        let d2r = (right - 2.0 * r[i] + left) * inv_sq;
        *o = velocity(model, r[i], dr, d2r);
    }
}

/// Normal velocity expressed as `∂r/∂t` per node.
pub fn rhs(curve: &GraphCurve, model: &SurfaceDensityModel) -> Result<Vec<f64>> {
    check_domain(curve, model)?;
    let mut out = vec![0.0; curve.len()];
    rhs_into(curve.domain().is_periodic(), curve.dz(), curve.r(), model, &mut out);
    Ok(out)
}

/// `σ · min(dz² · min_i(ṙ² + e^{2φ}), r_min²/(4b))`.
pub fn stable_dt(curve: &GraphCurve, model: &SurfaceDensityModel, sigma: f64) -> f64 {
    let dz = curve.dz();
    let r = curve.r();
    let periodic = curve.domain().is_periodic();
    let mut metric_min = f64::INFINITY;
    for i in 0..r.len() {
        let (left, right) = neighbours(periodic, r, i);
        let dr = (right - left) / (2.0 * dz);
        metric_min = metric_min.min(dr * dr + (2.0 * model.phi(r[i])).exp());
    }
    let r_min = curve.r_min();
    sigma * (dz * dz * metric_min).min(r_min * r_min / (4.0 * model.b()))
}

/// One classical RK4 step. The returned state is rejected if any stage or
/// the result leaves `(0, r_max]` or turns non-finite.
pub fn step(state: &FlowState, model: &SurfaceDensityModel, dt: f64) -> Result<FlowState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::StepRejected(format!("dt = {dt} is not a positive step")));
    }
    let curve = &state.curve;
    let n = curve.len();
    let periodic = curve.domain().is_periodic();
    let dz = curve.dz();
    let r0 = curve.r();

    let admissible = |r: &[f64]| r.iter().position(|&v| !(v.is_finite() && model.in_domain(v)));
    if let Some(i) = admissible(r0) {
        return Err(Error::StepRejected(format!("input node {i} has r = {}", r0[i])));
    }

    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut stage = vec![0.0; n];
    rhs_into(periodic, dz, r0, model, &mut k[0]);
    for s in 1..4 {
        let c = if s == 3 { dt } else { 0.5 * dt };
        for i in 0..n {
            stage[i] = r0[i] + c * k[s - 1][i];
        }
        if let Some(i) = admissible(&stage) {
            return Err(Error::StepRejected(format!("stage {s} node {i} reached r = {}", stage[i])));
        }
        let (_, rest) = k.split_at_mut(s);
        rhs_into(periodic, dz, &stage, model, &mut rest[0]);
    }
    let next: Vec<f64> =
        (0..n).map(|i| r0[i] + dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i])).collect();
    if let Some(i) = admissible(&next) {
        return Err(Error::StepRejected(format!("node {i} reached r = {}", next[i])));
    }
    Ok(FlowState { t: state.t + dt, curve: curve.with_radii(next), step_count: state.step_count + 1, last_dt: dt })
}

fn max_q_and_slope(curve: &GraphCurve, model: &SurfaceDensityModel) -> (f64, f64) {
    let dz = curve.dz();
    let r = curve.r();
    let periodic = curve.domain().is_periodic();
    let (mut q_max, mut slope_max) = (0.0_f64, 0.0_f64);
    for i in 0..r.len() {
        let (left, right) = neighbours(periodic, r, i);
        let dr = (right - left) / (2.0 * dz);
        let d2r = (right - 2.0 * r[i] + left) / (dz * dz);
        q_max = q_max.max(node_geometry(model, r[i], dr, d2r).q);
        slope_max = slope_max.max(dr.abs());
    }
    (q_max, slope_max)
}

/// Integrates from `init` toward the axis singularity.
pub fn run(init: &GraphCurve, model: &SurfaceDensityModel, config: &SolverConfig) -> Result<FlowTrajectory> {
    if !(config.sigma > 0.0 && config.sigma.is_finite()) {
        return Err(Error::Config(format!("solver.sigma = {} must be positive", config.sigma)));
    }
    if config.snapshot_every == 0 {
        return Err(Error::Config("snapshots.every must be at least 1".into()));
    }
    let rho = validate_default(model).rho;
    let (lo, hi) = (init.r_min(), init.r_max());
    if !(lo > 0.0 && hi < rho && model.in_domain(hi)) {
        return Err(Error::Config(format!(
            "initial curve spans r in [{lo}, {hi}], outside the admissible band 0 < r < rho = {rho}"
        )));
    }
    let eps_stop = config.eps_stop.unwrap_or(1e-3 * lo);
    if !(eps_stop > 0.0 && eps_stop < lo) {
        return Err(Error::Config(format!("solver.eps_stop = {eps_stop} must lie in (0, min r(0) = {lo})")));
    }

    let mut warnings = Vec::new();
    let geometry = crate::curve_geometry::pointwise_geometry(init, model)?;
    let kpsi_min = geometry.kappa_psi.iter().copied().fold(f64::INFINITY, f64::min);
    let kpsi_scale = geometry.kappa_psi.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if kpsi_min < -1e-9 * kpsi_scale {
        warnings.push(format!("initial curve has kappa_psi min = {kpsi_min:e} < 0; positivity is not guaranteed"));
    }

    let mut state = FlowState::new(init.clone());
    let (q0, _) = max_q_and_slope(init, model);
    let mut series = vec![StepSample { t: 0.0, r_min: lo, dt: 0.0, q_max: q0 }];
    let mut snapshots = vec![Snapshot { t: 0.0, step: 0, curve: init.clone() }];
    let mut last_snapshot_rmin = lo;

    let termination = loop {
        let r_min = state.curve.r_min();
        if r_min < eps_stop {
            break Termination::AxisReached;
        }
        if state.step_count >= config.max_steps {
            break Termination::MaxSteps;
        }
        let mut dt = stable_dt(&state.curve, model, config.sigma);
        let mut next = None;
        for _ in 0..MAX_REJECTIONS {
            match step(&state, model, dt) {
                Ok(s) => {
                    next = Some(s);
                    break;
                }
                Err(_) => dt *= 0.5,
            }
        }
        let Some(next) = next else {
            warnings.push(format!("step size underflow at t = {} (dt = {dt:e})", state.t));
            break Termination::BlowUpOfRhs;
        };
        state = next;
        let (q_max, slope_max) = max_q_and_slope(&state.curve, model);
        let r_min = state.curve.r_min();
        series.push(StepSample { t: state.t, r_min, dt, q_max });

        let due = state.step_count % config.snapshot_every == 0
            || (config.snapshot_shrink > 0.0 && r_min <= config.snapshot_shrink * last_snapshot_rmin);
        if due {
            snapshots.push(Snapshot { t: state.t, step: state.step_count, curve: state.curve.clone() });
            last_snapshot_rmin = r_min;
        }
        if slope_max > SLOPE_LIMIT {
            warnings.push(format!("max |dr/dz| = {slope_max:e} exceeds {SLOPE_LIMIT:e} at t = {}", state.t));
            break Termination::BlowUpOfRhs;
        }
    };
    if snapshots.last().map(|s| s.step) != Some(state.step_count) {
        snapshots.push(Snapshot { t: state.t, step: state.step_count, curve: state.curve.clone() });
    }

    let mut trajectory = FlowTrajectory {
        snapshots,
        series,
        termination,
        eps_stop,
        t_est: None,
        c4_est: None,
        c_est: None,
        warnings,
    };
    trajectory.estimate();
    Ok(trajectory)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeEstimate {
    pub t_est: f64,
    pub c4_est: f64,
}

/// Fits `min r² ≈ C₄ (T − t)` by least squares near the end of the step
/// log. Requires at least 50 samples below a fifth of the initial `min r`.
pub fn estimate_t(series: &[StepSample]) -> Result<TimeEstimate> {
    let Some(first) = series.first() else {
        return Err(Error::Estimation("empty series".into()));
    };
    let deep = series.iter().filter(|s| s.r_min < 0.2 * first.r_min).count();
    if deep < 50 {
        return Err(Error::Estimation(format!(
            "only {deep} samples below 0.2 of the initial min r; need at least 50"
        )));
    }
    fit_singular_time(series)
}

/// Samples needed inside the final decade of `min r` for the local fit.
const DECADE_SAMPLES: usize = 10;

/// The least-squares part of [`estimate_t`] without the depth requirement.
///
/// The slope of `min r²` drifts slowly for non-cylindrical data, so a line
/// through a long stretch of the log extrapolates a biased root. The fit
/// uses the samples in the final decade of `min r` when there are enough
/// of them and falls back to the final 20% of the log otherwise.
pub fn fit_singular_time(series: &[StepSample]) -> Result<TimeEstimate> {
    let r_final = series.last().map_or(0.0, |s| s.r_min);
    let decade = series.iter().rev().take_while(|s| s.r_min <= 10.0 * r_final).count();
    let take = if decade >= DECADE_SAMPLES { decade } else { (series.len() / 5).max(2) };
    let tail = &series[series.len().saturating_sub(take)..];
    let ts: Vec<f64> = tail.iter().map(|s| s.t).collect();
    let r2: Vec<f64> = tail.iter().map(|s| s.r_min * s.r_min).collect();
    let fit = fit_line(&ts, &r2).ok_or_else(|| Error::Estimation("degenerate time samples".into()))?;
    if !(fit.slope < 0.0) {
        return Err(Error::Estimation(format!("fitted slope {} of min r^2 is not negative", fit.slope)));
    }
    Ok(TimeEstimate { t_est: -fit.intercept / fit.slope, c4_est: -fit.slope })
}

/// Evolution of the line `r = r0` under the flow, `dr/dt = −(φ′ + ψ′)`.
///
/// Stored as the inverse function `t(r)`, which is smooth down to the axis
/// because `1/(φ′ + ψ′) ~ r/b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierTable {
    /// `(t, r)` rows, `t` increasing, ending at `r = BARRIER_END`.
    pub rows: Vec<(f64, f64)>,
    pub singular_time: f64,
    speed: Vec<f64>,
}

pub const BARRIER_END: f64 = 1e-6;
pub const BARRIER_TOL: f64 = 1e-10;

pub fn barrier_solution(model: &SurfaceDensityModel, r0: f64) -> Result<BarrierTable> {
    let rho = validate_default(model).rho;
    if !(r0 > BARRIER_END && r0 < rho && model.in_domain(r0)) {
        return Err(Error::Config(format!("barrier start r0 = {r0} outside the admissible band (0, {rho})")));
    }
    let speed = |r: f64| model.dphi(r) + model.dpsi(r);
    let path = dopri5(|r, _| -1.0 / speed(r), r0, 0.0, BARRIER_END, BARRIER_TOL);
    let rows: Vec<(f64, f64)> = path.iter().map(|&(r, t)| (t, r)).collect();
    let t_end = rows.last().map_or(0.0, |p| p.0);
    // Remaining time below BARRIER_END, where φ′ + ψ′ ≈ b/r.
    let singular_time = t_end + BARRIER_END * BARRIER_END / (2.0 * model.b());
    let speeds = rows.iter().map(|&(_, r)| speed(r)).collect();
    Ok(BarrierTable { rows, singular_time, speed: speeds })
}

impl BarrierTable {
    /// Radius of the barrier line at time `t`, `None` past the table end.
    /// Cubic Hermite interpolation of `t(r)` inverted by bisection.
    pub fn radius_at(&self, t: f64) -> Option<f64> {
        let (t_first, r_first) = *self.rows.first()?;
        if t <= t_first {
            return Some(r_first);
        }
        let k = self.rows.iter().position(|&(tk, _)| tk >= t)?;
        let ((t0, r0), (t1, r1)) = (self.rows[k - 1], self.rows[k]);
        let (m0, m1) = (-1.0 / self.speed[k - 1], -1.0 / self.speed[k]);
        let h = r1 - r0;
        let hermite = |r: f64| {
            let s = (r - r0) / h;
            let (s2, s3) = (s * s, s * s * s);
            (2.0 * s3 - 3.0 * s2 + 1.0) * t0
                + (s3 - 2.0 * s2 + s) * h * m0
                + (-2.0 * s3 + 3.0 * s2) * t1
                + (s3 - s2) * h * m1
        };
        Some(bisect(|r| hermite(r) - t, r1, r0, 1e-15, 200))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_geometry::pointwise_geometry;
    use std::f64::consts::{FRAC_PI_4, TAU};

    fn periodic() -> Domain {
        Domain::Periodic { period: TAU }
    }

    #[test]
    fn rhs_on_lines() {
        let flat = SurfaceDensityModel::flat_log(1.0, 10.0).unwrap();
        let c = GraphCurve::constant(periodic(), 32, 2.0).unwrap();
        assert!(rhs(&c, &flat).unwrap().iter().all(|&v| v == -0.5));

        let b = 2.0;
        let sphere = SurfaceDensityModel::sphere_log(b, 1.5).unwrap();
        let c = GraphCurve::constant(periodic(), 32, 0.6).unwrap();
        let expected = f64::tan(0.6) - b / f64::tan(0.6);
        assert!(rhs(&c, &sphere).unwrap().iter().all(|&v| (v - expected).abs() < 1e-14));
    }

    #[test]
    fn rhs_matches_kappa_psi_over_u() {
        let flat = SurfaceDensityModel::flat_log(1.0, 10.0).unwrap();
        let c = initial_curve(periodic(), 256, InitFamily::Cosine { c: 1.0, a: 0.2, k: 1 }).unwrap();
        let v = rhs(&c, &flat).unwrap();
        let g = pointwise_geometry(&c, &flat).unwrap();
        for i in 0..c.len() {
            assert!((v[i] - g.kappa_psi[i] / g.u[i]).abs() < 1e-12);
        }
        // Hand value at z = 0 with exact derivatives: -0.2 - 1/1.2.
        let exact = velocity(&flat, 1.2, 0.0, -0.2);
        assert!((exact - (-0.2 - 1.0 / 1.2)).abs() < 1e-15);
    }

    #[test]
    fn one_step_on_cylinder_is_fourth_order_accurate() {
        let flat = SurfaceDensityModel::flat_log(1.0, 10.0).unwrap();
        let state = FlowState::new(GraphCurve::constant(periodic(), 32, 1.0).unwrap());
        let next = step(&state, &flat, 1e-4).unwrap();
        let exact = (1.0 - 2e-4f64).sqrt();
        assert!(next.curve.r().iter().all(|&r| (r - exact).abs() < 1e-12));
        assert_eq!(next.step_count, 1);
        assert_eq!(next.t, 1e-4);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let flat = SurfaceDensityModel::flat_log(1.0, 10.0).unwrap();
        let state = FlowState::new(GraphCurve::constant(periodic(), 32, 1.0).unwrap());
        assert!(matches!(step(&state, &flat, 10.0), Err(Error::StepRejected(_))));
        assert!(matches!(step(&state, &flat, -1.0), Err(Error::StepRejected(_))));
    }

    #[test]
    fn perturbed_step_within_budget_stays_valid() {
        let flat = SurfaceDensityModel::flat_log(1.0, 10.0).unwrap();
        let c = initial_curve(periodic(), 128, InitFamily::Cosine { c: 1.0, a: 0.2, k: 1 }).unwrap();
        let dt = stable_dt(&c, &flat, 0.2);
        let mut state = FlowState::new(c);
        for _ in 0..50 {
            state = step(&state, &flat, dt).unwrap();
        }
        assert!(state.curve.r_min() > 0.0);
    }

    #[test]
    fn fit_on_synthetic_series() {
        let series: Vec<StepSample> = (0..=190)
            .map(|i| {
                let t = 0.3 + 0.001 * i as f64;
                StepSample { t, r_min: (1.0 - 2.0 * t).sqrt(), dt: 0.001, q_max: 0.0 }
            })
            .collect();
        let est = fit_singular_time(&series).unwrap();
        assert!((est.t_est - 0.5).abs() < 1e-12);
        assert!((est.c4_est - 2.0).abs() < 1e-12);
    }

    #[test]
    fn estimate_requires_deep_samples() {
        let series: Vec<StepSample> =
            (0..100).map(|i| StepSample { t: i as f64, r_min: 1.0, dt: 1.0, q_max: 0.0 }).collect();
        assert!(matches!(estimate_t(&series), Err(Error::Estimation(_))));
    }

    #[test]
    fn barrier_matches_closed_form_on_flat() {
        let flat = SurfaceDensityModel::flat_log(1.0, 10.0).unwrap();
        let table = barrier_solution(&flat, 1.0).unwrap();
        assert!((table.singular_time - 0.5).abs() < 1e-9);
        assert!((table.radius_at(0.375).unwrap() - 0.5).abs() < 1e-8);
        for &(t, r) in &table.rows {
            assert!((r - (1.0 - 2.0 * t).max(0.0).sqrt()).abs() < 1e-7, "t = {t}");
        }
        let flat_b = SurfaceDensityModel::flat_log(2.5, 10.0).unwrap();
        let table = barrier_solution(&flat_b, 0.8).unwrap();
        assert!((table.singular_time - 0.64 / 5.0).abs() < 1e-9);
    }

    #[test]
    fn sphere_barrier_respects_finite_time_bound() {
        let sphere = SurfaceDensityModel::sphere_log(1.0, 1.5).unwrap();
        let table = barrier_solution(&sphere, 0.5).unwrap();
        for w in table.rows.windows(2) {
            assert!(w[1].1 < w[0].1 && w[1].0 > w[0].0, "{w:?}");
        }
        let mu = crate::surface_density::barrier_speed_floor(&sphere, 0.5);
        assert!(table.singular_time < 0.5 / mu);
    }

    #[test]
    fn barrier_outside_band_is_rejected() {
        let sphere = SurfaceDensityModel::sphere_log(1.0, 1.5).unwrap();
        assert!(matches!(barrier_solution(&sphere, FRAC_PI_4 + 0.01), Err(Error::Config(_))));
    }

    #[test]
    fn run_rejects_curves_outside_band() {
        let sphere = SurfaceDensityModel::sphere_log(1.0, 1.5).unwrap();
        let c = GraphCurve::constant(periodic(), 32, 0.9).unwrap();
        assert!(matches!(run(&c, &sphere, &SolverConfig::default()), Err(Error::Config(_))));
    }
}
