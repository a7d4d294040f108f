//! Parabolic rescaling around the axis singularity.
//!
//! Stage one zooms in at fixed times `t_j` with `λ_j² = C/(T − t_j)` and
//! rescaled time `τ = λ_j²(t − t_j)`. Stage two switches to self-similar
//! variables `λ(τ)² = 1/(2(C − τ))`, `τ̃ = ln λ`; composed with stage one
//! this is the scale `Λ² = 1/(2(T − t))` applied to the original flow. Both
//! stages assume a flat ambient, where the rescaling is an exact dilation
//! about the blow-up point `(0, z_p)`.

use crate::curve_geometry::{differentiate_window, Domain, GraphCurve};
use crate::error::{Error, Result};
use crate::flow_solver::{FlowTrajectory, Termination};
use crate::numerics::UniformSpline;

/// Nodes added beyond each end of a sampling window before the spline is
/// built, so the natural end conditions stay away from the window.
const SPLINE_MARGIN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupCenter {
    pub z_p: f64,
    /// Set when the final curve is constant and every `z` is a minimiser;
    /// `z_p` is then the first grid abscissa.
    pub degenerate_minimum: bool,
}

/// Sub-grid location of the minimum of `r`, refined by the parabola
/// through the three nodes around the smallest sample.
pub fn minimum_location(curve: &GraphCurve) -> BlowupCenter {
    let r = curve.r();
    let n = r.len();
    let spread = curve.r_max() - curve.r_min();
    if spread <= 1e-12 * curve.r_max() {
        return BlowupCenter { z_p: curve.z(0), degenerate_minimum: true };
    }
    let i = curve.argmin();
    let periodic = curve.domain().is_periodic();
    if !periodic && (i == 0 || i == n - 1) {
        return BlowupCenter { z_p: curve.z(i), degenerate_minimum: false };
    }
    let (left, right) = curve.neighbours(i);
    let curv = left - 2.0 * r[i] + right;
    let shift = if curv > 0.0 { 0.5 * (left - right) / curv } else { 0.0 };
    let mut z_p = curve.z(i) + shift.clamp(-0.5, 0.5) * curve.dz();
    if let Domain::Periodic { period } = curve.domain() {
        z_p = z_p.rem_euclid(period);
    }
    BlowupCenter { z_p, degenerate_minimum: false }
}

pub fn locate_center(trajectory: &FlowTrajectory) -> Result<BlowupCenter> {
    if trajectory.termination != Termination::AxisReached {
        return Err(Error::Blowup(format!(
            "run terminated with {}, the blow-up point needs axis_reached",
            trajectory.termination.as_str()
        )));
    }
    let last = trajectory.final_snapshot().ok_or_else(|| Error::Blowup("trajectory has no snapshots".into()))?;
    Ok(minimum_location(&last.curve))
}

/// Value of node `k` of the curve continued beyond its grid: periodic
/// curves repeat, interval curves are reflected evenly across both ends.
fn extended(r: &[f64], periodic: bool, k: i64) -> f64 {
    let n = r.len() as i64;
    if periodic {
        r[k.rem_euclid(n) as usize]
    } else {
        let p = 2 * (n - 1);
        let m = k.rem_euclid(p);
        r[if m < n { m } else { p - m } as usize]
    }
}

/// Samples a curve (given by its radii on `domain`) at
/// `z_center + s` for `n` equally spaced `s ∈ [−half_width, half_width]`,
/// using a natural cubic spline through the continued grid.
pub fn sample_window(domain: Domain, r: &[f64], z_center: f64, half_width: f64, n: usize) -> Vec<f64> {
    let dz = domain.spacing(r.len());
    let start = match domain {
        Domain::Periodic { .. } => 0.0,
        Domain::Interval { a1, .. } => a1,
    };
    let lo = ((z_center - half_width - start) / dz).floor() as i64 - SPLINE_MARGIN as i64;
    let hi = ((z_center + half_width - start) / dz).ceil() as i64 + SPLINE_MARGIN as i64;
    let knots: Vec<f64> = (lo..=hi).map(|k| extended(r, domain.is_periodic(), k)).collect();
    let spline = UniformSpline::new(start + lo as f64 * dz, dz, knots);
    let step = 2.0 * half_width / (n - 1) as f64;
    (0..n).map(|i| spline.eval(z_center - half_width + i as f64 * step)).collect()
}

/// Radii of the trajectory at time `t`: `r²` is interpolated linearly
/// between the bracketing snapshots, which is exact for shrinking lines.
pub fn radii_at(trajectory: &FlowTrajectory, t: f64) -> Option<Vec<f64>> {
    let snaps = &trajectory.snapshots;
    let first = snaps.first()?;
    let last = snaps.last()?;
    if !(t >= first.t && t <= last.t) {
        return None;
    }
    let k = snaps.partition_point(|s| s.t <= t).clamp(1, snaps.len() - 1);
    let (a, b) = (&snaps[k - 1], &snaps[k]);
    if t == b.t {
        return Some(b.curve.r().to_vec());
    }
    let w = (t - a.t) / (b.t - a.t);
    Some(
        a.curve
            .r()
            .iter()
            .zip(b.curve.r())
            .map(|(ra, rb)| ((1.0 - w) * ra * ra + w * rb * rb).max(0.0).sqrt())
            .collect(),
    )
}

/// Sampling window of the rescaled curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    /// Half-width in rescaled `z̃`.
    pub half_width: f64,
    pub samples: usize,
}

impl Default for Window {
    fn default() -> Self {
        Self { half_width: 6.0, samples: 241 }
    }
}

fn rescaled_curve(
    trajectory: &FlowTrajectory,
    center: f64,
    t: f64,
    scale: f64,
    window: Window,
) -> Option<GraphCurve> {
    let radii = radii_at(trajectory, t)?;
    let domain = trajectory.snapshots[0].curve.domain();
    let r = sample_window(domain, &radii, center, window.half_width / scale, window.samples);
    let scaled = r.into_iter().map(|v| scale * v).collect();
    GraphCurve::new(Domain::Interval { a1: -window.half_width, a2: window.half_width }, scaled).ok()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Cell {
    pub tau: f64,
    /// `None` when `t_j + τ/λ_j²` falls outside the recorded range.
    pub curve: Option<GraphCurve>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Level {
    pub j: usize,
    pub t_j: f64,
    pub lambda: f64,
    pub cells: Vec<Stage1Cell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage2Curve {
    pub tau_tilde: f64,
    /// Stage-one time `C − e^{−2τ̃}/2`.
    pub tau: f64,
    /// Original flow time.
    pub t: f64,
    /// Composite scale `1/√(2(T − t))`.
    pub scale: f64,
    pub curve: GraphCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupFamily {
    pub center: BlowupCenter,
    pub c: f64,
    pub t_singular: f64,
    pub b: f64,
    pub stage1: Vec<Stage1Level>,
    pub stage2: Vec<Stage2Curve>,
}

fn check_scales(t_singular: f64, c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Blowup(format!("type-I constant C = {c} must be positive")));
    }
    if !t_singular.is_finite() {
        return Err(Error::Blowup("singular time is not finite".into()));
    }
    Ok(())
}

/// Stage-one rescaling `r̃ = λ_j r(z_p + z̃/λ_j, t_j + τ/λ_j²)` on the
/// given `τ` grid for each `t_j`.
pub fn rescale_stage1(
    trajectory: &FlowTrajectory,
    center: f64,
    t_singular: f64,
    c: f64,
    times: &[f64],
    taus: &[f64],
    window: Window,
) -> Result<Vec<Stage1Level>> {
    check_scales(t_singular, c)?;
    let mut levels = Vec::with_capacity(times.len());
    for (j, &t_j) in times.iter().enumerate() {
        if t_j >= t_singular {
            return Err(Error::Blowup(format!("t_{j} = {t_j} is not before the singular time {t_singular}")));
        }
        let lambda = (c / (t_singular - t_j)).sqrt();
        let cells = taus
            .iter()
            .map(|&tau| {
                let curve = if tau < c {
                    rescaled_curve(trajectory, center, t_j + tau / (lambda * lambda), lambda, window)
                } else {
                    None
                };
                Stage1Cell { tau, curve }
            })
            .collect();
        levels.push(Stage1Level { j, t_j, lambda, cells });
    }
    Ok(levels)
}

/// Stage-two curves at the requested `τ̃`, built on top of the stage-one
/// flow started at `t_j`.
pub fn rescale_stage2(
    trajectory: &FlowTrajectory,
    center: f64,
    t_singular: f64,
    c: f64,
    t_j: f64,
    tau_tildes: &[f64],
    window: Window,
) -> Result<Vec<Stage2Curve>> {
    check_scales(t_singular, c)?;
    let lambda_j2 = c / (t_singular - t_j);
    tau_tildes
        .iter()
        .map(|&tau_tilde| {
            let tau = c - 0.5 * (-2.0 * tau_tilde).exp();
            let t = t_j + tau / lambda_j2;
            let scale = (lambda_j2 / (2.0 * (c - tau))).sqrt();
            let curve = rescaled_curve(trajectory, center, t, scale, window).ok_or_else(|| {
                Error::Blowup(format!("tau_tilde = {tau_tilde} maps to t = {t}, outside the recorded run"))
            })?;
            Ok(Stage2Curve { tau_tilde, tau, t, scale, curve })
        })
        .collect()
}

/// Runs both stages. `C` defaults to the trajectory's observed type-I
/// constant, `T` to its extrapolated singular time.
#[allow(clippy::too_many_arguments)]
pub fn blowup_family(
    trajectory: &FlowTrajectory,
    b: f64,
    times: &[f64],
    taus: &[f64],
    stage2_start: f64,
    tau_tildes: &[f64],
    window: Window,
) -> Result<BlowupFamily> {
    let center = locate_center(trajectory)?;
    let t_singular = trajectory.t_est.ok_or_else(|| Error::Blowup("no singular-time estimate".into()))?;
    let c = trajectory.c_est.ok_or_else(|| Error::Blowup("no type-I constant estimate".into()))?;
    let stage1 = rescale_stage1(trajectory, center.z_p, t_singular, c, times, taus, window)?;
    let stage2 = rescale_stage2(trajectory, center.z_p, t_singular, c, stage2_start, tau_tildes, window)?;
    Ok(BlowupFamily { center, c, t_singular, b, stage1, stage2 })
}

/// `κψ + ⟨F, N⟩` for a curve in the flat plane with density `b ln r`,
/// positioned so that its abscissae are `z̃` (as produced by the rescaling).
/// The window ends use one-sided differences.
pub fn shrinker_residual(curve: &GraphCurve, b: f64) -> Result<Vec<f64>> {
    let r = curve.r();
    let (dr, d2r) = differentiate_window(r, curve.dz());
    Ok((0..r.len())
        .map(|i| {
            let w = (1.0 + dr[i] * dr[i]).sqrt();
            let kappa_psi = -d2r[i] / (w * w * w) + b / (r[i] * w);
            kappa_psi + (-r[i] + curve.z(i) * dr[i]) / w
        })
        .collect())
}

/// Residual level treated as zero when comparing residuals across `τ̃`:
/// an error `δ` in the singular time alone produces residuals of order
/// `δ/(T − t)`, about 1e-7 on the exact cylinder at `τ̃ = 3`.
pub const RESIDUAL_FLOOR: f64 = 1e-6;

/// Largest `|f|` over nodes with `|z̃| ≤ radius`.
pub fn sup_within(curve: &GraphCurve, values: &[f64], radius: f64) -> f64 {
    (0..curve.len()).filter(|&i| curve.z(i).abs() <= radius + 1e-12).map(|i| values[i].abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_solver::Snapshot;

    fn cylinder_trajectory(t_singular: f64, b: f64, count: usize) -> FlowTrajectory {
        let domain = Domain::Periodic { period: std::f64::consts::TAU };
        let snapshots = (0..count)
            .map(|k| {
                let t = t_singular * (1.0 - 0.9f64.powi(k as i32));
                let r = (2.0 * b * (t_singular - t)).sqrt();
                Snapshot { t, step: k, curve: GraphCurve::constant(domain, 64, r).unwrap() }
            })
            .collect();
        FlowTrajectory {
            snapshots,
            series: Vec::new(),
            termination: Termination::AxisReached,
            eps_stop: 1e-3,
            t_est: Some(t_singular),
            c4_est: Some(2.0 * b),
            c_est: Some(0.5),
            warnings: Vec::new(),
        }
    }

    #[test]
    fn parabolic_refinement_recovers_vertex() {
        let domain = Domain::Periodic { period: 4.0 };
        let z_star = 1.2345;
        let curve = GraphCurve::from_fn(domain, 80, |z| 0.5 + (z - z_star).powi(2)).unwrap();
        let c = minimum_location(&curve);
        assert!(!c.degenerate_minimum);
        assert!((c.z_p - z_star).abs() < 1e-12);
    }

    #[test]
    fn constant_curve_is_degenerate() {
        let curve = GraphCurve::constant(Domain::Interval { a1: -1.0, a2: 2.0 }, 32, 0.3).unwrap();
        let c = minimum_location(&curve);
        assert!(c.degenerate_minimum);
        assert_eq!(c.z_p, -1.0);
    }

    #[test]
    fn center_requires_axis_termination() {
        let mut tr = cylinder_trajectory(0.5, 1.0, 10);
        tr.termination = Termination::MaxSteps;
        assert!(locate_center(&tr).is_err());
    }

    #[test]
    fn window_sampling_wraps_and_reflects() {
        let periodic = Domain::Periodic { period: std::f64::consts::TAU };
        let c = GraphCurve::from_fn(periodic, 256, |z| 1.0 + 0.2 * z.cos()).unwrap();
        let v = sample_window(periodic, c.r(), 0.0, 0.5, 11);
        for (i, x) in v.iter().enumerate() {
            let z = -0.5 + 0.1 * i as f64;
            assert!((x - (1.0 + 0.2 * z.cos())).abs() < 1e-8);
        }
        let interval = Domain::Interval { a1: 0.0, a2: std::f64::consts::PI };
        let c = GraphCurve::from_fn(interval, 200, |z| 1.0 + 0.2 * z.cos()).unwrap();
        let v = sample_window(interval, c.r(), std::f64::consts::PI, 0.3, 7);
        for (i, x) in v.iter().enumerate() {
            let z = std::f64::consts::PI - 0.3 + 0.1 * i as f64;
            assert!((x - (1.0 + 0.2 * z.cos())).abs() < 1e-7, "{i}");
        }
    }

    #[test]
    fn cylinder_stage1_is_independent_of_j() {
        let tr = cylinder_trajectory(0.5, 1.0, 200);
        let taus = [-1.0, -0.5, 0.0, 0.25, 0.45];
        let levels = rescale_stage1(&tr, 0.0, 0.5, 0.5, &[0.0, 0.25, 0.375], &taus, Window::default()).unwrap();
        for level in &levels {
            for cell in &level.cells {
                let Some(curve) = &cell.curve else {
                    assert!(level.t_j + cell.tau / (level.lambda * level.lambda) < 0.0);
                    continue;
                };
                let expected = (2.0 * (0.5 - cell.tau)).sqrt();
                for r in curve.r() {
                    assert!((r - expected).abs() < 1e-8, "j={} tau={}", level.j, cell.tau);
                }
            }
        }
        let at_zero = levels[1].cells[2].curve.as_ref().unwrap();
        assert!((at_zero.r()[100] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cylinder_stage2_is_the_shrinker_line() {
        let b = 2.5;
        let tr = cylinder_trajectory(0.4, b, 300);
        let curves = rescale_stage2(&tr, 1.0, 0.4, 0.5, 0.1, &[0.0, 1.0, 2.0, 3.0], Window::default()).unwrap();
        for s in &curves {
            for r in s.curve.r() {
                assert!((r - b.sqrt()).abs() < 1e-8, "tau_tilde = {}", s.tau_tilde);
            }
            let res = shrinker_residual(&s.curve, b).unwrap();
            assert!(sup_within(&s.curve, &res, 6.0) < 1e-7);
        }
    }

    #[test]
    fn stage2_at_zero_matches_stage1() {
        let tr = cylinder_trajectory(0.5, 1.0, 200);
        let c = 0.8;
        let s2 = rescale_stage2(&tr, 0.0, 0.5, c, 0.1, &[0.0], Window::default()).unwrap();
        let s1 = rescale_stage1(&tr, 0.0, 0.5, c, &[0.1], &[c - 0.5], Window::default()).unwrap();
        let a = s1[0].cells[0].curve.as_ref().unwrap();
        assert!((s2[0].tau - (c - 0.5)).abs() < 1e-15);
        for (x, y) in a.r().iter().zip(s2[0].curve.r()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn stage2_outside_run_is_an_error() {
        let tr = cylinder_trajectory(0.5, 1.0, 20);
        assert!(rescale_stage2(&tr, 0.0, 0.5, 0.5, 0.0, &[12.0], Window::default()).is_err());
    }

    #[test]
    fn residual_of_lines() {
        let domain = Domain::Interval { a1: -3.0, a2: 3.0 };
        for (b, c) in [(1.0, 1.0), (2.0, 0.7), (2.5, 3.0)] {
            let curve = GraphCurve::constant(domain, 61, c).unwrap();
            let res = shrinker_residual(&curve, b).unwrap();
            for v in res {
                assert!((v - (b / c - c)).abs() < 1e-12);
            }
        }
    }
}
