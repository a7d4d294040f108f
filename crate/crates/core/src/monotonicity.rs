//! Density-weighted Gaussian functional of planar curves with density
//! `b ln r`,
//!
//! ```text
//! Φ(t) = (4π(T − t))^{−(1+b)/2} ∫ e^{−|X|²/(4(T − t))} r^b ds,
//! ```
//!
//! its dissipation `∫ (κψ + ⟨X, N⟩/(2(T − t)))² (same weight)`, and the
//! weighted Minkowski identity `Δψ ½|X|² = 1 + b + κψ⟨N, X⟩`.
//! Positions are measured from the blow-up point `(0, z_p)`.

use std::f64::consts::PI;

use crate::blowup::Stage2Curve;
use crate::curve_geometry::{differentiate, differentiate_window, Domain, GraphCurve};
use crate::error::{Error, Result};

/// Quadrature half-width in units of `√(T − t)`.
pub const WINDOW_FACTOR: f64 = 8.0;
/// Relative slack allowed when checking that `Φ` does not increase.
pub const MONOTONE_TOL: f64 = 1e-6;
/// Relative mismatch allowed between `dΦ/dt` and `−dissipation`.
pub const IDENTITY_TOL: f64 = 0.05;
/// Dissipation below this fraction of the natural rate `Φ/(T − t)` is
/// treated as zero in the identity check, so exact shrinkers (where both
/// sides vanish) are judged against quadrature noise rather than zero.
pub const DISSIPATION_FLOOR: f64 = 1e-4;
pub const MIN_SAMPLES: usize = 5;
/// Rows whose Gaussian width `√(T − t)` spans fewer grid cells than this
/// are reported but not checked: the quadrature no longer resolves them.
pub const RESOLVED_WIDTH_CELLS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianDensity {
    pub value: f64,
    pub dissipation: f64,
}

/// Per-node data of a flat-ambient curve.
struct Node {
    z: f64,
    r: f64,
    dr: f64,
    kappa_psi: f64,
}

fn node(z: f64, r: f64, dr: f64, d2r: f64, b: f64) -> Node {
    let w = (1.0 + dr * dr).sqrt();
    Node { z, r, dr, kappa_psi: -d2r / (w * w * w) + b / (r * w) }
}

fn weighted_integrals(nodes: impl Iterator<Item = Node>, dz: f64, gap: f64, b: f64) -> GaussianDensity {
    let norm = (4.0 * PI * gap).powf(-0.5 * (1.0 + b));
    let (mut value, mut dissipation) = (0.0, 0.0);
    for p in nodes {
        let w = (1.0 + p.dr * p.dr).sqrt();
        let weight = norm * (-(p.r * p.r + p.z * p.z) / (4.0 * gap)).exp() * p.r.powf(b) * w;
        let support = (-p.r + p.z * p.dr) / w;
        let defect = p.kappa_psi + support / (2.0 * gap);
        value += weight;
        dissipation += defect * defect * weight;
    }
    GaussianDensity { value: value * dz, dissipation: dissipation * dz }
}

/// `Φ` and its dissipation at time `t` for blow-up time `t_singular`, with
/// the curve continued periodically (or by even reflection on intervals)
/// so that the quadrature covers `|z − z_p| ≤ 8√(T − t)`.
pub fn gaussian_density(curve: &GraphCurve, z_p: f64, t: f64, t_singular: f64, b: f64) -> Result<GaussianDensity> {
    gaussian_density_window(curve, z_p, t, t_singular, b, WINDOW_FACTOR)
}

pub fn gaussian_density_window(
    curve: &GraphCurve,
    z_p: f64,
    t: f64,
    t_singular: f64,
    b: f64,
    window_factor: f64,
) -> Result<GaussianDensity> {
    if !(t < t_singular) {
        return Err(Error::Monotonicity(format!("t = {t} is not before T = {t_singular}")));
    }
    let gap = t_singular - t;
    let (dr, d2r) = differentiate(curve);
    let r = curve.r();
    let n = r.len() as i64;
    let dz = curve.dz();
    let z0 = curve.z(0);
    let half = window_factor * gap.sqrt();
    let lo = ((z_p - half - z0) / dz).ceil() as i64;
    let hi = ((z_p + half - z0) / dz).floor() as i64;
    let periodic = curve.domain().is_periodic();
    let nodes = (lo..=hi).map(|k| {
        let z = z0 + k as f64 * dz - z_p;
        let (i, sign) = if periodic {
            (k.rem_euclid(n), 1.0)
        } else {
            let p = 2 * (n - 1);
            let m = k.rem_euclid(p);
            if m < n {
                (m, 1.0)
            } else {
                (p - m, -1.0)
            }
        };
        let i = i as usize;
        node(z, r[i], sign * dr[i], d2r[i], b)
    });
    Ok(weighted_integrals(nodes, dz, gap, b))
}

/// Value of `Φ` on the shrinking line of radius `√(2b(T − t))`.
pub fn self_similar_value(b: f64) -> f64 {
    (b / (2.0 * PI)).powf(0.5 * b) * (-0.5 * b).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRow {
    pub t: f64,
    pub value: f64,
    pub dissipation: f64,
    /// Second-order difference quotient on the (nonuniform) time grid.
    pub dvalue_dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDensitySeries {
    pub rows: Vec<DensityRow>,
}

pub const MONOTONICITY_HEADER: &str = "t,value,dissipation,dvalue_dt";

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityVerdict {
    pub passed: bool,
    pub monotone: bool,
    pub identity: bool,
    /// Largest `|dΦ/dt + D| / max(D, floor)` over checked rows.
    pub max_mismatch: f64,
    /// Largest relative increase `(Φ_{k+1} − Φ_k)/Φ_k` over resolved rows.
    pub max_increase: f64,
    /// Rows entering the identity check.
    pub checked_rows: usize,
    /// Rows excluded from both checks as unresolved.
    pub unresolved_rows: usize,
}

/// Derivative of samples `(x_k, y_k)` on a nonuniform grid, second order
/// inside and first order at the ends.
pub fn nonuniform_derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![f64::NAN; n];
    if n < 2 {
        return d;
    }
    for k in 1..n - 1 {
        let (h0, h1) = (x[k] - x[k - 1], x[k + 1] - x[k]);
        d[k] = (-h1 / (h0 * (h0 + h1))) * y[k - 1] + ((h1 - h0) / (h0 * h1)) * y[k] + (h0 / (h1 * (h0 + h1))) * y[k + 1];
    }
    d[0] = (y[1] - y[0]) / (x[1] - x[0]);
    d[n - 1] = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
    d
}

/// Evaluates `Φ` on time-ordered curves and checks that it is
/// nonincreasing and that `dΦ/dt = −dissipation` within 5% on the rows in
/// the middle 80% of the time span. Rows with `√(T − t)` below
/// [`RESOLVED_WIDTH_CELLS`] grid cells are left out of both checks.
pub fn monotonicity_check(
    samples: &[(f64, &GraphCurve)],
    z_p: f64,
    t_singular: f64,
    b: f64,
) -> Result<(GaussianDensitySeries, MonotonicityVerdict)> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::Monotonicity(format!("{} samples, need at least {MIN_SAMPLES}", samples.len())));
    }
    let mut values = Vec::with_capacity(samples.len());
    for &(t, curve) in samples {
        values.push(gaussian_density(curve, z_p, t, t_singular, b)?);
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let vs: Vec<f64> = values.iter().map(|v| v.value).collect();
    let dv = nonuniform_derivative(&ts, &vs);
    let rows: Vec<DensityRow> = (0..ts.len())
        .map(|k| DensityRow { t: ts[k], value: vs[k], dissipation: values[k].dissipation, dvalue_dt: dv[k] })
        .collect();

    let resolved: Vec<bool> = samples
        .iter()
        .map(|&(t, c)| (t_singular - t).sqrt() >= RESOLVED_WIDTH_CELLS * c.dz())
        .collect();
    let max_increase = (0..rows.len() - 1)
        .filter(|&k| resolved[k] && resolved[k + 1])
        .map(|k| (rows[k + 1].value - rows[k].value) / rows[k].value)
        .fold(f64::NEG_INFINITY, f64::max);
    let (t0, t1) = (ts[0], ts[ts.len() - 1]);
    let (lo, hi) = (t0 + 0.1 * (t1 - t0), t0 + 0.9 * (t1 - t0));
    let mid: Vec<&DensityRow> = (1..rows.len() - 1)
        .filter(|&k| resolved[k - 1] && resolved[k] && resolved[k + 1])
        .map(|k| &rows[k])
        .filter(|r| r.t >= lo && r.t <= hi)
        .collect();
    let max_mismatch = mid
        .iter()
        .map(|r| {
            let rate = r.value / (t_singular - r.t);
            (r.dvalue_dt + r.dissipation).abs() / r.dissipation.max(DISSIPATION_FLOOR * rate)
        })
        .fold(0.0, f64::max);
    let monotone = max_increase <= MONOTONE_TOL;
    let identity = !mid.is_empty() && max_mismatch <= IDENTITY_TOL;
    let verdict = MonotonicityVerdict {
        passed: monotone && identity,
        monotone,
        identity,
        max_mismatch,
        max_increase,
        checked_rows: mid.len(),
        unresolved_rows: resolved.iter().filter(|r| !**r).count(),
    };
    Ok((GaussianDensitySeries { rows }, verdict))
}

/// `Φ` of each second-stage curve at unit self-similar scale
/// (`T − t = 1/2`), with one-sided derivatives at the window ends.
pub fn stage2_gaussian(curves: &[Stage2Curve], b: f64) -> Vec<(f64, f64)> {
    curves
        .iter()
        .map(|s| {
            let c = &s.curve;
            let (dr, d2r) = differentiate_window(c.r(), c.dz());
            let nodes = (0..c.len()).map(|i| node(c.z(i), c.r()[i], dr[i], d2r[i], b));
            (s.tau_tilde, weighted_integrals(nodes, c.dz(), 0.5, b).value)
        })
        .collect()
}

/// `Δψ(½|X|²) − (1 + b + κψ⟨N, X⟩)` at the interior nodes `1..N−1`, with
/// the Laplacian taken as a conservative arclength difference over chords.
/// `b = 0` gives the classical identity.
pub fn minkowski_residual(curve: &GraphCurve, b: f64) -> Vec<f64> {
    let r = curve.r();
    let n = r.len();
    let dz = curve.dz();
    let (dr, d2r) = differentiate(curve);
    let z: Vec<f64> = (0..n).map(|i| curve.z(i)).collect();
    // Increments of ½|X|² and chord lengths between consecutive nodes; the
    // z part ½(z_{i+1}² − z_i²) is written as dz (z_i + dz/2).
    let df: Vec<f64> = (0..n - 1).map(|i| 0.5 * (r[i + 1] * r[i + 1] - r[i] * r[i]) + dz * (z[i] + 0.5 * dz)).collect();
    let chord: Vec<f64> = (0..n - 1).map(|i| (r[i + 1] - r[i]).hypot(dz)).collect();
    (1..n - 1)
        .map(|i| {
            let (sl, sr) = (chord[i - 1], chord[i]);
            let f_ss = (df[i] / sr - df[i - 1] / sl) / (0.5 * (sl + sr));
            let f_s = (df[i] + df[i - 1]) / (sl + sr);
            let w = (1.0 + dr[i] * dr[i]).sqrt();
            let r_s = dr[i] / w;
            let lhs = f_ss + (b / r[i]) * r_s * f_s;
            let kappa_psi = -d2r[i] / (w * w * w) + b / (r[i] * w);
            let support = (-r[i] + z[i] * dr[i]) / w;
            lhs - (1.0 + b + kappa_psi * support)
        })
        .collect()
}

/// Shrinking line of radius `√(2b(T − t))` on `[−half, half]`.
pub fn self_similar_line(b: f64, gap: f64, half: f64, n: usize) -> Result<GraphCurve> {
    GraphCurve::constant(Domain::Interval { a1: -half, a2: half }, n, (2.0 * b * gap).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_value_matches_closed_form() {
        for b in [0.5, 1.0, 2.0, 2.5, 4.0] {
            for gap in [0.3, 0.01] {
                let line = self_similar_line(b, gap, 10.0 * gap.sqrt(), 2001).unwrap();
                let d = gaussian_density(&line, 0.0, 1.0 - gap, 1.0, b).unwrap();
                assert!((d.value / self_similar_value(b) - 1.0).abs() < 1e-6, "b={b} gap={gap}: {}", d.value);
                assert!(d.dissipation < 1e-20);
            }
        }
        assert!((self_similar_value(1.0) - 0.24197072451914337).abs() < 1e-15);
    }

    #[test]
    fn window_doubling_is_stable() {
        let domain = Domain::Periodic { period: 40.0 };
        let curve = GraphCurve::from_fn(domain, 4000, |z| 0.8 + 0.2 * (z * std::f64::consts::TAU / 40.0).cos()).unwrap();
        for gap in [0.05, 0.4, 1.0] {
            let a = gaussian_density_window(&curve, 20.0, 0.0, gap, 1.0, 8.0).unwrap();
            let b = gaussian_density_window(&curve, 20.0, 0.0, gap, 1.0, 16.0).unwrap();
            assert!(((a.value - b.value) / b.value).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_times_past_singularity() {
        let line = self_similar_line(1.0, 0.1, 3.0, 101).unwrap();
        assert!(gaussian_density(&line, 0.0, 0.5, 0.5, 1.0).is_err());
    }

    #[test]
    fn nonuniform_derivative_is_exact_on_quadratics() {
        let x = [0.0, 0.1, 0.25, 0.3, 0.7];
        let y: Vec<f64> = x.iter().map(|t| 1.0 + 2.0 * t - 3.0 * t * t).collect();
        let d = nonuniform_derivative(&x, &y);
        for k in 1..4 {
            assert!((d[k] - (2.0 - 6.0 * x[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn line_check_passes_and_needs_samples() {
        let b = 1.0;
        let lines: Vec<(f64, GraphCurve)> = (0..8)
            .map(|k| {
                let t = 0.05 * k as f64;
                (t, self_similar_line(b, 0.5 - t, 9.0 * (0.5 - t).sqrt(), 1801).unwrap())
            })
            .collect();
        let refs: Vec<(f64, &GraphCurve)> = lines.iter().map(|(t, c)| (*t, c)).collect();
        let (series, verdict) = monotonicity_check(&refs, 0.0, 0.5, b).unwrap();
        assert!(verdict.passed, "{verdict:?}");
        assert!(series.rows.iter().all(|r| (r.value / self_similar_value(b) - 1.0).abs() < 1e-6));
        assert!(monotonicity_check(&refs[..4], 0.0, 0.5, b).is_err());
    }

    #[test]
    fn minkowski_vanishes_on_lines() {
        for (b, c) in [(1.0, 1.0), (2.5, 0.3), (0.0, 2.0)] {
            let line = GraphCurve::constant(Domain::Interval { a1: -2.0, a2: 5.0 }, 101, c).unwrap();
            for v in minkowski_residual(&line, b) {
                assert!(v.abs() < 1e-12, "b={b} c={c}: {v}");
            }
        }
    }

    #[test]
    fn classical_minkowski_on_a_circle_arc() {
        // Upper half of the circle r² + z² = 4 around the origin: |X| is
        // constant, so Δ½|X|² = 1 + κ⟨N, X⟩ = 0.
        let domain = Domain::Interval { a1: -1.0, a2: 1.0 };
        let residual = |n: usize| {
            let c = GraphCurve::from_fn(domain, n, |z| (4.0 - z * z).sqrt()).unwrap();
            minkowski_residual(&c, 0.0).iter().fold(0.0f64, |m, v| m.max(v.abs()))
        };
        let (e1, e2) = (residual(101), residual(201));
        assert!(e2 < e1 / 3.0, "{e1} {e2}");
    }
}
