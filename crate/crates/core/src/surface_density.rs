//! Rotationally symmetric surfaces `dr² + e^{2φ(r)} dz²` carrying a density
//! `ψ(r)` that is singular on the axis `r = 0`.
//!
//! A model bundles closed-form `φ, φ′, φ″` and `ψ, ψ′, ψ″, ψ‴` together with
//! the density exponent `b` that governs the behaviour `ψ′ ~ b/r` at the
//! axis. [`validate`] checks the admissibility hypotheses numerically and
//! computes the radius `ρ` of the band in which initial curves must start.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::bisect;

/// Closed-form warping and density functions of a custom model.
pub trait DensityProfile: Send + Sync {
    fn phi(&self, r: f64) -> f64;
    fn dphi(&self, r: f64) -> f64;
    fn d2phi(&self, r: f64) -> f64;
    fn psi(&self, r: f64) -> f64;
    fn dpsi(&self, r: f64) -> f64;
    fn d2psi(&self, r: f64) -> f64;
    fn d3psi(&self, r: f64) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// Flat plane, `φ ≡ 0`, `ψ = b ln r`.
    FlatLog,
    /// Round unit sphere around an equator, `φ = ln cos r`, `ψ = b ln sin r`.
    SphereLog,
    Custom(String),
}

impl ModelKind {
    pub fn name(&self) -> &str {
        match self {
            ModelKind::FlatLog => "flat_log",
            ModelKind::SphereLog => "sphere_log",
            ModelKind::Custom(name) => name,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

struct FlatLog {
    b: f64,
}

impl DensityProfile for FlatLog {
    fn phi(&self, _: f64) -> f64 {
        0.0
    }
    fn dphi(&self, _: f64) -> f64 {
        0.0
    }
    fn d2phi(&self, _: f64) -> f64 {
        0.0
    }
    fn psi(&self, r: f64) -> f64 {
        self.b * r.ln()
    }
    fn dpsi(&self, r: f64) -> f64 {
        self.b / r
    }
    fn d2psi(&self, r: f64) -> f64 {
        -self.b / (r * r)
    }
    fn d3psi(&self, r: f64) -> f64 {
        2.0 * self.b / (r * r * r)
    }
}

struct SphereLog {
    b: f64,
}

impl DensityProfile for SphereLog {
    fn phi(&self, r: f64) -> f64 {
        r.cos().ln()
    }
    fn dphi(&self, r: f64) -> f64 {
        -r.tan()
    }
    fn d2phi(&self, r: f64) -> f64 {
        let c = r.cos();
        -1.0 / (c * c)
    }
    fn psi(&self, r: f64) -> f64 {
        self.b * r.sin().ln()
    }
    fn dpsi(&self, r: f64) -> f64 {
        self.b / r.tan()
    }
    fn d2psi(&self, r: f64) -> f64 {
        let s = r.sin();
        -self.b / (s * s)
    }
    fn d3psi(&self, r: f64) -> f64 {
        let s = r.sin();
        2.0 * self.b * r.cos() / (s * s * s)
    }
}

/// Ambient surface with density. Immutable once built; cheap to clone.
#[derive(Clone)]
pub struct SurfaceDensityModel {
    kind: ModelKind,
    b: f64,
    r_max: f64,
    /// Upper cap for `ψ‴/ψ′ − (2/b²)ψ′²` near the axis.
    third_order_cap: f64,
    profile: Arc<dyn DensityProfile>,
}

impl fmt::Debug for SurfaceDensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SurfaceDensityModel")
            .field("kind", &self.kind)
            .field("b", &self.b)
            .field("r_max", &self.r_max)
            .field("third_order_cap", &self.third_order_cap)
            .finish()
    }
}

fn check_exponent(b: f64) -> Result<()> {
    if b.is_finite() && b > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(b))
    }
}

impl SurfaceDensityModel {
    /// Builds one of the named models (`flat_log`, `sphere_log`).
    pub fn builtin(name: &str, b: f64, r_max: f64) -> Result<Self> {
        check_exponent(b)?;
        let (kind, limit, profile): (_, _, Arc<dyn DensityProfile>) = match name {
            "flat_log" => (ModelKind::FlatLog, f64::INFINITY, Arc::new(FlatLog { b })),
            "sphere_log" => (ModelKind::SphereLog, FRAC_PI_2, Arc::new(SphereLog { b })),
            other => return Err(Error::UnknownModel(other.to_string())),
        };
        if !(r_max > 0.0 && r_max < limit) || r_max.is_nan() {
            return Err(Error::ChartRange { r_max, limit });
        }
        Ok(Self { kind, b, r_max, third_order_cap: 10.0 * b, profile })
    }

    pub fn flat_log(b: f64, r_max: f64) -> Result<Self> {
        Self::builtin("flat_log", b, r_max)
    }

    pub fn sphere_log(b: f64, r_max: f64) -> Result<Self> {
        Self::builtin("sphere_log", b, r_max)
    }

    pub fn custom(name: &str, b: f64, r_max: f64, profile: Arc<dyn DensityProfile>) -> Result<Self> {
        check_exponent(b)?;
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::ChartRange { r_max, limit: f64::INFINITY });
        }
        Ok(Self { kind: ModelKind::Custom(name.to_string()), b, r_max, third_order_cap: 10.0 * b, profile })
    }

    pub fn with_third_order_cap(mut self, cap: f64) -> Self {
        self.third_order_cap = cap;
        self
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn third_order_cap(&self) -> f64 {
        self.third_order_cap
    }

    /// True when the warping is trivial, i.e. the ambient is the flat plane.
    pub fn is_flat(&self) -> bool {
        self.kind == ModelKind::FlatLog
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.profile.phi(r)
    }
    pub fn dphi(&self, r: f64) -> f64 {
        self.profile.dphi(r)
    }
    pub fn d2phi(&self, r: f64) -> f64 {
        self.profile.d2phi(r)
    }
    pub fn psi(&self, r: f64) -> f64 {
        self.profile.psi(r)
    }
    pub fn dpsi(&self, r: f64) -> f64 {
        self.profile.dpsi(r)
    }
    pub fn d2psi(&self, r: f64) -> f64 {
        self.profile.d2psi(r)
    }
    pub fn d3psi(&self, r: f64) -> f64 {
        self.profile.d3psi(r)
    }

    /// Gauss curvature `K̄ = −φ″ − φ′²`.
    pub fn gauss_curvature(&self, r: f64) -> f64 {
        let d = self.dphi(r);
        -self.d2phi(r) - d * d
    }

    pub fn in_domain(&self, r: f64) -> bool {
        r > 0.0 && r <= self.r_max
    }
}

/// ψ-curvature `φ′(r) + ψ′(r)` of the line `r = const`, normal toward the
/// axis. Lines move toward the axis with exactly this speed.
pub fn line_kappa_psi(model: &SurfaceDensityModel, r: f64) -> Result<f64> {
    if !model.in_domain(r) {
        return Err(Error::OutOfDomain { r, r_max: model.r_max() });
    }
    Ok(model.dphi(r) + model.dpsi(r))
}

/// `min_{0 < s ≤ r0} (φ′ + ψ′)(s)`, the guaranteed inward speed of barrier
/// lines below `r0`. Sampled on a fine grid and polished by golden section.
pub fn barrier_speed_floor(model: &SurfaceDensityModel, r0: f64) -> f64 {
    let g = |r: f64| model.dphi(r) + model.dpsi(r);
    let n = 4000;
    let mut best = (r0, g(r0));
    for i in 1..n {
        let r = r0 * i as f64 / n as f64;
        let v = g(r);
        if v < best.1 {
            best = (r, v);
        }
    }
    let h = r0 / n as f64;
    let (mut lo, mut hi) = ((best.0 - h).max(h * 1e-3), (best.0 + h).min(r0));
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let a = hi - inv_phi * (hi - lo);
        let c = lo + inv_phi * (hi - lo);
        if g(a) < g(c) {
            hi = c;
        } else {
            lo = a;
        }
    }
    best.1.min(g(0.5 * (lo + hi))).min(g(r0))
}

/// Outcome of one named hypothesis check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckDiagnostic {
    pub name: String,
    pub passed: bool,
    /// Radius of the worst offending (or least comfortable) probe.
    pub worst_r: f64,
    pub worst_value: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub passed: bool,
    pub rho: f64,
    pub first_zero_phi_plus_psi: f64,
    pub concavity_radius: f64,
    /// Largest observed `ψ‴/ψ′ − (2/b²)ψ′²` over the probe grid.
    pub third_order_sup: f64,
    pub checks: Vec<CheckDiagnostic>,
}

impl ValidationReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckDiagnostic> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Tolerance on the near-axis ratio tests, applied at the three smallest
/// probe radii.
pub const ASYMPTOTIC_TOL: f64 = 1e-2;
/// Width at which the bisections for `ρ` stop.
pub const RHO_TOL: f64 = 1e-10;
const RHO_MAX_ITER: usize = 200;
const SCAN_POINTS: usize = 4096;

/// Geometric probe grid `r_max_probe · q^k` descending to `r_min_probe`.
pub fn geometric_probe(r_start: f64, r_end: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && r_start > r_end && r_end > 0.0);
    let q = (r_end / r_start).powf(1.0 / (count - 1) as f64);
    (0..count).map(|k| r_start * q.powi(k as i32)).collect()
}

/// First radius in `[probe_min, r_max]` where `holds` stops being true,
/// located by bisection; `+∞` if it holds on the whole range.
fn first_failure<G: Fn(f64) -> bool>(holds: G, r_max: f64, probe_min: f64) -> f64 {
    let mut prev = probe_min;
    if !holds(prev) {
        return prev;
    }
    for i in 1..=SCAN_POINTS {
        let r = probe_min + (r_max - probe_min) * i as f64 / SCAN_POINTS as f64;
        if !holds(r) {
            let root = bisect(
                |x| if holds(x) { 1.0 } else { -1.0 },
                prev,
                r,
                RHO_TOL,
                RHO_MAX_ITER,
            );
            return root;
        }
        prev = r;
    }
    f64::INFINITY
}

/// Checks the admissibility hypotheses of `model` on a probe grid that
/// decreases strictly toward zero, and computes `ρ`. Failures are reported
/// in the returned diagnostics, never raised.
pub fn validate(model: &SurfaceDensityModel, probe: &[f64]) -> ValidationReport {
    let b = model.b();
    let mut checks = Vec::new();

    let probe_ok = probe.len() >= 3
        && probe.windows(2).all(|w| w[1] < w[0])
        && probe.iter().all(|&r| model.in_domain(r));
    checks.push(CheckDiagnostic {
        name: "probe_grid".into(),
        passed: probe_ok,
        worst_r: probe.last().copied().unwrap_or(f64::NAN),
        worst_value: probe.len() as f64,
        detail: "probe must hold >= 3 radii, strictly decreasing, inside (0, r_max]".into(),
    });

    // Evenness of the warping at the axis.
    let (phi0, dphi0) = (model.phi(0.0), model.dphi(0.0));
    let even = phi0.is_finite() && dphi0.is_finite() && phi0.abs() <= 1e-12 && dphi0.abs() <= 1e-12;
    checks.push(CheckDiagnostic {
        name: "phi_even_at_axis".into(),
        passed: even,
        worst_r: 0.0,
        worst_value: phi0.abs().max(dphi0.abs()),
        detail: format!("phi(0) = {phi0:e}, phi'(0) = {dphi0:e}"),
    });

    // Non-negative Gauss curvature on [0, r_max], probed on a uniform grid
    // joined with the caller's probe.
    let mut worst_k = (0.0, f64::INFINITY);
    let mut k_finite = true;
    let uniform = (0..=SCAN_POINTS).map(|i| model.r_max() * i as f64 / SCAN_POINTS as f64);
    for r in uniform.chain(probe.iter().copied()) {
        let k = model.gauss_curvature(r);
        if !k.is_finite() {
            k_finite = false;
            worst_k = (r, k);
            break;
        }
        if k < worst_k.1 {
            worst_k = (r, k);
        }
    }
    checks.push(CheckDiagnostic {
        name: "gauss_curvature_nonnegative".into(),
        passed: k_finite && worst_k.1 >= -1e-9,
        worst_r: worst_k.0,
        worst_value: worst_k.1,
        detail: "K = -phi'' - phi'^2 >= 0".into(),
    });

    // Near-axis asymptotics psi^(n) r^n / b -> (-1)^(n-1) (n-1)!.
    let smallest: Vec<f64> = {
        let mut v = probe.to_vec();
        v.sort_by(|a, c| a.partial_cmp(c).unwrap_or(std::cmp::Ordering::Equal));
        v.into_iter().take(3).collect()
    };
    for (n, target) in [(1, 1.0), (2, -1.0), (3, 2.0)] {
        let mut worst = (f64::NAN, 0.0_f64);
        let mut ok = !smallest.is_empty();
        for &r in &smallest {
            let d = match n {
                1 => model.dpsi(r),
                2 => model.d2psi(r),
                _ => model.d3psi(r),
            };
            let ratio = d * r.powi(n) / b;
            let err = (ratio - target).abs();
            if !ratio.is_finite() || err > ASYMPTOTIC_TOL {
                ok = false;
            }
            if !ratio.is_finite() || err >= worst.1 || worst.0.is_nan() {
                worst = (r, ratio);
            }
        }
        checks.push(CheckDiagnostic {
            name: format!("psi_asymptotic_n{n}"),
            passed: ok,
            worst_r: worst.0,
            worst_value: worst.1,
            detail: format!("psi^({n}) r^{n} / b -> {target}"),
        });
    }

    // Third-order quantity bounded from above near the axis.
    let mut sup = f64::NEG_INFINITY;
    let mut sup_r = f64::NAN;
    let mut finite = true;
    for &r in probe {
        let d1 = model.dpsi(r);
        let q = model.d3psi(r) / d1 - 2.0 / (b * b) * d1 * d1;
        if !q.is_finite() {
            finite = false;
            sup_r = r;
            sup = q;
            break;
        }
        if q > sup {
            sup = q;
            sup_r = r;
        }
    }
    checks.push(CheckDiagnostic {
        name: "psi_third_order_bounded".into(),
        passed: finite && sup <= model.third_order_cap(),
        worst_r: sup_r,
        worst_value: sup,
        detail: format!("psi'''/psi' - (2/b^2) psi'^2 <= cap {}", model.third_order_cap()),
    });

    let probe_min = smallest.first().copied().unwrap_or(1e-6).min(model.r_max());
    let speed = |r: f64| model.dphi(r) + model.dpsi(r);
    let first_zero = first_failure(|r| speed(r) > 0.0, model.r_max(), probe_min);
    // psi'' + psi'^2/b vanishes identically for b ln r; compare against the
    // size of its two terms rather than against zero.
    let concavity_ok = |r: f64| {
        let (d2, d1sq) = (model.d2psi(r), model.dpsi(r).powi(2) / b);
        d2 + d1sq <= 1e-12 * (d2.abs() + d1sq)
    };
    let concavity_radius = first_failure(concavity_ok, model.r_max(), probe_min);
    let rho = first_zero.min(concavity_radius);
    checks.push(CheckDiagnostic {
        name: "admissible_radius_positive".into(),
        passed: rho > 0.0 && !rho.is_nan(),
        worst_r: rho,
        worst_value: speed(probe_min),
        detail: format!("first zero of phi'+psi' = {first_zero}, concavity radius = {concavity_radius}"),
    });

    let passed = checks.iter().all(|c| c.passed);
    ValidationReport {
        passed,
        rho,
        first_zero_phi_plus_psi: first_zero,
        concavity_radius,
        third_order_sup: sup,
        checks,
    }
}

/// Validation on the default probe: 60 geometric radii from
/// `min(r_max, 1)/2` down to `1e-6`.
pub fn validate_default(model: &SurfaceDensityModel) -> ValidationReport {
    let start = 0.5 * model.r_max().min(1.0);
    validate(model, &geometric_probe(start, 1e-6, 60))
}
