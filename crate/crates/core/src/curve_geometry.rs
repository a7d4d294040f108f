//! Graph curves `z ↦ (r(z), z)` over the axis and their pointwise geometry.
//!
//! The unit normal points toward the axis, so `u = ⟨N, ∇r⟩` is negative on
//! every graph and the density part of the curvature `k₂ = −ψ′u` is positive.

use crate::error::{Error, Result};
use crate::surface_density::SurfaceDensityModel;

pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Closed curve, `z ∈ [0, period)` with wrap-around.
    Periodic { period: f64 },
    /// Curve between the lines `z = a1` and `z = a2`, meeting both orthogonally.
    Interval { a1: f64, a2: f64 },
}

impl Domain {
    pub fn length(&self) -> f64 {
        match *self {
            Domain::Periodic { period } => period,
            Domain::Interval { a1, a2 } => a2 - a1,
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Domain::Periodic { .. })
    }

    fn start(&self) -> f64 {
        match *self {
            Domain::Periodic { .. } => 0.0,
            Domain::Interval { a1, .. } => a1,
        }
    }

    /// Uniform node spacing for `n` nodes.
    pub fn spacing(&self, n: usize) -> f64 {
        match *self {
            Domain::Periodic { period } => period / n as f64,
            Domain::Interval { a1, a2 } => (a2 - a1) / (n - 1) as f64,
        }
    }
}

/// A sampled graph `r(z)` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphCurve {
    domain: Domain,
    r: Vec<f64>,
}

impl GraphCurve {
    pub fn new(domain: Domain, r: Vec<f64>) -> Result<Self> {
        let len = domain.length();
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::InvalidCurve(format!("domain length {len} must be positive")));
        }
        if r.len() < MIN_NODES {
            return Err(Error::InvalidCurve(format!("{} nodes, need at least {MIN_NODES}", r.len())));
        }
        if let Some((i, &v)) = r.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidCurve(format!("node {i} has r = {v}; the curve must stay off the axis")));
        }
        Ok(Self { domain, r })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(domain: Domain, n: usize, f: F) -> Result<Self> {
        let dz = domain.spacing(n.max(2));
        let start = domain.start();
        Self::new(domain, (0..n).map(|i| f(start + i as f64 * dz)).collect())
    }

    pub fn constant(domain: Domain, n: usize, c: f64) -> Result<Self> {
        Self::from_fn(domain, n, |_| c)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn dz(&self) -> f64 {
        self.domain.spacing(self.r.len())
    }

    pub fn z(&self, i: usize) -> f64 {
        self.domain.start() + i as f64 * self.dz()
    }

    pub fn z_values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.z(i)).collect()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn r_min(&self) -> f64 {
        self.r.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn r_max(&self) -> f64 {
        self.r.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the smallest radius (first one on ties).
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.r.iter().enumerate() {
            if v < self.r[best] {
                best = i;
            }
        }
        best
    }

    pub(crate) fn with_radii(&self, r: Vec<f64>) -> Self {
        Self { domain: self.domain, r }
    }

    /// Neighbouring radii of node `i`, wrapping on periodic domains and
    /// reflecting across the ends of an interval.
    #[inline]
    pub(crate) fn neighbours(&self, i: usize) -> (f64, f64) {
        neighbours(self.domain.is_periodic(), &self.r, i)
    }
}

#[inline]
pub(crate) fn neighbours(periodic: bool, r: &[f64], i: usize) -> (f64, f64) {
    let n = r.len();
    if periodic {
        (r[(i + n - 1) % n], r[(i + 1) % n])
    } else {
        let left = if i == 0 { r[1] } else { r[i - 1] };
        let right = if i == n - 1 { r[n - 2] } else { r[i + 1] };
        (left, right)
    }
}

/// Second-order central differences `(ṙ, r̈)`.
pub fn differentiate(curve: &GraphCurve) -> (Vec<f64>, Vec<f64>) {
    let dz = curve.dz();
    let (inv2, inv_sq) = (0.5 / dz, 1.0 / (dz * dz));
    (0..curve.len())
        .map(|i| {
            let (left, right) = curve.neighbours(i);
            let mid = curve.r[i];
            ((right - left) * inv2, (right - 2.0 * mid + left) * inv_sq)
        })
        .unzip()
}

/// Derivatives of a curve cut out of a larger one (no boundary condition at
/// the window ends): central differences inside, second-order one-sided
/// stencils at the two ends.
pub fn differentiate_window(r: &[f64], dz: f64) -> (Vec<f64>, Vec<f64>) {
    let n = r.len();
    assert!(n >= 4, "window needs at least four nodes");
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 1..n - 1 {
        d1[i] = (r[i + 1] - r[i - 1]) / (2.0 * dz);
        d2[i] = (r[i + 1] - 2.0 * r[i] + r[i - 1]) / (dz * dz);
    }
    d1[0] = (-3.0 * r[0] + 4.0 * r[1] - r[2]) / (2.0 * dz);
    d1[n - 1] = (3.0 * r[n - 1] - 4.0 * r[n - 2] + r[n - 3]) / (2.0 * dz);
    d2[0] = (2.0 * r[0] - 5.0 * r[1] + 4.0 * r[2] - r[3]) / (dz * dz);
    d2[n - 1] = (2.0 * r[n - 1] - 5.0 * r[n - 2] + 4.0 * r[n - 3] - r[n - 4]) / (dz * dz);
    (d1, d2)
}

/// Per-node geometric quantities of a graph curve.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryFields {
    pub dr: Vec<f64>,
    pub d2r: Vec<f64>,
    pub kappa: Vec<f64>,
    /// `⟨N, ∇r⟩ ∈ [−1, 0)`.
    pub u: Vec<f64>,
    pub kappa_psi: Vec<f64>,
    /// Density contribution `−ψ′u` to `κψ`.
    pub k2: Vec<f64>,
    /// Type-I quantity `κ² + (ψ′u)²/b`.
    pub q: Vec<f64>,
    /// Arclength per unit `z`, `√(ṙ² + e^{2φ})`.
    pub ds_weight: Vec<f64>,
}

/// Geometry at one node from `r, ṙ, r̈`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGeometry {
    pub kappa: f64,
    pub u: f64,
    pub k2: f64,
    pub kappa_psi: f64,
    pub q: f64,
    pub ds_weight: f64,
}

#[inline]
pub fn node_geometry(model: &SurfaceDensityModel, r: f64, dr: f64, d2r: f64) -> NodeGeometry {
    let e_phi = model.phi(r).exp();
    let dphi = model.dphi(r);
    let w2 = dr * dr + e_phi * e_phi;
    let w = w2.sqrt();
    let kappa = e_phi / w * ((-d2r + dr * dr * dphi) / w2 + dphi);
    let u = -e_phi / w;
    let k2 = -model.dpsi(r) * u;
    NodeGeometry { kappa, u, k2, kappa_psi: kappa + k2, q: kappa * kappa + k2 * k2 / model.b(), ds_weight: w }
}

pub(crate) fn check_domain(curve: &GraphCurve, model: &SurfaceDensityModel) -> Result<()> {
    match curve.r().iter().enumerate().find(|(_, &r)| !model.in_domain(r)) {
        Some((node, &r)) => Err(Error::NodeOutOfDomain { node, r, r_max: model.r_max() }),
        None => Ok(()),
    }
}

pub fn pointwise_geometry(curve: &GraphCurve, model: &SurfaceDensityModel) -> Result<GeometryFields> {
    check_domain(curve, model)?;
    let (dr, d2r) = differentiate(curve);
    let n = curve.len();
    let mut f = GeometryFields {
        dr: Vec::with_capacity(n),
        d2r: Vec::with_capacity(n),
        kappa: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        kappa_psi: Vec::with_capacity(n),
        k2: Vec::with_capacity(n),
        q: Vec::with_capacity(n),
        ds_weight: Vec::with_capacity(n),
    };
    for i in 0..n {
        let g = node_geometry(model, curve.r()[i], dr[i], d2r[i]);
        f.kappa.push(g.kappa);
        f.u.push(g.u);
        f.k2.push(g.k2);
        f.kappa_psi.push(g.kappa_psi);
        f.q.push(g.q);
        f.ds_weight.push(g.ds_weight);
    }
    f.dr = dr;
    f.d2r = d2r;
    Ok(f)
}
