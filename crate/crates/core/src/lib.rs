//! Numerical laboratory for the curve shortening flow driven by the
//! ψ-curvature `κψ = κ − ⟨∇ψ, N⟩` on surfaces `dr² + e^{2φ(r)} dz²` whose
//! density `ψ(r) ~ b ln r` is singular on the axis `r = 0`.
//!
//! Curves are graphs `r(z)` over the axis. The crate integrates the graph
//! form of the flow up to the axis singularity, monitors the expected
//! qualitative behaviour along the trajectory, and post-processes the
//! singularity by parabolic rescaling and a weighted Gaussian density.

pub mod blowup;
pub mod curve_geometry;
pub mod error;
pub mod flow_solver;
pub mod monitors;
pub mod monotonicity;
pub mod numerics;
pub mod surface_density;

pub use curve_geometry::{Domain, GeometryFields, GraphCurve};
pub use error::{Error, Result};
pub use flow_solver::{FlowTrajectory, SolverConfig, Termination};
pub use surface_density::{SurfaceDensityModel, ValidationReport};
