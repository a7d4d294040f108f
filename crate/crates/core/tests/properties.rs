use std::f64::consts::TAU;

use densflow::curve_geometry::pointwise_geometry;
use densflow::flow_solver::{rhs, step, FlowState};
use densflow::monitors::{default_eps_z, zero_count};
use densflow::monotonicity::{gaussian_density, minkowski_residual, self_similar_line};
use densflow::{Domain, GraphCurve, SurfaceDensityModel};
use proptest::prelude::*;

const PERIODIC: Domain = Domain::Periodic { period: TAU };

fn model(sphere: bool, b: f64) -> SurfaceDensityModel {
    if sphere {
        SurfaceDensityModel::sphere_log(b, 1.5).unwrap()
    } else {
        SurfaceDensityModel::flat_log(b, 100.0).unwrap()
    }
}

/// Admissible upper radius for the builtin models.
fn rho(sphere: bool, b: f64) -> f64 {
    if sphere {
        b.sqrt().atan()
    } else {
        10.0
    }
}

prop_compose! {
    /// A smooth positive curve inside `(0, ρ)` made of three random modes.
    fn admissible()(sphere in any::<bool>(), b in 0.5f64..3.0, periodic in any::<bool>(),
                    n in 32usize..160, amps in prop::array::uniform3(-1.0f64..1.0),
                    phases in prop::array::uniform3(0.0f64..TAU), lo in 0.05f64..0.5, span in 0.05f64..0.9)
                    -> (SurfaceDensityModel, GraphCurve) {
        let top = rho(sphere, b) * (lo + span * (0.99 - lo)).min(0.99);
        let bottom = rho(sphere, b) * lo * 0.5;
        let domain = if periodic { PERIODIC } else { Domain::Interval { a1: 0.0, a2: 3.0 } };
        let w = TAU / domain.length();
        let f = |z: f64| (0..3).map(|k| amps[k] * ((k + 1) as f64 * w * z + phases[k]).sin()).sum::<f64>();
        let mid = 0.5 * (top + bottom);
        let half = 0.5 * (top - bottom) / 3.0;
        let curve = GraphCurve::from_fn(domain, n, |z| mid + half * f(z)).unwrap();
        (model(sphere, b), curve)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn graph_normal_points_toward_axis((m, curve) in admissible()) {
        let g = pointwise_geometry(&curve, &m).unwrap();
        for i in 0..curve.len() {
            prop_assert!(g.u[i] < 0.0 && g.u[i] >= -1.0);
            prop_assert!(g.q[i] >= 0.0);
            prop_assert_eq!(g.kappa_psi[i], g.kappa[i] + g.k2[i]);
            prop_assert!(g.ds_weight[i] >= m.phi(curve.r()[i]).exp() * (1.0 - 1e-15));
        }
    }

    #[test]
    fn velocity_is_normal_speed_over_u((m, curve) in admissible()) {
        let v = rhs(&curve, &m).unwrap();
        let g = pointwise_geometry(&curve, &m).unwrap();
        for i in 0..curve.len() {
            let other = g.kappa_psi[i] / g.u[i];
            prop_assert!((v[i] - other).abs() <= 1e-12 * other.abs().max(1.0));
        }
    }

    #[test]
    fn lines_move_at_barrier_speed(sphere in any::<bool>(), b in 0.5f64..3.0, frac in 0.05f64..0.95) {
        let c = rho(sphere, b) * frac;
        let curve = GraphCurve::constant(PERIODIC, 32, c).unwrap();
        let v = rhs(&curve, &model(sphere, b)).unwrap();
        // φ = ln cos r, ψ = b ln sin r on the sphere; φ = 0, ψ = b ln r in the plane.
        let expected = if sphere { c.tan() - b / c.tan() } else { -b / c };
        for x in v {
            prop_assert!((x - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn periodic_shift_commutes_with_velocity((m, curve) in admissible(), shift in 0usize..200) {
        prop_assume!(curve.domain().is_periodic());
        let n = curve.len();
        let s = shift % n;
        let mut r = curve.r().to_vec();
        r.rotate_left(s);
        let shifted = GraphCurve::new(PERIODIC, r).unwrap();
        let (a, b) = (rhs(&curve, &m).unwrap(), rhs(&shifted, &m).unwrap());
        for i in 0..n {
            prop_assert_eq!(a[(i + s) % n], b[i]);
        }
    }

    #[test]
    fn step_keeps_lines_straight(sphere in any::<bool>(), b in 0.5f64..3.0, frac in 0.2f64..0.9, dt in 1e-5f64..1e-3) {
        let c = rho(sphere, b) * frac;
        let state = FlowState::new(GraphCurve::constant(PERIODIC, 32, c).unwrap());
        let next = step(&state, &model(sphere, b), dt).unwrap();
        let r = next.curve.r();
        prop_assert!(r.iter().all(|&x| x == r[0]));
        prop_assert!(r[0] < c);
    }

    #[test]
    fn cosine_has_two_k_critical_points(k in 1u32..6, a in 0.01f64..0.4, phase in 0.1f64..1.0) {
        let curve = GraphCurve::from_fn(PERIODIC, 256, |z| 1.0 + a * (k as f64 * z + phase).cos()).unwrap();
        prop_assert_eq!(zero_count(&curve, default_eps_z(curve.dz())), 2 * k as usize);
    }

    #[test]
    fn minkowski_vanishes_on_lines(b in 0.0f64..4.0, c in 0.1f64..5.0, n in 16usize..128) {
        let curve = GraphCurve::constant(PERIODIC, n, c).unwrap();
        prop_assert!(minkowski_residual(&curve, b).iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn shrinking_line_has_closed_form_density(b in 0.5f64..4.0, gap in 0.05f64..1.0) {
        let curve = self_similar_line(b, gap, 8.5 * gap.sqrt(), 2001).unwrap();
        let g = gaussian_density(&curve, 0.0, 1.0 - gap, 1.0, b).unwrap();
        let exact = (b / TAU).powf(0.5 * b) * (-0.5 * b).exp();
        prop_assert!((g.value / exact - 1.0).abs() <= 1e-6, "{} vs {}", g.value, exact);
        prop_assert!(g.dissipation <= 1e-10);
    }

    #[test]
    fn density_is_translation_invariant((m, curve) in admissible(), shift in 1usize..50, gap in 0.05f64..0.5) {
        prop_assume!(curve.domain().is_periodic() && m.is_flat());
        let n = curve.len();
        let s = shift % n;
        let mut r = curve.r().to_vec();
        r.rotate_right(s);
        let moved = GraphCurve::new(PERIODIC, r).unwrap();
        let z_p = curve.z(n / 3);
        let b = m.b();
        let a = gaussian_density(&curve, z_p, 0.0, gap, b).unwrap();
        let c = gaussian_density(&moved, z_p + s as f64 * curve.dz(), 0.0, gap, b).unwrap();
        prop_assert!((a.value - c.value).abs() <= 1e-10 * a.value.abs().max(1e-300));
    }
}
