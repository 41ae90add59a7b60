use cgo_core::geometry::RigidMotion;
use cgo_core::numerics::{Axis, Grid2};
use cgo_core::phase::*;
use proptest::prelude::*;

const BRANCHES: [Branch; 2] = [Branch::Direct, Branch::Mirror];

fn bp(kappa: f64) -> BoundaryPhase {
    BoundaryPhase::new(kappa, 1.0, 0.3).unwrap()
}

/// Ray-tube area ratio by differencing ray endpoints directly.
fn spreading(y0: f64, t: f64, b: &BoundaryPhase, branch: Branch) -> f64 {
    let s = if branch == Branch::Direct { 1.0 } else { -1.0 };
    let end = |x0: f64, t: f64| {
        let a = b.alpha(x0);
        [x0 + s * t * a, t * (1.0 - a * a).sqrt()]
    };
    let d = 1e-5;
    let det = |t: f64| {
        let (p, m) = (end(y0 + d, t), end(y0 - d, t));
        let dx0 = [(p[0] - m[0]) / (2.0 * d), (p[1] - m[1]) / (2.0 * d)];
        // ∂/∂t of the endpoint is the unit ray direction.
        let a = b.alpha(y0);
        let dt = [s * a, (1.0 - a * a).sqrt()];
        dx0[0] * dt[1] - dx0[1] * dt[0]
    };
    det(t) / det(0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phase_gradient_has_unit_length(kappa in -0.5..0.5f64, x1 in -0.3..0.3f64, x2 in 0.05..1.0f64,
                                      mirror in any::<bool>()) {
        let b = bp(kappa);
        let branch = if mirror { Branch::Mirror } else { Branch::Direct };
        let f = |x: [f64; 2]| eval_phase(x, &b, branch).unwrap();
        let h = 1e-4;
        let g1 = (f([x1 + h, x2]) - f([x1 - h, x2])) / (2.0 * h);
        let g2 = (f([x1, x2 + h]) - f([x1, x2 - h])) / (2.0 * h);
        prop_assert!((g1 * g1 + g2 * g2 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn inversion_recovers_ray_coordinates(kappa in -0.5..0.5f64, y0 in -0.3..0.3f64, t in 0.0..1.0f64,
                                          mirror in any::<bool>()) {
        let b = bp(kappa);
        let branch = if mirror { Branch::Mirror } else { Branch::Direct };
        let x = characteristic_map([y0, t], &b, branch);
        let inv = invert_characteristic_map(x, &b, branch, 1e-14).unwrap();
        prop_assert!((inv.y[0] - y0).abs() < 1e-12 && (inv.y[1] - t).abs() < 1e-12);
        let psi = eval_phase(x, &b, branch).unwrap();
        let sign = if mirror { -1.0 } else { 1.0 };
        prop_assert!((psi - b.m(y0) - sign * t).abs() < 1e-12);
    }

    #[test]
    fn transport_amplitude_matches_ray_spreading(kappa in -0.5..0.5f64, y0 in -0.25..0.25f64, t in 0.1..1.0f64,
                                                 mirror in any::<bool>()) {
        let b = bp(kappa);
        let branch = if mirror { Branch::Mirror } else { Branch::Direct };
        let x = characteristic_map([y0, t], &b, branch);
        let a0 = eval_amplitude_a0(x, &b, branch).unwrap();
        let oracle = spreading(y0, t, &b, branch).powf(-0.5);
        prop_assert!((a0 - oracle).abs() < 1e-6, "a0 {} oracle {}", a0, oracle);
    }

    #[test]
    fn localizer_is_a_plateau_cutoff(y in -1.0..1.0f64, eps in 0.05..0.5f64) {
        let v = localizer(y, eps);
        prop_assert!((0.0..=1.0).contains(&v));
        if y.abs() <= 0.5 * eps { prop_assert_eq!(v, 1.0); }
        if y.abs() >= eps { prop_assert_eq!(v, 0.0); }
        prop_assert!(localizer(y.abs() * 1.01, eps) <= v + 1e-15);
        prop_assert_eq!(v, localizer(-y, eps));
    }
}

#[test]
fn axis_amplitude_has_closed_form() {
    for kappa in [-0.4, 0.25, 0.5] {
        let b = bp(kappa);
        for t in [0.2, 0.6, 1.0] {
            let d = eval_amplitude_a0([0.0, t], &b, Branch::Direct).unwrap();
            assert!((d - (1.0 + kappa * t).powf(-0.5)).abs() < 1e-8, "kappa {kappa} t {t}");
            let m = eval_amplitude_a0([0.0, t], &b, Branch::Mirror).unwrap();
            assert!((m - (1.0 - kappa * t).powf(-0.5)).abs() < 1e-8, "kappa {kappa} t {t}");
        }
    }
}

#[test]
fn flat_phase_grid_is_x2_with_unit_amplitude() {
    let grid = Grid2::new(Axis::new(-0.5, 0.5, 33), Axis::new(0.0, 1.0, 33));
    let b = BoundaryPhase::flat(1.0, 0.3).unwrap();
    let f = PhaseField::on_grid(grid, &RigidMotion::identity(), &b, Branch::Direct);
    for (idx, v) in f.psi.values.iter().enumerate() {
        let (i, j) = grid.unindex(idx);
        assert_eq!(*v, grid.point(i, j)[1]);
    }
    assert!(f.lap_psi.values.iter().all(|v| v.abs() < 1e-12));
    let amp = AmplitudePair::on_grid(
        &f,
        RayProfile::Smooth { epsilon: 0.3 },
        0.5,
        &AmplitudeOptions::default(),
    )
    .unwrap();
    assert!(amp
        .a0
        .values
        .iter()
        .filter(|v| v.is_finite())
        .all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn laplacian_stencils_reach_their_orders() {
    let mut f = |x: [f64; 2]| -> cgo_core::Result<f64> { Ok((2.0 * x[0]).sin() * (1.5 * x[1]).cos()) };
    let x = [0.3, 0.4];
    let exact = -6.25 * (0.6f64).sin() * (0.6f64).cos();
    let mut order = |rich: bool| {
        let e1 = (fd_laplacian(&mut f, x, 0.04, rich).unwrap() - exact).abs();
        let e2 = (fd_laplacian(&mut f, x, 0.02, rich).unwrap() - exact).abs();
        (e1 / e2).log2()
    };
    assert!((order(false) - 2.0).abs() < 0.05);
    assert!((order(true) - 4.0).abs() < 0.1);
}

#[test]
fn grid_derivatives_are_exact_on_quadratics() {
    let grid = Grid2::new(Axis::new(-1.0, 1.0, 17), Axis::new(0.0, 2.0, 21));
    let mut f = cgo_core::numerics::ScalarField2::filled(grid, 0.0);
    for idx in 0..grid.len() {
        let (i, j) = grid.unindex(idx);
        let [x, y] = grid.point(i, j);
        f.values[idx] = 1.0 + 2.0 * x - y + 0.5 * x * x + 3.0 * x * y - y * y;
    }
    let (g, l) = grid_derivatives(&f);
    for idx in 0..grid.len() {
        let (i, j) = grid.unindex(idx);
        let [x, y] = grid.point(i, j);
        let gv = g.values[idx];
        assert!((gv[0] - (2.0 + x + 3.0 * y)).abs() < 1e-11);
        assert!((gv[1] - (-1.0 + 3.0 * x - 2.0 * y)).abs() < 1e-11);
        assert!((l.values[idx] + 1.0).abs() < 1e-9);
    }
}

#[test]
fn strip_width_shrinks_with_curvature() {
    for branch in BRANCHES {
        let flat = strip_half_width(&BoundaryPhase::flat(1.0, 0.3).unwrap(), branch, 1e-6, 2.0);
        assert_eq!(flat, 2.0);
    }
    let steep = BoundaryPhase::new(0.5, 5.0, 0.3).unwrap();
    let w = strip_half_width(&steep, Branch::Direct, 1e-6, 2.0);
    assert!(w > 0.0 && w < 2.0, "{w}");
    for x0 in [0.0, 0.5 * w, w] {
        for t in [0.0, 2.5, 5.0] {
            let j = characteristic_jacobian([x0, t], &steep, Branch::Direct);
            assert!(j[0][0] * j[1][1] - j[0][1] * j[1][0] > 1e-6);
        }
    }
}

#[test]
fn steep_boundary_phase_is_rejected() {
    assert!(BoundaryPhase::new(1.1, 1.0, 0.3).is_err());
    assert!(BoundaryPhase::new(0.5, 0.0, 0.3).is_err());
    assert!(BoundaryPhase::new(0.5, 1.0, -0.3).is_err());
    assert!(BoundaryPhase::new(f64::NAN, 1.0, 0.3).is_err());
}
