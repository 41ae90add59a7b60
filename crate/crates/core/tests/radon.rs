use std::f64::consts::PI;

use cgo_core::geometry::{convex_hull, ConvexPolygon, Line2D};
use cgo_core::numerics::{adaptive_simpson, bump, loglog_slope, Axis, ComplexField2, Field2, Grid2};
use cgo_core::radon::*;
use cgo_core::C64;
use proptest::prelude::*;

fn grid(n: usize) -> Grid2 {
    Grid2::new(Axis::new(-1.0, 1.0, n), Axis::new(-1.0, 1.0, n))
}

fn gaussian(x: [f64; 2]) -> C64 {
    C64::new((-(x[0] * x[0] + x[1] * x[1]) / (2.0 * 0.2 * 0.2)).exp(), 0.0)
}

/// Smooth ellipse blob with bump profile.
fn blob(x: [f64; 2], c: [f64; 2], r: [f64; 2], amp: C64) -> C64 {
    let s = (((x[0] - c[0]) / r[0]).powi(2) + ((x[1] - c[1]) / r[1]).powi(2)).sqrt();
    amp * bump(s)
}

fn phantom(x: [f64; 2]) -> C64 {
    blob(x, [0.0, 0.0], [0.7, 0.55], C64::new(1.0, 0.0))
        + blob(x, [0.25, 0.1], [0.2, 0.3], C64::new(-0.4, 0.3))
        + blob(x, [-0.3, -0.15], [0.25, 0.15], C64::new(0.5, -0.2))
}

fn rel_l2(a: &ComplexField2, b: &ComplexField2) -> f64 {
    let num: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.values.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn square(c: [f64; 2], h: f64) -> ConvexPolygon {
    convex_hull(&[
        [c[0] - h, c[1] - h],
        [c[0] + h, c[1] - h],
        [c[0] + h, c[1] + h],
        [c[0] - h, c[1] + h],
    ])
}

#[test]
fn disk_chord_length() {
    let g = Grid2::new(Axis::new(-1.5, 1.5, 1201), Axis::new(-1.5, 1.5, 1201));
    let f = Field2::from_fn(g, |x| C64::new(if x[0].hypot(x[1]) <= 1.0 { 1.0 } else { 0.0 }, 0.0));
    for theta in [0.0, 0.7, 2.0] {
        let v = exp_radon(&f, 0.0, &Line2D::from_angle(theta, 0.0), 1e-3);
        assert!((v.re - 2.0).abs() < 5e-3, "{v}");
    }
}

#[test]
fn gaussian_matches_dense_quadrature() {
    let mu = 1.0;
    for (theta, p) in [(0.3, 0.1), (2.5, -0.2), (4.0, 0.05)] {
        let line = Line2D::from_angle(theta, p);
        let v = exp_radon_fn(gaussian, mu, &line, (-2.0, 2.0), 1e-3);
        let mut f = |t: f64| Ok::<f64, ()>(gaussian(line.point(t)).re * (mu * t).exp());
        let oracle = adaptive_simpson(&mut f, -2.0, 2.0, 1e-13, 40).unwrap();
        assert!((v.re - oracle).abs() <= 1e-6 * oracle.abs(), "{v} vs {oracle}");
    }
}

#[test]
fn gridded_gaussian_converges_with_resolution() {
    let line = Line2D::from_angle(0.4, 0.15);
    let mut f = |t: f64| Ok::<f64, ()>(gaussian(line.point(t)).re * (0.5 * t).exp());
    let oracle = adaptive_simpson(&mut f, -3.0, 3.0, 1e-13, 40).unwrap();
    let ns = [65.0, 129.0, 257.0];
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let fld = Field2::from_fn(grid(n as usize), gaussian);
            (exp_radon(&fld, 0.5, &line, 1.0).re - oracle).abs()
        })
        .collect();
    let hs: Vec<f64> = ns.iter().map(|n| 2.0 / (n - 1.0)).collect();
    assert!(loglog_slope(&hs, &errs) >= 1.8, "{errs:?}");
}

#[test]
fn quadrature_order_in_step() {
    let f = Field2::from_fn(grid(129), phantom);
    let line = Line2D::from_angle(0.9, 0.2);
    let reference = exp_radon(&f, 0.7, &line, 1e-5);
    let steps = [4e-3, 2e-3, 1e-3];
    let errs: Vec<f64> = steps
        .iter()
        .map(|&s| (exp_radon(&f, 0.7, &line, s) - reference).norm())
        .collect();
    assert!(loglog_slope(&steps, &errs) >= 1.8, "{errs:?}");
}

#[test]
fn radial_field_gives_angle_independent_sinogram() {
    let f = Field2::from_fn(grid(129), gaussian);
    let s = sinogram(&f, 0.0, 36, 33, &ConvexPolygon::empty());
    for o in 0..33 {
        let base = s.value(0, o);
        for a in 1..36 {
            assert!((s.value(a, o) - base).norm() < 2e-3 * 0.5, "{a} {o}");
        }
    }
}

#[test]
fn support_inside_set_gives_clean_mask() {
    let f = Field2::from_fn(grid(128), |x| blob(x, [0.0, 0.0], [0.4, 0.4], C64::new(1.0, 0.5)));
    let e = square([0.0, 0.0], 0.5);
    let r = support_verify(&f, 0.8, &e, 1e-8).unwrap();
    assert!(r.masked_lines > 0);
    assert!(r.forward_clear && r.masked_max <= 1e-8, "{r:?}");
    assert!(r.exterior_max <= 1e-8, "{r:?}");
}

#[test]
fn exterior_bump_is_detected() {
    let f = Field2::from_fn(grid(128), |x| {
        blob(x, [0.0, 0.0], [0.4, 0.4], C64::new(1.0, 0.0)) + blob(x, [0.75, 0.0], [0.12, 0.12], C64::new(0.3, 0.0))
    });
    let e = square([0.0, 0.0], 0.5);
    let r = support_verify(&f, 0.8, &e, 1e-3).unwrap();
    assert!(r.masked_max > 1e-3 && !r.forward_clear, "{r:?}");
    assert!(r.exterior_detected, "{r:?}");
}

#[test]
fn zero_field_support_check_is_clear() {
    let f = ComplexField2::zeros(grid(64));
    let r = support_verify(&f, 0.5, &square([0.0, 0.0], 0.3), 1e-12).unwrap();
    assert_eq!(r.masked_max, 0.0);
    assert_eq!(r.exterior_max, 0.0);
}

#[test]
fn full_inversion_round_trips() {
    let g = grid(128);
    let f = Field2::from_fn(g, phantom);
    for mu in [0.0, 0.5, 1.0] {
        let s = sinogram(&f, mu, DEFAULT_ANGLES, DEFAULT_OFFSETS, &ConvexPolygon::empty());
        let back = ert_invert_full(&s, g).unwrap();
        let err = rel_l2(&back, &f);
        assert!(err <= 0.05, "mu {mu}: {err}");
    }
    let gauss = Field2::from_fn(g, gaussian);
    let s = sinogram(&gauss, 0.5, DEFAULT_ANGLES, DEFAULT_OFFSETS, &ConvexPolygon::empty());
    assert!(rel_l2(&ert_invert_full(&s, g).unwrap(), &gauss) <= 0.05);
}

#[test]
fn full_inversion_of_zero_is_zero() {
    let g = grid(64);
    let s = sinogram(&ComplexField2::zeros(g), 0.5, 90, 65, &ConvexPolygon::empty());
    assert!(ert_invert_full(&s, g).unwrap().max_abs() <= 1e-8);
}

#[test]
fn full_inversion_guards() {
    let g = grid(64);
    let f = Field2::from_fn(g, phantom);
    let mut s = sinogram(&f, 0.5, 90, 65, &ConvexPolygon::empty());
    s.angles.iter_mut().for_each(|a| *a *= 0.5);
    let err = ert_invert_full(&s, g).unwrap_err();
    assert!(err.to_string().contains("ert_invert_partial"), "{err}");
    let strong = sinogram(&f, 8.0, 90, 65, &ConvexPolygon::empty());
    assert!(ert_invert_full(&strong, g).is_err());
}

fn partial_setup(n_angles: usize) -> (ExpSinogram, ComplexField2, Field2<bool>) {
    let g = grid(40);
    let region = Field2::from_fn(g, |x| x[0] > -0.2);
    let f = Field2::from_fn(g, |x| blob(x, [0.35, 0.1], [0.35, 0.4], C64::new(1.0, -0.5)));
    let s = sinogram(&f, 0.6, n_angles, 61, &ConvexPolygon::empty());
    (s, f, region)
}

#[test]
fn partial_inversion_recovers_region_phantom() {
    let (s, f, region) = partial_setup(60);
    let all = vec![true; s.values.len()];
    let r = ert_invert_partial(&s, &all, &region, 1e-6).unwrap();
    assert!(rel_l2(&r.field, &f) <= 0.10, "{}", rel_l2(&r.field, &f));
    assert!(r.warning.is_none());
}

#[test]
fn partial_inversion_of_zero_is_zero() {
    let (mut s, _, region) = partial_setup(30);
    s.values.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
    let r = ert_invert_partial(&s, &vec![true; s.values.len()], &region, 1e-6).unwrap();
    assert_eq!(r.field.max_abs(), 0.0);
}

#[test]
fn partial_error_decreases_with_more_lines() {
    let (s, f, region) = partial_setup(60);
    let errs: Vec<f64> = [4usize, 2, 1]
        .iter()
        .map(|&every| {
            let use_line: Vec<bool> = (0..s.values.len())
                .map(|n| (n / s.offsets.len()) % every == 0)
                .collect();
            let r = ert_invert_partial(&s, &use_line, &region, 1e-6).unwrap();
            rel_l2(&r.field, &f)
        })
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn too_few_lines_warns() {
    let (s, _, region) = partial_setup(6);
    let r = ert_invert_partial(&s, &vec![true; s.values.len()], &region, 1e-6).unwrap();
    assert!(
        r.warning.as_deref().unwrap_or("").contains("condition estimate"),
        "{:?}",
        r.warning
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shift_along_perp_scales_by_exponential(theta in 0.0f64..2.0 * PI, p in -0.5f64..0.5, t in -0.4f64..0.4, mu in -1.5f64..1.5) {
        let line = Line2D::from_angle(theta, p);
        let w = line.omega_perp();
        let shifted = |x: [f64; 2]| gaussian([x[0] - t * w[0], x[1] - t * w[1]]);
        let a = exp_radon_fn(shifted, mu, &line, (-4.0, 4.0), 1e-3);
        let b = exp_radon_fn(gaussian, mu, &line, (-4.0, 4.0), 1e-3);
        prop_assert!((a - b * (mu * t).exp()).norm() <= 1e-9 * (1.0 + a.norm()));
    }

    #[test]
    fn linear_and_conjugation_symmetric(theta in 0.0f64..2.0 * PI, p in -0.8f64..0.8, mu in -1.0f64..1.0, cr in -2.0f64..2.0, ci in -2.0f64..2.0) {
        let g = grid(33);
        let f1 = Field2::from_fn(g, phantom);
        let f2 = Field2::from_fn(g, gaussian);
        let c = C64::new(cr, ci);
        let comb = Field2 { grid: g, values: f1.values.iter().zip(&f2.values).map(|(a, b)| a + c * b).collect() };
        let line = Line2D::from_angle(theta, p);
        let lhs = exp_radon(&comb, mu, &line, 0.01);
        let rhs = exp_radon(&f1, mu, &line, 0.01) + c * exp_radon(&f2, mu, &line, 0.01);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        let conj = f1.map(|v| v.conj());
        let a = exp_radon(&conj, mu, &line, 0.01);
        let b = exp_radon(&f1, mu, &line, 0.01).conj();
        prop_assert!((a - b).norm() <= 1e-14 * (1.0 + a.norm()));
    }
}
