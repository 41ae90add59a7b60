use std::f64::consts::PI;

use cgo_core::cgo::{build_bundle, CgoParams, VLocalization, DEFAULT_TAU_GRID};
use cgo_core::forward::{domain_grid, Bump, Potential};
use cgo_core::geometry::{CrossSection, CylinderDomain, Line2D, RigidMotion};
use cgo_core::numerics::{adaptive_simpson, bump, ComplexField3, Grid3};
use cgo_core::phase::{localizer, AmplitudeOptions, AmplitudePair, BoundaryPhase, Branch, PhaseField, RayProfile};
use cgo_core::pipeline::*;
use cgo_core::radon::{exp_radon, sampling};
use cgo_core::C64;
use nalgebra::DMatrix;

const EPS: f64 = 0.3;

fn square(height: f64) -> CylinderDomain {
    CylinderDomain::new(CrossSection::unit_square(), height, &[(3.2, 3.8)]).unwrap()
}

fn fields(kappa: f64, g: Grid3) -> (PhaseField, AmplitudePair) {
    let bp = BoundaryPhase::new(kappa, 1.0, EPS).unwrap();
    let ph = PhaseField::on_grid(g.cross_section(), &RigidMotion::identity(), &bp, Branch::Direct);
    let amps = AmplitudePair::on_grid(
        &ph,
        RayProfile::Smooth { epsilon: EPS },
        EPS,
        &AmplitudeOptions::default(),
    )
    .unwrap();
    (ph, amps)
}

fn q2_bump() -> Potential {
    Potential::single(Bump {
        center: [0.05, 0.5, 0.12],
        radii: [0.25, 0.3, 0.1],
        amplitude: C64::new(0.8, 0.3),
    })
}

fn simpson(f: impl Fn(f64) -> C64, a: f64, b: f64) -> C64 {
    let re = adaptive_simpson(&mut |t| Ok::<f64, ()>(f(t).re), a, b, 1e-13, 40).unwrap();
    let im = adaptive_simpson(&mut |t| Ok::<f64, ()>(f(t).im), a, b, 1e-13, 40).unwrap();
    C64::new(re, im)
}

#[test]
fn moment_of_axially_constant_difference() {
    let d = square(0.5);
    let g = domain_grid(&d, [33, 33, 9]);
    let q1 = ComplexField3::from_fn(g, |x| C64::new(x[0] * x[1], 1.0 - x[0]));
    let q2 = ComplexField3::zeros(g);
    let m = moment_field(&q1, &q2, C64::new(0.0, 0.0)).unwrap();
    for (idx, v) in m.values.values.iter().enumerate() {
        let (i, j) = g.cross_section().unindex(idx);
        let x = g.cross_section().point(i, j);
        assert!((v - C64::new(x[0] * x[1], 1.0 - x[0]) * 0.5).norm() < 1e-14);
    }
}

#[test]
fn moment_of_compensated_difference() {
    let d = square(0.5);
    let g = domain_grid(&d, [33, 33, 9]);
    let n = C64::new(0.7, -2.0);
    let q1 = ComplexField3::from_fn(g, |x| C64::new(x[0] + 2.0 * x[1], 0.0) * (-n * x[2]).exp());
    let q2 = ComplexField3::zeros(g);
    let m = moment_field(&q1, &q2, n).unwrap();
    for (idx, v) in m.values.values.iter().enumerate() {
        let (i, j) = g.cross_section().unindex(idx);
        let x = g.cross_section().point(i, j);
        assert!((v - C64::new(x[0] + 2.0 * x[1], 0.0) * 0.5).norm() < 1e-13);
    }
}

#[test]
fn moment_of_bump_matches_adaptive_quadrature() {
    let d = square(0.5);
    let g = domain_grid(&d, [33, 33, 257]);
    let q = q2_bump();
    let n = C64::new(0.3, -4.0);
    let q1 = ComplexField3::zeros(g);
    let m = moment_field(&q1, &q.sample(g), n).unwrap();
    let scene = Scene {
        domain: d.clone(),
        q1: Potential::zero(),
        q2: q.clone(),
    };
    let plane = g.cross_section();
    for &(i, j) in &[(16, 16), (12, 18), (20, 10), (3, 3)] {
        let x = plane.point(i, j);
        let oracle = simpson(|t| -q.eval([x[0], x[1], t]) * (n * t).exp(), 0.0, 0.5);
        assert!(
            (m.values.at(i, j) - oracle).norm() < 1e-8,
            "{:?} {oracle}",
            m.values.at(i, j)
        );
        assert!(
            (scene.moment(x, n) - oracle).norm() < 1e-10,
            "{} {oracle}",
            scene.moment(x, n)
        );
    }
}

#[test]
fn identity_vanishes_for_equal_potentials() {
    let d = square(0.25);
    let g = domain_grid(&d, [33, 33, 17]);
    let (ph, amps) = fields(0.5, g);
    let q = q2_bump().sample(g);
    let p = CgoParams::new(8.0, C64::new(0.0, -1.0), 1.0).unwrap();
    let b = build_bundle(&d, &q, &ph, &amps, &p, VLocalization::Plateau, false).unwrap();
    assert_eq!(identity_volume(&q, &q, &b.u1, &b.v).unwrap(), C64::new(0.0, 0.0));
    assert_eq!(
        principal_limit(&q, &q, &ph, &amps, p.n, VLocalization::Plateau).unwrap(),
        C64::new(0.0, 0.0)
    );
    let bd = identity_boundary(&d, &q, &q, &b).unwrap();
    let scale = b.u1.max_abs() * b.v.max_abs();
    assert!(bd.total.norm() < 1e-8 * scale, "{:?}", bd);
}

#[test]
fn identity_with_bare_u_is_the_principal_term() {
    let d = square(0.25);
    let g = domain_grid(&d, [33, 33, 17]);
    let (ph, amps) = fields(0.5, g);
    let q1 = ComplexField3::zeros(g);
    let q2 = q2_bump().sample(g);
    for n in [C64::new(0.0, 0.0), C64::new(0.4, -2.0)] {
        let p = CgoParams::new(12.0, n, 1.0).unwrap();
        let b = build_bundle(&d, &q1, &ph, &amps, &p, VLocalization::Plateau, false).unwrap();
        let i = identity_volume(&q1, &q2, &b.u, &b.v).unwrap();
        let pl = principal_limit(&q1, &q2, &ph, &amps, n, VLocalization::Plateau).unwrap();
        assert!((i - pl).norm() <= 1e-12 * pl.norm(), "{i} {pl}");
    }
}

#[test]
fn flat_principal_limit_is_separable() {
    let d = square(0.5);
    let g = domain_grid(&d, [41, 41, 17]);
    let (ph, amps) = fields(0.0, g);
    let f1 = |t: f64| 1.0 + t;
    let f2 = |t: f64| (3.0 * t).sin();
    let f3 = |t: f64| C64::new(t, 1.0);
    let q1 = ComplexField3::from_fn(g, |x| f3(x[2]) * f1(x[0]) * f2(x[1]));
    let q2 = ComplexField3::zeros(g);
    let n = C64::new(0.5, -1.5);
    let pl = principal_limit(&q1, &q2, &ph, &amps, n, VLocalization::Plateau).unwrap();
    let sum = |ax: &cgo_core::numerics::Axis, f: &dyn Fn(f64) -> C64| -> C64 {
        ax.trapezoid_weights()
            .iter()
            .enumerate()
            .map(|(i, w)| f(ax.coord(i)) * *w)
            .sum()
    };
    let s1 = sum(&g.x1, &|t| C64::new(f1(t) * bump(t / EPS) * localizer(t, EPS), 0.0));
    let s2 = sum(&g.x2, &|t| (C64::i() * n * t).exp() * f2(t));
    let s3 = sum(&g.x3, &|t| f3(t) * (n * t).exp());
    let oracle = s1 * s2 * s3;
    assert!((pl - oracle).norm() <= 1e-12 * oracle.norm(), "{pl} {oracle}");
}

#[test]
fn boundary_form_matches_volume_form() {
    let d = square(0.25);
    let g = domain_grid(&d, [33, 33, 33]);
    let (ph, amps) = fields(0.5, g);
    let q1 = ComplexField3::zeros(g);
    let q2 = q2_bump().sample(g);
    let p = CgoParams::new(8.0, C64::new(0.0, 0.0), 1.0).unwrap();
    let b = build_bundle(&d, &q1, &ph, &amps, &p, VLocalization::Plateau, false).unwrap();
    let vol = identity_volume(&q1, &q2, &b.u1, &b.v).unwrap();
    let bd = identity_boundary(&d, &q1, &q2, &b).unwrap();
    assert!((bd.total - vol).norm() <= 1e-2 * vol.norm(), "{vol} {bd:?}");
}

#[test]
fn boundary_form_needs_v_to_vanish_on_blocked_face() {
    let d = square(0.25);
    let g = domain_grid(&d, [33, 33, 33]);
    let bp = BoundaryPhase::new(0.5, 1.0, EPS).unwrap();
    let ph = PhaseField::on_grid(g.cross_section(), &RigidMotion::identity(), &bp, Branch::Direct);
    let amps = AmplitudePair::on_grid(
        &ph,
        RayProfile::Smooth { epsilon: EPS },
        f64::INFINITY,
        &AmplitudeOptions::default(),
    )
    .unwrap();
    let q1 = ComplexField3::zeros(g);
    // A potential touching the blocked face makes the missing Σ₀ pairs matter.
    let q2 = Potential::single(Bump {
        center: [-0.4, 0.5, 0.12],
        radii: [0.3, 0.3, 0.1],
        amplitude: C64::new(0.8, 0.3),
    })
    .sample(g);
    let p = CgoParams::new(8.0, C64::new(0.0, 0.0), 1.0).unwrap();
    let b = build_bundle(&d, &q1, &ph, &amps, &p, VLocalization::None, false).unwrap();
    let vol = identity_volume(&q1, &q2, &b.u1, &b.v).unwrap();
    let bd = identity_boundary(&d, &q1, &q2, &b).unwrap();
    assert!((bd.total - vol).norm() > 1e-2 * vol.norm(), "{vol} {bd:?}");
}

#[test]
fn richardson_removes_inverse_tau_tail() {
    let p = C64::new(1.5, -0.5);
    let c = C64::new(3.0, 2.0);
    let taus = [8.0, 16.0, 32.0];
    let vals: Vec<C64> = taus.iter().map(|t| p + c / *t).collect();
    assert!((richardson(&taus, &vals).unwrap() - p).norm() < 1e-14);
    assert!(richardson(&[8.0], &vals[..1]).is_err());
}

#[test]
fn identity_gap_decays() {
    let d = square(0.25);
    let g = domain_grid(&d, [129, 129, 33]);
    let (ph, amps) = fields(0.5, g);
    let q1 = ComplexField3::zeros(g);
    let q2 = q2_bump().sample(g);
    let setup = IdentitySetup {
        domain: &d,
        q1: &q1,
        q2: &q2,
        phase: &ph,
        amps: &amps,
        n: C64::new(0.0, -1.0),
        tau0: 1.0,
        localization: VLocalization::Plateau,
    };
    let r = identity_sweep(&setup, &DEFAULT_TAU_GRID, false).unwrap();
    assert!(r.slope <= -0.8, "{:?} slope {}", r.gaps(), r.slope);
}

fn axis_scene(q: Potential) -> Scene {
    Scene {
        domain: CylinderDomain::new(CrossSection::unit_square(), 1.0, &[]).unwrap(),
        q1: Potential::zero(),
        q2: q,
    }
}

fn off_axis_bump() -> Potential {
    Potential::single(Bump {
        center: [0.05, 0.45, 0.5],
        radii: [0.3, 0.35, 0.4],
        amplitude: C64::new(1.0, -0.4),
    })
}

#[test]
fn straight_tube_average_converges_at_second_order() {
    let scene = axis_scene(off_axis_bump());
    let bp = BoundaryPhase::flat(1.0, 0.3).unwrap();
    let n = C64::new(0.0, -2.0);
    let p = |x: [f64; 2]| scene.moment(x, n);
    let r = moment_limit_check(&p, &RigidMotion::identity(), &bp, n, &DEFAULT_H_VALUES).unwrap();
    assert!(r.order >= 1.8, "{:?}", r.errors);
    assert!(r.axis_weight_errors.iter().all(|e| *e < 1e-9));
}

#[test]
fn curved_tube_weight_cancels_on_the_axis() {
    let scene = axis_scene(off_axis_bump());
    let bp = BoundaryPhase::new(0.5, 1.0, 0.3).unwrap();
    let n = C64::new(0.0, -2.0);
    let p = |x: [f64; 2]| scene.moment(x, n);
    let r = moment_limit_check(&p, &RigidMotion::identity(), &bp, n, &DEFAULT_H_VALUES).unwrap();
    assert!(r.order >= 0.9, "{:?}", r.errors);
    for w in r.axis_weight_errors.windows(2) {
        assert!(w[1] < 0.6 * w[0], "{:?}", r.axis_weight_errors);
    }
    let zero = |_: [f64; 2]| C64::new(0.0, 0.0);
    let z = moment_limit_check(&zero, &RigidMotion::identity(), &bp, n, &DEFAULT_H_VALUES).unwrap();
    assert!(z.averages.iter().all(|a| a.norm() == 0.0) && z.target.norm() == 0.0);
}

#[test]
fn tube_wider_than_strip_is_rejected() {
    // Long rays run into the caustic of the tapered phase.
    let bp = BoundaryPhase::new(0.5, 5.0, 0.3).unwrap();
    let zero = |_: [f64; 2]| C64::new(0.0, 0.0);
    assert!(moment_limit_check(&zero, &RigidMotion::identity(), &bp, C64::new(0.0, 0.0), &[2.0]).is_err());
}

fn recon_scene(q: Potential) -> Scene {
    Scene {
        domain: CylinderDomain::new(CrossSection::unit_square(), 1.0, &[(0.85, 1.15)]).unwrap(),
        q1: q,
        q2: Potential::zero(),
    }
}

fn main_bump() -> Potential {
    Potential::single(Bump {
        center: [0.05, 0.55, 0.5],
        radii: [0.3, 0.3, 0.45],
        amplitude: C64::new(1.0, 0.5),
    })
}

#[test]
fn radon_data_vanish_for_equal_potentials() {
    let scene = Scene {
        q2: main_bump(),
        ..recon_scene(main_bump())
    };
    let grid = section_grid(&scene.domain, 24);
    let (a, o) = sampling(&grid, 16, 21);
    for s in radon_data_from_moments(&scene, &[-2.0, 0.0, 3.0], &a, &o) {
        assert!(s.values.iter().all(|v| v.norm() == 0.0));
    }
}

#[test]
fn moment_path_matches_gridded_radon() {
    let scene = recon_scene(main_bump());
    let grid = section_grid(&scene.domain, 24);
    let (angles, offsets) = sampling(&grid, 12, 15);
    let gridded = |n: usize, gamma: f64| {
        let fine = Grid3::new(
            cgo_core::numerics::Axis::new(-0.5, 0.5, n),
            cgo_core::numerics::Axis::new(0.0, 1.0, n),
            cgo_core::numerics::Axis::new(0.0, 1.0, 49),
        );
        let (q1, q2) = scene.sample(fine);
        moment_field(&q1, &q2, C64::new(0.0, -gamma)).unwrap()
    };
    for gamma in [-6.0, 0.0, 4.0] {
        // Bilinear sampling errs at O(h²); extrapolate from two grids.
        let coarse = gridded(101, gamma);
        let fine = gridded(201, gamma);
        let s = &radon_data_from_moments(&scene, &[gamma], &angles, &offsets)[0];
        let scale = s.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (n, line) in s.lines().iter().enumerate() {
            if !s.avoid_mask[n] {
                assert_eq!(s.values[n].norm(), 0.0);
                continue;
            }
            let a = exp_radon(&coarse.values, gamma, line, 1e-3);
            let b = exp_radon(&fine.values, gamma, line, 1e-3);
            let direct = (b * 4.0 - a) / 3.0;
            assert!(
                (direct - s.values[n]).norm() <= 5e-4 * scale,
                "{gamma} {line:?} {direct} {}",
                s.values[n]
            );
        }
    }
}

#[test]
fn moment_path_matches_adaptive_line_integral() {
    let q = main_bump();
    let scene = recon_scene(q.clone());
    for (theta, p) in [(0.5 * PI, 0.7986), (1.2, 0.5), (2.2, 0.2)] {
        let line = Line2D::from_angle(theta, p);
        let c = line_chord(&line, &scene.domain);
        let at = |s: f64, t: f64| {
            let y = line.point(s);
            q.eval([y[0], y[1], t])
        };
        let part = |f: &dyn Fn(C64) -> f64| {
            let inner = |s: f64| adaptive_simpson(&mut |t| Ok::<f64, ()>(f(at(s, t))), 0.0, 1.0, 1e-14, 50).unwrap();
            adaptive_simpson(&mut |s| Ok::<f64, ()>(inner(s)), c.t0, c.t1, 1e-13, 50).unwrap()
        };
        let oracle = C64::new(part(&|z| z.re), part(&|z| z.im));
        let d = radon_data_from_moments(&scene, &[0.0], &[theta], &[p]);
        assert!(d[0].avoid_mask[0]);
        assert!(
            (d[0].values[0] - oracle).norm() <= 1e-7 * oracle.norm(),
            "{} {oracle}",
            d[0].values[0]
        );
    }
}

#[test]
fn mirror_moment_is_reversed_line_entry() {
    let scene = recon_scene(main_bump());
    let gammas = [-3.0, 2.5];
    let line = Line2D::from_angle(0.7, 0.2);
    let rev = line.reversed();
    let dm = directed_moments(&scene, &line, &gammas);
    let dr = directed_moments(&scene, &rev, &gammas);
    let c = line_chord(&line, &scene.domain);
    let cr = line_chord(&rev, &scene.domain);
    for (i, g) in gammas.iter().enumerate() {
        let mirror = dm[i].mirror * (-g * c.t0).exp();
        let forward = dr[i].forward * (g * cr.t0).exp();
        assert!(
            (mirror - forward).norm() <= 1e-12 * forward.norm(),
            "{mirror} {forward}"
        );
    }
}

fn small_opts() -> ReconstructionOptions {
    ReconstructionOptions {
        gammas: gamma_grid(9, 4.0),
        section_nodes: 24,
        angles: 48,
        offsets: 41,
        x3_nodes: 17,
        ..Default::default()
    }
}

#[test]
fn equal_potentials_reconstruct_to_zero() {
    let scene = Scene {
        q2: main_bump(),
        ..recon_scene(main_bump())
    };
    let r = reconstruct(&scene, &small_opts()).unwrap();
    assert_eq!(r.report.max_abs, 0.0);
}

#[test]
fn difference_hidden_in_hull_is_invisible() {
    // Incircle of the hull triangle (0.35,0), (0.5,0), (0.5,0.15).
    let q = Potential::single(Bump {
        center: [0.456, 0.044, 0.5],
        radii: [0.035, 0.035, 0.3],
        amplitude: C64::new(2.0, 1.0),
    });
    let r = reconstruct(&recon_scene(q), &small_opts()).unwrap();
    assert!(r.report.max_abs < 3.0 * r.report.noise_floor, "{:?}", r.report);
}

#[test]
fn reconstruction_is_rotation_equivariant() {
    let disk = CrossSection::Disk {
        center: [0.0, 0.0],
        radius: 0.5,
    };
    let arc = (0.75 * PI - 0.15, 0.75 * PI + 0.15);
    let b = Bump {
        center: [0.1, -0.05, 0.45],
        radii: [0.25, 0.3, 0.4],
        amplitude: C64::new(1.0, 0.3),
    };
    let quarter = 0.25 * PI;
    let rotated = Bump {
        center: [-b.center[1], b.center[0], b.center[2]],
        radii: [b.radii[1], b.radii[0], b.radii[2]],
        ..b
    };
    let scene = |arc: (f64, f64), bump: Bump| Scene {
        domain: CylinderDomain::new(disk.clone(), 1.0, &[arc]).unwrap(),
        q1: Potential::single(bump),
        q2: Potential::zero(),
    };
    let opts = small_opts();
    let r0 = reconstruct(&scene(arc, b), &opts).unwrap();
    let r1 = reconstruct(&scene((arc.0 + quarter, arc.1 + quarter), rotated), &opts).unwrap();
    let g = r0.field.grid;
    let [n1, _, n3] = g.dims();
    let scale = r0.field.max_abs();
    let mut worst = 0.0f64;
    for k in 0..n3 {
        for j in 0..n1 {
            for i in 0..n1 {
                assert_eq!(r0.region.at(i, j), r1.region.at(n1 - 1 - j, i));
                if !r0.region.at(i, j) {
                    continue;
                }
                let a = r0.field.at(i, j, k);
                let c = r1.field.at(n1 - 1 - j, i, k);
                worst = worst.max((a - c).norm());
            }
        }
    }
    assert!(worst <= 1e-6 * scale, "{worst} {scale}");
}

#[test]
fn polynomial_profiles_are_recovered_exactly() {
    let gammas = default_gamma_grid();
    let height = 1.0;
    let profile = |t: f64| C64::new(1.0 - 2.0 * t + 3.0 * t * t, 0.5 * t);
    let data = DMatrix::from_fn(gammas.len(), 1, |r, _| {
        simpson(|t| profile(t) * C64::new(0.0, -gammas[r] * t).exp(), 0.0, height)
    });
    let map = x3_inversion_matrix(&gammas, height, X3Basis::Polynomial { degree: 2 }, DEFAULT_X3_RIDGE, 11).unwrap();
    let out = &map * data;
    for k in 0..11 {
        let t = k as f64 / 10.0;
        assert!(
            (out[(k, 0)] - profile(t)).norm() < 1e-5,
            "{} {}",
            out[(k, 0)],
            profile(t)
        );
    }
}

#[test]
fn gamma_grid_must_be_symmetric() {
    let scene = recon_scene(main_bump());
    let opts = ReconstructionOptions {
        gammas: vec![-1.0, 0.0, 2.0],
        ..small_opts()
    };
    assert!(reconstruct(&scene, &opts).is_err());
}

#[test]
fn coarse_gamma_grid_warns_about_resolution() {
    let scene = recon_scene(main_bump());
    let opts = ReconstructionOptions {
        gammas: gamma_grid(3, 1.0),
        feature_width: Some(0.2),
        ..small_opts()
    };
    let r = reconstruct(&scene, &opts).unwrap();
    assert!(
        r.report.warnings.iter().any(|w| w.contains("insufficient γ coverage")),
        "{:?}",
        r.report.warnings
    );
}

#[test]
fn blind_entry_tracks_moment_data() {
    let d = CylinderDomain::new(CrossSection::unit_square(), 0.25, &[(3.2, 3.8)]).unwrap();
    let g = domain_grid(&d, [65, 65, 33]);
    let q2 = q2_bump();
    let scene = Scene {
        domain: d.clone(),
        q1: Potential::zero(),
        q2: q2.clone(),
    };
    let q1s = ComplexField3::zeros(g);
    let oracle = DtnOracle::new(&d, &q2.sample(g)).unwrap();
    let opts = BlindOptions {
        bp: BoundaryPhase::flat(1.0, 0.2).unwrap(),
        profile_width: 0.05,
        taus: vec![16.0, 32.0],
        tau0: 1.0,
    };
    let line = Line2D::from_angle(PI, -0.05);
    assert!(blind_admissible(&line, &d, &opts.bp));
    let gamma = 2.0;
    let blind = blind_entry(&d, &q1s, &oracle, &line, gamma, &opts).unwrap();
    let exact = radon_data_from_moments(&scene, &[gamma], &[PI], &[-0.05])[0].values[0];
    assert!((blind - exact).norm() <= 0.05 * exact.norm(), "{blind} {exact}");
}
