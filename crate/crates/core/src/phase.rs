//! Eikonal phase by characteristics, transport amplitude and ray cutoffs.
//!
//! Rays start on the line x₂ = 0 at `x₀` and run with unit speed in the
//! direction (α(x₀), β(x₀)) (direct branch) or (−α(x₀), β(x₀)) (mirror
//! branch). Ray coordinates are `y = (x₀, t)`.

use crate::geometry::RigidMotion;
use crate::numerics::{adaptive_simpson, bump, Field2, Grid2, Mask2, ScalarField2};
use crate::{Error, Result};

const MODULE: &str = "phase";

/// Default floor on det F′ below which a point counts as caustic.
pub const DEFAULT_DET_MIN: f64 = 1e-6;
/// Default Newton iteration cap.
pub const DEFAULT_MAX_NEWTON: usize = 50;
/// Default Newton residual tolerance.
pub const DEFAULT_NEWTON_TOL: f64 = 1e-13;

/// Plateau and taper radii of the smooth cutoff applied to the quadratic phase.
const PLATEAU: f64 = 1.0;
const TAPER_END: f64 = 3.0;

pub type Point = [f64; 2];

/// Which family of characteristics the phase is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// Ψ = m(y₁) + y₂.
    Direct,
    /// Ψ̃ = m(y₁) − y₂, rays leaning the other way.
    Mirror,
}

impl Branch {
    #[inline]
    fn sign(self) -> f64 {
        match self {
            Branch::Direct => 1.0,
            Branch::Mirror => -1.0,
        }
    }
}

/// Boundary phase m(x₀) = (κ/2) x₀² χ(x₀) on the initial line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPhase {
    pub kappa: f64,
    /// Height bound K of the cross-section along the axis.
    pub height_k: f64,
    /// Half-width of the smooth ray cutoff.
    pub epsilon: f64,
}

#[inline]
fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Smooth step S on [0, 1] with S(0) = 0, S(1) = 1, and its first two derivatives.
fn smooth_step(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let u = 1.0 - t;
    let phi = 1.0 / t - 1.0 / u;
    let d1 = -1.0 / (t * t) - 1.0 / (u * u);
    let d2 = 2.0 / (t * t * t) - 2.0 / (u * u * u);
    let s = logistic(-phi);
    let sp = s * (1.0 - s);
    if sp == 0.0 {
        return (s, 0.0, 0.0);
    }
    let spp = sp * (1.0 - 2.0 * s);
    (s, -sp * d1, spp * d1 * d1 - sp * d2)
}

/// χ ≡ 1 on |x| ≤ 1, χ ≡ 0 on |x| ≥ 3, with derivatives.
fn taper(x: f64) -> (f64, f64, f64) {
    let ax = x.abs();
    if ax <= PLATEAU {
        return (1.0, 0.0, 0.0);
    }
    if ax >= TAPER_END {
        return (0.0, 0.0, 0.0);
    }
    let (s, s1, s2) = smooth_step((TAPER_END - ax) / (TAPER_END - PLATEAU));
    let w = TAPER_END - PLATEAU;
    (s, -x.signum() * s1 / w, s2 / (w * w))
}

impl BoundaryPhase {
    /// Validates |m′| < 1 by dense sampling.
    pub fn new(kappa: f64, height_k: f64, epsilon: f64) -> Result<Self> {
        if !kappa.is_finite() {
            return Err(Error::invalid(MODULE, "kappa must be finite"));
        }
        if !(height_k > 0.0) || !height_k.is_finite() {
            return Err(Error::invalid(MODULE, "height bound K must be positive"));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::invalid(MODULE, "cutoff half-width epsilon must be positive"));
        }
        let bp = BoundaryPhase {
            kappa,
            height_k,
            epsilon,
        };
        let n = 20_001;
        let worst = (0..n)
            .map(|i| {
                let x = -TAPER_END + 2.0 * TAPER_END * i as f64 / (n - 1) as f64;
                bp.alpha(x).abs()
            })
            .fold(0.0, f64::max);
        if worst >= 1.0 {
            return Err(Error::invalid(
                MODULE,
                format!("boundary phase slope reaches |m'| = {worst:.4}; it must stay below 1"),
            ));
        }
        Ok(bp)
    }

    /// m ≡ 0.
    pub fn flat(height_k: f64, epsilon: f64) -> Result<Self> {
        Self::new(0.0, height_k, epsilon)
    }

    /// (m, m′, m″) at x₀.
    #[inline]
    pub fn jet(&self, x0: f64) -> (f64, f64, f64) {
        if self.kappa == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let (c, c1, c2) = taper(x0);
        let k = self.kappa;
        let m = 0.5 * k * x0 * x0 * c;
        let m1 = k * x0 * c + 0.5 * k * x0 * x0 * c1;
        let m2 = k * c + 2.0 * k * x0 * c1 + 0.5 * k * x0 * x0 * c2;
        (m, m1, m2)
    }

    #[inline]
    pub fn m(&self, x0: f64) -> f64 {
        self.jet(x0).0
    }

    #[inline]
    pub fn alpha(&self, x0: f64) -> f64 {
        self.jet(x0).1
    }

    #[inline]
    pub fn alpha_prime(&self, x0: f64) -> f64 {
        self.jet(x0).2
    }

    #[inline]
    pub fn beta(&self, x0: f64) -> f64 {
        let a = self.alpha(x0);
        (1.0 - a * a).sqrt()
    }

    /// True when 1 + t·α′(0) stays positive for t up to K.
    pub fn axis_caustic_free(&self) -> bool {
        1.0 + self.height_k * self.alpha_prime(0.0) > 0.0
    }
}

/// F(y) = (y₁ ± y₂ α(y₁), y₂ β(y₁)).
#[inline]
pub fn characteristic_map(y: Point, bp: &BoundaryPhase, branch: Branch) -> Point {
    let (_, a, _) = bp.jet(y[0]);
    let b = (1.0 - a * a).sqrt();
    [y[0] + branch.sign() * y[1] * a, y[1] * b]
}

/// F′(y) as rows [∂F₁/∂y, ∂F₂/∂y].
#[inline]
pub fn characteristic_jacobian(y: Point, bp: &BoundaryPhase, branch: Branch) -> [[f64; 2]; 2] {
    let (_, a, a1) = bp.jet(y[0]);
    let b = (1.0 - a * a).sqrt();
    let b1 = -a * a1 / b;
    let s = branch.sign();
    [[1.0 + s * y[1] * a1, s * a], [y[1] * b1, b]]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inversion {
    pub y: Point,
    /// (F′)⁻¹ at y, i.e. ∂y/∂x′.
    pub jacobian_inverse: [[f64; 2]; 2],
    pub det: f64,
    pub iterations: usize,
}

/// Newton inversion of F with default caustic floor and iteration cap.
pub fn invert_characteristic_map(x: Point, bp: &BoundaryPhase, branch: Branch, tol: f64) -> Result<Inversion> {
    invert_with(x, bp, branch, tol, DEFAULT_DET_MIN, DEFAULT_MAX_NEWTON)
}

pub fn invert_with(
    x: Point,
    bp: &BoundaryPhase,
    branch: Branch,
    tol: f64,
    det_min: f64,
    max_iter: usize,
) -> Result<Inversion> {
    let resid = |y: Point| {
        let f = characteristic_map(y, bp, branch);
        [f[0] - x[0], f[1] - x[1]]
    };
    let size = |r: Point| r[0].hypot(r[1]);
    let tol = tol * x[0].abs().max(x[1].abs()).max(1.0);
    let mut y = x;
    let mut r = resid(y);
    let mut it = 0;
    loop {
        let j = characteristic_jacobian(y, bp, branch);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det <= det_min {
            return Err(Error::Caustic {
                module: MODULE,
                at: x,
                det,
            });
        }
        let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
        if size(r) <= tol {
            return Ok(Inversion {
                y,
                jacobian_inverse: inv,
                det,
                iterations: it,
            });
        }
        if it >= max_iter {
            return Err(Error::NoConvergence {
                module: MODULE,
                what: "characteristic map inversion".into(),
                iterations: it,
                residual: size(r),
            });
        }
        let step = [inv[0][0] * r[0] + inv[0][1] * r[1], inv[1][0] * r[0] + inv[1][1] * r[1]];
        let mut lambda = 1.0;
        let mut trial;
        let mut r_trial;
        loop {
            trial = [y[0] - lambda * step[0], y[1] - lambda * step[1]];
            r_trial = resid(trial);
            if size(r_trial) < size(r) || lambda < 1e-6 {
                break;
            }
            lambda *= 0.5;
        }
        y = trial;
        r = r_trial;
        it += 1;
    }
}

/// Ψ(x) = m(y₁) ± y₂.
pub fn eval_phase(x: Point, bp: &BoundaryPhase, branch: Branch) -> Result<f64> {
    let inv = invert_characteristic_map(x, bp, branch, DEFAULT_NEWTON_TOL)?;
    Ok(bp.m(inv.y[0]) + branch.sign() * inv.y[1])
}

/// Five-point Laplacian of `f` at `x` with step `h`; with `richardson` the
/// h and h/2 stencils are combined to fourth order.
pub fn fd_laplacian(f: &mut impl FnMut(Point) -> Result<f64>, x: Point, h: f64, richardson: bool) -> Result<f64> {
    let c = f(x)?;
    let mut five = |h: f64| -> Result<f64> {
        Ok(
            (f([x[0] + h, x[1]])? + f([x[0] - h, x[1]])? + f([x[0], x[1] + h])? + f([x[0], x[1] - h])? - 4.0 * c)
                / (h * h),
        )
    };
    let coarse = five(h)?;
    if !richardson {
        return Ok(coarse);
    }
    let fine = five(0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplitudeOptions {
    pub fd_step: f64,
    pub richardson: bool,
    pub quad_tol: f64,
    pub max_depth: usize,
}

impl Default for AmplitudeOptions {
    fn default() -> Self {
        AmplitudeOptions {
            fd_step: 4e-3,
            richardson: true,
            quad_tol: 1e-10,
            max_depth: 30,
        }
    }
}

/// Transport amplitude a₀ = exp(−½ ∫₀ᵗ ΔΨ ds) along the ray reaching `x`.
pub fn eval_amplitude_a0(x: Point, bp: &BoundaryPhase, branch: Branch) -> Result<f64> {
    eval_amplitude_a0_with(x, bp, branch, &AmplitudeOptions::default())
}

pub fn eval_amplitude_a0_with(x: Point, bp: &BoundaryPhase, branch: Branch, opts: &AmplitudeOptions) -> Result<f64> {
    let inv = invert_characteristic_map(x, bp, branch, DEFAULT_NEWTON_TOL)?;
    let [x0, t] = inv.y;
    if t == 0.0 {
        return Ok(1.0);
    }
    let mut phase = |p: Point| eval_phase(p, bp, branch);
    let mut integrand = |s: f64| -> Result<f64> {
        let p = characteristic_map([x0, s], bp, branch);
        fd_laplacian(&mut phase, p, opts.fd_step, opts.richardson)
    };
    let integral = adaptive_simpson(&mut integrand, 0.0, t, opts.quad_tol, opts.max_depth)?;
    // The mirror phase decreases along its rays, flipping the transport sign.
    Ok((-0.5 * branch.sign() * integral).exp())
}

/// Initial profile r(x₀) on the line x₂ = 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RayProfile {
    /// exp(1 − 1/(1 − (x₀/ε)²)) on (−ε, ε).
    Smooth { epsilon: f64 },
    /// 1/(2h) on [−h, h].
    Box { half_width: f64 },
}

impl RayProfile {
    #[inline]
    pub fn value(&self, x0: f64) -> f64 {
        match *self {
            RayProfile::Smooth { epsilon } => bump(x0 / epsilon),
            RayProfile::Box { half_width } => {
                if x0.abs() <= half_width {
                    0.5 / half_width
                } else {
                    0.0
                }
            }
        }
    }

    /// Half-width of the support in x₀.
    pub fn support(&self) -> f64 {
        match *self {
            RayProfile::Smooth { epsilon } => epsilon,
            RayProfile::Box { half_width } => half_width,
        }
    }
}

/// Ray-constant cutoff a(x) = r(y₁(x)).
pub fn eval_cutoff_a(x: Point, bp: &BoundaryPhase, branch: Branch, profile: &RayProfile) -> Result<f64> {
    let inv = invert_characteristic_map(x, bp, branch, DEFAULT_NEWTON_TOL)?;
    Ok(profile.value(inv.y[0]))
}

/// Largest δ̃ ≤ `x0_max` such that det F′ > `det_floor` on every sampled ray
/// with |x₀| ≤ δ̃, for t ∈ [0, K].
pub fn strip_half_width(bp: &BoundaryPhase, branch: Branch, det_floor: f64, x0_max: f64) -> f64 {
    let n: usize = 2001;
    let nt = 101;
    let ok = |x0: f64| {
        (0..nt).all(|k| {
            let t = bp.height_k * k as f64 / (nt - 1) as f64;
            let j = characteristic_jacobian([x0, t], bp, branch);
            j[0][0] * j[1][1] - j[0][1] * j[1][0] > det_floor
        })
    };
    for i in 0..n {
        let x0 = x0_max * i as f64 / (n - 1) as f64;
        if !ok(x0) || !ok(-x0) {
            return x0_max * i.saturating_sub(1) as f64 / (n - 1) as f64;
        }
    }
    x0_max
}

/// Phase sampled on a grid with finite-difference gradient and Laplacian.
///
/// Grid points are mapped into the ray frame by `frame` before inversion.
/// Nodes where inversion fails are flagged in `caustic_mask` and hold NaN;
/// derivative values whose stencil touches such nodes are NaN as well.
#[derive(Clone, Debug)]
pub struct PhaseField {
    pub psi: ScalarField2,
    pub grad_psi: Field2<[f64; 2]>,
    pub lap_psi: ScalarField2,
    pub y_coords: Field2<Point>,
    pub caustic_mask: Mask2,
    pub branch: Branch,
    pub bp: BoundaryPhase,
    pub frame: RigidMotion,
}

impl PhaseField {
    pub fn on_grid(grid: Grid2, frame: &RigidMotion, bp: &BoundaryPhase, branch: Branch) -> Self {
        let nan = f64::NAN;
        let inv: Vec<Option<Inversion>> = (0..grid.len())
            .map(|idx| {
                let (i, j) = grid.unindex(idx);
                let x = frame.to_frame(grid.point(i, j));
                invert_characteristic_map(x, bp, branch, DEFAULT_NEWTON_TOL).ok()
            })
            .collect();
        let psi = ScalarField2 {
            grid,
            values: inv
                .iter()
                .map(|v| v.map_or(nan, |v| bp.m(v.y[0]) + branch.sign() * v.y[1]))
                .collect(),
        };
        let y_coords = Field2 {
            grid,
            values: inv.iter().map(|v| v.map_or([nan, nan], |v| v.y)).collect(),
        };
        let caustic_mask = Field2 {
            grid,
            values: inv.iter().map(|v| v.is_none()).collect(),
        };
        let (grad, lap) = grid_derivatives(&psi);
        PhaseField {
            psi,
            grad_psi: grad,
            lap_psi: lap,
            y_coords,
            caustic_mask,
            branch,
            bp: *bp,
            frame: *frame,
        }
    }

    pub fn grid(&self) -> Grid2 {
        self.psi.grid
    }

    /// Ψ at a point in domain coordinates.
    pub fn eval(&self, x: Point) -> Result<f64> {
        eval_phase(self.frame.to_frame(x), &self.bp, self.branch)
    }
}

/// Plateau cutoff: 1 on |y| ≤ ε/2, 0 on |y| ≥ ε, smooth in between.
pub fn localizer(y: f64, epsilon: f64) -> f64 {
    smooth_step((epsilon - y.abs()) / (0.5 * epsilon)).0
}

/// Bound on |x₁| over rays starting in |x₀| < `half_width`, at height `t`.
pub fn tube_bound(bp: &BoundaryPhase, branch: Branch, half_width: f64, t: f64) -> f64 {
    let n = 401;
    let slope = (0..n)
        .map(|i| {
            bp.alpha(-half_width + 2.0 * half_width * i as f64 / (n - 1) as f64)
                .abs()
        })
        .fold(0.0, f64::max);
    let _ = branch;
    half_width + t.max(0.0) * slope
}

/// Second-order first derivative along one axis at index `i` of `n` samples.
#[inline]
fn d1(f: impl Fn(usize) -> f64, i: usize, n: usize, h: f64) -> f64 {
    if i == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
    } else if i == n - 1 {
        (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h)
    } else {
        (f(i + 1) - f(i - 1)) / (2.0 * h)
    }
}

/// Second-order second derivative along one axis.
#[inline]
fn d2(f: impl Fn(usize) -> f64, i: usize, n: usize, h: f64) -> f64 {
    if i == 0 {
        (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / (h * h)
    } else if i == n - 1 {
        (2.0 * f(n - 1) - 5.0 * f(n - 2) + 4.0 * f(n - 3) - f(n - 4)) / (h * h)
    } else {
        (f(i + 1) - 2.0 * f(i) + f(i - 1)) / (h * h)
    }
}

/// Gradient and Laplacian of a grid function by second-order differences.
pub fn grid_derivatives(f: &ScalarField2) -> (Field2<[f64; 2]>, ScalarField2) {
    let g = f.grid;
    let (n1, n2) = (g.x1.n, g.x2.n);
    let (h1, h2) = (g.x1.spacing(), g.x2.spacing());
    let mut grad = Field2::filled(g, [0.0; 2]);
    let mut lap = ScalarField2::filled(g, 0.0);
    for j in 0..n2 {
        for i in 0..n1 {
            let row = |ii: usize| *f.at(ii, j);
            let col = |jj: usize| *f.at(i, jj);
            let gx = d1(row, i, n1, h1);
            let gy = d1(col, j, n2, h2);
            *grad.at_mut(i, j) = [gx, gy];
            *lap.at_mut(i, j) = d2(row, i, n1, h1) + d2(col, j, n2, h2);
        }
    }
    (grad, lap)
}

/// Amplitude a₀ and ray cutoff a sampled on a grid.
#[derive(Clone, Debug)]
pub struct AmplitudePair {
    pub a0: ScalarField2,
    pub a: ScalarField2,
    pub profile: RayProfile,
    pub opts: AmplitudeOptions,
}

impl AmplitudePair {
    /// Evaluates a₀ at nodes whose ray starts within `a0_half_width` of the
    /// axis (NaN elsewhere) and a = r(y₁) everywhere.
    ///
    /// Fails if a node that may lie on a ray of the profile's support is
    /// caustic.
    pub fn on_grid(
        phase: &PhaseField,
        profile: RayProfile,
        a0_half_width: f64,
        opts: &AmplitudeOptions,
    ) -> Result<Self> {
        let grid = phase.grid();
        let bp = &phase.bp;
        let branch = phase.branch;
        let reach = profile.support().max(a0_half_width);
        let mut a0 = ScalarField2::filled(grid, f64::NAN);
        let mut a = ScalarField2::filled(grid, 0.0);
        for j in 0..grid.x2.n {
            for i in 0..grid.x1.n {
                let x = phase.frame.to_frame(grid.point(i, j));
                if *phase.caustic_mask.at(i, j) {
                    if x[0].abs() < tube_bound(bp, branch, reach, x[1]) {
                        return Err(Error::Caustic {
                            module: MODULE,
                            at: x,
                            det: f64::NAN,
                        });
                    }
                    continue;
                }
                let y = *phase.y_coords.at(i, j);
                *a.at_mut(i, j) = profile.value(y[0]);
                if y[0].abs() < a0_half_width || *a.at(i, j) != 0.0 {
                    *a0.at_mut(i, j) = eval_amplitude_a0_with(x, bp, branch, opts)?;
                }
            }
        }
        Ok(AmplitudePair {
            a0,
            a,
            profile,
            opts: *opts,
        })
    }

    /// Half-width h of the box profile, if any.
    pub fn box_half_width(&self) -> Option<f64> {
        match self.profile {
            RayProfile::Box { half_width } => Some(half_width),
            RayProfile::Smooth { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bp(kappa: f64) -> BoundaryPhase {
        BoundaryPhase::new(kappa, 1.0, 0.1).unwrap()
    }

    #[test]
    fn flat_phase_is_identity_map() {
        let b = bp(0.0);
        for y in [[0.3, 0.7], [-0.2, 0.0], [0.0, 1.3]] {
            assert_eq!(characteristic_map(y, &b, Branch::Direct), y);
        }
        let inv = invert_characteristic_map([0.3, 0.7], &b, Branch::Direct, 1e-14).unwrap();
        assert_eq!(inv.y, [0.3, 0.7]);
        assert_eq!(eval_phase([0.3, 0.7], &b, Branch::Direct).unwrap(), 0.7);
        assert_eq!(eval_phase([0.3, 0.7], &b, Branch::Mirror).unwrap(), -0.7);
        assert_eq!(eval_amplitude_a0([0.3, 0.7], &b, Branch::Direct).unwrap(), 1.0);
    }

    #[test]
    fn axis_is_fixed() {
        let b = bp(0.5);
        for t in [0.0, 0.25, 0.9] {
            assert_eq!(characteristic_map([0.0, t], &b, Branch::Direct), [0.0, t]);
            let inv = invert_characteristic_map([0.0, t], &b, Branch::Direct, 1e-14).unwrap();
            assert!(inv.y[0].abs() < 1e-15 && (inv.y[1] - t).abs() < 1e-15);
        }
    }

    #[test]
    fn slope_limit_is_enforced() {
        assert!(BoundaryPhase::new(1.1, 1.0, 0.1).is_err());
        assert!(BoundaryPhase::new(0.5, 0.0, 0.1).is_err());
        assert!(BoundaryPhase::new(0.5, 1.0, 0.0).is_err());
        let b = bp(0.5);
        assert_eq!(b.alpha(0.0), 0.0);
        assert_eq!(b.alpha_prime(0.0), 0.5);
    }

    #[test]
    fn taper_derivatives_match_differences() {
        for x in [1.2, 1.5, 1.8, -1.4] {
            let h = 1e-5;
            let (_, c1, c2) = taper(x);
            let fd1 = (taper(x + h).0 - taper(x - h).0) / (2.0 * h);
            let fd2 = (taper(x + h).1 - taper(x - h).1) / (2.0 * h);
            assert!((c1 - fd1).abs() < 1e-7, "{x}: {c1} vs {fd1}");
            assert!((c2 - fd2).abs() < 1e-6, "{x}: {c2} vs {fd2}");
        }
    }

    #[test]
    fn newton_reports_caustic() {
        let b = BoundaryPhase::new(-0.5, 4.0, 0.1).unwrap();
        let err = invert_characteristic_map([0.0, 2.5], &b, Branch::Direct, 1e-13).unwrap_err();
        assert!(matches!(err, Error::Caustic { .. }), "{err}");
    }

    #[test]
    fn box_profile_height() {
        let p = RayProfile::Box { half_width: 0.05 };
        assert_eq!(p.value(0.05), 10.0);
        assert_eq!(p.value(0.051), 0.0);
    }
}
