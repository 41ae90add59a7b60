//! Complex geometric optics solutions.
//!
//! Every field is stored in scaled form so that e^{τx₃} is never formed:
//! U and u₁ carry a factor e^{−τx₃}, V carries e^{τx₃}, and the residual of
//! U carries e^{−(τ+N)x₃}. With k = τ + N and b = a·a₀,
//!
//! ```text
//! U_s = e^{N x₃ + i k Ψ} b
//! V_s = e^{−i τ Ψ} a₀ s(y₁)
//! u₁_s = U_s + u_cor
//! ```

use crate::geometry::{CylinderDomain, Point};
use crate::numerics::dst::{Dst1, Dst2Planes};
use crate::numerics::{try_par_map, ComplexField3, Field2, Grid2, Grid3, ScalarField2, C64};
use crate::phase::{
    eval_amplitude_a0_with, eval_phase, invert_characteristic_map, localizer, AmplitudePair, PhaseField,
    DEFAULT_NEWTON_TOL,
};
use crate::{Error, Result};

const MODULE: &str = "cgo";

/// Smallest admissible τ unless configured otherwise.
pub const DEFAULT_TAU0: f64 = 1.0;
/// τ values used for convergence sweeps.
pub const DEFAULT_TAU_GRID: [f64; 6] = [8.0, 12.0, 16.0, 24.0, 32.0, 40.0];
/// Largest τ·h accepted by the residual evaluation.
pub const MAX_TAU_H: f64 = 0.5;
/// Largest exponent allowed when a scaled field is turned back into a raw one.
pub const MAX_UNSCALED_EXPONENT: f64 = 30.0;

const FIXED_POINT_TOL: f64 = 1e-13;
const FIXED_POINT_MAX: usize = 500;
/// Relative step below which a non-decreasing update counts as round-off.
const FIXED_POINT_STALL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgoParams {
    pub tau: f64,
    pub n: C64,
}

impl CgoParams {
    pub fn new(tau: f64, n: C64, tau0: f64) -> Result<Self> {
        if !tau.is_finite() || !(tau >= tau0) || !(tau > 0.0) {
            return Err(Error::invalid(
                MODULE,
                format!("tau = {tau} must be at least tau0 = {tau0}"),
            ));
        }
        if !n.re.is_finite() || !n.im.is_finite() {
            return Err(Error::invalid(MODULE, "frequency shift N must be finite"));
        }
        Ok(CgoParams { tau, n })
    }

    /// N = −iγ.
    pub fn reconstruction(tau: f64, gamma: f64, tau0: f64) -> Result<Self> {
        Self::new(tau, C64::new(0.0, -gamma), tau0)
    }

    /// k = τ + N.
    #[inline]
    pub fn k(&self) -> C64 {
        self.tau + self.n
    }

    /// γ when N is purely imaginary.
    pub fn gamma(&self) -> Option<f64> {
        (self.n.re == 0.0).then_some(-self.n.im)
    }
}

/// Ray localization applied to a₀ in V.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum VLocalization {
    /// a₀·s(y₁) with s ≡ 1 on |y₁| ≤ ε/2 and s ≡ 0 on |y₁| ≥ ε.
    #[default]
    Plateau,
    /// Bare a₀; V generally does not vanish on Σ₀.
    None,
}

fn check_section(grid: Grid3, phase: &PhaseField) -> Result<()> {
    if grid.cross_section() != phase.grid() {
        return Err(Error::invalid(
            MODULE,
            "phase field grid does not match the cross-section of the 3D grid",
        ));
    }
    Ok(())
}

fn caustic_at(phase: &PhaseField, i: usize, j: usize) -> Error {
    Error::Caustic {
        module: MODULE,
        at: phase.frame.to_frame(phase.grid().point(i, j)),
        det: f64::NAN,
    }
}

/// Repeats a cross-section profile along x₃ with factor `growth(x₃)`.
fn extrude(grid: Grid3, base: &[C64], growth: impl Fn(f64) -> C64) -> ComplexField3 {
    let plane = grid.x1.n * grid.x2.n;
    let mut out = ComplexField3::zeros(grid);
    for k in 0..grid.x3.n {
        let g = growth(grid.x3.coord(k));
        for (o, b) in out.values[k * plane..(k + 1) * plane].iter_mut().zip(base) {
            *o = b * g;
        }
    }
    out
}

/// Scaled U_s = e^{−τx₃}U = e^{Nx₃ + i(τ+N)Ψ}·a·a₀.
pub fn build_u(grid: Grid3, phase: &PhaseField, amps: &AmplitudePair, params: &CgoParams) -> Result<ComplexField3> {
    check_section(grid, phase)?;
    let k = params.k();
    let g2 = phase.grid();
    let mut base = vec![C64::new(0.0, 0.0); g2.len()];
    for (idx, b) in base.iter_mut().enumerate() {
        let a = amps.a.values[idx];
        if a == 0.0 {
            continue;
        }
        let (psi, a0) = (phase.psi.values[idx], amps.a0.values[idx]);
        if !psi.is_finite() || !a0.is_finite() {
            let (i, j) = g2.unindex(idx);
            return Err(caustic_at(phase, i, j));
        }
        *b = (C64::i() * k * psi).exp() * (a * a0);
    }
    let n = params.n;
    Ok(extrude(grid, &base, |x3| (n * x3).exp()))
}

/// Scaled V_s = e^{τx₃}V = e^{−iτΨ}·a₀·s(y₁).
pub fn build_v(
    grid: Grid3,
    phase: &PhaseField,
    amps: &AmplitudePair,
    tau: f64,
    localization: VLocalization,
) -> Result<ComplexField3> {
    check_section(grid, phase)?;
    let g2 = phase.grid();
    let eps = phase.bp.epsilon;
    let mut base = vec![C64::new(0.0, 0.0); g2.len()];
    for (idx, b) in base.iter_mut().enumerate() {
        let (i, j) = g2.unindex(idx);
        let y1 = phase.y_coords.values[idx][0];
        let weight = match localization {
            VLocalization::Plateau if y1.is_nan() => {
                let x = phase.frame.to_frame(g2.point(i, j));
                if x[0].abs() < crate::phase::tube_bound(&phase.bp, phase.branch, eps, x[1]) {
                    return Err(caustic_at(phase, i, j));
                }
                0.0
            }
            VLocalization::Plateau => localizer(y1, eps),
            VLocalization::None => 1.0,
        };
        if weight == 0.0 {
            continue;
        }
        let (psi, a0) = (phase.psi.values[idx], amps.a0.values[idx]);
        if !psi.is_finite() || !a0.is_finite() {
            return Err(caustic_at(phase, i, j));
        }
        *b = (C64::new(0.0, -tau * psi)).exp() * (a0 * weight);
    }
    Ok(extrude(grid, &base, |_| C64::new(1.0, 0.0)))
}

/// Multiplies a scaled field by e^{rate·x₃}, refusing exponents above
/// [`MAX_UNSCALED_EXPONENT`].
pub fn unscale(f: &ComplexField3, rate: f64) -> Result<ComplexField3> {
    let g = f.grid;
    let worst = (rate * g.x3.min).abs().max((rate * g.x3.max).abs());
    if worst > MAX_UNSCALED_EXPONENT {
        return Err(Error::numerical(
            MODULE,
            format!("unscaling by e^({rate}·x3) exceeds exponent {MAX_UNSCALED_EXPONENT}"),
        ));
    }
    let plane = g.x1.n * g.x2.n;
    let mut out = f.clone();
    for k in 0..g.x3.n {
        let s = (rate * g.x3.coord(k)).exp();
        out.values[k * plane..(k + 1) * plane].iter_mut().for_each(|v| *v *= s);
    }
    Ok(out)
}

/// Pointwise derivatives of Ψ and b = a·a₀ at one cross-section point.
#[derive(Clone, Copy, Debug, Default)]
struct SmoothFactors {
    /// 1 − |∇Ψ|².
    eikonal: f64,
    /// 2∇Ψ·∇b + ΔΨ·b.
    transport: f64,
    /// Δb.
    lap_b: f64,
    b: f64,
}

/// Finite-difference step used for the smooth factors.
pub fn residual_step(grid: Grid2, amps: &AmplitudePair) -> f64 {
    grid.x1
        .spacing()
        .min(grid.x2.spacing())
        .min(amps.profile.support() / 128.0)
}

fn amplitude_product(p: Point, phase: &PhaseField, amps: &AmplitudePair) -> Result<f64> {
    let inv = invert_characteristic_map(p, &phase.bp, phase.branch, DEFAULT_NEWTON_TOL)?;
    let r = amps.profile.value(inv.y[0]);
    if r == 0.0 {
        return Ok(0.0);
    }
    Ok(r * eval_amplitude_a0_with(p, &phase.bp, phase.branch, &amps.opts)?)
}

/// Fourth-order first and second derivatives from samples at −2δ..2δ.
#[inline]
fn diffs(f: [f64; 5], d: f64) -> (f64, f64) {
    let d1 = (-f[4] + 8.0 * f[3] - 8.0 * f[1] + f[0]) / (12.0 * d);
    let d2 = (-f[4] + 16.0 * f[3] - 30.0 * f[2] + 16.0 * f[1] - f[0]) / (12.0 * d * d);
    (d1, d2)
}

fn smooth_factors(x: Point, phase: &PhaseField, amps: &AmplitudePair, delta: f64) -> Result<SmoothFactors> {
    // Work in frame coordinates; the quantities below are rigid-motion invariant.
    let xf = phase.frame.to_frame(x);
    let psi = |p: Point| eval_phase(p, &phase.bp, phase.branch);
    let b = |p: Point| amplitude_product(p, phase, amps);
    let mut out = SmoothFactors::default();
    let mut grad_psi = [0.0; 2];
    let mut grad_b = [0.0; 2];
    let mut lap_psi = 0.0;
    let psi0 = psi(xf)?;
    let b0 = b(xf)?;
    for axis in 0..2 {
        let mut fp = [0.0; 5];
        let mut fb = [0.0; 5];
        for (s, off) in [-2.0, -1.0, 0.0, 1.0, 2.0].iter().enumerate() {
            if s == 2 {
                fp[s] = psi0;
                fb[s] = b0;
                continue;
            }
            let mut p = xf;
            p[axis] += off * delta;
            fp[s] = psi(p)?;
            fb[s] = b(p)?;
        }
        let (gp, lp) = diffs(fp, delta);
        let (gb, lb) = diffs(fb, delta);
        grad_psi[axis] = gp;
        grad_b[axis] = gb;
        lap_psi += lp;
        out.lap_b += lb;
    }
    out.b = b0;
    out.eikonal = 1.0 - grad_psi[0] * grad_psi[0] - grad_psi[1] * grad_psi[1];
    out.transport = 2.0 * (grad_psi[0] * grad_b[0] + grad_psi[1] * grad_b[1]) + lap_psi * b0;
    Ok(out)
}

/// Evaluates `f` on the listed indices in parallel, scattering into a
/// default-filled vector of length `len`.
fn scatter_map<T: Send + Default + Clone>(
    indices: &[usize],
    len: usize,
    f: impl Fn(usize) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let vals = try_par_map(indices, |&i| f(i))?;
    let mut out = vec![T::default(); len];
    for (&i, v) in indices.iter().zip(vals) {
        out[i] = v;
    }
    Ok(out)
}

fn support_nodes(amps: &AmplitudePair) -> Vec<usize> {
    (0..amps.a.values.len()).filter(|&i| amps.a.values[i] != 0.0).collect()
}

/// |1 − |∇Ψ|²| on supp a, zero elsewhere: the coefficient of (τ+N)² in L U.
pub fn eikonal_coefficient(phase: &PhaseField, amps: &AmplitudePair) -> Result<ScalarField2> {
    let g2 = phase.grid();
    let delta = residual_step(g2, amps);
    let nodes = support_nodes(amps);
    let vals = scatter_map(&nodes, g2.len(), |idx| {
        let (i, j) = g2.unindex(idx);
        let x = phase.frame.to_frame(g2.point(i, j));
        let p = |p: Point| eval_phase(p, &phase.bp, phase.branch);
        let mut g = [0.0; 2];
        for (axis, gi) in g.iter_mut().enumerate() {
            let mut f = [0.0; 5];
            for (s, off) in [-2.0, -1.0, 0.0, 1.0, 2.0].iter().enumerate() {
                let mut q = x;
                q[axis] += off * delta;
                f[s] = p(q)?;
            }
            *gi = diffs(f, delta).0;
        }
        Ok((1.0 - g[0] * g[0] - g[1] * g[1]).abs())
    })?;
    Ok(Field2 { grid: g2, values: vals })
}

/// (Δ + q)U scaled by e^{−(τ+N)x₃}, computed by the product rule with
/// fourth-order differences of Ψ and a·a₀:
///
/// ```text
/// e^{ikΨ} [k²(1 − |∇Ψ|²) b + ik(2∇Ψ·∇b + ΔΨ b) + Δb + q b]
/// ```
pub fn cgo_residual(
    grid: Grid3,
    q: &ComplexField3,
    phase: &PhaseField,
    amps: &AmplitudePair,
    params: &CgoParams,
) -> Result<ComplexField3> {
    check_section(grid, phase)?;
    if q.grid != grid {
        return Err(Error::invalid(MODULE, "potential grid does not match"));
    }
    let h = grid.spacing().iter().cloned().fold(0.0, f64::max);
    if params.tau * h > MAX_TAU_H {
        return Err(Error::numerical(
            MODULE,
            format!("grid too coarse for tau: tau*h = {:.3} > {MAX_TAU_H}", params.tau * h),
        ));
    }
    let g2 = phase.grid();
    let delta = residual_step(g2, amps);
    let nodes = support_nodes(amps);
    let factors = scatter_map(&nodes, g2.len(), |idx| {
        let (i, j) = g2.unindex(idx);
        smooth_factors(g2.point(i, j), phase, amps, delta)
    })?;
    let k = params.k();
    let plane = g2.len();
    let mut out = ComplexField3::zeros(grid);
    for &idx in &nodes {
        let f = factors[idx];
        let carrier = (C64::i() * k * phase.psi.values[idx]).exp();
        let smooth = k * k * f.eikonal * f.b + C64::i() * k * f.transport + f.lap_b;
        for kk in 0..grid.x3.n {
            let n = kk * plane + idx;
            out.values[n] = carrier * (smooth + q.values[n] * f.b);
        }
    }
    Ok(out)
}

/// Discrete conjugated operator e^{−τx₃}L_q(e^{τx₃}w) on interior nodes of
/// the grid box (zero on the box boundary).
pub fn conjugated_apply(q: &ComplexField3, w: &ComplexField3, tau: f64) -> ComplexField3 {
    let g = w.grid;
    let [n1, n2, n3] = g.dims();
    let [h1, h2, h3] = g.spacing();
    let (c1, c2) = (1.0 / (h1 * h1), 1.0 / (h2 * h2));
    let up = (tau * h3).exp() / (h3 * h3);
    let down = (-tau * h3).exp() / (h3 * h3);
    let diag = -2.0 * (c1 + c2) - 2.0 / (h3 * h3);
    let mut out = ComplexField3::zeros(g);
    for k in 1..n3 - 1 {
        for j in 1..n2 - 1 {
            for i in 1..n1 - 1 {
                let n = g.index(i, j, k);
                let v = &w.values;
                out.values[n] = (v[n - 1] + v[n + 1]) * c1
                    + (v[n - n1] + v[n + n1]) * c2
                    + v[n + n1 * n2] * up
                    + v[n - n1 * n2] * down
                    + v[n] * (diag + q.values[n]);
            }
        }
    }
    out
}

/// Mode-wise Green's function of the constant-coefficient conjugated
/// operator with zero lateral data and no conditions at the x₃ ends.
struct ConjugatedGreen {
    m: [usize; 2],
    n3: usize,
    dst: Dst2Planes,
    scale: f64,
    /// Kernel for offsets −(n3−1)..=(n3−1), per lateral mode.
    kernels: Vec<Vec<f64>>,
    norm: f64,
}

impl ConjugatedGreen {
    fn new(grid: Grid3, tau: f64) -> Self {
        let [n1, n2, n3] = grid.dims();
        let [h1, h2, h3] = grid.spacing();
        let (m1, m2) = (n1 - 2, n2 - 2);
        let l1 = Dst1::laplacian_eigenvalues(m1, h1);
        let l2 = Dst1::laplacian_eigenvalues(m2, h2);
        let a = (tau * h3).exp() / (h3 * h3);
        let c = (-tau * h3).exp() / (h3 * h3);
        let span = n3 - 1;
        let mut kernels = Vec::with_capacity(m1 * m2);
        let mut norm: f64 = 0.0;
        for lb in &l2 {
            for la in &l1 {
                let b = -2.0 / (h3 * h3) - la - lb;
                let disc = (b * b - 4.0 * a * c).sqrt();
                let z2 = (-b + disc) / (2.0 * a);
                let z1 = (c / a) / z2;
                let mut g = vec![0.0; 2 * span + 1];
                if z2 > 1.0 {
                    let cst = 1.0 / (a * (z1 - z2));
                    let (mut p1, mut p2) = (cst, cst);
                    for j in 0..=span {
                        g[span + j] = p1;
                        g[span - j] = p2;
                        p1 *= z1;
                        p2 /= z2;
                    }
                } else {
                    g[span + 1] = 1.0 / a;
                    for j in 1..span {
                        g[span + j + 1] = -(b * g[span + j] + c * g[span + j - 1]) / a;
                    }
                }
                norm = norm.max(g.iter().map(|v| v.abs()).sum());
                kernels.push(g);
            }
        }
        let dst = Dst2Planes::new(m1, m2);
        let scale = dst.scale();
        ConjugatedGreen {
            m: [m1, m2],
            n3,
            dst,
            scale,
            kernels,
            norm,
        }
    }

    /// Solves P w = f on interior rows; `f` and the result are full-grid fields.
    fn solve(&mut self, f: &ComplexField3) -> ComplexField3 {
        let g = f.grid;
        let [m1, m2] = self.m;
        let n3 = self.n3;
        let n1 = m1 + 2;
        let plane = m1 * m2;
        let rows = n3 - 2;
        let mut buf = vec![C64::new(0.0, 0.0); plane * rows];
        for k in 0..rows {
            for j in 0..m2 {
                for i in 0..m1 {
                    buf[k * plane + j * m1 + i] = f.values[g.index(i + 1, j + 1, k + 1)];
                }
            }
        }
        self.dst.apply(&mut buf);
        let mut modes = vec![C64::new(0.0, 0.0); plane * n3];
        let span = n3 - 1;
        for (mode, ker) in self.kernels.iter().enumerate() {
            for k in 0..n3 {
                let mut acc = C64::new(0.0, 0.0);
                for kp in 1..=rows {
                    let gk = ker[span + k - kp];
                    if gk != 0.0 {
                        acc += buf[(kp - 1) * plane + mode] * gk;
                    }
                }
                modes[k * plane + mode] = acc;
            }
        }
        self.dst.apply(&mut modes);
        let mut out = ComplexField3::zeros(g);
        for k in 0..n3 {
            for j in 0..m2 {
                for i in 0..m1 {
                    out.values[(k * (m2 + 2) + j + 1) * n1 + i + 1] = modes[k * plane + j * m1 + i] * self.scale;
                }
            }
        }
        out
    }
}

/// Correction term of u₁ and solve diagnostics.
#[derive(Clone, Debug)]
pub struct Correction {
    pub u_cor: ComplexField3,
    pub iterations: usize,
    /// Relative residual of the conjugated equation on interior nodes.
    pub residual: f64,
}

fn interior_norm(f: &ComplexField3) -> f64 {
    let [n1, n2, n3] = f.grid.dims();
    let mut s = 0.0;
    for k in 1..n3 - 1 {
        for j in 1..n2 - 1 {
            for i in 1..n1 - 1 {
                s += f.values[f.grid.index(i, j, k)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Solves e^{−τx₃}L_q(e^{τx₃}u_cor) = −e^{−τx₃}L_q U on interior nodes with
/// u_cor = 0 on the lateral boundary; `u_scaled` is U_s.
///
/// The constant-coefficient part is inverted exactly by a lateral sine
/// transform and a decaying kernel along x₃; q is handled by fixed-point
/// iteration. Only rectangular cross-sections on an aligned grid are
/// supported.
pub fn build_correction(
    domain: &CylinderDomain,
    q: &ComplexField3,
    u_scaled: &ComplexField3,
    tau: f64,
) -> Result<Correction> {
    let grid = u_scaled.grid;
    let Some((lo, hi)) = domain.cross_section.as_rectangle() else {
        return Err(Error::invalid(
            MODULE,
            "correction solve needs a rectangular cross-section",
        ));
    };
    let aligned = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs());
    if !aligned(grid.x1.min, lo[0])
        || !aligned(grid.x1.max, hi[0])
        || !aligned(grid.x2.min, lo[1])
        || !aligned(grid.x2.max, hi[1])
        || !aligned(grid.x3.min, 0.0)
        || !aligned(grid.x3.max, domain.height)
    {
        return Err(Error::invalid(
            MODULE,
            "grid is not aligned with the rectangular domain",
        ));
    }
    if q.grid != grid {
        return Err(Error::invalid(MODULE, "potential grid does not match"));
    }
    if grid.dims().iter().any(|&n| n < 4) {
        return Err(Error::invalid(MODULE, "grid too small for the correction solve"));
    }
    let mut rhs = conjugated_apply(q, u_scaled, tau);
    rhs.values.iter_mut().for_each(|v| *v = -*v);
    let f_norm = interior_norm(&rhs);
    let mut green = ConjugatedGreen::new(grid, tau);
    let mut w = green.solve(&rhs);
    let qmax = q.max_abs();
    let mut iterations = 0;
    if qmax > 0.0 {
        let mut prev_step = f64::INFINITY;
        loop {
            iterations += 1;
            let mut src = rhs.clone();
            for (s, (qv, wv)) in src.values.iter_mut().zip(q.values.iter().zip(&w.values)) {
                *s -= qv * wv;
            }
            let next = green.solve(&src);
            let step: f64 = next
                .values
                .iter()
                .zip(&w.values)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let size = next.l2_norm().max(f64::MIN_POSITIVE);
            w = next;
            if step <= FIXED_POINT_TOL * size || (step > prev_step && step <= FIXED_POINT_STALL * size) {
                break;
            }
            if !step.is_finite() || (iterations > 3 && step > prev_step) || iterations > FIXED_POINT_MAX {
                return Err(Error::Singular {
                    module: MODULE,
                    sigma_min: (1.0 / green.norm - qmax).max(0.0),
                    detail: format!(
                        "conjugated operator: fixed-point iteration diverged after {iterations} steps (|q| = {qmax:.3e}, kernel bound {:.3e})",
                        green.norm
                    ),
                });
            }
            prev_step = step;
        }
    }
    let mut res = conjugated_apply(q, &w, tau);
    for (r, f) in res.values.iter_mut().zip(&rhs.values) {
        *r -= f;
    }
    let residual = if f_norm > 0.0 {
        interior_norm(&res) / f_norm
    } else {
        interior_norm(&res)
    };
    Ok(Correction {
        u_cor: w,
        iterations,
        residual,
    })
}

/// U, V, u_cor and u₁ for one τ, all in scaled form.
#[derive(Clone, Debug)]
pub struct CgoBundle {
    pub params: CgoParams,
    /// e^{−τx₃}U.
    pub u: ComplexField3,
    /// e^{τx₃}V.
    pub v: ComplexField3,
    pub u_cor: ComplexField3,
    /// e^{−τx₃}u₁ = U_s + u_cor.
    pub u1: ComplexField3,
    /// e^{−(τ+N)x₃}(Δ + q)U, when requested.
    pub residual: Option<ComplexField3>,
    pub correction_residual: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn build_bundle(
    domain: &CylinderDomain,
    q: &ComplexField3,
    phase: &PhaseField,
    amps: &AmplitudePair,
    params: &CgoParams,
    localization: VLocalization,
    with_residual: bool,
) -> Result<CgoBundle> {
    let grid = q.grid;
    let u = build_u(grid, phase, amps, params)?;
    let v = build_v(grid, phase, amps, params.tau, localization)?;
    let corr = build_correction(domain, q, &u, params.tau)?;
    let mut u1 = u.clone();
    u1.values.iter_mut().zip(&corr.u_cor.values).for_each(|(a, b)| *a += b);
    let residual = if with_residual {
        Some(cgo_residual(grid, q, phase, amps, params)?)
    } else {
        None
    };
    Ok(CgoBundle {
        params: *params,
        u,
        v,
        u_cor: corr.u_cor,
        u1,
        residual,
        correction_residual: corr.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::domain_grid;
    use crate::geometry::{CrossSection, RigidMotion};
    use crate::phase::{AmplitudeOptions, BoundaryPhase, Branch, RayProfile};

    fn setup(kappa: f64, n: usize) -> (CylinderDomain, Grid3, PhaseField, AmplitudePair) {
        let d = CylinderDomain::new(CrossSection::unit_square(), 1.0, &[(3.2, 3.8)]).unwrap();
        let g = domain_grid(&d, [n, n, n]);
        let bp = BoundaryPhase::new(kappa, 1.0, 0.3).unwrap();
        let ph = PhaseField::on_grid(g.cross_section(), &RigidMotion::identity(), &bp, Branch::Direct);
        let amps = AmplitudePair::on_grid(
            &ph,
            RayProfile::Smooth { epsilon: 0.3 },
            0.3,
            &AmplitudeOptions::default(),
        )
        .unwrap();
        (d, g, ph, amps)
    }

    #[test]
    fn flat_u_matches_closed_form() {
        let (_, g, ph, amps) = setup(0.0, 33);
        let p = CgoParams::new(8.0, C64::new(0.5, -1.0), 1.0).unwrap();
        let u = build_u(g, &ph, &amps, &p).unwrap();
        for (idx, v) in u.values.iter().enumerate() {
            let (i, j, k) = g.unindex(idx);
            let x = g.point(i, j, k);
            let exact = (p.n * x[2] + C64::i() * p.k() * x[1]).exp() * crate::numerics::bump(x[0] / 0.3);
            assert!((v - exact).norm() <= 1e-12 * exact.norm().max(1.0));
        }
    }

    #[test]
    fn zero_data_gives_zero_correction() {
        let (d, g, _, _) = setup(0.0, 33);
        let z = ComplexField3::zeros(g);
        let c = build_correction(&d, &z, &z, 8.0).unwrap();
        assert_eq!(c.u_cor.max_abs(), 0.0);
    }

    #[test]
    fn green_inverts_conjugated_operator() {
        let (d, g, _, _) = setup(0.0, 33);
        let u = ComplexField3::from_fn(g, |x| {
            C64::new((3.0 * x[0]).sin() * x[1] * x[1], x[2] * (x[0] + x[1]).cos())
        });
        let q = ComplexField3::from_fn(g, |x| C64::new(0.5 * crate::numerics::bump(2.0 * (x[1] - 0.5)), 0.2));
        let c = build_correction(&d, &q, &u, 10.0).unwrap();
        assert!(c.residual < 1e-10, "{}", c.residual);
        let [n1, n2, n3] = g.dims();
        for k in 0..n3 {
            assert_eq!(c.u_cor.at(0, n2 / 2, k).norm(), 0.0);
            assert_eq!(c.u_cor.at(n1 - 1, n2 / 2, k).norm(), 0.0);
        }
    }

    #[test]
    fn disk_correction_is_rejected() {
        let d = CylinderDomain::new(CrossSection::unit_disk(), 1.0, &[]).unwrap();
        let g = domain_grid(&d, [33, 33, 9]);
        let z = ComplexField3::zeros(g);
        assert!(build_correction(&d, &z, &z, 8.0).is_err());
    }

    #[test]
    fn coarse_grid_guard() {
        let (_, g, ph, amps) = setup(0.0, 33);
        let q = ComplexField3::zeros(g);
        let p = CgoParams::new(40.0, C64::new(0.0, 0.0), 1.0).unwrap();
        let err = cgo_residual(g, &q, &ph, &amps, &p).unwrap_err();
        assert!(err.to_string().contains("grid too coarse for tau"));
    }

    #[test]
    fn unscale_guard() {
        let (_, g, _, _) = setup(0.0, 9);
        let z = ComplexField3::zeros(g);
        assert!(unscale(&z, 40.0).is_err());
        assert!(unscale(&z, 20.0).is_ok());
    }
}
