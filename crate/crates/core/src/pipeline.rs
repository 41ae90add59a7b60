//! Integral identity, moments of q₁ − q₂ along x₃, exponential-Radon data
//! of the moments and reconstruction of q₁ − q₂ on 𝒪 × [0, L].
//!
//! Potentials enter either sampled on the forward grid or as analytic
//! [`Potential`]s; the reconstruction uses the analytic form for its data
//! path and reports errors against it.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::cgo::{build_bundle, unscale, CgoBundle, CgoParams, VLocalization};
use crate::forward::{assemble, solve_dirichlet, BoundaryData, DiscreteOperator, NodeClass, Potential};
use crate::geometry::{line_avoids, CylinderDomain, Line2D, Point, RigidMotion, DEFAULT_LINE_MARGIN};
use crate::numerics::{
    loglog_slope, par_map, try_par_map, Axis, ComplexField2, ComplexField3, CompositeGauss, Grid2, Grid3, Mask2, C64,
};
use crate::phase::{
    characteristic_jacobian, characteristic_map, eval_amplitude_a0, strip_half_width, AmplitudeOptions, AmplitudePair,
    BoundaryPhase, Branch, PhaseField, RayProfile, DEFAULT_DET_MIN,
};
use crate::radon::{ert_invert_partial, sampling, ExpSinogram};
use crate::{Error, Result};

const MODULE: &str = "pipeline";
const ZERO: C64 = C64::new(0.0, 0.0);

/// Default γ grid: 33 points on [−8, 8].
pub const DEFAULT_GAMMA_POINTS: usize = 33;
pub const DEFAULT_GAMMA_MAX: f64 = 8.0;
/// Tube half-widths for the moment limit.
pub const DEFAULT_H_VALUES: [f64; 4] = [0.08, 0.04, 0.02, 0.01];
/// Ridge of the x₃ least squares, relative to the largest singular value squared.
pub const DEFAULT_X3_RIDGE: f64 = 1e-6;
/// Tikhonov weight of the 2D partial inversions, relative to λ_max(AᵀA).
pub const DEFAULT_RADON_REG: f64 = 1e-6;
/// Relative noise floor for reconstruction reports.
pub const DEFAULT_NOISE_REL: f64 = 1e-6;

pub fn gamma_grid(points: usize, max: f64) -> Vec<f64> {
    if points == 1 {
        return vec![0.0];
    }
    (0..points)
        .map(|i| -max + 2.0 * max * i as f64 / (points - 1) as f64)
        .collect()
}

pub fn default_gamma_grid() -> Vec<f64> {
    gamma_grid(DEFAULT_GAMMA_POINTS, DEFAULT_GAMMA_MAX)
}

fn same_grid(a: &ComplexField3, b: &ComplexField3) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::invalid(MODULE, "fields live on different grids"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Moments

/// p_N(x′) = ∫₀^L (q₁ − q₂)(x′, x₃) e^{N x₃} dx₃ on the cross-section grid.
#[derive(Clone, Debug)]
pub struct MomentField {
    pub n: C64,
    pub values: ComplexField2,
    pub height: f64,
}

/// Trapezoid rule in x₃ at every cross-section node.
pub fn moment_field(q1: &ComplexField3, q2: &ComplexField3, n: C64) -> Result<MomentField> {
    same_grid(q1, q2)?;
    let g = q1.grid;
    let plane = g.cross_section();
    let w = g.x3.trapezoid_weights();
    let mut values = ComplexField2::zeros(plane);
    for (k, wk) in w.iter().enumerate() {
        let f = (n * g.x3.coord(k)).exp() * *wk;
        let off = k * plane.len();
        for (idx, v) in values.values.iter_mut().enumerate() {
            *v += (q1.values[off + idx] - q2.values[off + idx]) * f;
        }
    }
    Ok(MomentField {
        n,
        values,
        height: g.x3.max - g.x3.min,
    })
}

/// Two potentials given in closed form.
#[derive(Clone, Debug)]
pub struct Scene {
    pub domain: CylinderDomain,
    pub q1: Potential,
    pub q2: Potential,
}

impl Scene {
    pub fn diff(&self, x: [f64; 3]) -> C64 {
        self.q1.eval(x) - self.q2.eval(x)
    }

    /// p_N(x′) by composite Gauss in x₃.
    pub fn moment(&self, x: Point, n: C64) -> C64 {
        moment_rule(self.domain.height).integrate_complex(|x3| self.diff([x[0], x[1], x3]) * (n * x3).exp())
    }

    /// p_N for several N sharing the samples of q₁ − q₂.
    pub fn moments(&self, x: Point, ns: &[C64]) -> Vec<C64> {
        let rule = moment_rule(self.domain.height);
        let mut out = vec![ZERO; ns.len()];
        for (x3, w) in rule.nodes.iter().zip(&rule.weights) {
            let d = self.diff([x[0], x[1], *x3]);
            if d == ZERO {
                continue;
            }
            for (o, n) in out.iter_mut().zip(ns) {
                *o += d * (n * x3).exp() * *w;
            }
        }
        out
    }

    pub fn sample(&self, grid: Grid3) -> (ComplexField3, ComplexField3) {
        (self.q1.sample(grid), self.q2.sample(grid))
    }
}

fn moment_rule(height: f64) -> CompositeGauss {
    CompositeGauss::new(0.0, height, 32, 16)
}

// ---------------------------------------------------------------------------
// Identity

/// ∫_Q (q₁ − q₂) u₁ V dx by the trapezoid rule; the CGO factors are stored
/// scaled so their exponentials cancel before multiplication.
pub fn identity_volume(q1: &ComplexField3, q2: &ComplexField3, u1: &ComplexField3, v: &ComplexField3) -> Result<C64> {
    same_grid(q1, q2)?;
    same_grid(q1, u1)?;
    same_grid(q1, v)?;
    let w = q1.grid.trapezoid_weights();
    Ok((0..w.len())
        .map(|n| (q1.values[n] - q2.values[n]) * u1.values[n] * v.values[n] * w[n])
        .sum())
}

/// ∫_Q (q₁ − q₂) e^{N(x₃ + iΨ)} a a₀² s dx, with s the V localization.
pub fn principal_limit(
    q1: &ComplexField3,
    q2: &ComplexField3,
    phase: &PhaseField,
    amps: &AmplitudePair,
    n: C64,
    localization: VLocalization,
) -> Result<C64> {
    same_grid(q1, q2)?;
    let g = q1.grid;
    if g.cross_section() != phase.grid() {
        return Err(Error::invalid(MODULE, "phase field grid does not match the potentials"));
    }
    let plane = phase.grid().len();
    let mut base = vec![ZERO; plane];
    for (idx, b) in base.iter_mut().enumerate() {
        let a = amps.a.values[idx];
        if a == 0.0 {
            continue;
        }
        let s = match localization {
            VLocalization::Plateau => crate::phase::localizer(phase.y_coords.values[idx][0], phase.bp.epsilon),
            VLocalization::None => 1.0,
        };
        let (psi, a0) = (phase.psi.values[idx], amps.a0.values[idx]);
        if s == 0.0 || !psi.is_finite() || !a0.is_finite() {
            continue;
        }
        *b = (C64::i() * n * psi).exp() * (a * a0 * a0 * s);
    }
    let w = g.trapezoid_weights();
    Ok((0..g.len())
        .map(|m| {
            let (_, _, k) = g.unindex(m);
            (q1.values[m] - q2.values[m]) * base[m % plane] * (n * g.x3.coord(k)).exp() * w[m]
        })
        .sum())
}

/// Boundary node off Σ₀ paired with its interior neighbour along `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryPair {
    pub boundary: usize,
    pub interior: usize,
    pub axis: usize,
}

/// All (accessible boundary, interior) neighbour pairs of the stencil.
pub fn accessible_pairs(op: &DiscreteOperator) -> Vec<BoundaryPair> {
    let g = op.grid;
    let [n1, n2, n3] = g.dims();
    let mut out = Vec::new();
    for (b, c) in op.class.iter().enumerate() {
        if !c.is_accessible() {
            continue;
        }
        let (i, j, k) = g.unindex(b);
        let ijk = [i, j, k];
        let dims = [n1, n2, n3];
        for axis in 0..3 {
            for step in [-1i64, 1] {
                let t = ijk[axis] as i64 + step;
                if t < 0 || t >= dims[axis] as i64 {
                    continue;
                }
                let mut nb = ijk;
                nb[axis] = t as usize;
                let n = g.index(nb[0], nb[1], nb[2]);
                if op.class[n] == NodeClass::Interior {
                    out.push(BoundaryPair {
                        boundary: b,
                        interior: n,
                        axis,
                    });
                }
            }
        }
    }
    out
}

/// Dirichlet-to-Neumann map of one potential, seen only through first-order
/// fluxes on the accessible pairs.
pub struct DtnOracle {
    op: DiscreteOperator,
    pairs: Vec<BoundaryPair>,
}

impl DtnOracle {
    pub fn new(domain: &CylinderDomain, q: &ComplexField3) -> Result<Self> {
        let op = assemble(domain, q, q.grid)?;
        let pairs = accessible_pairs(&op);
        Ok(DtnOracle { op, pairs })
    }

    pub fn grid(&self) -> Grid3 {
        self.op.grid
    }

    pub fn pairs(&self) -> &[BoundaryPair] {
        &self.pairs
    }

    /// Solution with the boundary values of `dirichlet` (Σ₀ values must vanish).
    fn solve(&self, dirichlet: &ComplexField3) -> Result<ComplexField3> {
        let mut f = BoundaryData::trace_of(&self.op, dirichlet);
        let scale = f.dirichlet.max_abs().max(f64::MIN_POSITIVE);
        if f.max_on(&self.op, |c| c == NodeClass::Sigma0) > 1e-8 * scale {
            return Err(Error::invalid(
                MODULE,
                "boundary data must vanish on the inaccessible face",
            ));
        }
        for (v, c) in f.dirichlet.values.iter_mut().zip(&self.op.class) {
            if *c == NodeClass::Sigma0 {
                *v = ZERO;
            }
        }
        Ok(solve_dirichlet(&self.op, &f)?.u)
    }

    /// (u_b − u_n)/h on every accessible pair, u the solution with data `dirichlet`.
    pub fn fluxes(&self, dirichlet: &ComplexField3) -> Result<Vec<C64>> {
        let u = self.solve(dirichlet)?;
        Ok(pair_fluxes(&self.pairs, &u))
    }
}

fn pair_fluxes(pairs: &[BoundaryPair], u: &ComplexField3) -> Vec<C64> {
    let h = u.grid.spacing();
    pairs
        .iter()
        .map(|p| (u.values[p.boundary] - u.values[p.interior]) / h[p.axis])
        .collect()
}

/// Σ over pairs of (flux₂ − flux₁)·V_b·(cell volume)/h: the boundary side of
/// the discrete Green identity for u = u₂ − u₁, which vanishes on ∂Q.
fn pairing(pairs: &[BoundaryPair], grid: Grid3, flux1: &[C64], flux2: &[C64], v: &ComplexField3) -> C64 {
    let h = grid.spacing();
    let vol = grid.cell_volume();
    pairs
        .iter()
        .zip(flux1.iter().zip(flux2))
        .map(|(p, (f1, f2))| (f2 - f1) * v.values[p.boundary] * (vol / h[p.axis]))
        .sum()
}

/// Boundary form of the identity.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryIdentity {
    /// Flux-difference pairing on ∂Q∖Σ₀.
    pub boundary_term: C64,
    /// Σ_int (u₂ − u₁)(Δ + q₂)V; needs volume access.
    pub remainder: C64,
    pub total: C64,
}

/// Boundary form for one CGO bundle built with q₁: solves for u₂ with the
/// trace of u₁ and evaluates the discrete Green identity.
pub fn identity_boundary(
    domain: &CylinderDomain,
    q1: &ComplexField3,
    q2: &ComplexField3,
    bundle: &CgoBundle,
) -> Result<BoundaryIdentity> {
    same_grid(q1, q2)?;
    let tau = bundle.params.tau;
    let u1 = unscale(&bundle.u1, tau)?;
    let v = unscale(&bundle.v, -tau)?;
    let oracle = DtnOracle::new(domain, q2)?;
    let u2 = oracle.solve(&u1)?;
    let flux1 = pair_fluxes(&oracle.pairs, &u1);
    let flux2 = pair_fluxes(&oracle.pairs, &u2);
    let boundary_term = pairing(&oracle.pairs, q1.grid, &flux1, &flux2, &v);
    let lv = oracle.op.apply_full(&v);
    let vol = q1.grid.cell_volume();
    let remainder: C64 = (0..q1.grid.len())
        .filter(|&n| oracle.op.class[n] == NodeClass::Interior)
        .map(|n| (u2.values[n] - u1.values[n]) * lv.values[n] * vol)
        .sum();
    Ok(BoundaryIdentity {
        boundary_term,
        remainder,
        total: boundary_term + remainder,
    })
}

/// Boundary term from q₁ (known) and the oracle for q₂ alone.
pub fn identity_boundary_blind(
    domain: &CylinderDomain,
    q1: &ComplexField3,
    oracle: &DtnOracle,
    phase: &PhaseField,
    amps: &AmplitudePair,
    params: &CgoParams,
) -> Result<C64> {
    if q1.grid != oracle.grid() {
        return Err(Error::invalid(
            MODULE,
            "oracle grid does not match the reference potential",
        ));
    }
    let b = build_bundle(domain, q1, phase, amps, params, VLocalization::Plateau, false)?;
    let u1 = unscale(&b.u1, params.tau)?;
    let v = unscale(&b.v, -params.tau)?;
    let flux1 = pair_fluxes(&oracle.pairs, &u1);
    let flux2 = oracle.fluxes(&u1)?;
    Ok(pairing(&oracle.pairs, q1.grid, &flux1, &flux2, &v))
}

/// τ → ∞ limit from the two largest τ assuming a c/τ tail.
pub fn richardson(taus: &[f64], values: &[C64]) -> Result<C64> {
    if taus.len() < 2 || taus.len() != values.len() {
        return Err(Error::invalid(
            MODULE,
            "Richardson extrapolation needs at least two τ values",
        ));
    }
    let mut idx: Vec<usize> = (0..taus.len()).collect();
    idx.sort_by(|a, b| taus[*a].total_cmp(&taus[*b]));
    let (i, j) = (idx[idx.len() - 2], idx[idx.len() - 1]);
    let (t1, t2) = (taus[i], taus[j]);
    if t2 <= t1 {
        return Err(Error::invalid(
            MODULE,
            "Richardson extrapolation needs distinct τ values",
        ));
    }
    Ok((values[j] * t2 - values[i] * t1) / (t2 - t1))
}

/// Sweep of the identity over τ.
#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub taus: Vec<f64>,
    pub volume: Vec<C64>,
    pub boundary: Vec<Option<BoundaryIdentity>>,
    pub principal: C64,
    /// Log-log slope of |I(τ) − principal| against τ.
    pub slope: f64,
}

impl IdentityReport {
    pub fn gaps(&self) -> Vec<f64> {
        self.volume.iter().map(|v| (v - self.principal).norm()).collect()
    }
}

/// Fields shared by every τ of a sweep.
pub struct IdentitySetup<'a> {
    pub domain: &'a CylinderDomain,
    pub q1: &'a ComplexField3,
    pub q2: &'a ComplexField3,
    pub phase: &'a PhaseField,
    pub amps: &'a AmplitudePair,
    pub n: C64,
    pub tau0: f64,
    pub localization: VLocalization,
}

pub fn identity_sweep(setup: &IdentitySetup, taus: &[f64], with_boundary: bool) -> Result<IdentityReport> {
    if taus.is_empty() {
        return Err(Error::invalid(MODULE, "τ grid is empty"));
    }
    let mut taus = taus.to_vec();
    taus.sort_by(f64::total_cmp);
    let principal = principal_limit(setup.q1, setup.q2, setup.phase, setup.amps, setup.n, setup.localization)?;
    let mut volume = Vec::with_capacity(taus.len());
    let mut boundary = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let params = CgoParams::new(tau, setup.n, setup.tau0)?;
        let b = build_bundle(
            setup.domain,
            setup.q1,
            setup.phase,
            setup.amps,
            &params,
            setup.localization,
            false,
        )?;
        volume.push(identity_volume(setup.q1, setup.q2, &b.u1, &b.v)?);
        boundary.push(if with_boundary {
            Some(identity_boundary(setup.domain, setup.q1, setup.q2, &b)?)
        } else {
            None
        });
    }
    let gaps: Vec<f64> = volume.iter().map(|v| (v - principal).norm()).collect();
    let slope = if taus.len() >= 2 && gaps.iter().all(|g| *g > 0.0) {
        loglog_slope(&taus, &gaps)
    } else {
        f64::NAN
    };
    Ok(IdentityReport {
        taus,
        volume,
        boundary,
        principal,
        slope,
    })
}

// ---------------------------------------------------------------------------
// Moment limit along a tube of rays

/// Tube averages A(h) against the axis integral T.
#[derive(Clone, Debug)]
pub struct MomentLimitReport {
    pub h_values: Vec<f64>,
    pub averages: Vec<C64>,
    pub target: C64,
    pub errors: Vec<f64>,
    /// Fitted order of |A(h) − T| in h.
    pub order: f64,
    /// max over the axis of |a₀²·(tube width)/(2h) − 1|, per h.
    pub axis_weight_errors: Vec<f64>,
}

fn det2(j: [[f64; 2]; 2]) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

/// A(h) = (1/2h)∫_{Π_h} p_N e^{iNΨ} a₀² dx′ over the tube Π_h of direct rays
/// leaving |x₀| ≤ h, evaluated in ray coordinates; `moment` is p_N in domain
/// coordinates and `frame` places the axis ray.
pub fn moment_limit_check(
    moment: &(dyn Fn(Point) -> C64 + Sync),
    frame: &RigidMotion,
    bp: &BoundaryPhase,
    n: C64,
    h_values: &[f64],
) -> Result<MomentLimitReport> {
    if h_values.is_empty() || h_values.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::invalid(MODULE, "h values must be positive"));
    }
    let h_max = h_values.iter().cloned().fold(0.0, f64::max);
    let strip = strip_half_width(bp, Branch::Direct, DEFAULT_DET_MIN, h_max);
    if strip < h_max {
        return Err(Error::invalid(
            MODULE,
            format!("tube of half-width {h_max} leaves the caustic-free strip (half-width {strip})"),
        ));
    }
    let k = bp.height_k;
    let along = CompositeGauss::new(0.0, k, 10, 12);
    let iphase = C64::i() * n;
    let target = along.integrate_complex(|s| moment(frame.from_frame([0.0, s])) * (iphase * s).exp());
    let mut averages = Vec::with_capacity(h_values.len());
    let mut axis_weight_errors = Vec::with_capacity(h_values.len());
    for &h in h_values {
        let across = CompositeGauss::new(-h, h, 8, 2);
        let cols: Vec<Result<C64>> = par_map(across.nodes.len(), |c| {
            let y1 = across.nodes[c];
            let m = bp.m(y1);
            let mut acc = ZERO;
            for (y2, w) in along.nodes.iter().zip(&along.weights) {
                let y = [y1, *y2];
                let xh = characteristic_map(y, bp, Branch::Direct);
                let a0 = eval_amplitude_a0(xh, bp, Branch::Direct)?;
                let jac = det2(characteristic_jacobian(y, bp, Branch::Direct));
                let p = moment(frame.from_frame(xh));
                acc += p * (iphase * (m + y2)).exp() * (a0 * a0 * jac * w);
            }
            Ok(acc * across.weights[c])
        });
        let mut total = ZERO;
        for c in cols {
            total += c?;
        }
        averages.push(total / (2.0 * h));
        // Tube width across the axis at height x̂₂ from the edge rays.
        let mut worst: f64 = 0.0;
        for s in (1..=8).map(|i| k * i as f64 / 8.0) {
            let a0 = eval_amplitude_a0([0.0, s], bp, Branch::Direct)?;
            let width = edge_offset(bp, h, s)? - edge_offset(bp, -h, s)?;
            worst = worst.max((a0 * a0 * width / (2.0 * h) - 1.0).abs());
        }
        axis_weight_errors.push(worst);
    }
    let errors: Vec<f64> = averages.iter().map(|a| (a - target).norm()).collect();
    let order = if h_values.len() >= 2 && errors.iter().all(|e| *e > 0.0) {
        -loglog_slope(&h_values.iter().map(|h| 1.0 / h).collect::<Vec<_>>(), &errors)
    } else {
        f64::NAN
    };
    Ok(MomentLimitReport {
        h_values: h_values.to_vec(),
        averages,
        target,
        errors,
        order,
        axis_weight_errors,
    })
}

/// x̂₁ where the ray from x₀ crosses height x̂₂ = s.
fn edge_offset(bp: &BoundaryPhase, x0: f64, s: f64) -> Result<f64> {
    let mut t = s;
    for _ in 0..60 {
        let p = characteristic_map([x0, t], bp, Branch::Direct);
        let j = characteristic_jacobian([x0, t], bp, Branch::Direct);
        let step = (p[1] - s) / j[1][1];
        t -= step;
        if step.abs() < 1e-15 * (1.0 + s) {
            return Ok(characteristic_map([x0, t], bp, Branch::Direct)[0]);
        }
    }
    Err(Error::NoConvergence {
        module: MODULE,
        what: "tube edge".into(),
        iterations: 60,
        residual: f64::NAN,
    })
}

// ---------------------------------------------------------------------------
// Exponential-Radon data of the moments

/// A line with its frame: x̂₂ runs along ω⊥ from the entry point of the
/// cross-section's extent, x̂₁ vanishes on the line.
#[derive(Clone, Copy, Debug)]
pub struct LineChord {
    pub frame: RigidMotion,
    pub t0: f64,
    pub t1: f64,
}

pub fn line_chord(line: &Line2D, domain: &CylinderDomain) -> LineChord {
    let perp = line.omega_perp();
    let (t0, t1) = domain.cross_section.extent_along(perp);
    let frame = RigidMotion::from_axis([-line.omega[0], -line.omega[1]], line.point(t0));
    LineChord { frame, t0, t1 }
}

/// ∫₀^K p_N e^{iNx̂₂} dx̂₂ and ∫₀^K p_N e^{−iNx̂₂} dx̂₂ along one chord.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectedMoments {
    pub forward: C64,
    pub mirror: C64,
}

/// Tabulated x₃ rule and e^{−iγx₃} factors for a set of γ.
struct MomentTable {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Row per x₃ node, column per γ.
    factors: Vec<Vec<C64>>,
}

impl MomentTable {
    fn new(height: f64, gammas: &[f64]) -> Self {
        let rule = moment_rule(height);
        let factors = rule
            .nodes
            .iter()
            .map(|x3| gammas.iter().map(|g| C64::new(0.0, -g * x3).exp()).collect())
            .collect();
        MomentTable {
            nodes: rule.nodes,
            weights: rule.weights,
            factors,
        }
    }

    fn moments(&self, scene: &Scene, x: Point, out: &mut [C64]) {
        out.iter_mut().for_each(|v| *v = ZERO);
        for ((x3, w), f) in self.nodes.iter().zip(&self.weights).zip(&self.factors) {
            let d = scene.diff([x[0], x[1], *x3]);
            if d == ZERO {
                continue;
            }
            let d = d * *w;
            for (o, e) in out.iter_mut().zip(f) {
                *o += d * e;
            }
        }
    }
}

fn chord_rule(chord: &LineChord) -> CompositeGauss {
    CompositeGauss::new(0.0, chord.t1 - chord.t0, 10, 16)
}

/// Directed moment integrals of p_{−iγ} along `line` for every γ.
pub fn directed_moments(scene: &Scene, line: &Line2D, gammas: &[f64]) -> Vec<DirectedMoments> {
    let chord = line_chord(line, &scene.domain);
    let table = MomentTable::new(scene.domain.height, gammas);
    directed_with(scene, &chord, &table, gammas)
}

fn directed_with(scene: &Scene, chord: &LineChord, table: &MomentTable, gammas: &[f64]) -> Vec<DirectedMoments> {
    let rule = chord_rule(chord);
    let mut out = vec![
        DirectedMoments {
            forward: ZERO,
            mirror: ZERO
        };
        gammas.len()
    ];
    let mut p = vec![ZERO; gammas.len()];
    for (s, w) in rule.nodes.iter().zip(&rule.weights) {
        let x = chord.frame.from_frame([0.0, *s]);
        if !scene.domain.cross_section.contains(x) {
            continue;
        }
        table.moments(scene, x, &mut p);
        for ((o, pv), g) in out.iter_mut().zip(&p).zip(gammas) {
            if *pv == ZERO {
                continue;
            }
            // N = −iγ, so e^{±iNs} = e^{±γs}.
            o.forward += pv * ((g * s).exp() * w);
            o.mirror += pv * ((-g * s).exp() * w);
        }
    }
    out
}

/// Samples of R_γ p_{−iγ} on an (angle, offset) grid, one sinogram per γ,
/// from the forward directed moments of each admissible line. Lines meeting
/// the hull are masked out and carry zero.
pub fn radon_data_from_moments(scene: &Scene, gammas: &[f64], angles: &[f64], offsets: &[f64]) -> Vec<ExpSinogram> {
    let no = offsets.len();
    let total = angles.len() * no;
    let table = MomentTable::new(scene.domain.height, gammas);
    let line = |n: usize| Line2D::from_angle(angles[n / no], offsets[n % no]);
    let mask: Vec<bool> = (0..total)
        .map(|n| line_avoids(&line(n), &scene.domain.hull, DEFAULT_LINE_MARGIN))
        .collect();
    let entries: Vec<Vec<C64>> = par_map(total, |n| {
        if !mask[n] {
            return vec![ZERO; gammas.len()];
        }
        let chord = line_chord(&line(n), &scene.domain);
        directed_with(scene, &chord, &table, gammas)
            .iter()
            .zip(gammas)
            .map(|(d, g)| d.forward * (g * chord.t0).exp())
            .collect()
    });
    gammas
        .iter()
        .enumerate()
        .map(|(gi, &g)| ExpSinogram {
            mu: g,
            angles: angles.to_vec(),
            offsets: offsets.to_vec(),
            values: entries.iter().map(|e| e[gi]).collect(),
            avoid_mask: mask.clone(),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Blind data: boundary pairings only

/// Settings for data gathered through a DtN oracle.
#[derive(Clone, Debug)]
pub struct BlindOptions {
    pub bp: BoundaryPhase,
    /// Half-width of the normalized smooth ray profile.
    pub profile_width: f64,
    pub taus: Vec<f64>,
    pub tau0: f64,
}

/// True when the CGO tube around `line` stays clear of the hull.
pub fn blind_admissible(line: &Line2D, domain: &CylinderDomain, bp: &BoundaryPhase) -> bool {
    line_avoids(line, &domain.hull, bp.epsilon + DEFAULT_LINE_MARGIN)
}

/// R_γ p_{−iγ} on one line from boundary pairings: the τ → ∞ limit of the
/// pairing divided by the mass of the ray profile.
pub fn blind_entry(
    domain: &CylinderDomain,
    q1: &ComplexField3,
    oracle: &DtnOracle,
    line: &Line2D,
    gamma: f64,
    opts: &BlindOptions,
) -> Result<C64> {
    let chord = line_chord(line, domain);
    let grid = q1.grid.cross_section();
    let phase = PhaseField::on_grid(grid, &chord.frame, &opts.bp, Branch::Direct);
    let profile = RayProfile::Smooth {
        epsilon: opts.profile_width,
    };
    let amps = AmplitudePair::on_grid(&phase, profile, opts.bp.epsilon, &AmplitudeOptions::default())?;
    let mass = CompositeGauss::new(-opts.profile_width, opts.profile_width, 10, 8).integrate(|y| profile.value(y));
    let values = opts
        .taus
        .iter()
        .map(|&tau| {
            let params = CgoParams::reconstruction(tau, gamma, opts.tau0)?;
            identity_boundary_blind(domain, q1, oracle, &phase, &amps, &params)
        })
        .collect::<Result<Vec<C64>>>()?;
    let limit = richardson(&opts.taus, &values)?;
    Ok(limit / mass * (gamma * chord.t0).exp())
}

/// Blind sinogram for one γ; lines whose tube meets the hull are masked out.
pub fn blind_sinogram(
    domain: &CylinderDomain,
    q1: &ComplexField3,
    oracle: &DtnOracle,
    gamma: f64,
    angles: &[f64],
    offsets: &[f64],
    opts: &BlindOptions,
) -> Result<ExpSinogram> {
    let no = offsets.len();
    let lines: Vec<Line2D> = (0..angles.len() * no)
        .map(|n| Line2D::from_angle(angles[n / no], offsets[n % no]))
        .collect();
    let avoid_mask: Vec<bool> = lines.iter().map(|l| blind_admissible(l, domain, &opts.bp)).collect();
    let mut values = vec![ZERO; lines.len()];
    for (n, line) in lines.iter().enumerate() {
        if avoid_mask[n] {
            values[n] = blind_entry(domain, q1, oracle, line, gamma, opts)?;
        }
    }
    Ok(ExpSinogram {
        mu: gamma,
        angles: angles.to_vec(),
        offsets: offsets.to_vec(),
        values,
        avoid_mask,
    })
}

// ---------------------------------------------------------------------------
// Reconstruction

/// Basis for the x₃ profile at each cross-section node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum X3Basis {
    /// e^{iγx₃} for every γ of the grid.
    Exponential,
    /// e^{2πimx₃/L} for |m| ≤ `max_mode`.
    Harmonic { max_mode: usize },
    /// Legendre polynomials on [0, L] up to `degree`.
    Polynomial { degree: usize },
}

#[derive(Clone, Debug)]
pub struct ReconstructionOptions {
    pub gammas: Vec<f64>,
    /// Nodes per side of the cross-section inversion grid.
    pub section_nodes: usize,
    pub angles: usize,
    pub offsets: usize,
    pub radon_reg: f64,
    pub x3_ridge: f64,
    pub x3_nodes: usize,
    pub basis: X3Basis,
    /// Smallest x₃ feature the γ grid should resolve; defaults to L/2.
    pub feature_width: Option<f64>,
    pub noise_rel: f64,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        ReconstructionOptions {
            gammas: default_gamma_grid(),
            section_nodes: 40,
            angles: 90,
            offsets: 61,
            radon_reg: DEFAULT_RADON_REG,
            x3_ridge: DEFAULT_X3_RIDGE,
            x3_nodes: 33,
            basis: X3Basis::Exponential,
            feature_width: None,
            noise_rel: DEFAULT_NOISE_REL,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ReconstructionReport {
    /// Relative L² error on 𝒪 × [0, L] against the known difference.
    pub rel_error: Option<f64>,
    pub max_abs: f64,
    /// max |q₁ − q₂| over Q, when known.
    pub truth_max: Option<f64>,
    pub noise_floor: f64,
    pub unknowns: usize,
    pub min_lines_used: usize,
    /// Width 2π/(γ_max − γ_min) of the finest resolvable x₃ feature.
    pub resolvable_width: f64,
    /// Period 2π/Δγ beyond which x₃ profiles alias.
    pub alias_period: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    /// q̂₁ − q̂₂ on the inversion grid × x₃ nodes; zero off the region.
    pub field: ComplexField3,
    pub region: Mask2,
    pub report: ReconstructionReport,
}

/// Bounding-box grid of the cross-section with `n` nodes per side.
pub fn section_grid(domain: &CylinderDomain, n: usize) -> Grid2 {
    let (lo, hi) = domain.cross_section.bounding_box();
    Grid2::new(Axis::new(lo[0], hi[0], n), Axis::new(lo[1], hi[1], n))
}

fn check_gammas(gammas: &[f64]) -> Result<()> {
    if gammas.is_empty() {
        return Err(Error::invalid(MODULE, "γ grid is empty"));
    }
    let mut s = gammas.to_vec();
    s.sort_by(f64::total_cmp);
    let scale = s.iter().map(|g| g.abs()).fold(1.0, f64::max);
    let symmetric = s
        .iter()
        .zip(s.iter().rev())
        .all(|(a, b)| (a + b).abs() <= 1e-12 * scale);
    if !symmetric {
        return Err(Error::invalid(MODULE, "γ grid must be symmetric about 0"));
    }
    Ok(())
}

fn band(gammas: &[f64]) -> (f64, f64) {
    let mut s = gammas.to_vec();
    s.sort_by(f64::total_cmp);
    let span = s[s.len() - 1] - s[0];
    let step = s.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let width = if span > 0.0 { 2.0 * PI / span } else { f64::INFINITY };
    let period = if step.is_finite() && step > 0.0 {
        2.0 * PI / step
    } else {
        f64::INFINITY
    };
    (width, period)
}

/// Maps data (∫₀^L q e^{−iγx₃} dx₃ over the γ grid) to samples of q at
/// `x3_nodes` equispaced points by ridge least squares in `basis`.
pub fn x3_inversion_matrix(
    gammas: &[f64],
    height: f64,
    basis: X3Basis,
    ridge: f64,
    x3_nodes: usize,
) -> Result<DMatrix<C64>> {
    let functions: Box<dyn Fn(usize, f64) -> C64> = match basis {
        X3Basis::Exponential => {
            let g = gammas.to_vec();
            Box::new(move |m, x| C64::new(0.0, g[m] * x).exp())
        }
        X3Basis::Harmonic { max_mode } => Box::new(move |m, x| {
            let k = m as f64 - max_mode as f64;
            C64::new(0.0, 2.0 * PI * k * x / height).exp()
        }),
        X3Basis::Polynomial { .. } => Box::new(move |m, x| C64::new(legendre(m, 2.0 * x / height - 1.0), 0.0)),
    };
    let nb = match basis {
        X3Basis::Exponential => gammas.len(),
        X3Basis::Harmonic { max_mode } => 2 * max_mode + 1,
        X3Basis::Polynomial { degree } => degree + 1,
    };
    let rule = CompositeGauss::new(0.0, height, 16, 16);
    let g = DMatrix::from_fn(gammas.len(), nb, |r, m| {
        rule.integrate_complex(|x| functions(m, x) * C64::new(0.0, -gammas[r] * x).exp())
    });
    let svd = g.svd(true, true);
    let (Some(u), Some(vt)) = (svd.u, svd.v_t) else {
        return Err(Error::numerical(MODULE, "x3 least squares: SVD failed"));
    };
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if !(smax > 0.0) {
        return Err(Error::numerical(MODULE, "x3 least squares: zero system"));
    }
    let lambda = ridge * smax * smax;
    let filt = DMatrix::from_fn(svd.singular_values.len(), svd.singular_values.len(), |i, j| {
        if i == j {
            let s = svd.singular_values[i];
            C64::new(s / (s * s + lambda), 0.0)
        } else {
            ZERO
        }
    });
    let pinv = vt.adjoint() * filt * u.adjoint();
    let step = if x3_nodes > 1 {
        height / (x3_nodes - 1) as f64
    } else {
        0.0
    };
    let eval = DMatrix::from_fn(x3_nodes, nb, |k, m| functions(m, k as f64 * step));
    Ok(eval * pinv)
}

fn legendre(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return 1.0;
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Full chain from per-γ sinograms: partial inversion on 𝒪 for each γ, then
/// the x₃ least squares at every node of 𝒪.
pub fn reconstruct_from_sinograms(
    domain: &CylinderDomain,
    sinograms: &[ExpSinogram],
    opts: &ReconstructionOptions,
    truth: Option<&(dyn Fn([f64; 3]) -> C64 + Sync)>,
) -> Result<Reconstruction> {
    check_gammas(&opts.gammas)?;
    if sinograms.len() != opts.gammas.len() || sinograms.iter().zip(&opts.gammas).any(|(s, g)| s.mu != *g) {
        return Err(Error::invalid(MODULE, "one sinogram per γ is required, in grid order"));
    }
    let grid = section_grid(domain, opts.section_nodes);
    let region = domain.reachable_on(&grid);
    if !region.values.iter().any(|m| *m) {
        return Err(Error::invalid(MODULE, "reachable set is empty on the inversion grid"));
    }
    let height = domain.height;
    let (resolvable_width, alias_period) = band(&opts.gammas);
    let mut warnings = Vec::new();
    let wanted = opts.feature_width.unwrap_or(0.5 * height);
    if resolvable_width > wanted || alias_period < height {
        warnings.push(format!(
            "insufficient γ coverage: resolvable x3 width {resolvable_width:.3e} (requested {wanted:.3e}), \
             alias period {alias_period:.3e} (height {height:.3e})"
        ));
    }
    let inversions = try_par_map(sinograms, |s| {
        ert_invert_partial(s, &s.avoid_mask, &region, opts.radon_reg)
    })?;
    for (inv, g) in inversions.iter().zip(&opts.gammas) {
        if let Some(w) = &inv.warning {
            warnings.push(format!("gamma {g}: {w}"));
        }
    }
    let map = x3_inversion_matrix(&opts.gammas, height, opts.basis, opts.x3_ridge, opts.x3_nodes)?;
    let g3 = Grid3::new(grid.x1, grid.x2, Axis::new(0.0, height, opts.x3_nodes));
    let plane = grid.len();
    let mut field = ComplexField3::zeros(g3);
    for idx in (0..plane).filter(|&i| region.values[i]) {
        let data = DMatrix::from_fn(opts.gammas.len(), 1, |r, _| inversions[r].field.values[idx]);
        let col = &map * data;
        for k in 0..opts.x3_nodes {
            field.values[k * plane + idx] = col[(k, 0)];
        }
    }
    let max_abs = field.max_abs();
    let mut report = ReconstructionReport {
        rel_error: None,
        max_abs,
        truth_max: None,
        noise_floor: 0.0,
        unknowns: inversions.iter().map(|i| i.unknowns).max().unwrap_or(0),
        min_lines_used: inversions.iter().map(|i| i.lines_used).min().unwrap_or(0),
        resolvable_width,
        alias_period,
        warnings,
    };
    if let Some(t) = truth {
        let (mut num, mut den) = (0.0, 0.0);
        let mut tmax: f64 = 0.0;
        for n in 0..g3.len() {
            let (i, j, k) = g3.unindex(n);
            let x = g3.point(i, j, k);
            let v = t(x);
            if domain.cross_section.contains([x[0], x[1]]) {
                tmax = tmax.max(v.norm());
            }
            if region.values[n % plane] {
                num += (field.values[n] - v).norm_sqr();
                den += v.norm_sqr();
            }
        }
        report.rel_error = (den > 0.0).then(|| (num / den).sqrt());
        report.truth_max = Some(tmax);
        report.noise_floor = opts.noise_rel * tmax;
    }
    Ok(Reconstruction { field, region, report })
}

/// Synthetic reconstruction: data from the directed moments of the known
/// difference, error reported against it.
pub fn reconstruct(scene: &Scene, opts: &ReconstructionOptions) -> Result<Reconstruction> {
    check_gammas(&opts.gammas)?;
    let grid = section_grid(&scene.domain, opts.section_nodes);
    let (angles, offsets) = sampling(&grid, opts.angles, opts.offsets);
    let sinograms = radon_data_from_moments(scene, &opts.gammas, &angles, &offsets);
    let truth = |x: [f64; 3]| scene.diff(x);
    reconstruct_from_sinograms(&scene.domain, &sinograms, opts, Some(&truth))
}

/// Reconstruction from a DtN oracle for q₂ and the known q₁.
///
/// Only usable on short cylinders. The pairing leaves out the interior
/// remainder, and τL is capped by the precision of the unscaled boundary
/// fields, so the large-τ regime is out of reach once L is of order one.
pub fn reconstruct_blind(
    domain: &CylinderDomain,
    q1: &ComplexField3,
    oracle: &DtnOracle,
    opts: &ReconstructionOptions,
    blind: &BlindOptions,
    truth: Option<&(dyn Fn([f64; 3]) -> C64 + Sync)>,
) -> Result<Reconstruction> {
    check_gammas(&opts.gammas)?;
    let grid = section_grid(domain, opts.section_nodes);
    let (angles, offsets) = sampling(&grid, opts.angles, opts.offsets);
    let sinograms = opts
        .gammas
        .iter()
        .map(|&g| blind_sinogram(domain, q1, oracle, g, &angles, &offsets, blind))
        .collect::<Result<Vec<_>>>()?;
    reconstruct_from_sinograms(domain, &sinograms, opts, truth)
}
