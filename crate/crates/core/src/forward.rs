//! Finite-difference forward solver for (Δ + q)u = 0 on the cylinder.
//!
//! The grid covers the bounding box of the cross-section times [0, L].
//! Rectangular cross-sections align with the grid exactly; other shapes are
//! staircased: nodes strictly inside Ω carry unknowns and the first layer of
//! outside nodes carries Dirichlet data.
//!
//! The operator is applied matrix-free through the 7-point stencil. Solves
//! use right-preconditioned GMRES with an exact fast Poisson solver on the
//! interior box (sine transforms across the section, tridiagonal along x₃).

use rand::{Rng, SeedableRng};

use crate::geometry::CylinderDomain;
use crate::numerics::dst::{Dst1, Dst2Planes};
use crate::numerics::krylov::{self, gmres, SolveInfo};
use crate::numerics::{bump, Axis, ComplexField3, Field3, Grid3, C64};
use crate::{Error, Result};

const MODULE: &str = "forward";

/// Minimum number of cells across the cross-section.
pub const MIN_SECTION_CELLS: usize = 32;
/// Minimum number of cells along the cylinder axis.
pub const MIN_AXIAL_CELLS: usize = 4;
/// Default relative residual for Dirichlet solves.
pub const DEFAULT_SOLVE_TOL: f64 = 1e-10;
/// Default nullspace threshold relative to the operator norm.
pub const DEFAULT_NULLSPACE_REL: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Smooth bump `amplitude · ρ(|(x − center)/radii|)` with ρ the unit C^∞ bump.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub center: [f64; 3],
    pub radii: [f64; 3],
    pub amplitude: C64,
}

impl Bump {
    #[inline]
    pub fn eval(&self, x: [f64; 3]) -> C64 {
        let s2: f64 = (0..3)
            .map(|a| {
                let t = (x[a] - self.center[a]) / self.radii[a];
                t * t
            })
            .sum();
        if s2 >= 1.0 {
            ZERO
        } else {
            self.amplitude * bump(s2.sqrt())
        }
    }
}

/// Potential given as a finite sum of bumps (the empty sum is q = 0).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Potential {
    pub bumps: Vec<Bump>,
}

impl Potential {
    pub fn zero() -> Self {
        Potential::default()
    }

    pub fn single(b: Bump) -> Self {
        Potential { bumps: vec![b] }
    }

    #[inline]
    pub fn eval(&self, x: [f64; 3]) -> C64 {
        self.bumps.iter().map(|b| b.eval(x)).sum()
    }

    pub fn sample(&self, grid: Grid3) -> ComplexField3 {
        Field3::from_fn(grid, |x| self.eval(x))
    }

    /// q₁ − q₂ style difference.
    pub fn minus(&self, other: &Potential) -> Potential {
        let mut bumps = self.bumps.clone();
        bumps.extend(other.bumps.iter().map(|b| Bump {
            amplitude: -b.amplitude,
            ..*b
        }));
        Potential { bumps }
    }

    pub fn max_abs_amplitude(&self) -> f64 {
        self.bumps.iter().map(|b| b.amplitude.norm()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeClass {
    /// Unknown of the discrete problem.
    Interior,
    /// Lateral boundary node over Γ₀.
    Sigma0,
    /// Lateral boundary node over the accessible part of ∂Ω.
    Lateral,
    Bottom,
    Top,
    /// Outside the computational domain; carries no data.
    Exterior,
}

impl NodeClass {
    #[inline]
    pub fn is_boundary(self) -> bool {
        matches!(
            self,
            NodeClass::Sigma0 | NodeClass::Lateral | NodeClass::Bottom | NodeClass::Top
        )
    }

    /// Boundary node off Σ₀.
    #[inline]
    pub fn is_accessible(self) -> bool {
        matches!(self, NodeClass::Lateral | NodeClass::Bottom | NodeClass::Top)
    }
}

/// Grid over the bounding box of Ω times [0, L] with `n` nodes per axis.
pub fn domain_grid(domain: &CylinderDomain, n: [usize; 3]) -> Grid3 {
    let (lo, hi) = domain.cross_section.bounding_box();
    Grid3::new(
        Axis::new(lo[0], hi[0], n[0]),
        Axis::new(lo[1], hi[1], n[1]),
        Axis::new(0.0, domain.height, n[2]),
    )
}

/// 7-point discretization of Δ + q with Dirichlet nodes eliminated.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub grid: Grid3,
    /// q sampled at every grid node.
    pub q: Vec<C64>,
    pub class: Vec<NodeClass>,
    /// Inverse squared spacings.
    pub inv_h2: [f64; 3],
    rectangular: bool,
}

/// Assembles the operator for a potential given by its samples on `grid`.
pub fn assemble(domain: &CylinderDomain, q: &ComplexField3, grid: Grid3) -> Result<DiscreteOperator> {
    let [n1, n2, n3] = grid.dims();
    if n1 - 1 < MIN_SECTION_CELLS || n2 - 1 < MIN_SECTION_CELLS || n3 - 1 < MIN_AXIAL_CELLS {
        return Err(Error::invalid(
            MODULE,
            format!(
                "grid too coarse: need at least {MIN_SECTION_CELLS} cells across the section and \
                 {MIN_AXIAL_CELLS} along the axis, got {}x{}x{}",
                n1 - 1,
                n2 - 1,
                n3 - 1
            ),
        ));
    }
    if q.grid != grid {
        return Err(Error::invalid(MODULE, "potential is sampled on a different grid"));
    }
    let rectangular = match domain.cross_section.as_rectangle() {
        Some((lo, hi)) => {
            let tol = 1e-12 * (1.0 + hi[0].abs() + hi[1].abs());
            (grid.x1.min - lo[0]).abs() < tol
                && (grid.x1.max - hi[0]).abs() < tol
                && (grid.x2.min - lo[1]).abs() < tol
                && (grid.x2.max - hi[1]).abs() < tol
        }
        None => false,
    };
    if domain.cross_section.as_rectangle().is_some() && !rectangular {
        return Err(Error::invalid(MODULE, "rectangular section must match the grid bounds"));
    }
    if (grid.x3.min).abs() > 1e-14 || (grid.x3.max - domain.height).abs() > 1e-12 * domain.height {
        return Err(Error::invalid(MODULE, "grid must span x3 in [0, L]"));
    }
    let lateral = |x: [f64; 3]| {
        let s = domain.cross_section.arc_length_of([x[0], x[1]]);
        if domain.in_gamma0(s) {
            NodeClass::Sigma0
        } else {
            NodeClass::Lateral
        }
    };
    let mut class = vec![NodeClass::Exterior; grid.len()];
    if rectangular {
        for (idx, c) in class.iter_mut().enumerate() {
            let (i, j, k) = grid.unindex(idx);
            let x = grid.point(i, j, k);
            *c = if i == 0 || i == n1 - 1 || j == 0 || j == n2 - 1 {
                lateral(x)
            } else if k == 0 {
                NodeClass::Bottom
            } else if k == n3 - 1 {
                NodeClass::Top
            } else {
                NodeClass::Interior
            };
        }
    } else {
        let g2 = grid.cross_section();
        let inside: Vec<bool> = (0..g2.len())
            .map(|idx| {
                let (i, j) = g2.unindex(idx);
                i > 0 && j > 0 && i < n1 - 1 && j < n2 - 1 && domain.cross_section.contains(g2.point(i, j))
            })
            .collect();
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    let idx = grid.index(i, j, k);
                    let here = inside[g2.index(i, j)];
                    class[idx] = if here && k > 0 && k < n3 - 1 {
                        NodeClass::Interior
                    } else if here && k == 0 {
                        NodeClass::Bottom
                    } else if here {
                        NodeClass::Top
                    } else {
                        let touches = (i > 0 && inside[g2.index(i - 1, j)])
                            || (i + 1 < n1 && inside[g2.index(i + 1, j)])
                            || (j > 0 && inside[g2.index(i, j - 1)])
                            || (j + 1 < n2 && inside[g2.index(i, j + 1)]);
                        if touches && k > 0 && k < n3 - 1 {
                            lateral(grid.point(i, j, k))
                        } else {
                            NodeClass::Exterior
                        }
                    };
                }
            }
        }
    }
    let h = grid.spacing();
    Ok(DiscreteOperator {
        grid,
        q: q.values.clone(),
        class,
        inv_h2: [1.0 / (h[0] * h[0]), 1.0 / (h[1] * h[1]), 1.0 / (h[2] * h[2])],
        rectangular,
    })
}

impl DiscreteOperator {
    pub fn is_rectangular(&self) -> bool {
        self.rectangular
    }

    /// Dimensions of the interior index box (all nodes with 0 < index < n − 1).
    #[inline]
    pub fn box_dims(&self) -> [usize; 3] {
        let [n1, n2, n3] = self.grid.dims();
        [n1 - 2, n2 - 2, n3 - 2]
    }

    #[inline]
    fn box_index(&self, i: usize, j: usize, k: usize) -> usize {
        let [m1, m2, _] = self.box_dims();
        ((k - 1) * m2 + (j - 1)) * m1 + (i - 1)
    }

    pub fn unknowns(&self) -> usize {
        self.class.iter().filter(|c| **c == NodeClass::Interior).count()
    }

    /// Mask over grid nodes selecting a boundary subset.
    pub fn mask(&self, pred: impl Fn(NodeClass) -> bool) -> Vec<bool> {
        self.class.iter().map(|c| pred(*c)).collect()
    }

    /// Row-sum bound on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        let s: f64 = self.inv_h2.iter().sum();
        self.class
            .iter()
            .zip(&self.q)
            .filter(|(c, _)| **c == NodeClass::Interior)
            .map(|(_, q)| 2.0 * s + (q - 2.0 * s).norm())
            .fold(0.0, f64::max)
    }

    /// (Δ + q)u at interior nodes of a full-grid field; zero elsewhere.
    pub fn apply_full(&self, u: &ComplexField3) -> ComplexField3 {
        let g = self.grid;
        let [n1, n2, _] = g.dims();
        let s1 = 1;
        let s2 = n1;
        let s3 = n1 * n2;
        let [c1, c2, c3] = self.inv_h2;
        let diag = -2.0 * (c1 + c2 + c3);
        let v = &u.values;
        let mut out = ComplexField3::zeros(g);
        for (idx, c) in self.class.iter().enumerate() {
            if *c != NodeClass::Interior {
                continue;
            }
            out.values[idx] = (v[idx + s1] + v[idx - s1]) * c1
                + (v[idx + s2] + v[idx - s2]) * c2
                + (v[idx + s3] + v[idx - s3]) * c3
                + v[idx] * (self.q[idx] + diag);
        }
        out
    }

    /// Applies the eliminated operator (or its adjoint) on the interior box.
    /// Box nodes that are not unknowns act as the identity.
    fn apply_box(&self, x: &[C64], y: &mut [C64], adjoint: bool) {
        let [n1, n2, n3] = self.grid.dims();
        let [m1, m2, _] = self.box_dims();
        let [c1, c2, c3] = self.inv_h2;
        let diag = -2.0 * (c1 + c2 + c3);
        let b2 = m1;
        let b3 = m1 * m2;
        for k in 1..n3 - 1 {
            for j in 1..n2 - 1 {
                for i in 1..n1 - 1 {
                    let gi = self.grid.index(i, j, k);
                    let bi = self.box_index(i, j, k);
                    if self.class[gi] != NodeClass::Interior {
                        y[bi] = x[bi];
                        continue;
                    }
                    let nb = |cond: bool, goff: isize, boff: isize| -> C64 {
                        if !cond {
                            return ZERO;
                        }
                        let g = (gi as isize + goff) as usize;
                        if self.class[g] == NodeClass::Interior {
                            x[(bi as isize + boff) as usize]
                        } else {
                            ZERO
                        }
                    };
                    let s1 = n1 as isize;
                    let s2 = (n1 * n2) as isize;
                    let sum1 = nb(i > 1, -1, -1) + nb(i < n1 - 2, 1, 1);
                    let sum2 = nb(j > 1, -s1, -(b2 as isize)) + nb(j < n2 - 2, s1, b2 as isize);
                    let sum3 = nb(k > 1, -s2, -(b3 as isize)) + nb(k < n3 - 2, s2, b3 as isize);
                    let q = if adjoint { self.q[gi].conj() } else { self.q[gi] };
                    y[bi] = sum1 * c1 + sum2 * c2 + sum3 * c3 + x[bi] * (q + diag);
                }
            }
        }
    }

    /// Right-hand side on the box from Dirichlet values at boundary neighbours.
    fn boundary_rhs(&self, f: &ComplexField3) -> Vec<C64> {
        let [n1, n2, n3] = self.grid.dims();
        let [m1, m2, m3] = self.box_dims();
        let mut rhs = vec![ZERO; m1 * m2 * m3];
        let strides = [1, n1, n1 * n2];
        for k in 1..n3 - 1 {
            for j in 1..n2 - 1 {
                for i in 1..n1 - 1 {
                    let gi = self.grid.index(i, j, k);
                    if self.class[gi] != NodeClass::Interior {
                        continue;
                    }
                    let mut acc = ZERO;
                    for a in 0..3 {
                        for g in [gi - strides[a], gi + strides[a]] {
                            if self.class[g].is_boundary() {
                                acc += f.values[g] * self.inv_h2[a];
                            }
                        }
                    }
                    rhs[self.box_index(i, j, k)] = -acc;
                }
            }
        }
        rhs
    }

    /// Solves the eliminated system for a box right-hand side.
    pub(crate) fn solve_box(&self, rhs: &[C64], x: &mut [C64], adjoint: bool, tol: f64, max_iter: usize) -> SolveInfo {
        let mut pre = BoxPoisson::new(self.box_dims(), self.grid.spacing());
        gmres(
            |v, out| self.apply_box(v, out, adjoint),
            |v, out| pre.solve(v, out),
            rhs,
            x,
            40,
            tol,
            max_iter,
        )
    }

    /// Copies unknowns from a full-grid field into box storage.
    fn gather(&self, u: &ComplexField3) -> Vec<C64> {
        let [n1, n2, n3] = self.grid.dims();
        let mut out = Vec::with_capacity(self.box_dims().iter().product());
        for k in 1..n3 - 1 {
            for j in 1..n2 - 1 {
                for i in 1..n1 - 1 {
                    let gi = self.grid.index(i, j, k);
                    out.push(if self.class[gi] == NodeClass::Interior {
                        u.values[gi]
                    } else {
                        ZERO
                    });
                }
            }
        }
        out
    }

    /// Writes box unknowns into a full-grid field.
    fn scatter(&self, x: &[C64], u: &mut ComplexField3) {
        let [n1, n2, n3] = self.grid.dims();
        for k in 1..n3 - 1 {
            for j in 1..n2 - 1 {
                for i in 1..n1 - 1 {
                    let gi = self.grid.index(i, j, k);
                    if self.class[gi] == NodeClass::Interior {
                        u.values[gi] = x[self.box_index(i, j, k)];
                    }
                }
            }
        }
    }
}

/// Exact inverse of the 7-point Laplacian with zero Dirichlet data on a box.
pub(crate) struct BoxPoisson {
    m: [usize; 3],
    lam: Vec<f64>,
    h3: f64,
    dst: Dst2Planes,
    scale: f64,
    cp: Vec<f64>,
}

impl BoxPoisson {
    pub(crate) fn new(m: [usize; 3], h: [f64; 3]) -> Self {
        let l1 = Dst1::laplacian_eigenvalues(m[0], h[0]);
        let l2 = Dst1::laplacian_eigenvalues(m[1], h[1]);
        let mut lam = Vec::with_capacity(m[0] * m[1]);
        for b in &l2 {
            for a in &l1 {
                lam.push(a + b);
            }
        }
        let dst = Dst2Planes::new(m[0], m[1]);
        let scale = dst.scale();
        BoxPoisson {
            m,
            lam,
            h3: h[2],
            dst,
            scale,
            cp: vec![0.0; m[2]],
        }
    }

    pub(crate) fn solve(&mut self, rhs: &[C64], out: &mut [C64]) {
        out.copy_from_slice(rhs);
        self.dst.apply(out);
        let plane = self.m[0] * self.m[1];
        let m3 = self.m[2];
        let off = 1.0 / (self.h3 * self.h3);
        for (mode, lam) in self.lam.iter().enumerate() {
            let diag = -2.0 * off - lam;
            // Thomas algorithm with constant real coefficients.
            let mut denom = diag;
            self.cp[0] = off / denom;
            out[mode] /= denom;
            for k in 1..m3 {
                denom = diag - off * self.cp[k - 1];
                self.cp[k] = off / denom;
                let prev = out[(k - 1) * plane + mode];
                out[k * plane + mode] = (out[k * plane + mode] - prev * off) / denom;
            }
            for k in (0..m3 - 1).rev() {
                let next = out[(k + 1) * plane + mode];
                out[k * plane + mode] -= next * self.cp[k];
            }
        }
        self.dst.apply(out);
        let s = self.scale;
        out.iter_mut().for_each(|v| *v *= s);
    }
}

/// Dirichlet values on boundary nodes and optional Neumann data.
#[derive(Clone, Debug)]
pub struct BoundaryData {
    /// Full-grid field; only boundary-node values are read.
    pub dirichlet: ComplexField3,
    pub neumann: Option<BoundaryTrace>,
}

impl BoundaryData {
    /// Samples `f` at the boundary nodes of `op` (zero elsewhere).
    pub fn from_fn(op: &DiscreteOperator, mut f: impl FnMut([f64; 3], NodeClass) -> C64) -> Self {
        let mut d = ComplexField3::zeros(op.grid);
        for (idx, c) in op.class.iter().enumerate() {
            if c.is_boundary() {
                let (i, j, k) = op.grid.unindex(idx);
                d.values[idx] = f(op.grid.point(i, j, k), *c);
            }
        }
        BoundaryData {
            dirichlet: d,
            neumann: None,
        }
    }

    /// Boundary values of a full-grid field.
    pub fn trace_of(op: &DiscreteOperator, u: &ComplexField3) -> Self {
        let mut d = ComplexField3::zeros(op.grid);
        for (idx, c) in op.class.iter().enumerate() {
            if c.is_boundary() {
                d.values[idx] = u.values[idx];
            }
        }
        BoundaryData {
            dirichlet: d,
            neumann: None,
        }
    }

    pub fn max_on(&self, op: &DiscreteOperator, pred: impl Fn(NodeClass) -> bool) -> f64 {
        op.class
            .iter()
            .zip(&self.dirichlet.values)
            .filter(|(c, _)| pred(**c))
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Solution of a Dirichlet problem with its solver statistics.
#[derive(Clone, Debug)]
pub struct DirichletSolution {
    pub u: ComplexField3,
    pub info: SolveInfo,
}

pub fn solve_dirichlet(op: &DiscreteOperator, f: &BoundaryData) -> Result<DirichletSolution> {
    solve_dirichlet_with(op, f, DEFAULT_SOLVE_TOL, 4000)
}

pub fn solve_dirichlet_with(
    op: &DiscreteOperator,
    f: &BoundaryData,
    tol: f64,
    max_iter: usize,
) -> Result<DirichletSolution> {
    let rhs = op.boundary_rhs(&f.dirichlet);
    let mut x = vec![ZERO; rhs.len()];
    let info = op.solve_box(&rhs, &mut x, false, tol, max_iter);
    if !info.converged {
        let report = nullspace_check(op);
        if !report.pass {
            return Err(Error::Singular {
                module: MODULE,
                sigma_min: report.sigma_min,
                detail: "0 is (nearly) a Dirichlet eigenvalue of the discrete operator".into(),
            });
        }
        return Err(Error::NoConvergence {
            module: MODULE,
            what: "Dirichlet solve".into(),
            iterations: info.iterations,
            residual: info.residual,
        });
    }
    let mut u = ComplexField3::zeros(op.grid);
    for (idx, c) in op.class.iter().enumerate() {
        if c.is_boundary() {
            u.values[idx] = f.dirichlet.values[idx];
        }
    }
    op.scatter(&x, &mut u);
    Ok(DirichletSolution { u, info })
}

/// Solves (Δ + q)u = s at interior nodes with u = 0 on the boundary.
pub fn solve_source(op: &DiscreteOperator, source: &ComplexField3, tol: f64) -> Result<DirichletSolution> {
    let rhs = op.gather(source);
    let mut x = vec![ZERO; rhs.len()];
    let info = op.solve_box(&rhs, &mut x, false, tol, 4000);
    if !info.converged {
        return Err(Error::NoConvergence {
            module: MODULE,
            what: "source solve".into(),
            iterations: info.iterations,
            residual: info.residual,
        });
    }
    let mut u = ComplexField3::zeros(op.grid);
    op.scatter(&x, &mut u);
    Ok(DirichletSolution { u, info })
}

/// One outward-normal derivative sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    pub node: usize,
    pub axis: usize,
    /// +1 if the outward normal points along +x_axis, −1 otherwise.
    pub outward: f64,
    /// Surface quadrature weight.
    pub weight: f64,
    pub value: C64,
}

/// Normal derivatives on boundary nodes; nodes on edges appear once per face.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundaryTrace {
    pub entries: Vec<TraceEntry>,
}

impl BoundaryTrace {
    /// Surface integral Σ weight · value.
    pub fn integral(&self) -> C64 {
        self.entries.iter().map(|e| e.value * e.weight).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.value.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise difference; traces must share their layout.
    pub fn max_diff(&self, other: &BoundaryTrace) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a.value - b.value).norm())
            .fold(0.0, f64::max)
    }
}

/// Outward normal directions (axis, ±1) of a boundary node.
fn outward_directions(op: &DiscreteOperator, idx: usize) -> Vec<(usize, f64)> {
    let g = op.grid;
    let dims = g.dims();
    let (i, j, k) = g.unindex(idx);
    let ijk = [i, j, k];
    let strides = [1usize, dims[0], dims[0] * dims[1]];
    let mut out = Vec::new();
    for a in 0..3 {
        if op.rectangular || a == 2 {
            if ijk[a] == 0 {
                out.push((a, -1.0));
            } else if ijk[a] == dims[a] - 1 {
                out.push((a, 1.0));
            }
            if op.rectangular || ijk[a] == 0 || ijk[a] == dims[a] - 1 {
                continue;
            }
        }
        // Staircase faces: the outward side is away from an interior neighbour.
        let lo = ijk[a] > 0 && op.class[idx - strides[a]] == NodeClass::Interior;
        let hi = ijk[a] + 1 < dims[a] && op.class[idx + strides[a]] == NodeClass::Interior;
        if lo {
            out.push((a, 1.0));
        }
        if hi {
            out.push((a, -1.0));
        }
    }
    out
}

/// Second-order one-sided outward normal derivatives at masked boundary nodes.
pub fn neumann_trace(op: &DiscreteOperator, u: &ComplexField3, mask: &[bool]) -> BoundaryTrace {
    let g = op.grid;
    let dims = g.dims();
    let h = g.spacing();
    let strides = [1isize, dims[0] as isize, (dims[0] * dims[1]) as isize];
    let tw = [
        g.x1.trapezoid_weights(),
        g.x2.trapezoid_weights(),
        g.x3.trapezoid_weights(),
    ];
    let mut entries = Vec::new();
    for idx in 0..g.len() {
        if !mask[idx] || !op.class[idx].is_boundary() {
            continue;
        }
        let (i, j, k) = g.unindex(idx);
        let ijk = [i, j, k];
        for (a, dir) in outward_directions(op, idx) {
            let step = -(dir as isize) * strides[a];
            let u0 = u.values[idx];
            let u1 = u.values[(idx as isize + step) as usize];
            let u2 = u.values[(idx as isize + 2 * step) as usize];
            let value = (u0 * 3.0 - u1 * 4.0 + u2) / (2.0 * h[a]);
            let (t1, t2) = match a {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let weight = if op.rectangular || a == 2 {
                tw[t1][ijk[t1]] * tw[t2][ijk[t2]]
            } else {
                h[t1] * h[t2]
            };
            entries.push(TraceEntry {
                node: idx,
                axis: a,
                outward: dir,
                weight,
                value,
            });
        }
    }
    BoundaryTrace { entries }
}

/// Partial Dirichlet-to-Neumann map: Neumann data on ∂Q∖Σ₀ for data `f`
/// vanishing on Σ₀.
pub fn dtn_apply(op: &DiscreteOperator, f: &BoundaryData) -> Result<BoundaryTrace> {
    let on_sigma0 = f.max_on(op, |c| c == NodeClass::Sigma0);
    if on_sigma0 > 0.0 {
        return Err(Error::invalid(
            MODULE,
            format!("Dirichlet data must vanish on the inaccessible boundary (max {on_sigma0:.3e})"),
        ));
    }
    let sol = solve_dirichlet(op, f)?;
    let mask = op.mask(NodeClass::is_accessible);
    Ok(neumann_trace(op, &sol.u, &mask))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NullspaceReport {
    pub sigma_min: f64,
    pub op_norm: f64,
    pub threshold: f64,
    pub pass: bool,
}

pub fn nullspace_check(op: &DiscreteOperator) -> NullspaceReport {
    nullspace_check_with(op, DEFAULT_NULLSPACE_REL, 6)
}

/// Smallest singular value estimate by inverse iteration on AᴴA.
///
/// Every iterate v gives the upper bound |Av|/|v|. When a solve stagnates,
/// its minimal residual r lies near the left null space and |Aᴴr|/|r| is
/// used as well, which catches exactly singular operators.
pub fn nullspace_check_with(op: &DiscreteOperator, rel: f64, sweeps: usize) -> NullspaceReport {
    let n: usize = op.box_dims().iter().product();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let mut tmp = vec![ZERO; n];
    let mut sigma_min = f64::INFINITY;
    let mut bound = |x: &[C64], adjoint: bool, tmp: &mut Vec<C64>| {
        let nx = krylov::norm(x);
        if nx > 0.0 && nx.is_finite() {
            op.apply_box(x, tmp, adjoint);
            sigma_min = sigma_min.min(krylov::norm(tmp) / nx);
        }
    };
    let mut z = vec![ZERO; n];
    let mut r = vec![ZERO; n];
    for _ in 0..sweeps {
        let nv = krylov::norm(&v);
        if !(nv > 0.0 && nv.is_finite()) {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        for adjoint in [false, true] {
            z.fill(ZERO);
            let info = op.solve_box(&v, &mut z, adjoint, 1e-10, 600);
            if !info.converged {
                op.apply_box(&z, &mut tmp, adjoint);
                r.iter_mut()
                    .zip(v.iter().zip(&tmp))
                    .for_each(|(r, (b, az))| *r = b - az);
                bound(&r, !adjoint, &mut tmp);
            }
            bound(&z, adjoint, &mut tmp);
            std::mem::swap(&mut v, &mut z);
        }
    }
    let op_norm = op.norm_bound();
    let threshold = rel * op_norm;
    NullspaceReport {
        sigma_min,
        op_norm,
        threshold,
        pass: sigma_min > threshold,
    }
}

/// Weighted-norm quotient of the Carleman estimate with weight e^{τx₃}.
///
/// All quantities are multiplied by e^{−τL}, which leaves the quotient
/// unchanged and keeps every exponential at most 1.
pub fn carleman_ratio(op: &DiscreteOperator, u: &ComplexField3, tau: f64) -> Result<f64> {
    let g = op.grid;
    let scale_max = u.max_abs();
    if scale_max == 0.0 {
        return Ok(0.0);
    }
    let on_boundary = op
        .class
        .iter()
        .zip(&u.values)
        .filter(|(c, _)| !matches!(c, NodeClass::Interior))
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    if on_boundary > 1e-12 * scale_max {
        return Err(Error::invalid(
            MODULE,
            "Carleman check needs a field vanishing on the boundary",
        ));
    }
    let [n1, n2, n3] = g.dims();
    let h = g.spacing();
    let l = g.x3.max;
    let weight: Vec<f64> = (0..n3).map(|k| (tau * (g.x3.coord(k) - l)).exp()).collect();
    let w = Field3 {
        grid: g,
        values: (0..g.len())
            .map(|idx| u.values[idx] * weight[g.unindex(idx).2])
            .collect::<Vec<_>>(),
    };
    let tw = [
        g.x1.trapezoid_weights(),
        g.x2.trapezoid_weights(),
        g.x3.trapezoid_weights(),
    ];
    let mut l2 = 0.0;
    let mut grad = 0.0;
    for k in 0..n3 {
        for j in 0..n2 {
            for i in 0..n1 {
                let idx = g.index(i, j, k);
                let wv = w.values[idx];
                l2 += tw[0][i] * tw[1][j] * tw[2][k] * wv.norm_sqr();
                if i + 1 < n1 {
                    let d = (w.values[idx + 1] - wv) / h[0];
                    grad += h[0] * tw[1][j] * tw[2][k] * d.norm_sqr();
                }
                if j + 1 < n2 {
                    let d = (w.values[idx + n1] - wv) / h[1];
                    grad += tw[0][i] * h[1] * tw[2][k] * d.norm_sqr();
                }
                if k + 1 < n3 {
                    let d = (w.values[idx + n1 * n2] - wv) / h[2];
                    grad += tw[0][i] * tw[1][j] * h[2] * d.norm_sqr();
                }
            }
        }
    }
    let numerator = (l2 + grad).sqrt() + tau * l2.sqrt();
    let lu = op.apply_full(u);
    let mut lu2 = 0.0;
    for (idx, v) in lu.values.iter().enumerate() {
        let (i, j, k) = g.unindex(idx);
        lu2 += tw[0][i] * tw[1][j] * tw[2][k] * (v * weight[k]).norm_sqr();
    }
    let top_mask: Vec<bool> = op.class.iter().map(|c| *c == NodeClass::Top).collect();
    let top = neumann_trace(op, u, &top_mask);
    let top2: f64 = top
        .entries
        .iter()
        .filter(|e| e.axis == 2)
        .map(|e| e.weight * e.value.norm_sqr())
        .sum();
    let denominator = lu2.sqrt() + tau.sqrt() * top2.sqrt();
    if denominator <= f64::EPSILON * numerator {
        return Err(Error::numerical(
            MODULE,
            "Carleman denominator vanishes for a nonzero field; suspect discretization",
        ));
    }
    Ok(numerator / denominator)
}

/// Random smooth field supported strictly inside Q: a sum of `count`
/// bumps with random centers, radii and complex amplitudes.
pub fn random_zero_trace_field(
    op: &DiscreteOperator,
    domain: &CylinderDomain,
    rng: &mut impl Rng,
    count: usize,
) -> ComplexField3 {
    let g = op.grid;
    let (lo, hi) = domain.cross_section.bounding_box();
    let l = domain.height;
    let mut bumps = Vec::with_capacity(count);
    while bumps.len() < count {
        let r = [
            (0.1 + 0.2 * rng.random::<f64>()) * (hi[0] - lo[0]),
            (0.1 + 0.2 * rng.random::<f64>()) * (hi[1] - lo[1]),
            (0.1 + 0.2 * rng.random::<f64>()) * l,
        ];
        let c = [
            lo[0] + r[0] + (hi[0] - lo[0] - 2.0 * r[0]) * rng.random::<f64>(),
            lo[1] + r[1] + (hi[1] - lo[1] - 2.0 * r[1]) * rng.random::<f64>(),
            r[2] + (l - 2.0 * r[2]) * rng.random::<f64>(),
        ];
        // Keep the whole ellipsoid's footprint inside the cross-section.
        let fits = (0..16).all(|t| {
            let th = std::f64::consts::TAU * t as f64 / 16.0;
            domain
                .cross_section
                .contains([c[0] + r[0] * th.cos(), c[1] + r[1] * th.sin()])
        });
        if !fits {
            continue;
        }
        bumps.push(Bump {
            center: c,
            radii: r,
            amplitude: C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
        });
    }
    let mut f = Potential { bumps }.sample(g);
    for (v, c) in f.values.iter_mut().zip(&op.class) {
        if *c != NodeClass::Interior {
            *v = ZERO;
        }
    }
    f
}
