//! Exponential Radon transform of complex 2D fields.
//!
//! ```text
//! R_μ f(ω, p) = ∫ f(pω + tω⊥) e^{μt} dt,   ω⊥ = (ω₂, −ω₁)
//! ```

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::FftPlanner;

use crate::geometry::{line_avoids, ConvexPolygon, Line2D, Point, DEFAULT_LINE_MARGIN};
use crate::numerics::krylov::cg;
use crate::numerics::{par_map, ComplexField2, Field2, Grid2, Mask2, C64};
use crate::{Error, Result};

const MODULE: &str = "radon";

pub const DEFAULT_ANGLES: usize = 180;
pub const DEFAULT_OFFSETS: usize = 257;
/// Largest |μ|·diam(supp f) accepted by the full-data inversion.
pub const MAX_MU_DIAMETER: f64 = 6.0;
/// Line sampling used by the constructive converse in [`support_verify`].
pub const CONVERSE_ANGLES: usize = 90;
pub const CONVERSE_OFFSETS: usize = 97;
pub const CONVERSE_GRID: usize = 48;
pub const CONVERSE_REG: f64 = 1e-4;

/// Parameter interval of `line` inside the grid rectangle.
fn clip_to_box(line: &Line2D, grid: &Grid2) -> Option<(f64, f64)> {
    let o = line.point(0.0);
    let d = line.omega_perp();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (axis, (min, max)) in [(grid.x1.min, grid.x1.max), (grid.x2.min, grid.x2.max)]
        .into_iter()
        .enumerate()
    {
        if d[axis].abs() < 1e-15 {
            if o[axis] < min || o[axis] > max {
                return None;
            }
            continue;
        }
        let (a, b) = ((min - o[axis]) / d[axis], (max - o[axis]) / d[axis]);
        lo = lo.max(a.min(b));
        hi = hi.min(a.max(b));
    }
    (hi > lo).then_some((lo, hi))
}

fn default_step(grid: &Grid2) -> f64 {
    0.5 * grid.x1.spacing().min(grid.x2.spacing())
}

/// Composite trapezoid rule for ∫_{t0}^{t1} f(point(t)) e^{μt} dt.
pub fn exp_radon_fn(f: impl Fn(Point) -> C64, mu: f64, line: &Line2D, range: (f64, f64), step: f64) -> C64 {
    let (t0, t1) = range;
    let n = ((t1 - t0) / step - 1e-9).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..=n {
        let t = t0 + i as f64 * h;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        acc += f(line.point(t)) * (w * (mu * t).exp());
    }
    acc * h
}

/// Quadrature nodes (t, weight·e^{μt}) along `line` inside the grid: the
/// line is split where it crosses grid lines, so the bilinear interpolant
/// is smooth on every piece, and each piece gets a trapezoid rule with
/// step at most `step`.
pub fn line_nodes(line: &Line2D, grid: &Grid2, mu: f64, step: f64) -> Vec<(f64, f64)> {
    let Some((t0, t1)) = clip_to_box(line, grid) else {
        return Vec::new();
    };
    let o = line.point(0.0);
    let d = line.omega_perp();
    let mut cuts = vec![t0, t1];
    for (axis, ax) in [grid.x1, grid.x2].iter().enumerate() {
        if d[axis].abs() < 1e-15 {
            continue;
        }
        for k in 0..ax.n {
            let t = (ax.coord(k) - o[axis]) / d[axis];
            if t > t0 && t < t1 {
                cuts.push(t);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|b, a| (*b - *a).abs() < 1e-14);
    let mut nodes = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = ((b - a) / step - 1e-9).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        for i in 0..=n {
            let t = a + i as f64 * h;
            let wt = if i == 0 || i == n { 0.5 * h } else { h };
            nodes.push((t, wt * (mu * t).exp()));
        }
    }
    nodes
}

/// R_μ f on one line, with bilinear interpolation of `f` (zero off the grid)
/// and trapezoid step at most `min(step, h/2)` between grid-line crossings.
pub fn exp_radon(f: &ComplexField2, mu: f64, line: &Line2D, step: f64) -> C64 {
    line_nodes(line, &f.grid, mu, step.min(default_step(&f.grid)))
        .iter()
        .map(|&(t, w)| f.sample(line.point(t)) * w)
        .sum()
}

/// Sampled R_μ f on an (angle, offset) grid.
#[derive(Clone, Debug)]
pub struct ExpSinogram {
    pub mu: f64,
    pub angles: Vec<f64>,
    pub offsets: Vec<f64>,
    /// Row-major in (angle, offset).
    pub values: Vec<C64>,
    /// Lines avoiding the designated convex set.
    pub avoid_mask: Vec<bool>,
}

impl ExpSinogram {
    #[inline]
    pub fn index(&self, a: usize, o: usize) -> usize {
        a * self.offsets.len() + o
    }

    pub fn value(&self, a: usize, o: usize) -> C64 {
        self.values[self.index(a, o)]
    }

    pub fn line(&self, a: usize, o: usize) -> Line2D {
        Line2D::from_angle(self.angles[a], self.offsets[o])
    }

    pub fn lines(&self) -> Vec<Line2D> {
        (0..self.values.len())
            .map(|n| self.line(n / self.offsets.len(), n % self.offsets.len()))
            .collect()
    }

    pub fn offset_spacing(&self) -> f64 {
        if self.offsets.len() < 2 {
            return 0.0;
        }
        (self.offsets[self.offsets.len() - 1] - self.offsets[0]) / (self.offsets.len() - 1) as f64
    }

    /// Largest |value| over lines avoiding the designated set.
    pub fn masked_max(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.avoid_mask)
            .filter(|(_, m)| **m)
            .map(|(v, _)| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Largest distance from the origin to a corner of the grid rectangle.
pub fn circumradius(grid: &Grid2) -> f64 {
    [grid.x1.min, grid.x1.max]
        .iter()
        .flat_map(|&a| [grid.x2.min, grid.x2.max].map(|b| a.hypot(b)))
        .fold(0.0, f64::max)
}

/// Uniform angles on [0, 2π) and offsets on [−R, R] with R the circumradius.
pub fn sampling(grid: &Grid2, n_angles: usize, n_offsets: usize) -> (Vec<f64>, Vec<f64>) {
    let r = circumradius(grid);
    let angles = (0..n_angles).map(|i| 2.0 * PI * i as f64 / n_angles as f64).collect();
    let offsets = (0..n_offsets)
        .map(|j| {
            if n_offsets == 1 {
                0.0
            } else {
                -r + 2.0 * r * j as f64 / (n_offsets - 1) as f64
            }
        })
        .collect();
    (angles, offsets)
}

/// Full sinogram with the avoid mask against `avoid`.
pub fn sinogram(f: &ComplexField2, mu: f64, n_angles: usize, n_offsets: usize, avoid: &ConvexPolygon) -> ExpSinogram {
    let (angles, offsets) = sampling(&f.grid, n_angles, n_offsets);
    sinogram_on(f, mu, angles, offsets, avoid)
}

pub fn sinogram_on(
    f: &ComplexField2,
    mu: f64,
    angles: Vec<f64>,
    offsets: Vec<f64>,
    avoid: &ConvexPolygon,
) -> ExpSinogram {
    let no = offsets.len();
    let step = default_step(&f.grid);
    let line = |n: usize| Line2D::from_angle(angles[n / no], offsets[n % no]);
    let total = angles.len() * no;
    let values = par_map(total, |n| exp_radon(f, mu, &line(n), step));
    let avoid_mask = (0..total)
        .map(|n| line_avoids(&line(n), avoid, DEFAULT_LINE_MARGIN))
        .collect();
    ExpSinogram {
        mu,
        angles,
        offsets,
        values,
        avoid_mask,
    }
}

fn coverage_gap(angles: &[f64]) -> f64 {
    let mut a: Vec<f64> = angles.iter().map(|t| t.rem_euclid(2.0 * PI)).collect();
    a.sort_by(f64::total_cmp);
    let mut gap = a[0] + 2.0 * PI - a[a.len() - 1];
    for w in a.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    gap
}

/// Estimated diameter of the support of f from the sinogram.
fn support_diameter(sino: &ExpSinogram) -> f64 {
    let peak = sino.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let cut = 1e-10 * peak;
    let no = sino.offsets.len();
    let mut diam: f64 = 0.0;
    for a in 0..sino.angles.len() {
        let row = &sino.values[a * no..(a + 1) * no];
        let first = row.iter().position(|v| v.norm() > cut);
        let last = row.iter().rposition(|v| v.norm() > cut);
        if let (Some(i), Some(j)) = (first, last) {
            diam = diam.max(sino.offsets[j] - sino.offsets[i] + 2.0 * sino.offset_spacing());
        }
    }
    diam
}

/// Ramp filter restricted to |σ| ≥ |μ|, in the frequency domain, for
/// `len` padded samples of spacing `dp`.
fn exp_ramp(len: usize, dp: f64, mu: f64) -> Vec<C64> {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(len);
    let mut k = vec![C64::new(0.0, 0.0); len];
    for (n, v) in k.iter_mut().enumerate() {
        let m = if n <= len / 2 { n as i64 } else { n as i64 - len as i64 };
        *v = C64::new(
            if m == 0 {
                1.0 / (4.0 * dp * dp)
            } else if m % 2 != 0 {
                -1.0 / (PI * PI * (m * m) as f64 * dp * dp)
            } else {
                0.0
            },
            0.0,
        );
    }
    fft.process(&mut k);
    for (n, v) in k.iter_mut().enumerate() {
        let m = if n <= len / 2 { n as f64 } else { n as f64 - len as f64 };
        let sigma = 2.0 * PI * m / (len as f64 * dp);
        *v = if sigma.abs() < mu.abs() {
            C64::new(0.0, 0.0)
        } else {
            C64::new(2.0 * PI * v.re * dp, 0.0)
        };
    }
    k
}

/// Filtered backprojection for constant attenuation on full angular data:
///
/// ```text
/// f(x) = 1/(4π) ∫₀^{2π} e^{−μ⟨x,ω⊥⟩} (k * R_μ f(ω,·))(⟨x,ω⟩) dθ,   k̂(σ) = |σ|·1{|σ| ≥ |μ|}
/// ```
pub fn ert_invert_full(sino: &ExpSinogram, grid: Grid2) -> Result<ComplexField2> {
    let na = sino.angles.len();
    let no = sino.offsets.len();
    if na < 4 || no < 4 {
        return Err(Error::invalid(MODULE, "sinogram too small for inversion"));
    }
    let gap = coverage_gap(&sino.angles);
    if gap > 1.5 * 2.0 * PI / na as f64 {
        return Err(Error::invalid(
            MODULE,
            format!("angular coverage gap of {gap:.3} rad; full inversion needs [0, 2π), use ert_invert_partial"),
        ));
    }
    let diam = support_diameter(sino);
    if sino.mu.abs() * diam > MAX_MU_DIAMETER {
        return Err(Error::numerical(
            MODULE,
            format!(
                "|mu|*diam(supp f) = {:.2} exceeds {MAX_MU_DIAMETER}; inversion is too ill-conditioned",
                sino.mu.abs() * diam
            ),
        ));
    }
    let dp = sino.offset_spacing();
    let len = (2 * no).next_power_of_two();
    let kernel = exp_ramp(len, dp, sino.mu);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let filtered: Vec<Vec<C64>> = (0..na)
        .map(|a| {
            let mut buf = vec![C64::new(0.0, 0.0); len];
            buf[..no].copy_from_slice(&sino.values[a * no..(a + 1) * no]);
            fwd.process(&mut buf);
            buf.iter_mut().zip(&kernel).for_each(|(b, k)| *b *= k);
            inv.process(&mut buf);
            buf.truncate(no);
            buf.iter_mut().for_each(|b| *b /= len as f64);
            buf
        })
        .collect();
    let p0 = sino.offsets[0];
    let dtheta = 2.0 * PI / na as f64;
    let mu = sino.mu;
    let values = par_map(grid.len(), |idx| {
        let (i, j) = grid.unindex(idx);
        let x = grid.point(i, j);
        let mut acc = C64::new(0.0, 0.0);
        for (a, row) in filtered.iter().enumerate() {
            let (s, c) = sino.angles[a].sin_cos();
            let p = x[0] * c + x[1] * s;
            let t = x[0] * s - x[1] * c;
            let u = (p - p0) / dp;
            if u < 0.0 || u > (no - 1) as f64 {
                continue;
            }
            let k = (u.floor() as usize).min(no - 2);
            let w = u - k as f64;
            acc += (row[k] * (1.0 - w) + row[k + 1] * w) * (-mu * t).exp();
        }
        acc * (dtheta / (4.0 * PI))
    });
    Ok(Field2 { grid, values })
}

/// Result of a regularized partial-data inversion.
#[derive(Clone, Debug)]
pub struct PartialInversion {
    pub field: ComplexField2,
    pub residual_norm: f64,
    pub reg_norm: f64,
    pub iterations: usize,
    pub lines_used: usize,
    pub unknowns: usize,
    pub condition_estimate: f64,
    pub warning: Option<String>,
}

/// Unknown count up to which the normal equations are factored directly.
const DENSE_LIMIT: usize = 4000;

/// Sparse discretization of R_μ restricted to unknowns on `region`.
struct LineMatrix {
    rows: Vec<Vec<(u32, f64)>>,
    n: usize,
}

impl LineMatrix {
    fn new(lines: &[Line2D], mu: f64, region: &Mask2) -> Self {
        let grid = region.grid;
        let mut col = vec![u32::MAX; grid.len()];
        let mut n = 0;
        for (idx, &m) in region.values.iter().enumerate() {
            if m {
                col[idx] = n as u32;
                n += 1;
            }
        }
        let step = default_step(&grid);
        let rows = par_map(lines.len(), |l| {
            let line = &lines[l];
            let mut row: Vec<(u32, f64)> = Vec::new();
            for (t, w) in line_nodes(line, &grid, mu, step) {
                let x = line.point(t);
                let (Some((i, a)), Some((j, b))) = (grid.x1.locate(x[0]), grid.x2.locate(x[1])) else {
                    continue;
                };
                for (di, dj, c) in [
                    (0, 0, (1.0 - a) * (1.0 - b)),
                    (1, 0, a * (1.0 - b)),
                    (0, 1, (1.0 - a) * b),
                    (1, 1, a * b),
                ] {
                    let k = col[grid.index(i + di, j + dj)];
                    if k != u32::MAX && c != 0.0 {
                        row.push((k, w * c));
                    }
                }
            }
            row.sort_unstable_by_key(|e| e.0);
            row.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            row
        });
        LineMatrix { rows, n }
    }

    /// Scales every row to unit 2-norm; returns the factors.
    fn equilibrate(&mut self) -> Vec<f64> {
        self.rows
            .iter_mut()
            .map(|r| {
                let norm = r.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
                let s = if norm > 0.0 { 1.0 / norm } else { 1.0 };
                r.iter_mut().for_each(|e| e.1 *= s);
                s
            })
            .collect()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in self.rows.iter().zip(y.iter_mut()) {
            *out = r.iter().map(|&(k, w)| w * x[k as usize]).sum();
        }
    }

    fn apply_t(&self, y: &[f64], x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
        for (r, v) in self.rows.iter().zip(y) {
            for &(k, w) in r {
                x[k as usize] += w * v;
            }
        }
    }

    /// AᵀA + λI as a dense matrix.
    fn normal_matrix(&self, lambda: f64) -> DMatrix<f64> {
        let mut m = DMatrix::from_diagonal_element(self.n, self.n, lambda);
        for r in &self.rows {
            for &(i, wi) in r {
                for &(j, wj) in r {
                    m[(i as usize, j as usize)] += wi * wj;
                }
            }
        }
        m
    }

    /// x ↦ AᵀA x.
    fn normal(&self, x: &[f64], out: &mut [f64], tmp: &mut [f64]) {
        self.apply(x, tmp);
        self.apply_t(tmp, out);
    }

    /// Extreme eigenvalues of AᵀA by power iteration.
    fn spectrum(&self) -> (f64, f64) {
        let n = self.n;
        let mut tmp = vec![0.0; self.rows.len()];
        let mut v = vec![1.0; n];
        let mut w = vec![0.0; n];
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut top = 0.0;
        for _ in 0..60 {
            let s = norm(&v);
            v.iter_mut().for_each(|x| *x /= s);
            self.normal(&v, &mut w, &mut tmp);
            top = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            std::mem::swap(&mut v, &mut w);
        }
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 - 0.1 * ((i * 104729) % 11) as f64).collect();
        let mut low = top;
        for _ in 0..60 {
            let s = norm(&v);
            v.iter_mut().for_each(|x| *x /= s);
            self.normal(&v, &mut w, &mut tmp);
            low = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            for (wi, vi) in w.iter_mut().zip(&v) {
                *wi = top * vi - *wi;
            }
            std::mem::swap(&mut v, &mut w);
        }
        (top, low.max(0.0))
    }
}

/// Tikhonov-regularized least squares for f supported on `region`:
///
/// ```text
/// min ‖A f − b‖² + reg·λ_max(AᵀA)·‖f‖²
/// ```
///
/// over the sinogram entries flagged in `use_line`, each row of A and its
/// datum first scaled to unit row norm. Real and imaginary
/// parts are solved separately since the transform is real for real μ.
pub fn ert_invert_partial(sino: &ExpSinogram, use_line: &[bool], region: &Mask2, reg: f64) -> Result<PartialInversion> {
    if !(reg > 0.0) {
        return Err(Error::invalid(MODULE, "regularization must be positive"));
    }
    if use_line.len() != sino.values.len() {
        return Err(Error::invalid(MODULE, "line selection does not match the sinogram"));
    }
    let all = sino.lines();
    let (lines, data): (Vec<Line2D>, Vec<C64>) = all
        .iter()
        .zip(&sino.values)
        .zip(use_line)
        .filter(|(_, u)| **u)
        .map(|((l, v), _)| (*l, *v))
        .unzip();
    let mut a = LineMatrix::new(&lines, sino.mu, region);
    let scales = a.equilibrate();
    let data: Vec<C64> = data.iter().zip(&scales).map(|(d, s)| d * *s).collect();
    let n = a.n;
    let grid = region.grid;
    if n == 0 {
        return Ok(PartialInversion {
            field: ComplexField2::zeros(grid),
            residual_norm: data
                .iter()
                .zip(&scales)
                .map(|(v, s)| (v / *s).norm_sqr())
                .sum::<f64>()
                .sqrt(),
            reg_norm: 0.0,
            iterations: 0,
            lines_used: lines.len(),
            unknowns: 0,
            condition_estimate: 1.0,
            warning: Some("region is empty".into()),
        });
    }
    let (top, low) = a.spectrum();
    let lambda = reg * top.max(f64::MIN_POSITIVE);
    let condition_estimate = (top + lambda) / (low + lambda);
    let warning = (lines.len() < n).then(|| {
        format!(
            "ill-posed configuration: {} lines for {n} unknowns, condition estimate {condition_estimate:.2e}",
            lines.len()
        )
    });
    let mut tmp = vec![0.0; lines.len()];
    let dense = (n <= DENSE_LIMIT).then(|| a.normal_matrix(lambda).cholesky()).flatten();
    let mut solve = |b: Vec<f64>| -> (Vec<f64>, usize) {
        let mut rhs = vec![0.0; n];
        a.apply_t(&b, &mut rhs);
        if let Some(ch) = &dense {
            let x = ch.solve(&DVector::from_vec(rhs));
            return (x.as_slice().to_vec(), 0);
        }
        let mut x = vec![0.0; n];
        let info = cg(
            |v, out| {
                a.normal(v, out, &mut tmp);
                out.iter_mut().zip(v).for_each(|(o, vi)| *o += lambda * vi);
            },
            &rhs,
            &mut x,
            1e-10,
            4000,
        );
        (x, info.iterations)
    };
    let (xr, ir) = solve(data.iter().map(|v| v.re).collect());
    let (xi, ii) = solve(data.iter().map(|v| v.im).collect());
    let mut field = ComplexField2::zeros(grid);
    let mut k = 0;
    for (idx, &m) in region.values.iter().enumerate() {
        if m {
            field.values[idx] = C64::new(xr[k], xi[k]);
            k += 1;
        }
    }
    let mut ar = vec![0.0; lines.len()];
    let mut ai = vec![0.0; lines.len()];
    a.apply(&xr, &mut ar);
    a.apply(&xi, &mut ai);
    let residual_norm = data
        .iter()
        .zip(ar.iter().zip(&ai))
        .zip(&scales)
        .map(|((d, (r, i)), s)| ((d - C64::new(*r, *i)) / *s).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let reg_norm = xr.iter().chain(&xi).map(|v| v * v).sum::<f64>().sqrt();
    Ok(PartialInversion {
        field,
        residual_norm,
        reg_norm,
        iterations: ir.max(ii),
        lines_used: lines.len(),
        unknowns: n,
        condition_estimate,
        warning,
    })
}

/// Outcome of the support-theorem check.
#[derive(Clone, Debug)]
pub struct SupportReport {
    /// Largest |R_μ f| over lines avoiding E.
    pub masked_max: f64,
    pub masked_lines: usize,
    /// masked_max ≤ tol.
    pub forward_clear: bool,
    /// Largest |f̂| outside E from the partial inversion of the masked data.
    pub exterior_max: f64,
    pub exterior_detected: bool,
}

/// Checks that R_μ f vanishes on lines avoiding `avoid` and reconstructs f
/// outside `avoid` from exactly those lines.
pub fn support_verify(f: &ComplexField2, mu: f64, avoid: &ConvexPolygon, tol: f64) -> Result<SupportReport> {
    let sino = sinogram(f, mu, DEFAULT_ANGLES, DEFAULT_OFFSETS, avoid);
    let masked_max = sino.masked_max();
    let masked_lines = sino.avoid_mask.iter().filter(|m| **m).count();
    let (angles, offsets) = sampling(&f.grid, CONVERSE_ANGLES, CONVERSE_OFFSETS);
    let coarse = sinogram_on(f, mu, angles, offsets, avoid);
    let g = f.grid;
    let cg = Grid2::new(
        crate::numerics::Axis::new(g.x1.min, g.x1.max, CONVERSE_GRID),
        crate::numerics::Axis::new(g.x2.min, g.x2.max, CONVERSE_GRID),
    );
    let margin = 1.5 * cg.x1.spacing().max(cg.x2.spacing());
    let region = Field2::from_fn(cg, |x| avoid.is_empty() || avoid.distance(x) > margin);
    let inv = ert_invert_partial(&coarse, &coarse.avoid_mask, &region, CONVERSE_REG)?;
    let exterior_max = inv.field.max_abs();
    Ok(SupportReport {
        masked_max,
        masked_lines,
        forward_clear: masked_max <= tol,
        exterior_max,
        exterior_detected: exterior_max > tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Axis;

    fn grid(n: usize) -> Grid2 {
        Grid2::new(Axis::new(-1.0, 1.0, n), Axis::new(-1.0, 1.0, n))
    }

    #[test]
    fn zero_field_has_zero_transform() {
        let f = ComplexField2::zeros(grid(33));
        let l = Line2D::from_angle(0.3, 0.1);
        assert_eq!(exp_radon(&f, 1.0, &l, 0.01), C64::new(0.0, 0.0));
    }

    #[test]
    fn clipping_matches_box() {
        let g = grid(5);
        let l = Line2D::from_angle(0.0, 0.5);
        let (a, b) = clip_to_box(&l, &g).unwrap();
        assert!((a + 1.0).abs() < 1e-14 && (b - 1.0).abs() < 1e-14);
        assert!(clip_to_box(&Line2D::from_angle(0.0, 1.5), &g).is_none());
    }

    #[test]
    fn coverage_gap_detected() {
        let half: Vec<f64> = (0..90).map(|i| PI * i as f64 / 90.0).collect();
        assert!(coverage_gap(&half) > 3.0);
        let full: Vec<f64> = (0..180).map(|i| 2.0 * PI * i as f64 / 180.0).collect();
        assert!((coverage_gap(&full) - 2.0 * PI / 180.0).abs() < 1e-12);
    }
}
