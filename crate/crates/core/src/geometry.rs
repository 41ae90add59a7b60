//! Cross-section geometry: boundary curves parametrized by arc length, the
//! inaccessible boundary set, its convex hull, the reachable set and the
//! line/convex-set predicates used by the Radon machinery.

use std::f64::consts::PI;

use crate::numerics::{Axis, Field2, Grid2, Mask2};
use crate::{Error, Result};

const MODULE: &str = "geometry";

/// Default number of boundary samples per arc for hull construction.
pub const DEFAULT_HULL_SAMPLES: usize = 512;

/// Default margin for [`line_avoids`].
pub const DEFAULT_LINE_MARGIN: f64 = 1e-6;

const HULL_TOL: f64 = 1e-12;

pub type Point = [f64; 2];

#[inline]
fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn closest_on_segment(x: Point, a: Point, b: Point) -> Point {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return a;
    }
    let t = (dot(sub(x, a), ab) / len2).clamp(0.0, 1.0);
    [a[0] + t * ab[0], a[1] + t * ab[1]]
}

/// The 2D cross-section of the cylinder.
#[derive(Clone, Debug, PartialEq)]
pub enum CrossSection {
    Disk {
        center: Point,
        radius: f64,
    },
    /// Axis-aligned rectangle [x1_min, x1_max] x [x2_min, x2_max].
    Rectangle {
        min: Point,
        max: Point,
    },
    /// Closed counterclockwise polyline (last vertex connects to the first).
    Polyline(Vec<Point>),
}

impl CrossSection {
    pub fn unit_disk() -> Self {
        CrossSection::Disk {
            center: [0.0, 0.0],
            radius: 1.0,
        }
    }

    /// The unit square [-1/2, 1/2] x [0, 1], sitting on the line x2 = 0 with
    /// the x2-axis through its middle.
    pub fn unit_square() -> Self {
        CrossSection::Rectangle {
            min: [-0.5, 0.0],
            max: [0.5, 1.0],
        }
    }

    /// Builds a polyline cross-section, reorienting it counterclockwise.
    pub fn polyline(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::invalid(MODULE, "a boundary polyline needs at least 3 vertices"));
        }
        if vertices.first() == vertices.last() {
            vertices.pop();
        }
        let area2: f64 = (0..vertices.len())
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % vertices.len()];
                a[0] * b[1] - a[1] * b[0]
            })
            .sum();
        if area2.abs() < 1e-14 {
            return Err(Error::invalid(MODULE, "boundary polyline encloses no area"));
        }
        if area2 < 0.0 {
            vertices.reverse();
        }
        Ok(CrossSection::Polyline(vertices))
    }

    fn vertices(&self) -> Option<Vec<Point>> {
        match self {
            CrossSection::Disk { .. } => None,
            CrossSection::Rectangle { min, max } => Some(vec![*min, [max[0], min[1]], *max, [min[0], max[1]]]),
            CrossSection::Polyline(v) => Some(v.clone()),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            CrossSection::Disk { radius, .. } => 2.0 * PI * radius,
            _ => {
                let v = self.vertices().unwrap();
                (0..v.len())
                    .map(|i| {
                        let d = sub(v[(i + 1) % v.len()], v[i]);
                        dot(d, d).sqrt()
                    })
                    .sum()
            }
        }
    }

    /// Boundary point at arc length `s` (taken modulo the perimeter).
    ///
    /// Disks start at angle 0; polygons start at their first vertex (the
    /// lower-left corner for rectangles) and run counterclockwise.
    pub fn point_at(&self, s: f64) -> Point {
        let per = self.perimeter();
        let s = s.rem_euclid(per);
        match self {
            CrossSection::Disk { center, radius } => {
                let t = s / radius;
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            }
            _ => {
                let v = self.vertices().unwrap();
                let mut acc = 0.0;
                for i in 0..v.len() {
                    let a = v[i];
                    let b = v[(i + 1) % v.len()];
                    let d = sub(b, a);
                    let len = dot(d, d).sqrt();
                    if s <= acc + len || i + 1 == v.len() {
                        let t = ((s - acc) / len).clamp(0.0, 1.0);
                        return [a[0] + t * d[0], a[1] + t * d[1]];
                    }
                    acc += len;
                }
                unreachable!()
            }
        }
    }

    /// Arc length of the boundary point nearest to `x`.
    pub fn arc_length_of(&self, x: Point) -> f64 {
        match self {
            CrossSection::Disk { center, radius } => {
                let t = (x[1] - center[1]).atan2(x[0] - center[0]).rem_euclid(2.0 * PI);
                t * radius
            }
            _ => {
                let v = self.vertices().unwrap();
                let mut best = (f64::INFINITY, 0.0);
                let mut acc = 0.0;
                for i in 0..v.len() {
                    let a = v[i];
                    let b = v[(i + 1) % v.len()];
                    let c = closest_on_segment(x, a, b);
                    let d2 = dot(sub(x, c), sub(x, c));
                    let len = dot(sub(b, a), sub(b, a)).sqrt();
                    if d2 < best.0 {
                        best = (d2, acc + dot(sub(c, a), sub(c, a)).sqrt());
                    }
                    acc += len;
                }
                best.1
            }
        }
    }

    /// Strict interior test (boundary points are not contained).
    pub fn contains(&self, x: Point) -> bool {
        match self {
            CrossSection::Disk { center, radius } => {
                let d = sub(x, *center);
                dot(d, d) < radius * radius
            }
            CrossSection::Rectangle { min, max } => x[0] > min[0] && x[0] < max[0] && x[1] > min[1] && x[1] < max[1],
            CrossSection::Polyline(v) => {
                let mut inside = false;
                let n = v.len();
                for i in 0..n {
                    let a = v[i];
                    let b = v[(i + 1) % n];
                    if closest_on_segment(x, a, b) == x {
                        return false;
                    }
                    if (a[1] > x[1]) != (b[1] > x[1]) {
                        let xc = a[0] + (x[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                        if x[0] < xc {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            CrossSection::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            _ => {
                let v = self.vertices().unwrap();
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for p in v {
                    for a in 0..2 {
                        lo[a] = lo[a].min(p[a]);
                        hi[a] = hi[a].max(p[a]);
                    }
                }
                (lo, hi)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        match self {
            CrossSection::Disk { radius, .. } => 2.0 * radius,
            _ => (hi[0] - lo[0]).hypot(hi[1] - lo[1]),
        }
    }

    /// Extent of the cross-section along direction `d`: (min, max) of <d, x>.
    pub fn extent_along(&self, d: Point) -> (f64, f64) {
        match self {
            CrossSection::Disk { center, radius } => {
                let c = dot(d, *center);
                let r = radius * dot(d, d).sqrt();
                (c - r, c + r)
            }
            _ => {
                let v = self.vertices().unwrap();
                v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    let t = dot(d, *p);
                    (lo.min(t), hi.max(t))
                })
            }
        }
    }

    /// Rectangle bounds, if the cross-section is a rectangle.
    pub fn as_rectangle(&self) -> Option<(Point, Point)> {
        match self {
            CrossSection::Rectangle { min, max } => Some((*min, *max)),
            _ => None,
        }
    }
}

/// A closed boundary arc, `start .. start + length` in arc-length coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub start: f64,
    pub length: f64,
}

impl Arc {
    /// Arc from `s0` to `s1` going counterclockwise; `s1 < s0` wraps around.
    pub fn between(s0: f64, s1: f64, perimeter: f64) -> Self {
        let start = s0.rem_euclid(perimeter);
        let mut length = (s1 - s0).rem_euclid(perimeter);
        if length == 0.0 && s1 != s0 {
            length = perimeter;
        }
        Arc { start, length }
    }

    pub fn contains(&self, s: f64, perimeter: f64) -> bool {
        if self.length >= perimeter {
            return true;
        }
        let d = (s - self.start).rem_euclid(perimeter);
        d <= self.length + 1e-12 || (perimeter - d) < 1e-12
    }
}

/// Convex polygon with counterclockwise vertices. A hull whose points are
/// all collinear is kept as a segment and flagged `degenerate`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    pub vertices: Vec<Point>,
    pub degenerate: bool,
}

impl ConvexPolygon {
    pub fn empty() -> Self {
        ConvexPolygon {
            vertices: Vec::new(),
            degenerate: false,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Closed containment test with a small absolute tolerance.
    pub fn contains(&self, x: Point) -> bool {
        self.contains_with(x, HULL_TOL)
    }

    pub fn contains_with(&self, x: Point, tol: f64) -> bool {
        match self.vertices.len() {
            0 => false,
            1 => dot(sub(x, self.vertices[0]), sub(x, self.vertices[0])).sqrt() <= tol,
            2 => {
                let c = closest_on_segment(x, self.vertices[0], self.vertices[1]);
                dot(sub(x, c), sub(x, c)).sqrt() <= tol
            }
            n => (0..n).all(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                let len = dot(sub(b, a), sub(b, a)).sqrt();
                cross(a, b, x) / len >= -tol
            }),
        }
    }

    /// Euclidean distance from `x` to the polygon (0 inside).
    pub fn distance(&self, x: Point) -> f64 {
        dot(sub(x, self.nearest_point(x)), sub(x, self.nearest_point(x))).sqrt()
    }

    pub fn nearest_point(&self, x: Point) -> Point {
        let n = self.vertices.len();
        if n == 1 {
            return self.vertices[0];
        }
        if n >= 3 && self.contains_with(x, 0.0) {
            return x;
        }
        let edges = if n == 2 { 1 } else { n };
        let mut best = (f64::INFINITY, x);
        for i in 0..edges {
            let c = closest_on_segment(x, self.vertices[i], self.vertices[(i + 1) % n]);
            let d2 = dot(sub(x, c), sub(x, c));
            if d2 < best.0 {
                best = (d2, c);
            }
        }
        best.1
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        0.5 * (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
    }

    /// True iff the polygon is convex with counterclockwise orientation.
    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        n < 3 || (0..n).all(|i| cross(self.vertices[i], self.vertices[(i + 1) % n], self.vertices[(i + 2) % n]) > 0.0)
    }
}

/// Andrew's monotone chain. Collinear points are dropped.
pub fn convex_hull(points: &[Point]) -> ConvexPolygon {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return ConvexPolygon {
            degenerate: true,
            vertices: pts,
        };
    }
    let scale = pts.iter().map(|p| p[0].abs().max(p[1].abs())).fold(1.0, f64::max);
    let eps = 1e-14 * scale * scale;
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        // All points collinear: keep the extreme pair.
        let a = pts[0];
        let b = pts[pts.len() - 1];
        return ConvexPolygon {
            vertices: vec![a, b],
            degenerate: true,
        };
    }
    ConvexPolygon {
        vertices: hull,
        degenerate: false,
    }
}

/// The cylinder Q = cross_section x (0, height) with its inaccessible set.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderDomain {
    pub cross_section: CrossSection,
    pub height: f64,
    pub gamma0: Vec<Arc>,
    /// Complement of `gamma0` on the boundary (open arcs).
    pub tilde_gamma: Vec<Arc>,
    pub hull: ConvexPolygon,
}

impl CylinderDomain {
    /// Builds the domain; `gamma0` entries are (start, end) arc-length pairs.
    pub fn new(cross_section: CrossSection, height: f64, gamma0: &[(f64, f64)]) -> Result<Self> {
        Self::with_hull_samples(cross_section, height, gamma0, DEFAULT_HULL_SAMPLES)
    }

    pub fn with_hull_samples(
        cross_section: CrossSection,
        height: f64,
        gamma0: &[(f64, f64)],
        hull_samples: usize,
    ) -> Result<Self> {
        if !(height > 0.0) {
            return Err(Error::invalid(MODULE, "cylinder height must be positive"));
        }
        let per = cross_section.perimeter();
        let gamma0: Vec<Arc> = gamma0.iter().map(|&(a, b)| Arc::between(a, b, per)).collect();
        let tilde_gamma = complement_arcs(&gamma0, per);
        let mut dom = CylinderDomain {
            cross_section,
            height,
            gamma0,
            tilde_gamma,
            hull: ConvexPolygon::empty(),
        };
        if !dom.gamma0.is_empty() {
            dom.hull = convex_hull_of_subboundary(&dom, hull_samples)?.polygon;
        }
        Ok(dom)
    }

    pub fn perimeter(&self) -> f64 {
        self.cross_section.perimeter()
    }

    /// True if the boundary point with arc length `s` lies on the closure of Γ₀.
    pub fn in_gamma0(&self, s: f64) -> bool {
        let per = self.perimeter();
        self.gamma0.iter().any(|a| a.contains(s, per))
    }

    /// Membership in the reachable set Ω \ Ch(Γ̄₀).
    pub fn in_reachable(&self, x: Point) -> bool {
        self.cross_section.contains(x) && !self.hull.contains(x)
    }

    /// Reachable-set mask at the nodes of an arbitrary grid.
    pub fn reachable_on(&self, grid: &Grid2) -> Mask2 {
        Field2::from_fn(*grid, |x| self.in_reachable(x))
    }

    /// Interior-of-Ω mask at the nodes of a grid.
    pub fn inside_on(&self, grid: &Grid2) -> Mask2 {
        Field2::from_fn(*grid, |x| self.cross_section.contains(x))
    }
}

fn complement_arcs(arcs: &[Arc], per: f64) -> Vec<Arc> {
    if arcs.is_empty() {
        return vec![Arc {
            start: 0.0,
            length: per,
        }];
    }
    // Merge on the unrolled circle, starting at the first arc start.
    let mut ivs: Vec<(f64, f64)> = arcs.iter().map(|a| (a.start, a.start + a.length)).collect();
    ivs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in ivs {
        if let Some(last) = merged.last_mut() {
            if a <= last.1 {
                last.1 = last.1.max(b);
                continue;
            }
        }
        merged.push((a, b));
    }
    let first = merged[0].0;
    // Fold any interval reaching past first + per.
    let cover_end = merged.iter().map(|m| m.1).fold(f64::MIN, f64::max);
    if cover_end - first >= per {
        return Vec::new();
    }
    let mut out = Vec::new();
    for w in merged.windows(2) {
        if w[1].0 > w[0].1 {
            out.push(Arc {
                start: w[0].1.rem_euclid(per),
                length: w[1].0 - w[0].1,
            });
        }
    }
    let gap = first + per - cover_end;
    if gap > 0.0 {
        out.push(Arc {
            start: cover_end.rem_euclid(per),
            length: gap,
        });
    }
    out
}

/// Hull returned by [`convex_hull_of_subboundary`].
#[derive(Clone, Debug, PartialEq)]
pub struct HullResult {
    pub polygon: ConvexPolygon,
    /// Sample points placed on Γ̄₀.
    pub samples: Vec<Point>,
}

/// Convex hull of `n_samples` points per arc placed on Γ̄₀ (arc endpoints included).
pub fn convex_hull_of_subboundary(domain: &CylinderDomain, n_samples: usize) -> Result<HullResult> {
    if domain.gamma0.is_empty() {
        return Err(Error::invalid(MODULE, "gamma0 is empty"));
    }
    if n_samples < 3 {
        return Err(Error::invalid(MODULE, "need at least 3 samples per arc"));
    }
    let mut samples = Vec::with_capacity(n_samples * domain.gamma0.len());
    for arc in &domain.gamma0 {
        for k in 0..n_samples {
            let s = arc.start + arc.length * k as f64 / (n_samples - 1) as f64;
            samples.push(domain.cross_section.point_at(s));
        }
    }
    Ok(HullResult {
        polygon: convex_hull(&samples),
        samples,
    })
}

/// Reachable-set mask on a `grid_resolution`² grid of cells covering the
/// bounding box of Ω. The returned grid's nodes are the cell centers.
pub fn reachable_set(domain: &CylinderDomain, grid_resolution: usize) -> Mask2 {
    let (lo, hi) = domain.cross_section.bounding_box();
    let n = grid_resolution.max(2);
    let h1 = (hi[0] - lo[0]) / n as f64;
    let h2 = (hi[1] - lo[1]) / n as f64;
    let grid = Grid2::new(
        Axis::new(lo[0] + 0.5 * h1, hi[0] - 0.5 * h1, n),
        Axis::new(lo[1] + 0.5 * h2, hi[1] - 0.5 * h2, n),
    );
    domain.reachable_on(&grid)
}

/// The line <omega, x> = p.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line2D {
    pub omega: Point,
    pub p: f64,
}

impl Line2D {
    /// Normalizes `omega`.
    pub fn new(omega: Point, p: f64) -> Self {
        let n = dot(omega, omega).sqrt();
        Line2D {
            omega: [omega[0] / n, omega[1] / n],
            p,
        }
    }

    pub fn from_angle(theta: f64, p: f64) -> Self {
        Line2D {
            omega: [theta.cos(), theta.sin()],
            p,
        }
    }

    /// (ω₂, −ω₁): omega rotated by −90°.
    #[inline]
    pub fn omega_perp(&self) -> Point {
        [self.omega[1], -self.omega[0]]
    }

    #[inline]
    pub fn signed_distance(&self, x: Point) -> f64 {
        dot(self.omega, x) - self.p
    }

    /// Point p·ω + t·ω⊥ on the line.
    #[inline]
    pub fn point(&self, t: f64) -> Point {
        let w = self.omega_perp();
        [self.p * self.omega[0] + t * w[0], self.p * self.omega[1] + t * w[1]]
    }

    /// The same line with opposite orientation.
    pub fn reversed(&self) -> Self {
        Line2D {
            omega: [-self.omega[0], -self.omega[1]],
            p: -self.p,
        }
    }
}

/// True iff every hull vertex lies strictly on one side of the line, at
/// distance at least `margin`. An empty hull is avoided by every line.
pub fn line_avoids(line: &Line2D, hull: &ConvexPolygon, margin: f64) -> bool {
    if hull.vertices.is_empty() {
        return true;
    }
    let d: Vec<f64> = hull.vertices.iter().map(|v| line.signed_distance(*v)).collect();
    d.iter().all(|&t| t >= margin) || d.iter().all(|&t| t <= -margin)
}

/// Rotation plus translation. Frame coordinates are
/// `x̂ = (<e1, x - origin>, <e2, x - origin>)` with (e1, e2) right-handed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidMotion {
    pub e1: Point,
    pub e2: Point,
    pub origin: Point,
}

impl RigidMotion {
    pub fn identity() -> Self {
        RigidMotion {
            e1: [1.0, 0.0],
            e2: [0.0, 1.0],
            origin: [0.0, 0.0],
        }
    }

    /// Frame whose x̂₁ axis is along `e1` and whose origin is `origin`.
    pub fn from_axis(e1: Point, origin: Point) -> Self {
        let n = dot(e1, e1).sqrt();
        let e1 = [e1[0] / n, e1[1] / n];
        RigidMotion {
            e1,
            e2: [-e1[1], e1[0]],
            origin,
        }
    }

    #[inline]
    pub fn to_frame(&self, x: Point) -> Point {
        let d = sub(x, self.origin);
        [dot(self.e1, d), dot(self.e2, d)]
    }

    #[inline]
    pub fn from_frame(&self, y: Point) -> Point {
        [
            self.origin[0] + y[0] * self.e1[0] + y[1] * self.e2[0],
            self.origin[1] + y[0] * self.e1[1] + y[1] * self.e2[1],
        ]
    }

    /// The frame's x̂₂-axis as a line in original coordinates.
    pub fn axis_line(&self) -> Line2D {
        Line2D {
            omega: self.e1,
            p: dot(self.e1, self.origin),
        }
    }

    /// Slides the origin along the axis so the frame coordinate x̂₂ starts at
    /// `x2_min` (i.e. the point with x̂₂ = x2_min becomes the new origin).
    pub fn shifted_along_axis(&self, x2_min: f64) -> Self {
        RigidMotion {
            origin: self.from_frame([0.0, x2_min]),
            ..*self
        }
    }
}

/// Isometry taking `point` to (0, 1) such that the frame's x̂₂-axis avoids
/// the hull, with the hull on the x̂₁ > 0 side. The axis is chosen
/// perpendicular to the direction of the nearest hull point, which maximizes
/// its distance to the hull.
pub fn separating_frame(point: Point, hull: &ConvexPolygon) -> Result<RigidMotion> {
    if hull.is_empty() {
        return Ok(RigidMotion::from_axis([1.0, 0.0], [point[0], point[1] - 1.0]));
    }
    if hull.contains(point) {
        return Err(Error::invalid(
            MODULE,
            format!("point ({}, {}) is not in reachable set", point[0], point[1]),
        ));
    }
    let c = hull.nearest_point(point);
    let e1 = sub(c, point);
    let frame = RigidMotion::from_axis(e1, point);
    Ok(frame.shifted_along_axis(-1.0))
}
