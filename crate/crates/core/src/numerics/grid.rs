//! Tensor-product grids and sampled fields.
//!
//! Nodes are placed at `min + i * spacing` for `i in 0..n`, so both ends of
//! every axis carry a node. Fields store values with the first axis fastest.

use super::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Self {
        assert!(n >= 2, "an axis needs at least two nodes");
        assert!(max > min, "axis bounds must be increasing");
        Axis { min, max, n }
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Cell index and local coordinate in [0, 1] for linear interpolation.
    /// Points within 1e-9 cells of either end snap onto it.
    #[inline]
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let h = self.spacing();
        let t = (x - self.min) / h;
        let last = (self.n - 1) as f64;
        if !(t >= -1e-9 && t <= last + 1e-9) {
            return None;
        }
        let t = t.clamp(0.0, last);
        let i = (t.floor() as usize).min(self.n - 2);
        Some((i, t - i as f64))
    }

    /// Trapezoidal quadrature weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n];
        w[0] *= 0.5;
        w[self.n - 1] *= 0.5;
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2 {
    pub x1: Axis,
    pub x2: Axis,
}

impl Grid2 {
    pub fn new(x1: Axis, x2: Axis) -> Self {
        Grid2 { x1, x2 }
    }

    /// Square grid on [-half, half]^2.
    pub fn centered(half: f64, n: usize) -> Self {
        Grid2::new(Axis::new(-half, half, n), Axis::new(-half, half, n))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.x1.n * self.x2.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.x1.n + i
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> (usize, usize) {
        (idx % self.x1.n, idx / self.x1.n)
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x1.coord(i), self.x2.coord(j)]
    }

    pub fn cell_area(&self) -> f64 {
        self.x1.spacing() * self.x2.spacing()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid3 {
    pub x1: Axis,
    pub x2: Axis,
    pub x3: Axis,
}

impl Grid3 {
    pub fn new(x1: Axis, x2: Axis, x3: Axis) -> Self {
        Grid3 { x1, x2, x3 }
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        [self.x1.n, self.x2.n, self.x3.n]
    }

    #[inline]
    pub fn spacing(&self) -> [f64; 3] {
        [self.x1.spacing(), self.x2.spacing(), self.x3.spacing()]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.x1.n * self.x2.n * self.x3.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.x2.n + j) * self.x1.n + i
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> (usize, usize, usize) {
        let n1 = self.x1.n;
        let n2 = self.x2.n;
        (idx % n1, (idx / n1) % n2, idx / (n1 * n2))
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [self.x1.coord(i), self.x2.coord(j), self.x3.coord(k)]
    }

    pub fn cross_section(&self) -> Grid2 {
        Grid2::new(self.x1, self.x2)
    }

    pub fn cell_volume(&self) -> f64 {
        self.x1.spacing() * self.x2.spacing() * self.x3.spacing()
    }

    /// Tensor trapezoidal weights over the whole box.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let w1 = self.x1.trapezoid_weights();
        let w2 = self.x2.trapezoid_weights();
        let w3 = self.x3.trapezoid_weights();
        let mut w = Vec::with_capacity(self.len());
        for c in &w3 {
            for b in &w2 {
                for a in &w1 {
                    w.push(a * b * c);
                }
            }
        }
        w
    }
}

/// Values sampled on a [`Grid2`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field2<T> {
    pub grid: Grid2,
    pub values: Vec<T>,
}

/// Values sampled on a [`Grid3`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field3<T> {
    pub grid: Grid3,
    pub values: Vec<T>,
}

pub type ComplexField2 = Field2<C64>;
pub type ComplexField3 = Field3<C64>;
pub type ScalarField2 = Field2<f64>;
pub type Mask2 = Field2<bool>;

impl<T: Clone> Field2<T> {
    pub fn filled(grid: Grid2, value: T) -> Self {
        Field2 {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid2, mut f: impl FnMut([f64; 2]) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.x2.n {
            for i in 0..grid.x1.n {
                values.push(f(grid.point(i, j)));
            }
        }
        Field2 { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &T {
        &self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        let idx = self.grid.index(i, j);
        &mut self.values[idx]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Field2<U> {
        Field2 {
            grid: self.grid,
            values: self.values.iter().map(f).collect(),
        }
    }
}

impl<T: Clone> Field3<T> {
    pub fn filled(grid: Grid3, value: T) -> Self {
        Field3 {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid3, mut f: impl FnMut([f64; 3]) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for k in 0..grid.x3.n {
            for j in 0..grid.x2.n {
                for i in 0..grid.x1.n {
                    values.push(f(grid.point(i, j, k)));
                }
            }
        }
        Field3 { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> &T {
        &self.values[self.grid.index(i, j, k)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize, k: usize) -> &mut T {
        let idx = self.grid.index(i, j, k);
        &mut self.values[idx]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Field3<U> {
        Field3 {
            grid: self.grid,
            values: self.values.iter().map(f).collect(),
        }
    }
}

impl ComplexField2 {
    pub fn zeros(grid: Grid2) -> Self {
        Field2::filled(grid, C64::new(0.0, 0.0))
    }

    /// Bilinear interpolation, zero outside the grid.
    #[inline]
    pub fn sample(&self, x: [f64; 2]) -> C64 {
        bilinear(&self.grid, &self.values, x)
    }

    /// Trapezoidal L2 norm.
    pub fn l2_norm(&self) -> f64 {
        let w1 = self.grid.x1.trapezoid_weights();
        let w2 = self.grid.x2.trapezoid_weights();
        let mut s = 0.0;
        for j in 0..self.grid.x2.n {
            for i in 0..self.grid.x1.n {
                s += w1[i] * w2[j] * self.at(i, j).norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

impl ScalarField2 {
    #[inline]
    pub fn sample(&self, x: [f64; 2]) -> f64 {
        let g = &self.grid;
        let Some((i, s)) = g.x1.locate(x[0]) else { return 0.0 };
        let Some((j, t)) = g.x2.locate(x[1]) else { return 0.0 };
        let v00 = self.values[g.index(i, j)];
        let v10 = self.values[g.index(i + 1, j)];
        let v01 = self.values[g.index(i, j + 1)];
        let v11 = self.values[g.index(i + 1, j + 1)];
        (1.0 - t) * ((1.0 - s) * v00 + s * v10) + t * ((1.0 - s) * v01 + s * v11)
    }
}

impl ComplexField3 {
    pub fn zeros(grid: Grid3) -> Self {
        Field3::filled(grid, C64::new(0.0, 0.0))
    }

    /// Trapezoidal L2 norm over the box.
    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.trapezoid_weights();
        self.values
            .iter()
            .zip(&w)
            .map(|(v, w)| w * v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Bilinear interpolation of nodal values, zero outside the grid.
#[inline]
pub fn bilinear(grid: &Grid2, values: &[C64], x: [f64; 2]) -> C64 {
    let Some((i, s)) = grid.x1.locate(x[0]) else {
        return C64::new(0.0, 0.0);
    };
    let Some((j, t)) = grid.x2.locate(x[1]) else {
        return C64::new(0.0, 0.0);
    };
    let v00 = values[grid.index(i, j)];
    let v10 = values[grid.index(i + 1, j)];
    let v01 = values[grid.index(i, j + 1)];
    let v11 = values[grid.index(i + 1, j + 1)];
    (v00 * (1.0 - s) + v10 * s) * (1.0 - t) + (v01 * (1.0 - s) + v11 * s) * t
}
