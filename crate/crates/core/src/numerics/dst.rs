//! Type-I discrete sine transform on complex data, via FFT.
//!
//! `X[k] = sum_{j=1..m} x[j] sin(pi j k / (m + 1))`, indices 1-based in the
//! formula and 0-based in storage. The transform is its own inverse up to the
//! factor `2 / (m + 1)`.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::C64;

pub struct Dst1 {
    m: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Dst1 {
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(2 * (m + 1));
        Dst1 { m, fft }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// In-place transform of `data` (length m) using `buf` (length 2m+2).
    pub fn apply(&self, data: &mut [C64], buf: &mut [C64]) {
        let m = self.m;
        debug_assert_eq!(data.len(), m);
        debug_assert_eq!(buf.len(), 2 * m + 2);
        buf[0] = C64::new(0.0, 0.0);
        buf[m + 1] = C64::new(0.0, 0.0);
        for j in 0..m {
            buf[j + 1] = data[j];
            buf[2 * m + 1 - j] = -data[j];
        }
        self.fft.process(buf);
        let half_i = C64::new(0.0, 0.5);
        for k in 0..m {
            data[k] = buf[k + 1] * half_i;
        }
    }

    /// Scale factor turning `apply` into its own inverse.
    pub fn inverse_scale(&self) -> f64 {
        2.0 / (self.m + 1) as f64
    }

    /// Eigenvalues of the 1D negative second difference on m interior nodes
    /// with spacing h, in the order produced by `apply`.
    pub fn laplacian_eigenvalues(m: usize, h: f64) -> Vec<f64> {
        (1..=m)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * (m + 1) as f64)).sin();
                4.0 * s * s / (h * h)
            })
            .collect()
    }
}

/// Applies the DST along the first two axes of an (n1, n2, n3) block stored
/// first-axis fastest. Scaling is left to the caller.
pub struct Dst2Planes {
    d1: Dst1,
    d2: Dst1,
    buf: Vec<C64>,
    line: Vec<C64>,
}

impl Dst2Planes {
    pub fn new(n1: usize, n2: usize) -> Self {
        let cap = 2 * n1.max(n2) + 2;
        Dst2Planes {
            d1: Dst1::new(n1),
            d2: Dst1::new(n2),
            buf: vec![C64::new(0.0, 0.0); cap],
            line: vec![C64::new(0.0, 0.0); n2],
        }
    }

    pub fn scale(&self) -> f64 {
        self.d1.inverse_scale() * self.d2.inverse_scale()
    }

    /// Transform every x1-x2 plane of `data` (len n1*n2*planes).
    pub fn apply(&mut self, data: &mut [C64]) {
        let n1 = self.d1.len();
        let n2 = self.d2.len();
        let plane = n1 * n2;
        let b1 = 2 * n1 + 2;
        let b2 = 2 * n2 + 2;
        for p in data.chunks_mut(plane) {
            for row in p.chunks_mut(n1) {
                self.d1.apply(row, &mut self.buf[..b1]);
            }
            for i in 0..n1 {
                for j in 0..n2 {
                    self.line[j] = p[j * n1 + i];
                }
                self.d2.apply(&mut self.line, &mut self.buf[..b2]);
                for j in 0..n2 {
                    p[j * n1 + i] = self.line[j];
                }
            }
        }
    }
}
