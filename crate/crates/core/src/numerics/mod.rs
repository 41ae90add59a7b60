//! Shared numerical building blocks.

pub mod dst;
pub mod grid;
pub mod krylov;
pub mod parallel;
pub mod quad;

pub use num_complex::Complex64 as C64;

pub use parallel::{par_map, try_par_map};
pub use quad::{adaptive_simpson, gauss_legendre, CompositeGauss};

pub use grid::{Axis, ComplexField2, ComplexField3, Field2, Field3, Grid2, Grid3, Mask2, ScalarField2};

/// C-infinity bump `exp(1 - 1/(1 - s^2))` on (-1, 1), zero outside, peak 1 at 0.
#[inline]
pub fn bump(s: f64) -> f64 {
    let s2 = s * s;
    if s2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s2)).exp()
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Least-squares slope of log(ys) against log(xs).
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    fit_slope(&lx, &ly)
}
