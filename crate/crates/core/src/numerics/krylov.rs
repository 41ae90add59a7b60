//! Krylov solvers: restarted right-preconditioned GMRES for complex systems
//! and conjugate gradients for real symmetric positive definite ones.

use super::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveInfo {
    pub iterations: usize,
    /// Final relative residual ||b - Ax|| / ||b||.
    pub residual: f64,
    pub converged: bool,
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugate-linear in the first argument.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn givens(a: C64, b: C64) -> (f64, C64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    let rho = na.hypot(nb);
    (na / rho, (a / na) * b.conj() / rho)
}

/// Solves `A x = b` with GMRES(restart), preconditioned on the right by `M^{-1}`.
///
/// `x` holds the initial guess on entry and the solution on exit.
pub fn gmres(
    mut apply: impl FnMut(&[C64], &mut [C64]),
    mut precond: impl FnMut(&[C64], &mut [C64]),
    b: &[C64],
    x: &mut [C64],
    restart: usize,
    tol: f64,
    max_iter: usize,
) -> SolveInfo {
    let n = b.len();
    let zero = C64::new(0.0, 0.0);
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.fill(zero);
        return SolveInfo {
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let restart = restart.max(1);
    let mut w = vec![zero; n];
    let mut z = vec![zero; n];
    let mut total = 0;
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(restart + 1);
    loop {
        apply(x, &mut w);
        let mut r: Vec<C64> = b.iter().zip(&w).map(|(b, w)| b - w).collect();
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= tol || total >= max_iter {
            return SolveInfo {
                iterations: total,
                residual: rel,
                converged: rel <= tol,
            };
        }
        r.iter_mut().for_each(|v| *v /= beta);
        basis.clear();
        basis.push(r);
        let mut h = vec![vec![zero; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![zero; restart];
        let mut g = vec![zero; restart + 1];
        g[0] = C64::new(beta, 0.0);
        let mut used = 0;
        for j in 0..restart {
            precond(&basis[j], &mut z);
            apply(&z, &mut w);
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(v, &w);
                h[i][j] = hij;
                w.iter_mut().zip(v).for_each(|(w, v)| *w -= hij * v);
            }
            let hnext = norm(&w);
            h[j + 1][j] = C64::new(hnext, 0.0);
            for i in 0..j {
                let t = h[i][j] * cs[i] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i].conj() * h[i][j] + h[i + 1][j] * cs[i];
                h[i][j] = t;
            }
            let (c, s) = givens(h[j][j], h[j + 1][j]);
            cs[j] = c;
            sn[j] = s;
            h[j][j] = h[j][j] * c + s * h[j + 1][j];
            h[j + 1][j] = zero;
            g[j + 1] = -s.conj() * g[j];
            g[j] *= c;
            total += 1;
            used = j + 1;
            let res = g[j + 1].norm() / bnorm;
            if res <= tol || total >= max_iter || hnext == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }
        // Back substitution on the triangular system.
        let mut y = vec![zero; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in (i + 1)..used {
                s -= h[i][k] * y[k];
            }
            y[i] = s / h[i][i];
        }
        let mut comb = vec![zero; n];
        for (yk, v) in y.iter().zip(&basis) {
            comb.iter_mut().zip(v).for_each(|(c, v)| *c += yk * v);
        }
        precond(&comb, &mut z);
        x.iter_mut().zip(&z).for_each(|(x, z)| *x += z);
    }
}

/// Conjugate gradients for a real symmetric positive definite operator.
pub fn cg(mut apply: impl FnMut(&[f64], &mut [f64]), b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> SolveInfo {
    let n = b.len();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        x.fill(0.0);
        return SolveInfo {
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let mut ap = vec![0.0; n];
    apply(x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let mut it = 0;
    while it < max_iter && rr.sqrt() / bnorm > tol {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        x.iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
        r.iter_mut().zip(&ap).for_each(|(r, a)| *r -= alpha * a);
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        p.iter_mut().zip(&r).for_each(|(p, r)| *p = r + beta * *p);
        it += 1;
    }
    let residual = rr.sqrt() / bnorm;
    SolveInfo {
        iterations: it,
        residual,
        converged: residual <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(x: &[C64], y: &mut [C64], shift: C64) {
        let n = x.len();
        for i in 0..n {
            let mut v = x[i] * (C64::new(2.0, 0.0) + shift);
            if i > 0 {
                v -= x[i - 1];
            }
            if i + 1 < n {
                v -= x[i + 1] * 1.3;
            }
            y[i] = v;
        }
    }

    #[test]
    fn gmres_solves_nonsymmetric_complex() {
        let n = 60;
        let shift = C64::new(0.3, 0.4);
        let xs: Vec<C64> = (0..n).map(|i| C64::new((i as f64).cos(), 0.1 * i as f64)).collect();
        let mut b = vec![C64::new(0.0, 0.0); n];
        tridiag(&xs, &mut b, shift);
        let mut x = vec![C64::new(0.0, 0.0); n];
        let info = gmres(
            |v, out| tridiag(v, out, shift),
            |v, out| out.copy_from_slice(v),
            &b,
            &mut x,
            20,
            1e-12,
            2000,
        );
        assert!(info.converged, "{info:?}");
        for (a, e) in x.iter().zip(&xs) {
            assert!((a - e).norm() < 1e-9);
        }
    }

    #[test]
    fn cg_solves_spd() {
        let n = 40;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = 3.0 * x[i] - if i > 0 { x[i - 1] } else { 0.0 } - if i + 1 < n { x[i + 1] } else { 0.0 };
            }
        };
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        apply(&xs, &mut b);
        let mut x = vec![0.0; n];
        let info = cg(apply, &b, &mut x, 1e-13, 500);
        assert!(info.converged);
        for (a, e) in x.iter().zip(&xs) {
            assert!((a - e).abs() < 1e-10);
        }
    }
}
