//! Conjugate-gradient iterations on plain slices.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct IterControl {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for IterControl {
    fn default() -> Self {
        IterControl { rel_tol: 1e-12, max_iter: 5000 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IterStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Preconditioned CG for a symmetric positive definite operator.
///
/// `apply(x, out)` computes `out = A x`, `precond(r, out)` computes `out = M^{-1} r`.
pub fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    precond: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    ctl: IterControl,
) -> Result<IterStats> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(IterStats { iterations: 0, rel_residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / bnorm;
    for it in 0..ctl.max_iter {
        if res <= ctl.rel_tol {
            return Ok(IterStats { iterations: it, rel_residual: res });
        }
        apply(&p, &mut q);
        let alpha = rz / dot(&p, &q);
        axpy(alpha, &p, x);
        axpy(-alpha, &q, &mut r);
        res = dot(&r, &r).sqrt() / bnorm;
        if !res.is_finite() {
            return Err(Error::NonFinite("conjugate-gradient residual".into()));
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    if res <= ctl.rel_tol {
        return Ok(IterStats { iterations: ctl.max_iter, rel_residual: res });
    }
    Err(Error::NoConvergence { iterations: ctl.max_iter, residual: res })
}

/// CG on the normal equations of `min ||A y - b||` (CGLS form, `A^T A` never
/// formed). Stops when `||A^T r|| <= rel_tol * ||A^T b||`.
pub fn cgls(
    apply: impl Fn(&[f64], &mut [f64]),
    apply_t: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    cols: usize,
    ctl: IterControl,
) -> Result<(Vec<f64>, IterStats)> {
    let rows = b.len();
    let mut y = vec![0.0; cols];
    let mut r = b.to_vec();
    let mut s = vec![0.0; cols];
    apply_t(&r, &mut s);
    let s0 = dot(&s, &s).sqrt();
    if s0 == 0.0 {
        return Ok((y, IterStats { iterations: 0, rel_residual: 0.0 }));
    }
    let mut p = s.clone();
    let mut q = vec![0.0; rows];
    let mut gamma = s0 * s0;
    for it in 0..ctl.max_iter {
        apply(&p, &mut q);
        let qq = dot(&q, &q);
        if qq == 0.0 {
            return Err(Error::RankDeficient { rank: it, cols });
        }
        let alpha = gamma / qq;
        axpy(alpha, &p, &mut y);
        axpy(-alpha, &q, &mut r);
        apply_t(&r, &mut s);
        let gamma_new = dot(&s, &s);
        let rel = gamma_new.sqrt() / s0;
        if !rel.is_finite() {
            return Err(Error::NonFinite("CGLS residual".into()));
        }
        if rel <= ctl.rel_tol {
            return Ok((y, IterStats { iterations: it + 1, rel_residual: rel }));
        }
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = si + beta * *pi;
        }
    }
    Err(Error::NoConvergence { iterations: ctl.max_iter, residual: gamma.sqrt() / s0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pcg_tridiagonal() {
        let n = 50;
        let apply = |x: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let mut v = 2.5 * x[i];
                if i > 0 {
                    v -= x[i - 1];
                }
                if i + 1 < n {
                    v -= x[i + 1];
                }
                out[i] = v;
            }
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut x = vec![0.0; n];
        let stats = pcg(apply, |r, z| z.copy_from_slice(r), &b, &mut x, IterControl::default()).unwrap();
        assert!(stats.iterations <= n);
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        let err: f64 = ax.iter().zip(&b).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn cgls_overdetermined() {
        // rows: x0, x1, x0 + x1
        let apply = |x: &[f64], out: &mut [f64]| {
            out[0] = x[0];
            out[1] = x[1];
            out[2] = x[0] + x[1];
        };
        let apply_t = |r: &[f64], out: &mut [f64]| {
            out[0] = r[0] + r[2];
            out[1] = r[1] + r[2];
        };
        let (y, _) = cgls(apply, apply_t, &[1.0, 2.0, 3.5], 2, IterControl::default()).unwrap();
        // normal equations [[2,1],[1,2]] y = [4.5, 5.5]
        assert!((y[0] - 7.0 / 6.0).abs() < 1e-12);
        assert!((y[1] - 13.0 / 6.0).abs() < 1e-12);
    }
}
