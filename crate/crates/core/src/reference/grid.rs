use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::Domain;

/// Nodal values on an equispaced `n x n` grid including the boundary,
/// row-major with the x index varying slowest.
#[derive(Clone, Debug)]
pub struct UniformGrid {
    pub domain: Domain,
    pub n: usize,
    pub values: Vec<f64>,
}

impl UniformGrid {
    pub fn zeros(domain: Domain, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!("uniform grid needs n >= 3, got {n}")));
        }
        Ok(UniformGrid { domain, n, values: vec![0.0; n * n] })
    }

    pub fn hx(&self) -> f64 {
        (self.domain.x_hi - self.domain.x_lo) / (self.n - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.domain.y_hi - self.domain.y_lo) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.domain.x_lo + i as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.domain.y_lo + j as f64 * self.hy()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Cell index and local coordinate in `[0, 1]` along one axis.
    fn locate(lo: f64, h: f64, n: usize, t: f64) -> (usize, f64) {
        let s = (t - lo) / h;
        let i = (s.floor().max(0.0) as usize).min(n - 2);
        (i, s - i as f64)
    }

    fn check(&self, x: f64, y: f64) -> Result<()> {
        let tol = 1e-12 * (1.0 + self.domain.area());
        let d = &self.domain;
        if x < d.x_lo - tol || x > d.x_hi + tol || y < d.y_lo - tol || y > d.y_hi + tol {
            return Err(Error::Domain(format!("point ({x}, {y}) outside the grid")));
        }
        Ok(())
    }

    pub fn bilinear(&self, x: f64, y: f64) -> Result<f64> {
        self.check(x, y)?;
        let (i, s) = Self::locate(self.domain.x_lo, self.hx(), self.n, x);
        let (j, t) = Self::locate(self.domain.y_lo, self.hy(), self.n, y);
        Ok((1.0 - s) * ((1.0 - t) * self.get(i, j) + t * self.get(i, j + 1))
            + s * ((1.0 - t) * self.get(i + 1, j) + t * self.get(i + 1, j + 1)))
    }

    /// Four-point Lagrange weights along one axis, stencil kept inside the grid.
    fn cubic_stencil(lo: f64, h: f64, n: usize, t: f64) -> (usize, [f64; 4]) {
        let s = (t - lo) / h;
        let start = ((s.floor() as isize) - 1).clamp(0, n as isize - 4) as usize;
        let mut w = [1.0; 4];
        for (a, wa) in w.iter_mut().enumerate() {
            for b in 0..4 {
                if a != b {
                    *wa *= (s - (start + b) as f64) / (a as f64 - b as f64);
                }
            }
        }
        (start, w)
    }

    /// Piecewise bicubic Lagrange interpolation (falls back to bilinear for `n < 4`).
    pub fn cubic(&self, x: f64, y: f64) -> Result<f64> {
        if self.n < 4 {
            return self.bilinear(x, y);
        }
        self.check(x, y)?;
        let (i0, wx) = Self::cubic_stencil(self.domain.x_lo, self.hx(), self.n, x);
        let (j0, wy) = Self::cubic_stencil(self.domain.y_lo, self.hy(), self.n, y);
        let mut v = 0.0;
        for (a, wa) in wx.iter().enumerate() {
            for (b, wb) in wy.iter().enumerate() {
                v += wa * wb * self.get(i0 + a, j0 + b);
            }
        }
        Ok(v)
    }

    pub fn bilinear_lattice(&self, xs: &[f64], ys: &[f64]) -> Result<DMatrix<f64>> {
        lattice_eval(xs, ys, |x, y| self.bilinear(x, y))
    }

    pub fn cubic_lattice(&self, xs: &[f64], ys: &[f64]) -> Result<DMatrix<f64>> {
        lattice_eval(xs, ys, |x, y| self.cubic(x, y))
    }
}

pub(crate) fn lattice_eval(xs: &[f64], ys: &[f64], f: impl Fn(f64, f64) -> Result<f64>) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(xs.len(), ys.len());
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            out[(i, j)] = f(x, y)?;
        }
    }
    Ok(out)
}
