//! Householder QR with column pivoting for dense least-squares problems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `A P = Q R` with `Q` held as Householder reflectors below the diagonal.
#[derive(Clone, Debug)]
pub struct PivotedQr {
    qr: DMatrix<f64>,
    betas: Vec<f64>,
    diag: Vec<f64>,
    perm: Vec<usize>,
}

impl PivotedQr {
    /// Factorizes `a` (rows >= cols). Fails with [`Error::RankDeficient`] when
    /// a pivot drops below `max(rows, cols) * eps * |R_00|`.
    pub fn new(mut a: DMatrix<f64>) -> Result<Self> {
        let (m, n) = a.shape();
        if m < n {
            return Err(Error::DimensionMismatch(format!("least squares needs rows >= cols, got {m} x {n}")));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("least-squares matrix".into()));
        }
        let data = a.as_mut_slice();
        let col = |j: usize| j * m..(j + 1) * m;
        let mut norms: Vec<f64> = (0..n).map(|j| data[col(j)].iter().map(|v| v * v).sum()).collect();
        let mut exact = norms.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut betas = vec![0.0; n];
        let mut diag = vec![0.0f64; n];
        let tol = (m.max(n) as f64) * f64::EPSILON;

        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| norms[x].partial_cmp(&norms[y]).unwrap())
                .unwrap();
            if p != k {
                for i in 0..m {
                    data.swap(k * m + i, p * m + i);
                }
                norms.swap(k, p);
                exact.swap(k, p);
                perm.swap(k, p);
            }

            let x = &mut data[k * m + k..(k + 1) * m];
            let sigma: f64 = x[1..].iter().map(|v| v * v).sum();
            let alpha = (x[0] * x[0] + sigma).sqrt();
            if k == 0 && alpha == 0.0 {
                return Err(Error::RankDeficient { rank: 0, cols: n });
            }
            let r_kk = if x[0] > 0.0 { -alpha } else { alpha };
            if k > 0 && alpha <= tol * diag[0].abs() {
                return Err(Error::RankDeficient { rank: k, cols: n });
            }
            // v = x - r_kk e_1, scaled so v_0 = 1
            let v0 = x[0] - r_kk;
            let beta = if v0 == 0.0 { 0.0 } else { -v0 / r_kk };
            for v in x[1..].iter_mut() {
                *v /= v0;
            }
            x[0] = r_kk;
            betas[k] = beta;
            diag[k] = r_kk;

            let (head, tail) = data.split_at_mut((k + 1) * m);
            let v = &head[k * m + k + 1..(k + 1) * m];
            for j in 0..n - k - 1 {
                let c = &mut tail[j * m + k..(j + 1) * m];
                let dot = c[0] + v.iter().zip(&c[1..]).map(|(a, b)| a * b).sum::<f64>();
                let s = beta * dot;
                c[0] -= s;
                for (ci, vi) in c[1..].iter_mut().zip(v) {
                    *ci -= s * vi;
                }
                let jj = k + 1 + j;
                norms[jj] -= c[0] * c[0];
                // recompute when downdating has lost most significant digits
                if norms[jj] <= 1e-10 * exact[jj] {
                    norms[jj] = c[1..].iter().map(|v| v * v).sum();
                    exact[jj] = norms[jj];
                }
            }
        }
        Ok(PivotedQr { qr: a, betas, diag, perm })
    }

    pub fn rows(&self) -> usize {
        self.qr.nrows()
    }

    pub fn cols(&self) -> usize {
        self.qr.ncols()
    }

    /// Column permutation: factor column `j` is original column `perm[j]`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Diagonal of `R`.
    pub fn r_diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Overwrites `b` with `Q^T b`.
    pub fn apply_qt(&self, b: &mut [f64]) {
        let m = self.rows();
        let data = self.qr.as_slice();
        for (k, &beta) in self.betas.iter().enumerate() {
            let v = &data[k * m + k + 1..(k + 1) * m];
            let tail = &mut b[k..];
            let dot = tail[0] + v.iter().zip(&tail[1..]).map(|(a, c)| a * c).sum::<f64>();
            let s = beta * dot;
            tail[0] -= s;
            for (t, vi) in tail[1..].iter_mut().zip(v) {
                *t -= s * vi;
            }
        }
    }

    /// Solves `R z = y` in place (upper triangular, factor ordering).
    pub fn solve_r(&self, y: &mut [f64]) {
        let m = self.rows();
        let n = self.cols();
        let data = self.qr.as_slice();
        for k in (0..n).rev() {
            let s = y[k] / self.diag[k];
            y[k] = s;
            let colk = &data[k * m..k * m + k];
            for (yi, r) in y[..k].iter_mut().zip(colk) {
                *yi -= s * r;
            }
        }
    }

    /// Solves `R^T z = y` in place.
    pub fn solve_rt(&self, y: &mut [f64]) {
        let m = self.rows();
        let n = self.cols();
        let data = self.qr.as_slice();
        for k in 0..n {
            let colk = &data[k * m..k * m + k];
            let dot: f64 = colk.iter().zip(&y[..k]).map(|(r, v)| r * v).sum();
            y[k] = (y[k] - dot) / self.diag[k];
        }
    }

    /// Least-squares minimizer of `||A x - b||`.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        if b.len() != self.rows() {
            return Err(Error::DimensionMismatch(format!(
                "rhs of length {} for {} rows",
                b.len(),
                self.rows()
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("least-squares rhs".into()));
        }
        let mut y = b.as_slice().to_vec();
        self.apply_qt(&mut y);
        y.truncate(self.cols());
        self.solve_r(&mut y);
        let mut x = DVector::zeros(self.cols());
        for (j, &p) in self.perm.iter().enumerate() {
            x[p] = y[j];
        }
        Ok(x)
    }
}

/// Dense least-squares solve via [`PivotedQr`].
pub fn least_squares(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    PivotedQr::new(a)?.solve(b)
}
