//! Fast solver for the 5-point Dirichlet Laplacian on a uniform rectangle,
//! diagonalized by the type-I discrete sine transform.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Solves `-(D_xx + D_yy) u = r` on `mx x my` interior nodes with zero
/// boundary values. Arrays are row-major with the x index varying slowest.
#[derive(Clone)]
pub struct PoissonSolver {
    mx: usize,
    my: usize,
    eig_x: Vec<f64>,
    eig_y: Vec<f64>,
    fft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PoissonSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonSolver").field("mx", &self.mx).field("my", &self.my).finish()
    }
}

fn eigenvalues(m: usize, h: f64) -> Vec<f64> {
    (1..=m)
        .map(|p| {
            let s = (p as f64 * PI / (2.0 * (m + 1) as f64)).sin();
            4.0 * s * s / (h * h)
        })
        .collect()
}

fn dst1(fft: &dyn Fft<f64>, v: &mut [f64], buf: &mut [Complex<f64>], scratch: &mut [Complex<f64>]) {
    let m = v.len();
    let len = 2 * (m + 1);
    buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
    for (j, &x) in v.iter().enumerate() {
        buf[j + 1].re = x;
        buf[len - j - 1].re = -x;
    }
    fft.process_with_scratch(buf, scratch);
    for (k, out) in v.iter_mut().enumerate() {
        *out = -0.5 * buf[k + 1].im;
    }
}

impl PoissonSolver {
    pub fn new(mx: usize, my: usize, hx: f64, hy: f64) -> Self {
        let mut planner = FftPlanner::new();
        PoissonSolver {
            mx,
            my,
            eig_x: eigenvalues(mx, hx),
            eig_y: eigenvalues(my, hy),
            fft_x: planner.plan_fft_forward(2 * (mx + 1)),
            fft_y: planner.plan_fft_forward(2 * (my + 1)),
        }
    }

    pub fn len(&self) -> usize {
        self.mx * self.my
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn transform(&self, data: &mut [f64]) {
        let (mx, my) = (self.mx, self.my);
        let mut buf = vec![Complex::new(0.0, 0.0); 2 * (my + 1)];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft_y.get_inplace_scratch_len()];
        for row in data.chunks_mut(my) {
            dst1(&*self.fft_y, row, &mut buf, &mut scratch);
        }
        let mut buf = vec![Complex::new(0.0, 0.0); 2 * (mx + 1)];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft_x.get_inplace_scratch_len()];
        let mut column = vec![0.0; mx];
        for j in 0..my {
            for i in 0..mx {
                column[i] = data[i * my + j];
            }
            dst1(&*self.fft_x, &mut column, &mut buf, &mut scratch);
            for i in 0..mx {
                data[i * my + j] = column[i];
            }
        }
    }

    /// Writes the solution of `-coef * Laplace_h u = rhs` into `out`.
    pub fn solve_scaled(&self, rhs: &[f64], coef: f64, out: &mut [f64]) {
        out.copy_from_slice(rhs);
        self.transform(out);
        let scale = 4.0 / (((self.mx + 1) * (self.my + 1)) as f64 * coef);
        for i in 0..self.mx {
            for j in 0..self.my {
                out[i * self.my + j] *= scale / (self.eig_x[i] + self.eig_y[j]);
            }
        }
        self.transform(out);
    }

    pub fn solve(&self, rhs: &[f64], out: &mut [f64]) {
        self.solve_scaled(rhs, 1.0, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn neg_laplacian(u: &[f64], mx: usize, my: usize, hx: f64, hy: f64) -> Vec<f64> {
        let at = |i: isize, j: isize| {
            if i < 0 || j < 0 || i >= mx as isize || j >= my as isize {
                0.0
            } else {
                u[i as usize * my + j as usize]
            }
        };
        let mut out = vec![0.0; mx * my];
        for i in 0..mx as isize {
            for j in 0..my as isize {
                let c = at(i, j);
                out[i as usize * my + j as usize] = (2.0 * c - at(i - 1, j) - at(i + 1, j)) / (hx * hx)
                    + (2.0 * c - at(i, j - 1) - at(i, j + 1)) / (hy * hy);
            }
        }
        out
    }

    #[test]
    fn inverts_discrete_laplacian() {
        let (mx, my, hx, hy) = (7, 11, 0.1, 0.07);
        let s = PoissonSolver::new(mx, my, hx, hy);
        let rhs: Vec<f64> = (0..mx * my).map(|k| ((k * 37 % 13) as f64) - 6.0).collect();
        let mut u = vec![0.0; mx * my];
        s.solve(&rhs, &mut u);
        let back = neg_laplacian(&u, mx, my, hx, hy);
        for (a, b) in back.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        let mut u2 = vec![0.0; mx * my];
        s.solve_scaled(&rhs, 2.0, &mut u2);
        for (a, b) in u.iter().zip(&u2) {
            assert!((a - 2.0 * b).abs() < 1e-13);
        }
    }
}
