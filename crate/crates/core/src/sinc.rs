//! Lagrange interpolation at Sinc points.
//!
//! A Sinc grid on `(a, b)` is the image of the equispaced points `k h`,
//! `k = -N..=N`, under the conformal map `t -> (a + b e^t) / (1 + e^t)`. The
//! interpolant through samples at these `n = 2N + 1` points is an ordinary
//! polynomial of degree `n - 1`, so collocation matrices are exact on
//! polynomials of that degree.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default conformal step is `DEFAULT_STEP_FACTOR * PI / sqrt(N)`.
pub const DEFAULT_STEP_FACTOR: f64 = 0.4;

/// Additive constant of the logarithmic Lebesgue-constant estimate.
const LEBESGUE_OFFSET: f64 = 1.07618;

pub fn default_step(half_count: usize) -> f64 {
    DEFAULT_STEP_FACTOR * PI / (half_count as f64).sqrt()
}

/// One-dimensional Sinc points on `(a, b)`, stored for `k = -N..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct SincGrid {
    a: f64,
    b: f64,
    half_count: usize,
    step: f64,
    points: Vec<f64>,
    /// `1 / prod_{j != k} (x_k - x_j)`
    weights: Vec<f64>,
}

impl SincGrid {
    pub fn new(a: f64, b: f64, half_count: usize, step: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::Domain(format!("interval ({a}, {b}) must satisfy a < b")));
        }
        if half_count == 0 {
            return Err(Error::Domain("half count N must be at least 1".into()));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Domain(format!("step h = {step} must be positive")));
        }
        let n = half_count as i64;
        let points: Vec<f64> = (-n..=n)
            .map(|k| {
                let e = (k as f64 * step).exp();
                (a + b * e) / (1.0 + e)
            })
            .collect();
        if points.windows(2).any(|w| w[0] >= w[1]) || points[0] <= a || points[points.len() - 1] >= b {
            return Err(Error::Domain(format!(
                "step h = {step} with N = {half_count} collapses Sinc points onto the interval ends"
            )));
        }
        let weights = points
            .iter()
            .enumerate()
            .map(|(k, &xk)| {
                let prod: f64 = points
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, &xj)| xk - xj)
                    .product();
                1.0 / prod
            })
            .collect();
        Ok(SincGrid { a, b, half_count, step, points, weights })
    }

    /// Grid with the default step for the given half count.
    pub fn with_default_step(a: f64, b: f64, half_count: usize) -> Result<Self> {
        if half_count == 0 {
            return Err(Error::Domain("half count N must be at least 1".into()));
        }
        Self::new(a, b, half_count, default_step(half_count))
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn half_count(&self) -> usize {
        self.half_count
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of points, `2N + 1`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Point with signed index `k` in `-N..=N`.
    pub fn point(&self, k: i64) -> f64 {
        self.points[(k + self.half_count as i64) as usize]
    }

    fn check_inside(&self, x: f64) -> Result<()> {
        if x.is_nan() || x < self.a || x > self.b {
            return Err(Error::Domain(format!("x = {x} lies outside [{}, {}]", self.a, self.b)));
        }
        Ok(())
    }

    /// Values of all Lagrange basis polynomials at `x`.
    pub fn basis(&self, x: f64) -> Result<Vec<f64>> {
        self.check_inside(x)?;
        Ok(self.basis_unchecked(x))
    }

    pub(crate) fn basis_unchecked(&self, x: f64) -> Vec<f64> {
        let n = self.len();
        if let Some(j) = self.points.iter().position(|&p| p == x) {
            let mut delta = vec![0.0; n];
            delta[j] = 1.0;
            return delta;
        }
        let g: f64 = self.points.iter().map(|&p| x - p).product();
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| g * w / (x - p))
            .collect()
    }

    /// Rows of basis values, one row per evaluation point.
    pub fn basis_matrix(&self, xs: &[f64]) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(xs.len(), self.len());
        for (r, &x) in xs.iter().enumerate() {
            for (c, v) in self.basis(x)?.into_iter().enumerate() {
                out[(r, c)] = v;
            }
        }
        Ok(out)
    }

    /// Interpolates the samples `values` (one per grid point) at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a grid of {} points",
                values.len(),
                self.len()
            )));
        }
        Ok(self.basis(x)?.iter().zip(values).map(|(b, v)| b * v).sum())
    }

    /// First- and second-derivative collocation matrices.
    pub fn diff_matrices(&self) -> DiffMatrices {
        let n = self.len();
        let x = &self.points;
        let mut d1 = DMatrix::zeros(n, n);
        let mut d2 = DMatrix::zeros(n, n);
        for i in 0..n {
            // s1 = g''(x_i) / (2 g'(x_i)), s2 = sum of squared reciprocals
            let (mut s1, mut s2) = (0.0, 0.0);
            for l in (0..n).filter(|&l| l != i) {
                let r = 1.0 / (x[i] - x[l]);
                s1 += r;
                s2 += r * r;
            }
            d1[(i, i)] = s1;
            d2[(i, i)] = s1 * s1 - s2;
            // g'(x_i) / g'(x_j) = w_j / w_i
            for j in (0..n).filter(|&j| j != i) {
                let ratio = self.weights[j] / self.weights[i];
                let dx = x[i] - x[j];
                d1[(i, j)] = ratio / dx;
                d2[(i, j)] = -2.0 * ratio / (dx * dx) + 2.0 * s1 * ratio / dx;
            }
        }
        DiffMatrices { d0: DMatrix::identity(n, n), d1, d2 }
    }
}

/// Collocation matrices of a [`SincGrid`]: row `i` maps nodal samples to the
/// value (`d0`), first derivative (`d1`) or second derivative (`d2`) of the
/// interpolant at `x_i`.
#[derive(Clone, Debug)]
pub struct DiffMatrices {
    pub d0: DMatrix<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
}

/// `(1/pi) ln(n + 1) + 1.07618`, the logarithmic estimate of the Lebesgue
/// constant for `n` Sinc points.
pub fn lebesgue_estimate(n: usize) -> f64 {
    ((n + 1) as f64).ln() / PI + LEBESGUE_OFFSET
}

/// Maximum of the Lebesgue function `sum_k |b_k(x)|` over `resolution`
/// equispaced samples of `[a, b]`, endpoints included.
pub fn lebesgue_measured(grid: &SincGrid, resolution: usize) -> Result<f64> {
    if resolution < 10 * grid.len() {
        return Err(Error::Domain(format!(
            "resolution {resolution} is below 10 n = {}",
            10 * grid.len()
        )));
    }
    let span = grid.b - grid.a;
    let last = (resolution - 1) as f64;
    let mut max = 0.0f64;
    for s in 0..resolution {
        let x = if s + 1 == resolution { grid.b } else { grid.a + span * s as f64 / last };
        let sum: f64 = grid.basis_unchecked(x).iter().map(|v| v.abs()).sum();
        max = max.max(sum);
    }
    Ok(max)
}

/// Tensor-product Lagrange interpolant over one Sinc grid per dimension.
///
/// `values` is stored row-major: the first dimension varies slowest.
#[derive(Clone, Debug)]
pub struct TensorInterpolant {
    grids: Vec<SincGrid>,
    values: Vec<f64>,
}

impl TensorInterpolant {
    pub fn new(grids: Vec<SincGrid>, values: Vec<f64>) -> Result<Self> {
        if grids.is_empty() {
            return Err(Error::DimensionMismatch("interpolant needs at least one grid".into()));
        }
        let expected: usize = grids.iter().map(SincGrid::len).product();
        if values.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {expected} tensor grid points",
                values.len()
            )));
        }
        Ok(TensorInterpolant { grids, values })
    }

    /// Samples `f` at every tensor grid point.
    pub fn from_fn(grids: Vec<SincGrid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let dims: Vec<usize> = grids.iter().map(SincGrid::len).collect();
        let total: usize = dims.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; dims.len()];
        let mut pt = vec![0.0; dims.len()];
        for _ in 0..total {
            for (d, g) in grids.iter().enumerate() {
                pt[d] = g.points[idx[d]];
            }
            values.push(f(&pt));
            advance(&mut idx, &dims);
        }
        Self::new(grids, values)
    }

    pub fn grids(&self) -> &[SincGrid] {
        &self.grids
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dims(&self) -> usize {
        self.grids.len()
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.grids.len() {
            return Err(Error::DimensionMismatch(format!(
                "point of dimension {} for a {}-dimensional interpolant",
                point.len(),
                self.grids.len()
            )));
        }
        let bases = self
            .grids
            .iter()
            .zip(point)
            .map(|(g, &x)| g.basis(x))
            .collect::<Result<Vec<_>>>()?;
        let dims: Vec<usize> = self.grids.iter().map(SincGrid::len).collect();
        let mut idx = vec![0usize; dims.len()];
        let mut sum = 0.0;
        for &v in &self.values {
            let w: f64 = idx.iter().zip(&bases).map(|(&i, b)| b[i]).product();
            sum += w * v;
            advance(&mut idx, &dims);
        }
        Ok(sum)
    }

    /// Evaluates a two-dimensional interpolant on the lattice `xs` by `ys`;
    /// entry `(i, j)` is the value at `(xs[i], ys[j])`.
    pub fn eval_lattice(&self, xs: &[f64], ys: &[f64]) -> Result<DMatrix<f64>> {
        if self.grids.len() != 2 {
            return Err(Error::DimensionMismatch("lattice evaluation needs two dimensions".into()));
        }
        let bx = self.grids[0].basis_matrix(xs)?;
        let by = self.grids[1].basis_matrix(ys)?;
        let u = DMatrix::from_row_slice(self.grids[0].len(), self.grids[1].len(), &self.values);
        Ok(bx * u * by.transpose())
    }
}

fn advance(idx: &mut [usize], dims: &[usize]) {
    for d in (0..dims.len()).rev() {
        idx[d] += 1;
        if idx[d] < dims[d] {
            return;
        }
        idx[d] = 0;
    }
}
