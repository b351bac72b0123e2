//! Global rectangular collocation system.
//!
//! Unknowns are ordered by basis index, then by grid point with the x index
//! varying slowest: `u_i(x_p, y_q)` sits at `i * n^2 + p * n + q`. Rows hold
//! the `n^2` interior equations of every block followed by the `4n` boundary
//! equations of every block.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{CoupledSystem, Expr, Field2, Var};
use crate::sinc::SincGrid;

pub const DEFAULT_TAU: f64 = 1e3;

#[derive(Clone, Debug)]
pub struct GlobalSystem {
    gx: SincGrid,
    gy: SincGrid,
    /// Spatial operators `div(a_t grad .)` collocated on the grid.
    ops: Vec<DMatrix<f64>>,
    couplings: Vec<DMatrix<f64>>,
    /// Boundary interpolation rows without the `tau` factor.
    boundary: DMatrix<f64>,
    tau: f64,
    /// `n^2 x blocks`, column `j` is the interior rhs of block `j`.
    rhs_interior: DMatrix<f64>,
    /// `4n x blocks`, already multiplied by `tau`.
    rhs_boundary: DMatrix<f64>,
}

/// Kronecker product `a (x) b`.
fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    DMatrix::from_fn(ra * rb, ca * cb, |r, c| a[(r / rb, c / cb)] * b[(r % rb, c % cb)])
}

/// `M1 + M2`, `D_x`, `D_y` for the tensor grid.
pub(crate) struct GridOperators {
    pub laplacian: DMatrix<f64>,
    pub dx: DMatrix<f64>,
    pub dy: DMatrix<f64>,
}

impl GridOperators {
    pub(crate) fn new(gx: &SincGrid, gy: &SincGrid) -> Self {
        let mx = gx.diff_matrices();
        let my = gy.diff_matrices();
        let ix = DMatrix::identity(gx.len(), gx.len());
        let iy = DMatrix::identity(gy.len(), gy.len());
        GridOperators {
            laplacian: kron(&mx.d2, &iy) + kron(&ix, &my.d2),
            dx: kron(&mx.d1, &iy),
            dy: kron(&ix, &my.d1),
        }
    }
}

/// Collocation of `div(a grad .) = a (M1 + M2) + a_x D_x + a_y D_y`.
fn divergence_operator(field: &Expr, ops: &GridOperators, gx: &SincGrid, gy: &SincGrid) -> DMatrix<f64> {
    let n = gy.len();
    let pts = |p: usize| (gx.points()[p / n], gy.points()[p % n]);
    let mut s = ops.laplacian.clone();
    for (p, mut row) in s.row_iter_mut().enumerate() {
        let (x, y) = pts(p);
        row *= field.eval(x, y);
    }
    if !field.is_constant() {
        let fx = field.derivative(Var::X);
        let fy = field.derivative(Var::Y);
        for p in 0..s.nrows() {
            let (x, y) = pts(p);
            let (vx, vy) = (fx.eval(x, y), fy.eval(x, y));
            for c in 0..s.ncols() {
                s[(p, c)] += vx * ops.dx[(p, c)] + vy * ops.dy[(p, c)];
            }
        }
    }
    s
}

/// Edge points in boundary-row order: left, right, bottom, top.
pub fn boundary_points(gx: &SincGrid, gy: &SincGrid) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(2 * gx.len() + 2 * gy.len());
    out.extend(gy.points().iter().map(|&y| (gx.a(), y)));
    out.extend(gy.points().iter().map(|&y| (gx.b(), y)));
    out.extend(gx.points().iter().map(|&x| (x, gy.a())));
    out.extend(gx.points().iter().map(|&x| (x, gy.b())));
    out
}

fn boundary_matrix(gx: &SincGrid, gy: &SincGrid) -> Result<DMatrix<f64>> {
    let n = gx.len();
    let mut b = DMatrix::zeros(4 * n, n * n);
    let left = gx.basis(gx.a())?;
    let right = gx.basis(gx.b())?;
    let bottom = gy.basis(gy.a())?;
    let top = gy.basis(gy.b())?;
    for q in 0..n {
        for p in 0..n {
            b[(q, p * n + q)] = left[p];
            b[(n + q, p * n + q)] = right[p];
        }
    }
    for p in 0..n {
        for q in 0..n {
            b[(2 * n + p, p * n + q)] = bottom[q];
            b[(3 * n + p, p * n + q)] = top[q];
        }
    }
    Ok(b)
}

impl GlobalSystem {
    /// General assembly for `sum_t sum_i C_t[j][i] div(a_t grad u_i) = w_j s`
    /// with `u_i = g` on the boundary for every block (`g = 0` if absent).
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        fields: &[Expr],
        couplings: Vec<DMatrix<f64>>,
        source: &dyn Field2Sync,
        weights: &[f64],
        dirichlet: Option<&dyn Field2Sync>,
        gx: &SincGrid,
        gy: &SincGrid,
        tau: f64,
    ) -> Result<GlobalSystem> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Domain(format!("boundary weight tau = {tau} must be positive")));
        }
        if gx.len() != gy.len() {
            return Err(Error::DimensionMismatch(format!(
                "grids of {} and {} points; both axes must use the same N",
                gx.len(),
                gy.len()
            )));
        }
        let blocks = weights.len();
        if fields.len() != couplings.len() || fields.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} fields for {} coupling matrices",
                fields.len(),
                couplings.len()
            )));
        }
        if couplings.iter().any(|c| c.shape() != (blocks, blocks)) {
            return Err(Error::DimensionMismatch(format!("coupling matrices must be {blocks} x {blocks}")));
        }
        let n = gx.len();
        let grid_ops = GridOperators::new(gx, gy);
        let ops: Vec<DMatrix<f64>> =
            fields.par_iter().map(|f| divergence_operator(f, &grid_ops, gx, gy)).collect();
        if ops.iter().any(|s| s.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("collocated operator".into()));
        }
        let boundary = boundary_matrix(gx, gy)?;
        let src: Vec<f64> = (0..n * n).map(|p| source.at(gx.points()[p / n], gy.points()[p % n])).collect();
        let rhs_interior = DMatrix::from_fn(n * n, blocks, |p, j| weights[j] * src[p]);
        let edge: Vec<f64> = match dirichlet {
            Some(g) => boundary_points(gx, gy).iter().map(|&(x, y)| tau * g.at(x, y)).collect(),
            None => vec![0.0; 4 * n],
        };
        let rhs_boundary = DMatrix::from_fn(4 * n, blocks, |r, _| edge[r]);
        if rhs_interior.iter().chain(rhs_boundary.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("right-hand side".into()));
        }
        Ok(GlobalSystem { gx: gx.clone(), gy: gy.clone(), ops, couplings, boundary, tau, rhs_interior, rhs_boundary })
    }

    pub fn gx(&self) -> &SincGrid {
        &self.gx
    }

    pub fn gy(&self) -> &SincGrid {
        &self.gy
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn blocks(&self) -> usize {
        self.rhs_interior.ncols()
    }

    /// Grid points per block, `n^2`.
    pub fn grid_len(&self) -> usize {
        self.rhs_interior.nrows()
    }

    fn edge_len(&self) -> usize {
        self.boundary.nrows()
    }

    pub fn rows(&self) -> usize {
        self.blocks() * (self.grid_len() + self.edge_len())
    }

    pub fn cols(&self) -> usize {
        self.blocks() * self.grid_len()
    }

    pub(crate) fn operator(&self, t: usize) -> &DMatrix<f64> {
        &self.ops[t]
    }

    pub(crate) fn boundary_rows(&self) -> &DMatrix<f64> {
        &self.boundary
    }

    pub fn block_is_zero(&self, j: usize, i: usize) -> bool {
        self.couplings.iter().all(|c| c[(j, i)] == 0.0)
    }

    /// Interior block `(j, i)`: `sum_t C_t[j][i] S_t`.
    pub fn interior_block(&self, j: usize, i: usize) -> DMatrix<f64> {
        let m = self.grid_len();
        let mut out = DMatrix::zeros(m, m);
        for (c, s) in self.couplings.iter().zip(&self.ops) {
            let w = c[(j, i)];
            if w != 0.0 {
                out += s * w;
            }
        }
        out
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let (b, m, e) = (self.blocks(), self.grid_len(), self.edge_len());
        let mut a = DMatrix::zeros(self.rows(), self.cols());
        for j in 0..b {
            for i in 0..b {
                if !self.block_is_zero(j, i) {
                    a.view_mut((j * m, i * m), (m, m)).copy_from(&self.interior_block(j, i));
                }
            }
            a.view_mut((b * m + j * e, j * m), (e, m)).copy_from(&(&self.boundary * self.tau));
        }
        a
    }

    pub fn rhs(&self) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.rows());
        v.extend_from_slice(self.rhs_interior.as_slice());
        v.extend_from_slice(self.rhs_boundary.as_slice());
        DVector::from_vec(v)
    }

    /// `out = A x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let (b, m, e) = (self.blocks(), self.grid_len(), self.edge_len());
        let xm = nalgebra::DMatrixView::from_slice(x, m, b);
        let (interior, edge) = out.split_at_mut(m * b);
        let mut acc = DMatrix::zeros(m, b);
        for (c, s) in self.couplings.iter().zip(&self.ops) {
            let mixed = xm * c.transpose();
            acc += s * mixed;
        }
        interior.copy_from_slice(acc.as_slice());
        let bx = (&self.boundary * xm) * self.tau;
        debug_assert_eq!(bx.len(), e * b);
        edge.copy_from_slice(bx.as_slice());
    }

    /// `out = A^T r`.
    pub fn apply_t(&self, r: &[f64], out: &mut [f64]) {
        let (b, m, e) = (self.blocks(), self.grid_len(), self.edge_len());
        let ri = nalgebra::DMatrixView::from_slice(&r[..m * b], m, b);
        let rb = nalgebra::DMatrixView::from_slice(&r[m * b..], e, b);
        let mut acc = self.boundary.tr_mul(&rb) * self.tau;
        for (c, s) in self.couplings.iter().zip(&self.ops) {
            acc += s.tr_mul(&ri) * c;
        }
        out.copy_from_slice(acc.as_slice());
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.rows()];
        self.apply(x, &mut ax);
        let b = self.rhs();
        ax.iter().zip(b.iter()).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
    }

    /// Nonzero entries as `row,col,value` lines.
    pub fn write_triplets(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "row,col,value")?;
        let a = self.dense();
        for r in 0..a.nrows() {
            for c in 0..a.ncols() {
                let v = a[(r, c)];
                if v != 0.0 {
                    writeln!(w, "{r},{c},{v:.16e}")?;
                }
            }
        }
        Ok(())
    }

    pub fn write_rhs(&self, mut w: impl Write) -> std::io::Result<()> {
        for v in self.rhs().iter() {
            writeln!(w, "{v:.16e}")?;
        }
        Ok(())
    }
}

/// Thread-safe spatial field, as needed for parallel assembly.
pub trait Field2Sync: Field2 + Sync {}

impl<T: Field2 + Sync> Field2Sync for T {}

/// Collocates a Galerkin system with zero boundary data on every block.
pub fn build_global_system(sys: &CoupledSystem, gx: &SincGrid, gy: &SincGrid, tau: f64) -> Result<GlobalSystem> {
    let d = &sys.domain;
    if gx.a() != d.x_lo || gx.b() != d.x_hi || gy.a() != d.y_lo || gy.b() != d.y_hi {
        return Err(Error::DimensionMismatch(format!(
            "grids span ({}, {}) x ({}, {}) but the domain is ({}, {}) x ({}, {})",
            gx.a(),
            gx.b(),
            gy.a(),
            gy.b(),
            d.x_lo,
            d.x_hi,
            d.y_lo,
            d.y_hi
        )));
    }
    let fields: Vec<Expr> = sys.terms.iter().map(|t| t.field.clone()).collect();
    let couplings: Vec<DMatrix<f64>> = sys.terms.iter().map(|t| t.coupling.clone()).collect();
    let forcing = &sys.forcing;
    let source = |x: f64, y: f64| -forcing.eval(x, y);
    GlobalSystem::assemble(&fields, couplings, &source, &sys.rhs_weights, None, gx, gy, tau)
}
