use nalgebra::{DMatrix, DMatrixView};
use rayon::prelude::*;

use crate::chaos::{pce_variance, ChaosBasis};
use crate::colloc::system::{GlobalSystem, Field2Sync};
use crate::error::{Error, Result};
use crate::linalg::{cgls, IterControl, PivotedQr};
use crate::model::{CoupledSystem, Expr, SolverMethod};
use crate::sinc::{SincGrid, TensorInterpolant};

/// Largest unknown count handled by the dense factorization under [`SolverMethod::Auto`].
pub const DENSE_LIMIT: usize = 2500;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveInfo {
    /// Path actually taken (never `Auto`).
    pub method: SolverMethod,
    pub iterations: usize,
    /// Relative normal-equation residual reached by the iterative path; 0 for dense.
    pub rel_residual: f64,
}

/// Least-squares minimizer of the global system together with solver diagnostics.
pub fn solve_system(g: &GlobalSystem, method: SolverMethod, ctl: IterControl) -> Result<(Vec<f64>, SolveInfo)> {
    let dense = match method {
        SolverMethod::Dense => true,
        SolverMethod::Iterative => false,
        SolverMethod::Auto => g.cols() <= DENSE_LIMIT,
    };
    if dense {
        let qr = PivotedQr::new(g.dense())?;
        let x = qr.solve(&g.rhs())?;
        let info = SolveInfo { method: SolverMethod::Dense, iterations: 0, rel_residual: 0.0 };
        Ok((x.as_slice().to_vec(), info))
    } else {
        solve_iterative(g, ctl)
    }
}

/// CGLS on `A M y = b` with `x = M y`, where `M = blockdiag(P R^{-1})` comes
/// from the pivoted QR of the mean-field block `[S_0; tau B]`.
fn solve_iterative(g: &GlobalSystem, ctl: IterControl) -> Result<(Vec<f64>, SolveInfo)> {
    let (b, m) = (g.blocks(), g.grid_len());
    let s0 = g.operator(0);
    let bnd = g.boundary_rows() * g.tau();
    let mut mean = DMatrix::zeros(m + bnd.nrows(), m);
    mean.view_mut((0, 0), (m, m)).copy_from(s0);
    mean.view_mut((m, 0), (bnd.nrows(), m)).copy_from(&bnd);
    let qr = PivotedQr::new(mean)?;
    let perm = qr.permutation().to_vec();

    let precond = |y: &[f64], x: &mut [f64]| {
        x.par_chunks_mut(m).zip(y.par_chunks(m)).for_each(|(xc, yc)| {
            let mut z = yc.to_vec();
            qr.solve_r(&mut z);
            for (j, &p) in perm.iter().enumerate() {
                xc[p] = z[j];
            }
        });
    };
    let precond_t = |v: &[f64], out: &mut [f64]| {
        out.par_chunks_mut(m).zip(v.par_chunks(m)).for_each(|(oc, vc)| {
            for (j, &p) in perm.iter().enumerate() {
                oc[j] = vc[p];
            }
            qr.solve_rt(oc);
        });
    };
    let cols = b * m;
    let apply = |y: &[f64], out: &mut [f64]| {
        let mut x = vec![0.0; cols];
        precond(y, &mut x);
        g.apply(&x, out);
    };
    let apply_t = |r: &[f64], out: &mut [f64]| {
        let mut w = vec![0.0; cols];
        g.apply_t(r, &mut w);
        precond_t(&w, out);
    };
    let rhs = g.rhs();
    let (y, stats) = cgls(apply, apply_t, rhs.as_slice(), cols, ctl)?;
    let mut x = vec![0.0; cols];
    precond(&y, &mut x);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("iterative solution".into()));
    }
    let info = SolveInfo { method: SolverMethod::Iterative, iterations: stats.iterations, rel_residual: stats.rel_residual };
    Ok((x, info))
}

/// Chaos coefficients `u_i` at the Sinc grid points.
#[derive(Clone, Debug)]
pub struct PceSolution {
    pub gx: SincGrid,
    pub gy: SincGrid,
    pub basis: ChaosBasis,
    /// One vector of `n^2` grid values per basis function, x index slowest.
    pub coeff_fields: Vec<Vec<f64>>,
    /// `||A x - b||` of the collocation system.
    pub residual_norm: f64,
    pub rhs_norm: f64,
    pub info: SolveInfo,
}

pub fn solve_least_squares(
    g: &GlobalSystem,
    basis: &ChaosBasis,
    method: SolverMethod,
    ctl: IterControl,
) -> Result<PceSolution> {
    if g.blocks() != basis.len() {
        return Err(Error::DimensionMismatch(format!(
            "system has {} blocks, basis has {} functions",
            g.blocks(),
            basis.len()
        )));
    }
    let (x, info) = solve_system(g, method, ctl)?;
    let residual_norm = g.residual_norm(&x);
    let rhs_norm = g.rhs().norm();
    let coeff_fields = x.chunks(g.grid_len()).map(|c| c.to_vec()).collect();
    Ok(PceSolution { gx: g.gx().clone(), gy: g.gy().clone(), basis: basis.clone(), coeff_fields, residual_norm, rhs_norm, info })
}

/// Builds and solves the collocated Galerkin system in one call.
pub fn solve_pce(
    sys: &CoupledSystem,
    basis: &ChaosBasis,
    gx: &SincGrid,
    gy: &SincGrid,
    tau: f64,
    method: SolverMethod,
    ctl: IterControl,
) -> Result<PceSolution> {
    let g = crate::colloc::build_global_system(sys, gx, gy, tau)?;
    solve_least_squares(&g, basis, method, ctl)
}

impl PceSolution {
    pub fn blocks(&self) -> usize {
        self.coeff_fields.len()
    }

    /// Grid values of the mean.
    pub fn mean(&self) -> &[f64] {
        &self.coeff_fields[0]
    }

    /// Grid values of the variance.
    pub fn variance(&self) -> Vec<f64> {
        pce_variance(&self.coeff_fields).expect("coefficient fields are nonempty and of equal length")
    }

    pub fn coeff_interpolant(&self, i: usize) -> TensorInterpolant {
        TensorInterpolant::new(vec![self.gx.clone(), self.gy.clone()], self.coeff_fields[i].clone())
            .expect("coefficient field matches the grid")
    }

    pub fn mean_interpolant(&self) -> TensorInterpolant {
        self.coeff_interpolant(0)
    }

    pub fn mean_at(&self, x: f64, y: f64) -> Result<f64> {
        self.mean_interpolant().eval(&[x, y])
    }

    /// `sum_{i >= 1} u_i(x, y)^2` with each `u_i` interpolated.
    pub fn variance_at(&self, x: f64, y: f64) -> Result<f64> {
        let bx = self.gx.basis(x)?;
        let by = self.gy.basis(y)?;
        let n = self.gy.len();
        let mut v = 0.0;
        for field in &self.coeff_fields[1..] {
            let u: f64 = bx
                .iter()
                .enumerate()
                .map(|(p, wx)| wx * by.iter().enumerate().map(|(q, wy)| wy * field[p * n + q]).sum::<f64>())
                .sum();
            v += u * u;
        }
        Ok(v)
    }

    /// Interpolated `u_i` on the lattice `xs x ys` (rows follow `xs`).
    pub fn coeff_lattice(&self, i: usize, xs: &[f64], ys: &[f64]) -> Result<DMatrix<f64>> {
        self.coeff_interpolant(i).eval_lattice(xs, ys)
    }

    pub fn mean_lattice(&self, xs: &[f64], ys: &[f64]) -> Result<DMatrix<f64>> {
        self.coeff_lattice(0, xs, ys)
    }

    pub fn variance_lattice(&self, xs: &[f64], ys: &[f64]) -> Result<DMatrix<f64>> {
        let bx = self.gx.basis_matrix(xs)?;
        let by = self.gy.basis_matrix(ys)?;
        let n = self.gy.len();
        let mut out = DMatrix::zeros(xs.len(), ys.len());
        for field in &self.coeff_fields[1..] {
            // field is row-major in (x, y); as a column-major n x n view it is U^T
            let ut = DMatrixView::from_slice(field, n, self.gx.len());
            let u = &bx * ut.transpose() * by.transpose();
            out += u.component_mul(&u);
        }
        Ok(out)
    }

    /// Realization `sum_i u_i Phi_i(theta)` as an interpolant.
    pub fn realize(&self, theta: &[f64]) -> Result<TensorInterpolant> {
        let values = crate::chaos::pce_realize(&self.coeff_fields, &self.basis, theta)?;
        TensorInterpolant::new(vec![self.gx.clone(), self.gy.clone()], values)
    }

    /// `max |u_i|` over the grid points, per basis function.
    pub fn coefficient_maxima(&self) -> Vec<f64> {
        self.coeff_fields.iter().map(|f| f.iter().fold(0.0f64, |m, v| m.max(v.abs()))).collect()
    }
}

/// Single-block collocation of `div(a grad u) = f` with `u = g` on the boundary.
pub fn deterministic_solve(
    a: &Expr,
    f: &dyn Field2Sync,
    dirichlet: &dyn Field2Sync,
    gx: &SincGrid,
    gy: &SincGrid,
    tau: f64,
) -> Result<TensorInterpolant> {
    let g = GlobalSystem::assemble(std::slice::from_ref(a), vec![DMatrix::identity(1, 1)], f, &[1.0], Some(dirichlet), gx, gy, tau)?;
    let (x, _) = solve_system(&g, SolverMethod::Dense, IterControl::default())?;
    TensorInterpolant::new(vec![gx.clone(), gy.clone()], x)
}
