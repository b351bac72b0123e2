//! Five-point finite differences for `-div(a grad u) = f` with zero Dirichlet
//! data, in conservative form with arithmetic-mean half-point coefficients.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{pcg, IterControl, PoissonSolver};
use crate::model::{CoupledSystem, Domain, Field2};
use crate::reference::grid::UniformGrid;

/// Half-point coefficients of one field on the interior of an `n x n` grid.
#[derive(Clone, Debug)]
struct Stencil {
    m: usize,
    inv_hx2: f64,
    inv_hy2: f64,
    /// `east[(i, j)]` couples interior node `(i, j)` to `(i + 1, j)`, `i = 0..=m`.
    east: Vec<f64>,
    /// `north[(i, j)]` couples `(i, j)` to `(i, j + 1)`, `j = 0..=m`.
    north: Vec<f64>,
}

impl Stencil {
    fn new(field: &(dyn Field2 + Sync), domain: &Domain, n: usize) -> Stencil {
        let m = n - 2;
        let hx = (domain.x_hi - domain.x_lo) / (n - 1) as f64;
        let hy = (domain.y_hi - domain.y_lo) / (n - 1) as f64;
        let node = |i: usize, j: usize| field.at(domain.x_lo + i as f64 * hx, domain.y_lo + j as f64 * hy);
        // full-grid node indices; interior node (i, j) is full node (i + 1, j + 1)
        let east = (0..=m)
            .into_par_iter()
            .flat_map_iter(|i| (0..m).map(move |j| 0.5 * (node(i, j + 1) + node(i + 1, j + 1))).collect::<Vec<_>>())
            .collect();
        let north = (0..m)
            .into_par_iter()
            .flat_map_iter(|i| (0..=m).map(move |j| 0.5 * (node(i + 1, j) + node(i + 1, j + 1))).collect::<Vec<_>>())
            .collect();
        Stencil { m, inv_hx2: 1.0 / (hx * hx), inv_hy2: 1.0 / (hy * hy), east, north }
    }

    /// `out += scale * (-div(a grad u))` on the interior.
    fn apply_add(&self, u: &[f64], scale: f64, out: &mut [f64]) {
        let m = self.m;
        let at = |i: isize, j: isize| {
            if i < 0 || j < 0 || i >= m as isize || j >= m as isize {
                0.0
            } else {
                u[i as usize * m + j as usize]
            }
        };
        for i in 0..m {
            for j in 0..m {
                let c = u[i * m + j];
                let (ii, jj) = (i as isize, j as isize);
                let ae = self.east[(i + 1) * m + j];
                let aw = self.east[i * m + j];
                let an = self.north[i * (m + 1) + j + 1];
                let as_ = self.north[i * (m + 1) + j];
                let v = (ae * (c - at(ii + 1, jj)) + aw * (c - at(ii - 1, jj))) * self.inv_hx2
                    + (an * (c - at(ii, jj + 1)) + as_ * (c - at(ii, jj - 1))) * self.inv_hy2;
                out[i * m + j] += scale * v;
            }
        }
    }
}

/// Block operator `sum_t C_t (x) L_t` on interior unknowns, block-major.
struct BlockOperator {
    stencils: Vec<Stencil>,
    /// Nonzero couplings per term: `(j, i, c)`.
    couplings: Vec<Vec<(usize, usize, f64)>>,
    blocks: usize,
    len: usize,
}

impl BlockOperator {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let len = self.len;
        out.par_chunks_mut(len).enumerate().for_each(|(j, oj)| {
            oj.iter_mut().for_each(|v| *v = 0.0);
            let mut mixed = vec![0.0; len];
            for (stencil, coup) in self.stencils.iter().zip(&self.couplings) {
                let mut any = false;
                mixed.iter_mut().for_each(|v| *v = 0.0);
                for &(_, i, c) in coup.iter().filter(|e| e.0 == j) {
                    any = true;
                    for (mv, xv) in mixed.iter_mut().zip(&x[i * len..(i + 1) * len]) {
                        *mv += c * xv;
                    }
                }
                if any {
                    stencil.apply_add(&mixed, 1.0, oj);
                }
            }
        });
    }
}

/// Per-block Poisson solves scaled by the grid mean of the mean field.
fn solve_blocks(
    op: &BlockOperator,
    rhs: &[f64],
    domain: &Domain,
    n: usize,
    mean_coef: f64,
    ctl: IterControl,
) -> Result<Vec<f64>> {
    let m = n - 2;
    let hx = (domain.x_hi - domain.x_lo) / (n - 1) as f64;
    let hy = (domain.y_hi - domain.y_lo) / (n - 1) as f64;
    let poisson = PoissonSolver::new(m, m, hx, hy);
    let precond = |r: &[f64], z: &mut [f64]| {
        z.par_chunks_mut(op.len)
            .zip(r.par_chunks(op.len))
            .for_each(|(zc, rc)| poisson.solve_scaled(rc, mean_coef, zc));
    };
    let mut x = vec![0.0; op.blocks * op.len];
    pcg(|v, o| op.apply(v, o), precond, rhs, &mut x, ctl)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("finite-difference solution".into()));
    }
    Ok(x)
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::Domain(format!("finite differences need n >= 3, got {n}")));
    }
    Ok(())
}

fn grid_mean(field: &(dyn Field2 + Sync), domain: &Domain, n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = domain.x_lo + (domain.x_hi - domain.x_lo) * i as f64 / (n - 1) as f64;
            let y = domain.y_lo + (domain.y_hi - domain.y_lo) * j as f64 / (n - 1) as f64;
            s += field.at(x, y);
        }
    }
    s / (n * n) as f64
}

fn embed(domain: Domain, n: usize, interior: &[f64]) -> UniformGrid {
    let m = n - 2;
    let mut g = UniformGrid { domain, n, values: vec![0.0; n * n] };
    for i in 0..m {
        g.values[(i + 1) * n + 1..(i + 1) * n + 1 + m].copy_from_slice(&interior[i * m..(i + 1) * m]);
    }
    g
}

fn sample_interior(f: &(dyn Field2 + Sync), domain: &Domain, n: usize) -> Vec<f64> {
    let m = n - 2;
    let hx = (domain.x_hi - domain.x_lo) / (n - 1) as f64;
    let hy = (domain.y_hi - domain.y_lo) / (n - 1) as f64;
    (0..m * m)
        .map(|p| f.at(domain.x_lo + (p / m + 1) as f64 * hx, domain.y_lo + (p % m + 1) as f64 * hy))
        .collect()
}

/// Solves the Galerkin system with finite differences on an `n x n` grid;
/// one grid per basis function.
pub fn fd_solve_block(sys: &CoupledSystem, n: usize) -> Result<Vec<UniformGrid>> {
    fd_solve_block_with(sys, n, IterControl::default())
}

pub fn fd_solve_block_with(sys: &CoupledSystem, n: usize, ctl: IterControl) -> Result<Vec<UniformGrid>> {
    check_n(n)?;
    let domain = sys.domain;
    let blocks = sys.blocks();
    let stencils: Vec<Stencil> = sys.terms.iter().map(|t| Stencil::new(&t.field, &domain, n)).collect();
    let couplings = sys
        .terms
        .iter()
        .map(|t| nonzeros(&t.coupling))
        .collect();
    let len = (n - 2) * (n - 2);
    let op = BlockOperator { stencils, couplings, blocks, len };
    let f = sample_interior(&sys.forcing, &domain, n);
    let mut rhs = vec![0.0; blocks * len];
    for (j, w) in sys.rhs_weights.iter().enumerate() {
        for (r, v) in rhs[j * len..(j + 1) * len].iter_mut().zip(&f) {
            *r = w * v;
        }
    }
    let mean = grid_mean(&sys.terms[0].field, &domain, n);
    if !(mean > 0.0) {
        return Err(Error::Domain(format!("mean coefficient {mean} is not positive")));
    }
    let x = solve_blocks(&op, &rhs, &domain, n, mean, ctl)?;
    Ok(x.chunks(len).map(|c| embed(domain, n, c)).collect())
}

fn nonzeros(c: &DMatrix<f64>) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for j in 0..c.nrows() {
        for i in 0..c.ncols() {
            if c[(j, i)] != 0.0 {
                out.push((j, i, c[(j, i)]));
            }
        }
    }
    out
}

/// Single deterministic solve of `-div(a grad u) = f`, zero boundary values.
pub fn fd_solve(a: &(dyn Field2 + Sync), f: &(dyn Field2 + Sync), domain: Domain, n: usize) -> Result<UniformGrid> {
    check_n(n)?;
    let len = (n - 2) * (n - 2);
    let op = BlockOperator { stencils: vec![Stencil::new(a, &domain, n)], couplings: vec![vec![(0, 0, 1.0)]], blocks: 1, len };
    let rhs = sample_interior(f, &domain, n);
    let mean = grid_mean(a, &domain, n);
    if !(mean > 0.0) {
        return Err(Error::Domain(format!("mean coefficient {mean} is not positive")));
    }
    let x = solve_blocks(&op, &rhs, &domain, n, mean, IterControl::default())?;
    Ok(embed(domain, n, &x))
}

/// Richardson extrapolation `(4 u_{h/2} - u_h) / 3` on the `n`-point grid,
/// from solves at `n` and `2n - 1` points.
pub fn fd_solve_richardson(
    a: &(dyn Field2 + Sync),
    f: &(dyn Field2 + Sync),
    domain: Domain,
    n: usize,
) -> Result<UniformGrid> {
    let coarse = fd_solve(a, f, domain, n)?;
    let fine = fd_solve(a, f, domain, 2 * n - 1)?;
    let mut out = coarse.clone();
    for i in 0..n {
        for j in 0..n {
            out.values[i * n + j] = (4.0 * fine.get(2 * i, 2 * j) - coarse.get(i, j)) / 3.0;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::{ChaosBasis, TripleTensor};
    use crate::model::{galerkin_assemble, Expr, SpdeProblem};
    use std::f64::consts::PI;

    fn sine_error(n: usize) -> f64 {
        let d = Domain::square(0.0, 1.0).unwrap();
        let one = |_: f64, _: f64| 1.0;
        let f = |x: f64, y: f64| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin();
        let u = fd_solve(&one, &f, d, n).unwrap();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let e = u.get(i, j) - (PI * u.x(i)).sin() * (PI * u.y(j)).sin();
                s += e * e;
            }
        }
        (s / (n * n) as f64).sqrt()
    }

    #[test]
    fn second_order_convergence() {
        let e1 = sine_error(41);
        let e2 = sine_error(81);
        assert!(e1 < 2e-3, "{e1}");
        let ratio = e1 / e2;
        assert!((3.6..4.4).contains(&ratio), "{ratio}");
    }

    #[test]
    fn variable_coefficient_manufactured() {
        // u = sin(pi x) sin(pi y), a = 2 + x, f = -div(a grad u)
        let d = Domain::square(0.0, 1.0).unwrap();
        let a = |x: f64, _: f64| 2.0 + x;
        let f = |x: f64, y: f64| {
            (2.0 + x) * 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin() - PI * (PI * x).cos() * (PI * y).sin()
        };
        let err = |n: usize| {
            let u = fd_solve(&a, &f, d, n).unwrap();
            (0..n * n)
                .map(|p| (u.values[p] - (PI * u.x(p / n)).sin() * (PI * u.y(p % n)).sin()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(21), err(41));
        assert!(e1 < 5e-3);
        assert!((3.5..4.5).contains(&(e1 / e2)), "{}", e1 / e2);
    }

    #[test]
    fn single_block_matches_fd_solve() {
        let e = |s: &str| Expr::parse(s).unwrap();
        let p = SpdeProblem::new(Domain::square(0.0, 1.0).unwrap(), e("1 + x * y"), 0.5, vec![], e("1")).unwrap();
        let mut p1 = p.clone();
        p1.a = vec![e("0")];
        let basis = ChaosBasis::total_degree(1, 0).unwrap();
        let sys = galerkin_assemble(&p1, &basis, &TripleTensor::new(&basis).unwrap()).unwrap();
        let blocks = fd_solve_block(&sys, 17).unwrap();
        let a = |x: f64, y: f64| 1.0 + x * y;
        let one = |_: f64, _: f64| 1.0;
        let direct = fd_solve(&a, &one, p.domain, 17).unwrap();
        for (u, v) in blocks[0].values.iter().zip(&direct.values) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn richardson_improves() {
        let d = Domain::square(0.0, 1.0).unwrap();
        let one = |_: f64, _: f64| 1.0;
        let f = |x: f64, y: f64| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin();
        let u = fd_solve_richardson(&one, &f, d, 21).unwrap();
        let err = (0..21 * 21)
            .map(|p| (u.values[p] - (PI * u.x(p / 21)).sin() * (PI * u.y(p % 21)).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < 2e-5, "{err}");
    }
}
