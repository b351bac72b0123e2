//! Independent oracles for the mean and variance fields.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::chaos::gauss_legendre;
use crate::colloc::deterministic_solve;
use crate::error::{Error, Result};
use crate::model::{Domain, Expr, SpdeProblem};
use crate::reference::fd::{fd_solve, fd_solve_richardson};
use crate::reference::grid::UniformGrid;
use crate::reference::metrics::Lattice;
use crate::sinc::SincGrid;

/// Points per axis of the coarse solve behind the default semi-analytic oracle
/// (the fine solve uses `2n - 1`).
pub const SEMI_ANALYTIC_N: usize = 401;

/// Closed-form moments for one random variable with constant coefficients:
/// `-(c0 + beta xi) Laplace(u) = F` gives `u = -F w / (c0 + beta xi)` with
/// `Laplace(w) = 1`, `w = 0` on the boundary.
#[derive(Clone, Debug)]
pub struct SemiAnalytic {
    /// Extrapolated finite-difference approximation of `w`.
    pub w: UniformGrid,
    /// `E[1 / (c0 + beta xi)]`.
    pub e1: f64,
    /// `E[1 / (c0 + beta xi)^2]`.
    pub e2: f64,
    pub forcing: f64,
}

/// `E[1/(c0 + beta xi)]` and `E[1/(c0 + beta xi)^2]` for `xi` uniform on `[-1, 1]`.
pub fn inverse_moments(c0: f64, beta: f64) -> (f64, f64) {
    let e2 = 1.0 / (c0 * c0 - beta * beta);
    if beta == 0.0 {
        return (1.0 / c0, e2);
    }
    let r = beta / c0;
    // ln((1 + r) / (1 - r)) / (2 beta), written with ln_1p for small r
    let e1 = (r.ln_1p() - (-r).ln_1p()) / (2.0 * beta);
    (e1, e2)
}

impl SemiAnalytic {
    pub fn new(problem: &SpdeProblem, n: usize) -> Result<Self> {
        let constant = |e: &Expr, name: &str| {
            e.constant_value()
                .ok_or_else(|| Error::Domain(format!("semi-analytic oracle needs a constant {name}")))
        };
        if problem.dimension() != 1 {
            return Err(Error::Domain(format!(
                "semi-analytic oracle needs one random variable, got {}",
                problem.dimension()
            )));
        }
        let c0 = constant(&problem.a0, "a0")?;
        let beta = problem.b0 * constant(&problem.a[0], "a_1")?;
        let forcing = constant(&problem.f, "f")?;
        if !(c0 > beta.abs()) {
            return Err(Error::NonCoercive { floor: c0 - beta.abs(), x: problem.domain.x_lo, y: problem.domain.y_lo });
        }
        // -Laplace(w) = -1
        let one = |_: f64, _: f64| 1.0;
        let minus_one = |_: f64, _: f64| -1.0;
        let w = fd_solve_richardson(&one, &minus_one, problem.domain, n)?;
        let (e1, e2) = inverse_moments(c0, beta);
        Ok(SemiAnalytic { w, e1, e2, forcing })
    }

    pub fn mean_at(&self, x: f64, y: f64) -> Result<f64> {
        Ok(-self.forcing * self.w.cubic(x, y)? * self.e1)
    }

    pub fn variance_at(&self, x: f64, y: f64) -> Result<f64> {
        let w = self.w.cubic(x, y)?;
        Ok(self.forcing * self.forcing * w * w * (self.e2 - self.e1 * self.e1))
    }

    pub fn mean_lattice(&self, lattice: &Lattice) -> Result<DMatrix<f64>> {
        Ok(self.w.cubic_lattice(&lattice.xs, &lattice.ys)? * (-self.forcing * self.e1))
    }

    pub fn variance_lattice(&self, lattice: &Lattice) -> Result<DMatrix<f64>> {
        let w = self.w.cubic_lattice(&lattice.xs, &lattice.ys)?;
        Ok(w.component_mul(&w) * (self.forcing * self.forcing * (self.e2 - self.e1 * self.e1)))
    }
}

/// The `a(xi) Laplace(u) = 1` problem on `(-1, 1)^2` with `a(xi) = xi + 2`, in
/// `-div(a grad u) = f` form.
pub fn example1_problem() -> SpdeProblem {
    SpdeProblem::new(Domain::square(-1.0, 1.0).expect("valid square"), Expr::Num(2.0), 1.0, vec![Expr::Num(1.0)], Expr::constant(-1.0))
        .expect("valid problem")
}

/// Semi-analytic moments of the first example at the default resolution.
pub fn semi_analytic_example1() -> Result<SemiAnalytic> {
    SemiAnalytic::new(&example1_problem(), SEMI_ANALYTIC_N)
}

/// Spatial solver used for each sampled realization.
#[derive(Clone, Debug)]
pub enum SampleSolver {
    /// Five-point finite differences on `n x n` points, optionally
    /// Richardson-extrapolated with a `2n - 1` solve; cubic lattice interpolation.
    Fd { n: usize, richardson: bool },
    /// Single-block Poly-Sinc collocation.
    Collocation { half_count: usize, step: f64, tau: f64 },
}

/// Tensor Gauss-Legendre nodes and probability weights on `[-1, 1]^K`.
pub fn tensor_gauss(dimension: usize, q: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let rule = gauss_legendre(q)?;
    let total = q
        .checked_pow(dimension as u32)
        .filter(|&t| t <= 1_000_000)
        .ok_or_else(|| Error::Domain(format!("{q}^{dimension} tensor nodes is too many")))?;
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut node = Vec::with_capacity(dimension);
        let mut w = 1.0;
        for _ in 0..dimension {
            node.push(rule.nodes[idx % q]);
            w *= rule.weights[idx % q];
            idx /= q;
        }
        nodes.push(node);
        weights.push(w);
    }
    Ok((nodes, weights))
}

fn pairwise_sum(items: &[DMatrix<f64>]) -> DMatrix<f64> {
    match items.len() {
        1 => items[0].clone(),
        len => {
            let (l, r) = items.split_at(len / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

fn solve_sample(problem: &SpdeProblem, theta: &[f64], solver: &SampleSolver, lattice: &Lattice) -> Result<DMatrix<f64>> {
    let a = |x: f64, y: f64| problem.coefficient(x, y, theta);
    let f = &problem.f;
    match solver {
        SampleSolver::Fd { n, richardson } => {
            let u = if *richardson {
                fd_solve_richardson(&a, f, problem.domain, *n)?
            } else {
                fd_solve(&a, f, problem.domain, *n)?
            };
            u.cubic_lattice(&lattice.xs, &lattice.ys)
        }
        SampleSolver::Collocation { half_count, step, tau } => {
            let d = &problem.domain;
            let gx = SincGrid::new(d.x_lo, d.x_hi, *half_count, *step)?;
            let gy = SincGrid::new(d.y_lo, d.y_hi, *half_count, *step)?;
            // div(a grad u) = -f; the realized field is rebuilt as an expression
            let mut field = problem.a0.clone();
            for (ak, t) in problem.a.iter().zip(theta) {
                let scaled = Expr::Mul(Box::new(Expr::constant(problem.b0 * t)), Box::new(ak.clone()));
                field = Expr::Add(Box::new(field), Box::new(scaled));
            }
            let source = |x: f64, y: f64| -f.eval(x, y);
            let zero = |_: f64, _: f64| 0.0;
            let u = deterministic_solve(&field, &source, &zero, &gx, &gy, *tau)?;
            u.eval_lattice(&lattice.xs, &lattice.ys)
        }
    }
}

/// Weighted mean and variance of per-node solutions on the lattice, using
/// `V = sum w u^2 - (sum w u)^2` with pairwise summation over nodes.
pub fn sampled_reference(
    problem: &SpdeProblem,
    nodes: &[Vec<f64>],
    weights: &[f64],
    solver: &SampleSolver,
    lattice: &Lattice,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if nodes.len() != weights.len() || nodes.is_empty() {
        return Err(Error::DimensionMismatch(format!("{} nodes with {} weights", nodes.len(), weights.len())));
    }
    if let Some(bad) = nodes.iter().find(|t| t.len() != problem.dimension() || t.iter().any(|v| v.abs() > 1.0)) {
        return Err(Error::Domain(format!("sample node {bad:?} is not in [-1, 1]^{}", problem.dimension())));
    }
    let samples: Vec<DMatrix<f64>> = nodes
        .par_iter()
        .map(|theta| {
            solve_sample(problem, theta, solver, lattice)
                .map_err(|e| Error::Sample { node: theta.clone(), source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let first: Vec<DMatrix<f64>> = samples.iter().zip(weights).map(|(u, w)| u * *w).collect();
    let second: Vec<DMatrix<f64>> = samples.iter().zip(weights).map(|(u, w)| u.component_mul(u) * *w).collect();
    let mean = pairwise_sum(&first);
    let var = pairwise_sum(&second) - mean.component_mul(&mean);
    Ok((mean, var))
}

/// Sampled reference with `q` Gauss-Legendre nodes per random variable.
pub fn sampled_reference_gauss(
    problem: &SpdeProblem,
    q: usize,
    solver: &SampleSolver,
    lattice: &Lattice,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (nodes, weights) = tensor_gauss(problem.dimension(), q)?;
    sampled_reference(problem, &nodes, &weights, solver, lattice)
}
