//! Experiment drivers shared by the command-line tool and the acceptance suite.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::chaos::{pce_mean, pce_variance, ChaosBasis};
use crate::colloc::{solve_pce, PceSolution};
use crate::error::{Error, Result};
use crate::model::{Config, CoupledSystem, ReferenceKind};
use crate::reference::oracle::SEMI_ANALYTIC_N;
use crate::reference::{
    error_norms_values, fd_solve_block, sampled_reference_gauss, ErrorReport, Lattice, SampleSolver, SemiAnalytic,
    UniformGrid,
};

/// Mean and variance sampled on a lattice.
#[derive(Clone, Debug)]
pub struct MomentFields {
    pub mean: DMatrix<f64>,
    pub variance: DMatrix<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentErrors {
    pub mean: ErrorReportData,
    pub variance: ErrorReportData,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorReportData {
    pub l2: f64,
    pub sup: f64,
    pub lattice: usize,
}

impl From<ErrorReport> for ErrorReportData {
    fn from(r: ErrorReport) -> Self {
        ErrorReportData { l2: r.l2, sup: r.sup, lattice: r.lattice }
    }
}

impl MomentFields {
    pub fn errors(&self, reference: &MomentFields, lattice: &Lattice) -> Result<MomentErrors> {
        Ok(MomentErrors {
            mean: error_norms_values(&self.mean, &reference.mean, lattice)?.into(),
            variance: error_norms_values(&self.variance, &reference.variance, lattice)?.into(),
        })
    }
}

pub fn polysinc_moments(sol: &PceSolution, lattice: &Lattice) -> Result<MomentFields> {
    Ok(MomentFields {
        mean: sol.mean_lattice(&lattice.xs, &lattice.ys)?,
        variance: sol.variance_lattice(&lattice.xs, &lattice.ys)?,
    })
}

/// Block finite differences on `n x n` points, bilinearly interpolated.
pub fn fd_moments(sys: &CoupledSystem, n: usize, lattice: &Lattice) -> Result<MomentFields> {
    let blocks = fd_solve_block(sys, n)?;
    grid_moments(&blocks, lattice, false)
}

fn grid_moments(blocks: &[UniformGrid], lattice: &Lattice, cubic: bool) -> Result<MomentFields> {
    let fields: Vec<Vec<f64>> = blocks.iter().map(|b| b.values.clone()).collect();
    let n = blocks[0].n;
    let grid = |values: Vec<f64>| UniformGrid { domain: blocks[0].domain, n, values };
    let mean = grid(pce_mean(&fields)?);
    let var = grid(pce_variance(&fields)?);
    let eval = |g: &UniformGrid| {
        if cubic {
            g.cubic_lattice(&lattice.xs, &lattice.ys)
        } else {
            g.bilinear_lattice(&lattice.xs, &lattice.ys)
        }
    };
    // the variance is formed on the grid and then interpolated
    Ok(MomentFields { mean: eval(&mean)?, variance: eval(&var)? })
}

/// Configured reference moments on the lattice.
pub fn reference_moments(cfg: &Config, kind: ReferenceKind, lattice: &Lattice) -> Result<MomentFields> {
    let problem = cfg.problem()?;
    let r = &cfg.reference;
    match kind {
        ReferenceKind::SemiAnalytic => {
            let s = SemiAnalytic::new(&problem, SEMI_ANALYTIC_N)?;
            Ok(MomentFields { mean: s.mean_lattice(lattice)?, variance: s.variance_lattice(lattice)? })
        }
        ReferenceKind::Sampled => {
            let solver = SampleSolver::Fd { n: r.fd_n, richardson: true };
            let (mean, variance) = sampled_reference_gauss(&problem, r.nodes, &solver, lattice)?;
            Ok(MomentFields { mean, variance })
        }
        ReferenceKind::FdFine => {
            let mut fine = cfg.clone();
            fine.chaos.p = r.p.unwrap_or(cfg.chaos.p);
            fine.chaos.quadrature = None;
            let (_, _, sys) = fine.assemble()?;
            let blocks = fd_solve_block(&sys, r.fd_n)?;
            grid_moments(&blocks, lattice, true)
        }
    }
}

/// Poly-Sinc solve of the configured problem at half-count `n_half`.
pub fn solve_config(cfg: &Config, half_count: usize, tau: f64) -> Result<(ChaosBasis, PceSolution)> {
    let (_, basis, sys) = cfg.assemble()?;
    let (gx, gy) = cfg.grids_with(half_count)?;
    let sol = solve_pce(&sys, &basis, &gx, &gy, tau, cfg.solver.method, cfg.iter_control())?;
    Ok((basis, sol))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Competitor {
    Polysinc,
    Fd,
}

impl std::str::FromStr for Competitor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polysinc" => Ok(Competitor::Polysinc),
            "fd" => Ok(Competitor::Fd),
            _ => Err(Error::Config(format!("unknown competitor `{s}` (expected polysinc or fd)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub l2_mean_polysinc: f64,
    pub l2_mean_competitor: f64,
    pub l2_var_polysinc: f64,
    pub l2_var_competitor: f64,
}

/// Errors against `reference` for `n` points per axis, `n` odd.
pub fn sweep(
    cfg: &Config,
    reference: &MomentFields,
    competitor: Competitor,
    sizes: &[usize],
    tau: f64,
    lattice: &Lattice,
) -> Result<Vec<SweepRow>> {
    crate::model::config::validate_sweep(sizes)?;
    let (_, basis, sys) = cfg.assemble()?;
    sizes
        .iter()
        .map(|&n| {
            let half = (n - 1) / 2;
            let (gx, gy) = cfg.grids_with(half)?;
            let sol = solve_pce(&sys, &basis, &gx, &gy, tau, cfg.solver.method, cfg.iter_control())?;
            let ps = polysinc_moments(&sol, lattice)?.errors(reference, lattice)?;
            let other = match competitor {
                Competitor::Polysinc => ps,
                Competitor::Fd => fd_moments(&sys, n, lattice)?.errors(reference, lattice)?,
            };
            Ok(SweepRow {
                n,
                l2_mean_polysinc: ps.mean.l2,
                l2_mean_competitor: other.mean.l2,
                l2_var_polysinc: ps.variance.l2,
                l2_var_competitor: other.variance.l2,
            })
        })
        .collect()
}
