//! TOML problem files.
//!
//! ```toml
//! [domain]
//! x = [-1.0, 1.0]
//! y = [-1.0, 1.0]
//!
//! [problem]
//! K = 1
//! a0 = "2"
//! b0 = 1.0
//! a = ["1"]
//! f = "-1"
//!
//! [chaos]
//! P = 3
//!
//! [solver]
//! N = 5
//! tau = 1000.0
//! ```
//!
//! Optional keys: `problem.coercivity_floor`, `problem.coercivity_samples`,
//! `chaos.quadrature`, `chaos.basis_cap`, `solver.h`, `solver.method`
//! (`auto`, `dense`, `iterative`), `solver.rel_tol`, `solver.max_iter` and
//! the whole `[reference]` table. Unknown keys are rejected.

use std::path::Path;

use serde::Deserialize;

use crate::chaos::{basis_count, ChaosBasis, MultiIndexSet, TripleTensor, DEFAULT_BASIS_CAP};
use crate::error::{Error, Result};
use crate::linalg::IterControl;
use crate::model::expr::Expr;
use crate::model::galerkin::{galerkin_assemble, CoupledSystem};
use crate::model::problem::{Domain, SpdeProblem, DEFAULT_COERCIVITY_FLOOR, DEFAULT_COERCIVITY_SAMPLES};
use crate::sinc::{default_step, SincGrid};

/// Largest accepted Sinc half-count.
pub const MAX_HALF_COUNT: usize = 15;
pub const DEFAULT_TAU: f64 = 1e3;
pub const DEFAULT_SWEEP: [usize; 5] = [5, 7, 9, 11, 13];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    #[default]
    Auto,
    Dense,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    SemiAnalytic,
    Sampled,
    FdFine,
}

impl std::str::FromStr for ReferenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semi-analytic" => Ok(ReferenceKind::SemiAnalytic),
            "sampled" => Ok(ReferenceKind::Sampled),
            "fd-fine" => Ok(ReferenceKind::FdFine),
            _ => Err(Error::Config(format!(
                "unknown reference `{s}` (expected semi-analytic, sampled or fd-fine)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub domain: DomainSection,
    pub problem: ProblemSection,
    pub chaos: ChaosSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub reference: ReferenceSection,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(rename = "K")]
    pub k: usize,
    pub a0: String,
    pub b0: f64,
    pub a: Vec<String>,
    pub f: String,
    #[serde(default = "default_floor")]
    pub coercivity_floor: f64,
    #[serde(default = "default_samples")]
    pub coercivity_samples: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChaosSection {
    #[serde(rename = "P")]
    pub p: usize,
    pub quadrature: Option<usize>,
    #[serde(default = "default_cap")]
    pub basis_cap: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(rename = "N")]
    pub n: usize,
    pub h: Option<f64>,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub method: SolverMethod,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub kind: Option<ReferenceKind>,
    /// Points per axis of fine finite-difference solves.
    #[serde(default = "default_fd_n")]
    pub fd_n: usize,
    /// Gauss nodes per random variable for the sampled reference.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Chaos degree of the fine block finite-difference reference.
    #[serde(rename = "P")]
    pub p: Option<usize>,
    /// Points per axis for the comparison sweep (odd, >= 3).
    #[serde(default = "default_sweep")]
    pub sweep: Vec<usize>,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        ReferenceSection {
            kind: None,
            fd_n: default_fd_n(),
            nodes: default_nodes(),
            p: None,
            sweep: default_sweep(),
        }
    }
}

fn default_floor() -> f64 {
    DEFAULT_COERCIVITY_FLOOR
}
fn default_samples() -> usize {
    DEFAULT_COERCIVITY_SAMPLES
}
fn default_cap() -> usize {
    DEFAULT_BASIS_CAP
}
fn default_tau() -> f64 {
    DEFAULT_TAU
}
fn default_rel_tol() -> f64 {
    IterControl::default().rel_tol
}
fn default_max_iter() -> usize {
    IterControl::default().max_iter
}
fn default_fd_n() -> usize {
    201
}
fn default_nodes() -> usize {
    100
}
fn default_sweep() -> Vec<usize> {
    DEFAULT_SWEEP.to_vec()
}

fn parse_field(name: &str, src: &str) -> Result<Expr> {
    Expr::parse(src).map_err(|e| Error::Config(format!("{name}: {e}")))
}

fn positive_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be a positive finite number, got {v}")))
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    /// Parses and validates every field; no numerical work is done.
    pub fn parse(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        Domain::new(d.x[0], d.x[1], d.y[0], d.y[1]).map_err(|e| Error::Config(e.to_string()))?;
        let p = &self.problem;
        if p.k != p.a.len() {
            return Err(Error::Config(format!("problem.K = {} but {} fields in problem.a", p.k, p.a.len())));
        }
        if !p.b0.is_finite() {
            return Err(Error::Config("problem.b0 must be finite".into()));
        }
        positive_finite("problem.coercivity_floor", p.coercivity_floor)?;
        if p.coercivity_samples == 0 {
            return Err(Error::Config("problem.coercivity_samples must be positive".into()));
        }
        parse_field("problem.a0", &p.a0)?;
        parse_field("problem.f", &p.f)?;
        for (k, a) in p.a.iter().enumerate() {
            parse_field(&format!("problem.a[{k}]"), a)?;
        }
        let c = &self.chaos;
        if p.k == 0 && c.p > 0 {
            return Err(Error::Config("chaos.P > 0 needs at least one random variable".into()));
        }
        let count = basis_count(p.k.max(1), c.p).unwrap_or(usize::MAX);
        if count > c.basis_cap {
            return Err(Error::Config(format!("basis of {count} functions exceeds chaos.basis_cap = {}", c.basis_cap)));
        }
        if let Some(q) = c.quadrature {
            if q < c.p + 2 {
                return Err(Error::Config(format!("chaos.quadrature = {q} is below P + 2 = {}", c.p + 2)));
            }
        }
        let s = &self.solver;
        if s.n == 0 || s.n > MAX_HALF_COUNT {
            return Err(Error::Config(format!("solver.N must lie in 1..={MAX_HALF_COUNT}, got {}", s.n)));
        }
        if let Some(h) = s.h {
            positive_finite("solver.h", h)?;
        }
        positive_finite("solver.tau", s.tau)?;
        positive_finite("solver.rel_tol", s.rel_tol)?;
        if s.max_iter == 0 {
            return Err(Error::Config("solver.max_iter must be positive".into()));
        }
        let r = &self.reference;
        if r.fd_n < 3 {
            return Err(Error::Config(format!("reference.fd_n must be >= 3, got {}", r.fd_n)));
        }
        if r.nodes == 0 {
            return Err(Error::Config("reference.nodes must be positive".into()));
        }
        validate_sweep(&r.sweep)?;
        Ok(())
    }

    pub fn problem(&self) -> Result<SpdeProblem> {
        let d = &self.domain;
        let p = &self.problem;
        let domain = Domain::new(d.x[0], d.x[1], d.y[0], d.y[1])?;
        let a = p
            .a
            .iter()
            .enumerate()
            .map(|(k, s)| parse_field(&format!("problem.a[{k}]"), s))
            .collect::<Result<Vec<_>>>()?;
        let mut problem =
            SpdeProblem::new(domain, parse_field("problem.a0", &p.a0)?, p.b0, a, parse_field("problem.f", &p.f)?)?;
        problem.coercivity_floor = p.coercivity_floor;
        Ok(problem)
    }

    /// Chaos basis; a deterministic problem (`K = 0`) gets a single-function basis in one dummy variable.
    pub fn basis(&self) -> Result<ChaosBasis> {
        let set = MultiIndexSet::with_cap(self.problem.k.max(1), self.chaos.p, self.chaos.basis_cap)?;
        Ok(ChaosBasis::new(set))
    }

    pub fn tensor(&self, basis: &ChaosBasis) -> Result<TripleTensor> {
        match self.chaos.quadrature {
            Some(q) => TripleTensor::with_quadrature(basis, q),
            None => TripleTensor::new(basis),
        }
    }

    /// Projected system together with its basis.
    pub fn assemble(&self) -> Result<(SpdeProblem, ChaosBasis, CoupledSystem)> {
        let problem = self.problem()?;
        let basis = self.basis()?;
        let tensor = self.tensor(&basis)?;
        let sys = if problem.dimension() == 0 {
            let mut padded = problem.clone();
            padded.a = vec![Expr::Num(0.0)];
            let mut sys = galerkin_assemble(&padded, &basis, &tensor)?;
            sys.terms.truncate(1);
            sys
        } else {
            galerkin_assemble(&problem, &basis, &tensor)?
        };
        Ok((problem, basis, sys))
    }

    pub fn step(&self) -> f64 {
        self.solver.h.unwrap_or_else(|| default_step(self.solver.n))
    }

    pub fn grids(&self) -> Result<(SincGrid, SincGrid)> {
        self.grids_with(self.solver.n)
    }

    /// Grids at another half-count, using the configured `h` only if it was
    /// set explicitly.
    pub fn grids_with(&self, half_count: usize) -> Result<(SincGrid, SincGrid)> {
        let h = if half_count == self.solver.n { self.step() } else { self.solver.h.unwrap_or(default_step(half_count)) };
        let d = &self.domain;
        Ok((SincGrid::new(d.x[0], d.x[1], half_count, h)?, SincGrid::new(d.y[0], d.y[1], half_count, h)?))
    }

    pub fn iter_control(&self) -> IterControl {
        IterControl { rel_tol: self.solver.rel_tol, max_iter: self.solver.max_iter }
    }
}

pub fn validate_sweep(sweep: &[usize]) -> Result<()> {
    if sweep.is_empty() {
        return Err(Error::Config("sweep must not be empty".into()));
    }
    for &n in sweep {
        if n < 3 || n % 2 == 0 || n > 2 * MAX_HALF_COUNT + 1 {
            return Err(Error::Config(format!(
                "sweep size {n} must be odd and lie in 3..={}",
                2 * MAX_HALF_COUNT + 1
            )));
        }
    }
    Ok(())
}
