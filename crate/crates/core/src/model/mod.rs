//! Problem definition, coefficient expressions and Galerkin projection.

pub mod config;
pub mod expr;
pub mod galerkin;
pub mod problem;

pub use config::{Config, ReferenceKind, SolverMethod};
pub use expr::{CoefficientExpr, Expr, Field2, Var};
pub use galerkin::{galerkin_assemble, CoupledSystem, CouplingTerm};
pub use problem::{Domain, SpdeProblem};
