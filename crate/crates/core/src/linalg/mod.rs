//! Dense and iterative linear solvers used by the collocation and
//! finite-difference paths.

pub mod krylov;
pub mod poisson;
pub mod qr;

pub use krylov::{cgls, pcg, IterControl, IterStats};
pub use poisson::PoissonSolver;
pub use qr::{least_squares, PivotedQr};
