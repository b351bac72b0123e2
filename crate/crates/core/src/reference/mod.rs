//! Reference solutions and error metrics.

pub mod fd;
pub mod grid;
pub mod metrics;
pub mod oracle;

pub use fd::{fd_solve, fd_solve_block, fd_solve_block_with, fd_solve_richardson};
pub use grid::UniformGrid;
pub use metrics::{decay_fit, error_norms, error_norms_values, linear_fit, r_squared, write_grid_csv, ErrorReport, Lattice, DEFAULT_LATTICE};
pub use oracle::{
    example1_problem, inverse_moments, sampled_reference, sampled_reference_gauss, semi_analytic_example1, tensor_gauss,
    SampleSolver, SemiAnalytic,
};
