//! Poly-Sinc collocation of the Galerkin system and its least-squares solution.

mod solve;
mod system;

pub use solve::{deterministic_solve, solve_least_squares, solve_pce, solve_system, PceSolution, SolveInfo, DENSE_LIMIT};
pub use system::{boundary_points, build_global_system, Field2Sync, GlobalSystem, DEFAULT_TAU};
