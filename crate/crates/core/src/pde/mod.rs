//! The two-point problem `u'' = ∇H(u)` on a truncated interval and
//! monotonicity tests for its solutions.

pub mod fd;
mod field;
mod mesh;
mod monotone;
mod solver;

pub use field::FieldBundle;
pub use mesh::Mesh1D;
pub use monotone::{
    check_anti_h_monotone, check_h_monotone, check_monotone, classify_sense, component_monotonicity, directions,
    HMonotoneVerdict, Monotonicity, Sense,
};
pub use solver::{
    max_norm, solve_scalar_bvp, solve_system_bvp, system_residual, FnForce, InitialGuess, ScalarForce, SolveReport,
    MAX_HALVINGS, MAX_ITERATIONS,
};
