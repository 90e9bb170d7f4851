//! Conic programming core: exponential cone geometry, program containers,
//! and the first-order homogeneous self-dual embedding solver.

mod cones;
mod program;
mod solver;

pub use cones::{
    dual_exp_cone_contains, dual_exp_cone_distance, exp_cone_contains, exp_cone_distance,
    project_dual_exp_cone, project_exp_cone,
};
pub use program::{ConeBlock, ConeKind, ConicProgram, ProgramBuilder, Sense};
pub use solver::{solve, PrimalDualSolution, SolveStatus, SolverSettings};
