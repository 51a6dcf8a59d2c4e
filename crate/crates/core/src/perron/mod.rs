//! Monotone Perron iteration for discrete Dirichlet problems, with
//! uniqueness, comparison and gradient experiments.

mod experiments;
mod problem;
mod solver;
mod stencil;

pub use crate::viscosity::Geometry;
pub use experiments::{
    comparison_check, random_starts, translation_gradient_bound, uniqueness_experiment, GradientBandReport,
    UniquenessReport, UniquenessRun,
};
pub use problem::DirichletProblem;
pub use solver::{
    perron_solve, perron_solve_ascending, solve_from, Direction, PerronResult, SolverConfig, SweepOrder, SweepRecord,
};
pub use stencil::{affine_case, pointwise_root, root_near, Stencil};
