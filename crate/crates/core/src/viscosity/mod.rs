//! Discrete viscosity checks, perturbation gaps, envelope regularization
//! errors, touching experiments and the moving-sphere inequality.

mod discrete;
mod perturb;
mod regularize;
mod spheres;
mod touching;

pub use discrete::{default_grid_tol, discrete_jet, grid_verify, jet_classify, Geometry, GridReport, NodeRow};
pub use perturb::{
    first_variation_hat, first_variation_tilde, random_working_jet, scan_variation, variation, PerturbationParams,
    Variation, VariationScan, GAP_TOL,
};
pub use regularize::{envelope_error_check, RegularizationReport, A_MAX};
pub use spheres::{moving_sphere_check, SphereConfig, SphereReport, SphereRow};
pub use touching::{touching_experiment, TouchComponent, TouchReport, TouchVerdict};

#[allow(unused_imports)]
pub(crate) use discrete::{centred, line_jet};
