//! Numerical toolkit for fully nonlinear degenerate elliptic equations of the
//! form `F[psi] = D^2 psi + L(x, psi, D psi)` taking values on the boundary of
//! an open matrix set `U`.
//!
//! Modules:
//! - [`matcone`]: symmetric matrices, eigenvalues, elementary symmetric
//!   polynomials and cone membership.
//! - [`operators`]: jets, the conformal Hessians, general operators, Kelvin
//!   transforms and structural-condition probes.
//! - [`radial`]: radial reductions, quartic root isolation and certified
//!   counterexamples.
//! - [`envelopes`]: sup/inf-convolution envelopes on grids.
//! - [`viscosity`]: discrete sub/supersolution checks, perturbation gaps,
//!   touching experiments and moving spheres.
//! - [`perron`]: a monotone Gauss–Seidel Perron solver.

// `!(x > 0.0)` rejects NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod envelopes;
pub mod error;
pub mod matcone;
pub mod operators;
pub mod perron;
pub mod radial;
pub mod rng;
pub mod text;
pub mod viscosity;

pub use envelopes::{EnvelopeResult, GridFn, Side};
pub use error::{Error, Result};
pub use matcone::{ConeClass, ConeKind, ConeSpec, Spectrum, SymMatrix, Verdict};
pub use operators::{FieldOracle, Jet2, OperatorSpec};
pub use perron::{DirichletProblem, SolverConfig};
pub use radial::{CtexCertificate, CtexKind, QuarticSpec, RadialProfile};
pub use viscosity::{Geometry, PerturbationParams, TouchReport, TouchVerdict};
