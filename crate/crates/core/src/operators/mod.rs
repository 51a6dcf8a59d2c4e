//! Jets, conformal Hessians, operators `F = ∇² + L`, analytic fields,
//! Kelvin transforms and probes of the structural conditions on `L`.

mod conformal;
mod fields;
mod jet;
mod probe;
mod spec;

pub use conformal::{consistency_check, kelvin, moving_sphere_radius, ConsistencyReport};
pub use fields::{fd_jet, FieldOracle, ScalarField};
pub use jet::{conformal_a_psi, conformal_a_w, conformal_hessian_u, Jet2};
pub use probe::{
    probe_l_conditions, probe_l_conditions_with, Condition, ConditionRow, ProbeConfig, ProbeReport, ProbeWitness, P_CAP,
};
pub use spec::{eval_f, CoeffFn, GeneralL, LowerOrderFn, NamedCoeff, NamedFn1, OperatorSpec, RadialFn};

#[allow(unused_imports)]
pub(crate) use jet::{dot, norm};
