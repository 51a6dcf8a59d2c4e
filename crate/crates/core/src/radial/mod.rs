//! Radial reductions, quartic root isolation and the counterexample builders.

mod ctex;
mod interp;
mod profiles;
mod quartic;

pub use ctex::{build_counterexample, Clause, CtexCertificate, CtexKind, CtexParams, CtexRow};
pub use interp::{
    band_exact, band_profile, band_profile_deriv, edge_slopes_exact, interp_endpoints_exact, monotone_interp_l,
    monotone_interp_l_exact, tilde_alpha_exact, BAND, TILDE_ALPHA,
};
pub use profiles::{
    lambda12_t, log_singular_check, radial_f_eigs, radial_spectrum, LogSingularReport, QuarticVariant, RadialProfile,
};
pub use quartic::{
    quartic_eval, quartic_eval_exact, quartic_roots, QuarticRoots, QuarticSpec, Root, BRACKET_WIDTH, PROBE_POINTS,
};
