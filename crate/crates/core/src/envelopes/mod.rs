//! ε-envelopes of grid functions and executable checks of their properties.

mod checks;
mod envelope;
mod grid;

pub use checks::{
    check_envelope_properties, dyadic_grid, dyadic_sharpness, dyadic_w, stability_check, stability_sequence,
    DyadicReport, DyadicRow, EnvProperty, EnvelopeReport, PropertyRow, StabilityRow, DYADIC_LEVELS, SLACK_C,
};
pub use envelope::{envelope, envelope_at, envelope_separable, lower_envelope, upper_envelope, EnvelopeResult, Side};
pub use grid::{fmt_real, GridFn};
