//! Symmetric matrices, their spectra, elementary symmetric polynomials and
//! the open matrix sets `U` used as targets of the operators.

mod cone;
mod eigen;
mod sigma;
mod sym;

pub use cone::{
    axiom_check, classify, classify_spectrum, in_cone, Axiom, AxiomReport, AxiomRow, ConeClass, ConeKind, ConeSpec,
    Verdict,
};
pub use eigen::{eigen_sym, eigen_sym_vectors, try_eigen_sym, Spectrum};
pub use sigma::{sigma_all, sigma_k, sigma_k_slice};
pub use sym::{check_dim, SymMatrix, MAX_DIM};
