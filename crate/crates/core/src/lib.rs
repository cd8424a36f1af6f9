//! Numerical toolkit for quasi hidden variable (qHV) modelling of joint von
//! Neumann measurements on finite dimensional quantum systems.
//!
//! The library builds the context-invariant signed measure that reproduces all
//! joint measurement statistics of a state, constructs local signed models for
//! multipartite correlation scenarios, and certifies Bell violation bounds
//! three ways: by see-saw optimization (lower), by the total variation norm of
//! an explicit local model (certificate), and by the dimensional closed form
//! (analytic).

pub mod bell;
pub mod error;
pub mod measure;
pub mod operator;
pub mod presets;
pub mod report;
pub mod scenario;
pub mod tol;

pub use error::CoreError;
pub use operator::{
    absolute_value, jordan_decompose, operator_norm, overlap_row_sums, spectral_decompose,
    symmetrized_product, tensor_embed, trace_pairing, Complex64, ComplexMatrix, ComplexVector,
    DensityMatrix, HermitianOperator, JordanPair, Observable, OverlapMatrix,
    SpectralDecomposition,
};

pub type Result<T> = std::result::Result<T, CoreError>;
