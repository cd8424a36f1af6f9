use thiserror::Error;

/// Errors shared across the operator, measure, scenario and bell modules.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains a non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: max |M - M^H| = {deviation:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not a density matrix: {reason}")]
    NotDensityMatrix { reason: String },

    #[error("matrix is not unitary: max |U U^H - I| = {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    #[error("observables at positions {i} and {j} do not commute: |[X_i, X_j]| = {norm:.3e}")]
    NonCommuting { i: usize, j: usize, norm: f64 },

    #[error("observable is degenerate (eigenvalue {eigenvalue} has multiplicity {multiplicity})")]
    Degenerate { eigenvalue: f64, multiplicity: usize },

    #[error("outcome {value} is not in the spectrum of observable {index}")]
    OutcomeNotInSpectrum { index: usize, value: f64 },

    #[error("factor count {count} exceeds the symmetrization cap {cap}")]
    FactorCapExceeded { count: usize, cap: usize },

    #[error("grid of {cells} cells exceeds the configured limit {limit}")]
    GridTooLarge { cells: usize, limit: usize },

    #[error("site index {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("trace has imaginary part {imag:.3e}, above the {tolerance:.3e} cutoff")]
    ComplexTrace { imag: f64, tolerance: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical check failed: {0}")]
    NumericalCheck(String),
}
