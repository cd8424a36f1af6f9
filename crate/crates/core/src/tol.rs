//! Centralized numerical tolerances.
//!
//! Every threshold used by the library lives here so that validation behaves
//! identically across modules. Functions that accept an explicit tolerance
//! fall back to these values through their `*_default` wrappers.

/// Hermiticity test, relative to the max-norm of the matrix.
pub const HERMITICITY_REL: f64 = 1e-10;

/// Eigenvalues closer than this (relative to the largest magnitude eigenvalue)
/// are merged into one spectral point.
pub const GROUPING_REL: f64 = 1e-8;

/// Half width of the band around zero, relative to the operator norm, that is
/// assigned to neither Jordan part.
pub const JORDAN_ZERO_REL: f64 = 1e-10;

/// Imaginary parts of traces below this are discarded; above it they abort.
pub const TRACE_IMAG_ABS: f64 = 1e-9;

/// Density matrix admission: smallest eigenvalue may not sink below -PSD_ABS
/// and the trace must sit within TRACE_ONE_ABS of one.
pub const PSD_ABS: f64 = 1e-10;
pub const TRACE_ONE_ABS: f64 = 1e-10;

/// Commutation test for joint measurability, relative to the product of
/// operator norms.
pub const COMMUTE_REL: f64 = 1e-9;

/// Conditional weights with denominator at or below this are replaced by the
/// uniform distribution.
pub const ZERO_DENOM_ABS: f64 = 1e-12;

/// Generic equality of derived scalars and distributions.
pub const EQUALITY_ABS: f64 = 1e-9;

/// Normalization of signed distributions.
pub const NORMALIZATION_ABS: f64 = 1e-9;

/// Unitarity test for tomography rotations.
pub const UNITARITY_ABS: f64 = 1e-10;

/// Slack added to closed-form bounds before comparing measured values.
pub const BOUND_SLACK_ABS: f64 = 1e-9;

/// Slack for optimizer results against analytic bounds.
pub const OPT_SLACK_ABS: f64 = 1e-6;

/// Largest factor count accepted by the symmetrized product.
pub const SYM_FACTOR_CAP: usize = 8;

/// Largest number of grid cells tabulated by default.
pub const MAX_GRID_CELLS: usize = 10_000_000;
