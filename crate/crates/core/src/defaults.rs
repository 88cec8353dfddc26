//! Default tolerances and limits. Every report echoes these.

/// Equi-diagonalization residual, relative to `max(1, max |M_ij|)`.
pub const TOL_EQUIDIAG: f64 = 1e-10;

/// Protocol-level identities (leaf constancy, cascade, completeness).
pub const TOL_PROTOCOL: f64 = 1e-9;

/// States whose norm is within this of 1 are renormalized; others rejected.
pub const TOL_NORM: f64 = 1e-10;

/// Maximum completeness defect accepted for a POVM.
pub const TOL_POVM: f64 = 1e-10;

/// Maximum accepted violation of the overlap bound on measurement distances.
pub const TOL_BOUND: f64 = 1e-12;

/// Largest total dimension `run_locc` will enumerate from the CLI.
pub const LEAF_CAP: usize = 4096;

/// Largest matrix handed to the equi-diagonalizer from a dyad.
pub const DYAD_MATRIX_CAP: usize = 64;

/// Default random restarts for the measurement search.
pub const RESTARTS: usize = 8;

/// Default steps per restart for the measurement search.
pub const STEPS: usize = 400;

/// Default initial perturbation size for the measurement search.
pub const INITIAL_STEP: f64 = 0.5;

/// Default total-dimension cap for the measurement search.
pub const SEARCH_DIM_CAP: usize = 8;
