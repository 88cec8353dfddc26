//! # statdist
//!
//! Wootters statistical distance between pure multipartite quantum states,
//! under unrestricted (global) measurements and under sequential one-way LOCC
//! measurements.
//!
//! The statistical distance between two states is the largest Bhattacharyya
//! angle `arccos Σ √(p_i q_i)` between the outcome distributions that any
//! measurement can produce. For pure states the global optimum is the
//! Hilbert-space angle `arccos |⟨ψ1|ψ2⟩|`. This crate builds, party by party,
//! an LOCC measurement that attains the same value: every party measures in a
//! basis that equalizes the diagonal of its reduced, outcome-conditioned dyad
//! `|ψ2⟩⟨ψ1|`, so that every final outcome carries the same complex amplitude
//! `⟨ψ1|ψ2⟩ / D`.
//!
//! ## Modules
//!
//! - [`statekit`]: layouts, states, dyads, partial traces, conditioning.
//! - [`equidiag`]: constructive unitary similarity to a constant diagonal.
//! - [`measure`]: POVMs, outcome distributions, distances.
//! - [`locc`]: the sequential protocol and its outcome tree.
//! - [`oracle`]: brute-force measurement search used as an independent check.
//! - [`mixed`]: Bures angle and the transition-operator measurement for
//!   density matrices.
//! - [`selftest`]: the fixed-seed invariant suite.
//! - [`cli`]: configuration, dispatch and reports for the `statdist` binary.

#![forbid(unsafe_code)]

pub mod cli;
pub mod defaults;
pub mod equidiag;
pub mod formats;
pub mod linalg;
pub mod locc;
pub mod measure;
pub mod mixed;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod selftest;
pub mod statekit;

pub use num_complex::Complex64;
use thiserror::Error;

/// Complex amplitude type used throughout.
pub type ComplexScalar = Complex64;

/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<Complex64>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid usage: {0}")]
    Usage(String),

    #[error("state norm {norm} deviates from 1 by more than {tol:e}")]
    NotNormalized { norm: f64, tol: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("POVM completeness defect {0:e} exceeds tolerance")]
    IncompletePovm(f64),

    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("target unreachable in pair block: best residual {residual:e}")]
    InfeasibleTarget { residual: f64 },

    #[error("equi-diagonalization did not converge{path}: best residual {residual:e}")]
    Convergence { residual: f64, path: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
