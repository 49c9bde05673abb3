// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported spin value {0} (expected 1/2 or 1)")]
    UnsupportedSpin(f64),

    #[error("subsystem name collision: {0}")]
    NameCollision(String),

    #[error("unknown subsystem: {0}")]
    UnknownSubsystem(String),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("lattice window contains no sites")]
    EmptyLattice,

    #[error("position must have non-zero length")]
    ZeroPosition,

    #[error("positions coincide")]
    CoincidentPositions,

    #[error("bath of {size} spins exceeds the exact-evolution limit of {limit}")]
    BathTooLarge { size: usize, limit: usize },

    #[error("cluster of {size} spins exceeds the limit of {limit}")]
    OversizeCluster { size: usize, limit: usize },

    #[error("sample times must be sorted and lie within [0, {duration}]")]
    InvalidTimes { duration: f64 },

    #[error("analysis window is empty")]
    EmptyWindow,

    #[error("measurement settings are not informationally complete (rank {rank} < {needed})")]
    RankDeficient { rank: usize, needed: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
