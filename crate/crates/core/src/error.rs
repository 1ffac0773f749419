// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("not converged: {0}")]
    Convergence(String),

    #[error("dispersive regime violated: {0}")]
    NotDispersive(String),

    #[error("value {value} outside the tabulated range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("singular input: {0}")]
    Singular(String),

    #[error("inconsistent coherence times: T2 = {t2} us exceeds 2*T1 = {two_t1} us")]
    InconsistentCoherence { t2: f64, two_t1: f64 },

    #[error("no bistability: reduced detuning {omega:.4} <= sqrt(3)")]
    NoBistability { omega: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
