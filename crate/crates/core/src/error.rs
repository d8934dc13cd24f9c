use thiserror::Error;

use crate::parallel::GluingCertificate;
use crate::transfer::BiLipschitzEstimate;

#[derive(Debug, Error)]
pub enum Error {
    #[error("set distance over an empty point set")]
    EmptySet,

    #[error("point not in space: {0}")]
    PointOutsideSpace(String),

    #[error("{0}")]
    Domain(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("window mismatch: {0}")]
    WindowMismatch(String),

    #[error("unsupported domain: {0}")]
    Unsupported(String),

    /// A gluing oracle produced no trajectory satisfying its inequality.
    /// This is evidence against the gluing property for the bound system.
    #[error("gluing oracle failed at t={index} (worst ratio {ratio}): {detail}")]
    OracleFailure {
        index: i64,
        ratio: f64,
        detail: String,
        partial: Option<Box<GluingCertificate>>,
    },

    /// Conjugation transfer declined because the homeomorphism has no
    /// finite bi-Lipschitz constant on the declared region.
    #[error("conjugacy transfer refused: {reason}")]
    TransferRefused {
        reason: String,
        estimate: Box<BiLipschitzEstimate>,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
