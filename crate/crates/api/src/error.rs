use ecoq_core::geo::GeoError;
use ecoq_core::sgb::BinError;
use ecoq_core::storage::StorageError;
use ecoq_core::verification::QrError;
use ecoq_core::{DomainError, ErrorClass};
use serde::Serialize;
use thiserror::Error;

use crate::auth::AuthError;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Bin(#[from] BinError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Auth(#[from] AuthError),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("unknown bin `{0}`")]
    UnknownBin(String),
    #[error("bin `{0}` already exists")]
    BinExists(String),
    #[error("no route for {method} {path}")]
    NoRoute { method: String, path: String },
}

/// Machine-readable error body: `{"error": <kind>, "message": <text>}`.
#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub error: &'static str,
    pub message: String,
}

pub fn domain_status(e: &DomainError) -> u16 {
    match e.class() {
        ErrorClass::Validation => 400,
        ErrorClass::Lifecycle => 409,
        ErrorClass::Conflict => 409,
        ErrorClass::NotFound => 404,
    }
}

fn class_kind(class: ErrorClass) -> &'static str {
    match class {
        ErrorClass::Validation => "validation",
        ErrorClass::Lifecycle => "lifecycle",
        ErrorClass::Conflict => "conflict",
        ErrorClass::NotFound => "not_found",
    }
}

impl ApiError {
    pub fn status(&self) -> u16 {
        self.classify().0
    }

    pub fn kind(&self) -> &'static str {
        self.classify().1
    }

    fn classify(&self) -> (u16, &'static str) {
        match self {
            ApiError::Domain(e) => (domain_status(e), class_kind(e.class())),
            ApiError::Bin(e) => match e {
                BinError::Rejected(d) => (domain_status(d), class_kind(d.class())),
                BinError::BadClaim(QrError::ChecksumMismatch) => (400, "checksum_mismatch"),
                BinError::BadClaim(_) | BinError::RangeViolation(_) | BinError::NonPositiveWeight => {
                    (400, "validation")
                }
                BinError::StaleReading => (409, "stale_reading"),
                BinError::EventNotActive(_) => (409, "lifecycle"),
                BinError::UnknownBin(_) | BinError::UnknownEvent(_) => (404, "not_found"),
            },
            ApiError::Geo(_) => (400, "validation"),
            ApiError::Storage(e) => match e {
                StorageError::SequenceConflict { .. } => (409, "sequence_conflict"),
                StorageError::UnknownEvent(_) | StorageError::UnknownBin(_) => (404, "not_found"),
                StorageError::StorageFailure(_) | StorageError::CorruptLog { .. } => (500, "storage"),
            },
            ApiError::Auth(AuthError::Unauthorized) => (401, "unauthorized"),
            ApiError::Auth(AuthError::Forbidden) => (403, "forbidden"),
            ApiError::BadRequest(_) => (400, "bad_request"),
            ApiError::UnknownEvent(_) | ApiError::UnknownBin(_) => (404, "not_found"),
            ApiError::BinExists(_) => (409, "conflict"),
            ApiError::NoRoute { .. } => (404, "no_route"),
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            error: self.kind(),
            message: self.to_string(),
        }
    }
}
