use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        FieldError {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0} not found")]
    NotFound(String),

    #[error("invalid session config")]
    InvalidConfig(Vec<FieldError>),

    #[error("invalid ballot")]
    InvalidBallot(Vec<FieldError>),

    #[error("invalid query")]
    InvalidQuery(Vec<FieldError>),

    /// Ballot failed budget or structural validation.
    #[error("ballot rejected: {0}")]
    Rejected(posivote_core::Error),

    #[error(transparent)]
    Domain(posivote_core::Error),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: String,
    #[serde(skip_serializing_if = "<[FieldError]>::is_empty")]
    fields: &'a [FieldError],
    #[serde(skip_serializing_if = "Option::is_none")]
    cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    budget: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    excess: Option<f64>,
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::InvalidConfig(_)
            | ServiceError::InvalidBallot(_)
            | ServiceError::InvalidQuery(_) => StatusCode::BAD_REQUEST,
            ServiceError::Rejected(_) | ServiceError::Domain(_) => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let fields: &[FieldError] = match &self {
            ServiceError::InvalidConfig(f)
            | ServiceError::InvalidBallot(f)
            | ServiceError::InvalidQuery(f) => f,
            _ => &[],
        };
        let (cost, budget, excess) = match &self {
            ServiceError::Rejected(posivote_core::Error::OverBudget {
                cost,
                budget,
                excess,
                ..
            }) => (Some(*cost), Some(*budget), Some(*excess)),
            _ => (None, None, None),
        };
        let body = ErrorBody {
            error: self.to_string(),
            fields,
            cost,
            budget,
            excess,
        };
        (self.status(), Json(body)).into_response()
    }
}
