use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;

use voi_core::Error;
use voi_protocol::ErrorBody;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error: message.into(),
                diagnostics: Vec::new(),
            },
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("no session `{id}`"))
    }

    pub fn stale(expected: u64, current: u64) -> Self {
        Self::new(
            StatusCode::CONFLICT,
            format!("expected revision {expected}, but the session is at revision {current}"),
        )
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let status = match &err {
            Error::UnknownVariable(_)
            | Error::UnknownOutcome { .. }
            | Error::UnknownAlternative(_)
            | Error::Unresolved { .. }
            | Error::MissingAnnotation(_) => StatusCode::NOT_FOUND,
            Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        let diagnostics = match &err {
            Error::Invalid(d) => d.clone(),
            _ => Vec::new(),
        };
        ApiError {
            status,
            body: ErrorBody {
                error: err.to_string(),
                diagnostics,
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(error = %self.body.error, "request failed");
        }
        (self.status, Json(self.body)).into_response()
    }
}
