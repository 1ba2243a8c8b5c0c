use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Core(#[from] reqimpact_core::Error),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("malformed request body: {0}")]
    Malformed(String),
    #[error("journal: {0}")]
    Journal(#[from] std::io::Error),
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
}

impl ServiceError {
    pub fn status_and_code(&self) -> (StatusCode, &'static str) {
        use reqimpact_core::Error as E;
        match self {
            ServiceError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            ServiceError::Malformed(_) => (StatusCode::UNPROCESSABLE_ENTITY, "malformed_request"),
            ServiceError::Journal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "journal_failure"),
            ServiceError::Core(e) => match e {
                E::UnknownDecision(_) => (StatusCode::NOT_FOUND, "unknown_decision"),
                E::UnknownSelection(_) => (StatusCode::NOT_FOUND, "unknown_selection"),
                E::DecisionClosed(_) => (StatusCode::CONFLICT, "decision_closed"),
                E::IllegalAlternative { .. } => (StatusCode::CONFLICT, "illegal_alternative"),
                E::IncompletePath => (StatusCode::CONFLICT, "incomplete_path"),
                E::UnknownRequirement(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unknown_requirement"),
                E::IllFormedChange(_) => (StatusCode::UNPROCESSABLE_ENTITY, "ill_formed_change"),
                E::MissingJustification(_) => (StatusCode::UNPROCESSABLE_ENTITY, "missing_justification"),
                E::Json(_) => (StatusCode::UNPROCESSABLE_ENTITY, "malformed_request"),
                E::MalformedRuleDocument(_) | E::ConflictingCell(_) | E::ReplayDiverged(_) => {
                    (StatusCode::INTERNAL_SERVER_ERROR, "internal")
                }
            },
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, code) = self.status_and_code();
        if status.is_server_error() {
            tracing::error!(%self, "request failed");
        }
        (status, Json(ErrorBody { code, message: self.to_string() })).into_response()
    }
}
