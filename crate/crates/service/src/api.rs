use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use reqimpact_core::impact::ImpactReport;
use reqimpact_core::propagation::{ChoiceRecord, NodeStatus, PendingDecision, PropagationPath};
use reqimpact_core::{ArchitectureModel, AtomicEdit, ProposedChange, Session};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::store::SessionStore;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    pub architecture: Arc<ArchitectureModel>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub change: ProposedChange,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub complete: bool,
    pub pending: Vec<PendingDecision>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiceRequest {
    pub decision: String,
    pub pick: AtomicEdit,
    #[serde(default)]
    pub justification: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpactRequest {
    pub select: String,
}

/// Session state as the UI renders it: every requirement of the model gets a tag.
#[derive(Debug, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub change: ProposedChange,
    pub complete: bool,
    pub statuses: BTreeMap<String, NodeStatus>,
    pub pending: Vec<PendingDecision>,
    pub log: Vec<ChoiceRecord>,
    pub path: PropagationPath,
    pub notices: Vec<String>,
}

impl SessionView {
    fn of(session: &Session) -> Self {
        let statuses =
            session.model.requirements().iter().map(|r| (r.id.clone(), session.status(&r.id))).collect();
        Self {
            session_id: session.id.clone(),
            change: session.initial_change.clone(),
            complete: session.is_complete(),
            statuses,
            pending: session.pending.clone(),
            log: session.log.clone(),
            path: session.path.clone(),
            notices: session.notices.clone(),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/model", get(model))
        .route("/architecture", get(architecture))
        .route("/traces", get(traces))
        .route("/rules", get(rules))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session))
        .route("/sessions/{id}/choices", post(choose))
        .route("/sessions/{id}/impact", post(impact))
        .with_state(state)
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(bytes).map_err(|e| ServiceError::Malformed(e.to_string()))
}

/// Pre-rendered canonical JSON.
fn json_text(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

async fn model(State(s): State<AppState>) -> Response {
    json_text(s.store.workspace().model.to_json())
}

async fn architecture(State(s): State<AppState>) -> Response {
    json_text(s.architecture.to_json())
}

async fn traces(State(s): State<AppState>) -> Response {
    json_text(s.store.workspace().traces.to_json())
}

async fn rules(State(s): State<AppState>) -> Response {
    json_text(s.store.workspace().rules.to_json())
}

async fn create_session(State(s): State<AppState>, raw: Bytes) -> Result<Response, ServiceError> {
    let req: CreateSession = body(&raw)?;
    let session = s.store.create(req.change)?;
    let created =
        SessionCreated { session_id: session.id.clone(), complete: session.is_complete(), pending: session.pending.clone() };
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn session(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ServiceError> {
    Ok(Json(SessionView::of(&s.store.get(&id).await?)))
}

async fn choose(State(s): State<AppState>, Path(id): Path<String>, raw: Bytes) -> Result<Json<SessionView>, ServiceError> {
    let req: ChoiceRequest = body(&raw)?;
    let mut choice = ChoiceRecord::new(req.decision, req.pick);
    choice.justification = req.justification;
    Ok(Json(SessionView::of(&s.store.choose(&id, choice).await?)))
}

async fn impact(State(s): State<AppState>, Path(id): Path<String>, raw: Bytes) -> Result<Json<ImpactReport>, ServiceError> {
    let req: ImpactRequest = body(&raw)?;
    let session = s.store.get(&id).await?;
    let analysis = session.impact(&req.select)?;
    Ok(Json(ImpactReport::new(&analysis, &session, &req.select)))
}
