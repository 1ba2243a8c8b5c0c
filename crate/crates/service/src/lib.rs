//! HTTP/JSON API over propagation sessions.
//!
//! One model set is loaded per server. Sessions are created from a proposed
//! change, steered by posting choices for pending decisions, and queried for
//! the architecture impact of any impacted requirement.

mod api;
mod error;
mod store;

use std::net::SocketAddr;
use std::sync::Arc;

use reqimpact_core::ArchitectureModel;
use tower_http::cors::CorsLayer;

pub use api::{router, AppState, ChoiceRequest, CreateSession, ImpactRequest, SessionCreated, SessionView};
pub use error::{ErrorBody, ServiceError};
pub use store::{SessionStore, Workspace};

#[derive(Debug, Clone, Default)]
pub struct ServeOptions {
    /// Allow any origin, for a UI served from a separate dev server.
    pub permissive_cors: bool,
}

pub fn app(store: SessionStore, architecture: ArchitectureModel, options: &ServeOptions) -> axum::Router {
    let router = router(AppState { store: Arc::new(store), architecture: Arc::new(architecture) });
    if options.permissive_cors {
        router.layer(CorsLayer::permissive())
    } else {
        router
    }
}

pub async fn serve(addr: SocketAddr, app: axum::Router) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, app).await
}
