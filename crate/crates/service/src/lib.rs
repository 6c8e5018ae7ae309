//! HTTP session service. Each session is an event-sourced consultation
//! persisted as `<data-dir>/<session-id>.jsonl` and restored by replay.

pub mod api;
pub mod http;
pub mod store;

use std::net::SocketAddr;
use std::sync::Arc;

pub use http::router;
pub use store::{ServiceError, SessionStore};

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(store: Arc<SessionStore>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(store)).await
}
