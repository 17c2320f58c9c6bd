//! HTTP service for editing machines, stepping through annotated runs and
//! generating FSM source. Sessions live in memory; documents on disk are
//! the durable artifact.

mod api;
pub mod session;

pub use api::{app, router, ApiError, AppState, ServiceConfig};

/// Serves the API on `listener` until the process stops.
pub async fn serve(
    listener: tokio::net::TcpListener,
    config: ServiceConfig,
) -> std::io::Result<()> {
    axum::serve(listener, app(&config)).await
}
