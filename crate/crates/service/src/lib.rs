//! HTTP service for geodoc scenes.
//!
//! Serves canonical scene JSON, document content and guidance sessions.
//! Sessions survive restarts through an append-only journal in the data
//! directory.

pub mod catalog;
pub mod content;
pub mod error;
pub mod journal;
pub mod routes;
pub mod state;
pub mod wms;

use std::future::Future;

pub use error::{ApiError, ServiceError};
pub use routes::router;
pub use state::{AppState, ServiceConfig, SessionSnapshot};
pub use wms::{build_wms_map_url, BBox, WmsError};

/// Serve until `shutdown` resolves, then drain connections and sync the journal.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(shutdown)
        .await?;
    state.sync()?;
    tracing::info!("shut down cleanly");
    Ok(())
}

/// Resolves on Ctrl-C or, on Unix, SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        if let Err(e) = tokio::signal::ctrl_c().await {
            tracing::error!(error = %e, "cannot listen for Ctrl-C");
            std::future::pending::<()>().await;
        }
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut sig) => {
                sig.recv().await;
            }
            Err(e) => {
                tracing::error!(error = %e, "cannot listen for SIGTERM");
                std::future::pending::<()>().await;
            }
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = terminate => {},
    }
    tracing::info!("shutdown requested");
}
