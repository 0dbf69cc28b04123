//! Annotation service for the two-view labeling protocol: serves BEV frames
//! with a LiDAR overlay layer, takes per-view masks under optimistic
//! versioning and keeps only the cells where all views agree.

mod http;
mod state;

pub use http::{router, Shared};
pub use state::{
    blank_mask, lidar_overlay_rgba, task_id, AnnoState, ExportRecord, ExportSummary, FrameSource, Fusion, SampleReport, SubmitError,
    TaskStatus, TaskSummary, View, PRESET_BATCH,
};

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

pub const ADDR_ENV: &str = "ANNOSERVE_ADDR";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8787";

pub fn shared(state: AnnoState) -> Shared {
    Arc::new(RwLock::new(state))
}

/// Serves until ctrl-c.
pub async fn serve(addr: SocketAddr, state: Shared) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
