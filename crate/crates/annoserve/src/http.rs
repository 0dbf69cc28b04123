use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::Deserialize;
use serde_json::json;
use std::sync::{Arc, RwLock};

use goldbev_core::datasetio::{decode_mask_png, encode_mask_png, encode_rgb_png, encode_rgba_png, PngError};

use crate::state::{lidar_overlay_rgba, AnnoState, SubmitError};

pub type Shared = Arc<RwLock<AnnoState>>;

fn error(status: StatusCode, body: serde_json::Value) -> Response {
    (status, Json(body)).into_response()
}

fn not_found(what: &str, id: &str) -> Response {
    error(StatusCode::NOT_FOUND, json!({ "error": format!("unknown {what} {id:?}") }))
}

fn internal(e: impl std::fmt::Display) -> Response {
    error(StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": e.to_string() }))
}

fn b64(bytes: &[u8]) -> String {
    STANDARD.encode(bytes)
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/tasks", get(list_tasks))
        .route("/tasks/{id}/frame", get(get_frame))
        .route("/tasks/{id}/mask", put(put_mask))
        .route("/samples/{id}/fusion", get(get_fusion))
        .route("/samples/{id}/report", get(get_report))
        .route("/export", post(export))
        .with_state(state)
}

async fn list_tasks(State(s): State<Shared>) -> Response {
    Json(s.read().expect("state lock").tasks()).into_response()
}

async fn get_frame(State(s): State<Shared>, Path(id): Path<String>) -> Response {
    let (summary, frame, mask) = {
        let st = s.read().expect("state lock");
        let Some((summary, mask)) = st.task(&id) else {
            return not_found("task", &id);
        };
        let frame = st.frame(&summary.sample_id).expect("task frames exist").clone();
        (summary.clone(), frame, mask.cloned())
    };
    let Some(base) = frame.images.get(&summary.view) else {
        return internal(format!("frame has no {} image", summary.view.name()));
    };
    let n = frame.grid.size_px();
    let base_png = match encode_rgb_png(base) {
        Ok(b) => b,
        Err(e) => return internal(e),
    };
    let overlay_png = match encode_rgba_png(n, n, &lidar_overlay_rgba(&frame.lidar_counts)) {
        Ok(b) => b,
        Err(e) => return internal(e),
    };
    let mask_png = match mask.as_ref().map(encode_mask_png).transpose() {
        Ok(m) => m,
        Err(e) => return internal(e),
    };
    Json(json!({
        "task": summary,
        "grid": frame.grid,
        "base_png": b64(&base_png),
        "lidar_overlay_png": b64(&overlay_png),
        "mask_png": mask_png.map(|m| b64(&m)),
    }))
    .into_response()
}

#[derive(Deserialize)]
struct SubmitQuery {
    annotator_id: String,
    expected_version: u64,
}

async fn put_mask(State(s): State<Shared>, Path(id): Path<String>, Query(q): Query<SubmitQuery>, body: Bytes) -> Response {
    let grid = {
        let st = s.read().expect("state lock");
        let Some((summary, _)) = st.task(&id) else {
            return not_found("task", &id);
        };
        st.frame(&summary.sample_id).expect("task frames exist").grid
    };
    let mask = match decode_mask_png(&body, Some(grid)) {
        Ok(m) => m,
        Err(PngError::InvalidCodes(codes)) => {
            return error(
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "error": "mask contains invalid class codes", "codes": codes }),
            )
        }
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, json!({ "error": e.to_string() })),
    };
    let result = s.write().expect("state lock").submit(&id, &q.annotator_id, mask, q.expected_version);
    match result {
        Ok(version) => Json(json!({ "task_id": id, "version": version })).into_response(),
        Err(SubmitError::UnknownTask(id)) => not_found("task", &id),
        Err(SubmitError::Conflict { current_version }) => error(
            StatusCode::CONFLICT,
            json!({ "error": "stale expected_version", "current_version": current_version }),
        ),
        Err(SubmitError::InvalidCodes(codes)) => error(
            StatusCode::UNPROCESSABLE_ENTITY,
            json!({ "error": "mask contains invalid class codes", "codes": codes }),
        ),
        Err(SubmitError::Grid(msg)) => error(StatusCode::UNPROCESSABLE_ENTITY, json!({ "error": msg })),
    }
}

async fn get_fusion(State(s): State<Shared>, Path(id): Path<String>) -> Response {
    let Some(f) = s.read().expect("state lock").fusion(&id) else {
        return not_found("sample", &id);
    };
    let mask_png = match f.mask.as_ref().map(encode_mask_png).transpose() {
        Ok(m) => m,
        Err(e) => return internal(e),
    };
    Json(json!({
        "sample_id": f.sample_id,
        "complete": f.mask.is_some(),
        "contributing": f.contributing,
        "void_fraction": f.void_fraction(),
        "mask_png": mask_png.map(|m| b64(&m)),
    }))
    .into_response()
}

async fn get_report(State(s): State<Shared>, Path(id): Path<String>) -> Response {
    match s.read().expect("state lock").report(&id) {
        Some(r) => Json(r).into_response(),
        None => not_found("sample", &id),
    }
}

#[derive(Deserialize, Default)]
struct ExportRequest {
    sample_ids: Option<Vec<String>>,
}

async fn export(State(s): State<Shared>, body: Bytes) -> Response {
    let req: ExportRequest = if body.is_empty() {
        ExportRequest::default()
    } else {
        match serde_json::from_slice(&body) {
            Ok(r) => r,
            Err(e) => return error(StatusCode::BAD_REQUEST, json!({ "error": e.to_string() })),
        }
    };
    let result = s.write().expect("state lock").export(req.sample_ids.as_deref());
    match result {
        Ok(summary) => Json(summary).into_response(),
        Err(e) => internal(e),
    }
}
