use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lfr_core::bokeh::BokehRenderConfig;
use lfr_core::lf_data::encode_png;
use lfr_core::pipeline::preview;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::jobs::JobState;
use crate::params::{FieldError, PreviewRequest, RenderRequest};
use crate::AppState;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/dataset/info", get(info))
        .route("/dataset/center.png", get(center))
        .route("/disparity/value", get(disparity_value))
        .route("/refocus/preview", post(refocus_preview))
        .route("/refocus/render", post(refocus_render))
        .route("/job/{id}", get(job_status))
        .route("/job/{id}/result.png", get(job_result))
        .with_state(state)
}

enum ApiError {
    BadRequest(FieldError),
    NotFound(String),
    Conflict(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::BadRequest(e) => (
                StatusCode::BAD_REQUEST,
                json!({"error": "invalid parameter", "field": e.field, "message": e.message}),
            ),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, json!({"error": m})),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, json!({"error": m})),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, json!({"error": m})),
        };
        (status, Json(body)).into_response()
    }
}

impl From<FieldError> for ApiError {
    fn from(e: FieldError) -> Self {
        ApiError::BadRequest(e)
    }
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| {
        ApiError::BadRequest(FieldError {
            field: String::new(),
            message: format!("malformed request body: {e}"),
        })
    })
}

async fn info(State(state): State<AppState>) -> Json<serde_json::Value> {
    let lf = &state.dataset.light_field;
    let d = &state.dataset.disparity;
    Json(json!({
        "rows": lf.rows(),
        "cols": lf.cols(),
        "width": lf.width(),
        "height": lf.height(),
        "disparity_range": [d.d_min(), d.d_max()],
    }))
}

async fn center(State(state): State<AppState>) -> Response {
    png(state.dataset.center_png.clone())
}

#[derive(Deserialize)]
struct PixelQuery {
    x: Option<String>,
    y: Option<String>,
}

fn coordinate(raw: Option<&str>, field: &str, limit: usize) -> Result<usize, ApiError> {
    let bad = |message: String| {
        ApiError::BadRequest(FieldError {
            field: field.into(),
            message,
        })
    };
    let raw = raw.ok_or_else(|| bad("is required".into()))?;
    let v: usize = raw.trim().parse().map_err(|_| bad(format!("`{raw}` is not a pixel index")))?;
    if v >= limit {
        return Err(bad(format!("must be below {limit}")));
    }
    Ok(v)
}

async fn disparity_value(
    State(state): State<AppState>,
    Query(q): Query<PixelQuery>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let d = &state.dataset.disparity;
    let x = coordinate(q.x.as_deref(), "x", d.width())?;
    let y = coordinate(q.y.as_deref(), "y", d.height())?;
    Ok(Json(json!({"d": d.get(y, x)})))
}

async fn refocus_preview(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let request: PreviewRequest = parse_body(&body)?;
    let params = request.refocus_params(&state.dataset.disparity)?;
    let dataset = state.dataset.clone();
    let bytes = tokio::task::spawn_blocking(move || {
        let reference = dataset.light_field.reference();
        let rendered = preview(reference, &dataset.disparity, &params, &BokehRenderConfig::default())?;
        encode_png(&rendered)
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))?
    .map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(png(bytes))
}

async fn refocus_render(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<Json<serde_json::Value>, ApiError> {
    let request: RenderRequest = parse_body(&body)?;
    let config = request.pipeline_config(&state.dataset.disparity)?;
    let id = state.jobs.submit(request, config);
    Ok(Json(json!({"job_id": id})))
}

async fn job_status(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let job = state
        .jobs
        .get(&id)
        .ok_or_else(|| ApiError::NotFound(format!("no job `{id}`")))?;
    Ok(Json(job).into_response())
}

async fn job_result(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let job = state
        .jobs
        .get(&id)
        .ok_or_else(|| ApiError::NotFound(format!("no job `{id}`")))?;
    match (job.state, job.result_path) {
        (JobState::Done, Some(path)) => {
            let bytes = tokio::fs::read(&path)
                .await
                .map_err(|e| ApiError::Internal(format!("{}: {e}", path.display())))?;
            Ok(png(bytes))
        }
        (JobState::Failed, _) => Err(ApiError::Conflict(format!(
            "job `{id}` failed: {}",
            job.error.unwrap_or_default()
        ))),
        _ => Err(ApiError::Conflict(format!("job `{id}` has not finished"))),
    }
}
