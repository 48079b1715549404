//! HTTP API behind the annotation UI.
//!
//! | route | |
//! |---|---|
//! | `GET /samples/next?annotator=ID` | next sample the annotator has not labeled, or 204 |
//! | `POST /labels` | `{annotator_id, sample_id, biased}`; upserts one label |
//! | `GET /progress` | labels per annotator |
//! | `GET /report` | consensus per sample and overall accuracy |
//!
//! Everything else is served from the UI directory when one is configured.

use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use genderprobe_core::annotation::{AnnotationError, AnnotationLabel, LabelStore};

#[derive(Clone)]
pub struct AppState {
    store: Arc<Mutex<LabelStore>>,
    quorum: usize,
}

impl AppState {
    pub fn new(store: LabelStore, quorum: usize) -> Self {
        AppState {
            store: Arc::new(Mutex::new(store)),
            quorum,
        }
    }

    fn lock(&self) -> Result<MutexGuard<'_, LabelStore>, ApiError> {
        self.store
            .lock()
            .map_err(|_| ApiError(StatusCode::INTERNAL_SERVER_ERROR, "label store unavailable".into()))
    }
}

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

impl From<AnnotationError> for ApiError {
    fn from(e: AnnotationError) -> Self {
        let status = match e {
            AnnotationError::UnknownSample(_) => StatusCode::NOT_FOUND,
            AnnotationError::EmptyAnnotator | AnnotationError::InvalidQuorum => {
                StatusCode::BAD_REQUEST
            }
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

#[derive(Debug, Deserialize)]
pub struct NextQuery {
    annotator: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelRequest {
    pub annotator_id: String,
    pub sample_id: String,
    pub biased: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelAck {
    pub sample_id: String,
    /// Annotators who have now labeled this sample.
    pub votes: usize,
}

const PLACEHOLDER: &str = "<!doctype html>
<title>genderprobe annotation</title>
<p>The annotation API is running. Start the server with <code>--ui-dir</code> to serve the review UI.</p>
";

pub fn router(state: AppState, ui_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/samples/next", get(next_sample))
        .route("/labels", post(post_label))
        .route("/progress", get(progress))
        .route("/report", get(report))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER) })),
    }
}

async fn next_sample(
    State(state): State<AppState>,
    Query(q): Query<NextQuery>,
) -> Result<Response, ApiError> {
    if q.annotator.trim().is_empty() {
        return Err(AnnotationError::EmptyAnnotator.into());
    }
    let store = state.lock()?;
    Ok(match store.next_unlabeled(&q.annotator) {
        Some(sample) => Json(sample).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn post_label(
    State(state): State<AppState>,
    Json(req): Json<LabelRequest>,
) -> Result<Json<LabelAck>, ApiError> {
    let label = AnnotationLabel {
        annotator_id: req.annotator_id.trim().to_owned(),
        sample_id: req.sample_id,
        biased: req.biased,
        submitted_at: Utc::now(),
    };
    let sample_id = label.sample_id.clone();
    // The log write syncs to disk, so keep it off the async workers.
    let votes = tokio::task::spawn_blocking(move || {
        let mut store = state.lock()?;
        store.record_label(label).map_err(ApiError::from)
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(LabelAck { sample_id, votes }))
}

async fn progress(State(state): State<AppState>) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(state.lock()?.progress()))
}

async fn report(State(state): State<AppState>) -> Result<impl IntoResponse, ApiError> {
    let report = state.lock()?.report(state.quorum)?;
    Ok(Json(report))
}

pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            log::info!("shutting down");
        })
        .await
}
