//! HTTP front end for a MOS judging session.
//!
//! Everything a judge can reach is blinded: queries are handed out as an
//! index plus two opaque image URLs, and no response before `/api/export`
//! names a method, a directory or which pane holds the ground truth.
//! `/api/export` only answers requests carrying the operator key.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use moirebench_core::mos::{MosExport, MosSession, Side, MAX_SCORE, MIN_SCORE};
use moirebench_core::Error;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

/// Header carrying the operator key for `/api/export`.
pub const OPERATOR_HEADER: &str = "x-operator-key";

#[derive(Clone, Debug, Default)]
pub struct ServerOptions {
    /// Key unlocking `/api/export`; without one the endpoint always refuses.
    pub operator_key: Option<String>,
    /// Static judging UI served at `/`.
    pub static_dir: Option<PathBuf>,
}

struct AppState {
    session: RwLock<MosSession>,
    images: HashMap<String, PathBuf>,
    operator_key: Option<String>,
}

type Shared = Arc<AppState>;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct StudyInfo {
    pub version: String,
    pub judges: Vec<String>,
    pub images: usize,
    pub queries_per_judge: usize,
    pub total_queries: usize,
    pub min_score: i64,
    pub max_score: i64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq, Clone, Copy)]
pub struct Progress {
    pub rated: usize,
    pub total: usize,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct NextQuery {
    pub done: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub query_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub left_image_url: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub right_image_url: Option<String>,
    pub progress: Progress,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct RatingRequest {
    pub query_index: usize,
    pub score: i64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct RatingAck {
    pub query_index: usize,
    pub accepted: bool,
    pub progress: Progress,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct JudgeProgress {
    pub judge: String,
    pub rated: usize,
    pub total: usize,
    pub completeness: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ProgressReport {
    pub judges: Vec<JudgeProgress>,
    pub rated: usize,
    pub total: usize,
    pub completeness: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::UnknownJudge(_) | Error::UnknownQuery { .. } => StatusCode::NOT_FOUND,
            Error::ScoreOutOfRange(_) => StatusCode::BAD_REQUEST,
            Error::AlreadyRated { .. } => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        // internal errors may carry paths, which would unblind the pane
        let msg = if status == StatusCode::INTERNAL_SERVER_ERROR {
            "internal error".to_string()
        } else {
            e.to_string()
        };
        ApiError(status, msg)
    }
}

fn ratio(rated: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        rated as f64 / total as f64
    }
}

fn image_url(token: &str) -> String {
    format!("/api/image/{token}")
}

/// Check that every image the study can show exists, and build the
/// token-to-file table.
pub fn prepare(session: &MosSession) -> moirebench_core::Result<HashMap<String, PathBuf>> {
    let study = &session.study;
    study.check_images()?;
    let mut images = HashMap::with_capacity(2 * study.total_queries());
    for (judge, queries) in &study.queries {
        for (i, q) in queries.iter().enumerate() {
            for side in [Side::Left, Side::Right] {
                images.insert(study.image_token(judge, i, side), study.image_path(q, side));
            }
        }
    }
    Ok(images)
}

pub fn router(session: MosSession, options: &ServerOptions) -> moirebench_core::Result<Router> {
    let images = prepare(&session)?;
    let state = Arc::new(AppState {
        session: RwLock::new(session),
        images,
        operator_key: options.operator_key.clone(),
    });
    let api = Router::new()
        .route("/api/study", get(study_info))
        .route("/api/judge/{id}/next", get(next_query))
        .route("/api/judge/{id}/rating", post(rate))
        .route("/api/image/{token}", get(image))
        .route("/api/progress", get(progress))
        .route("/api/export", get(export))
        .with_state(state);
    Ok(match &options.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    })
}

/// Bind `addr` and serve until ctrl-c.
pub async fn serve(session: MosSession, options: &ServerOptions, addr: SocketAddr) -> std::io::Result<()> {
    let app = router(session, options).map_err(std::io::Error::other)?;
    serve_on(tokio::net::TcpListener::bind(addr).await?, app).await
}

/// Serve an already built router on a bound listener until ctrl-c.
pub async fn serve_on(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn study_info(State(st): State<Shared>) -> Json<StudyInfo> {
    let s = st.session.read().expect("session lock");
    let study = &s.study;
    Json(StudyInfo {
        version: study.version.clone(),
        judges: study.judges.clone(),
        images: study.image_ids.len(),
        queries_per_judge: study.methods.len() * study.image_ids.len(),
        total_queries: study.total_queries(),
        min_score: MIN_SCORE,
        max_score: MAX_SCORE,
    })
}

fn judge_progress(s: &MosSession, judge: &str) -> Result<Progress, ApiError> {
    let (rated, total) = s.judge_progress(judge)?;
    Ok(Progress { rated, total })
}

async fn next_query(State(st): State<Shared>, UrlPath(judge): UrlPath<String>) -> Result<Json<NextQuery>, ApiError> {
    let s = st.session.read().expect("session lock");
    let progress = judge_progress(&s, &judge)?;
    Ok(Json(match s.next_query(&judge)? {
        Some(i) => NextQuery {
            done: false,
            query_index: Some(i),
            left_image_url: Some(image_url(&s.study.image_token(&judge, i, Side::Left))),
            right_image_url: Some(image_url(&s.study.image_token(&judge, i, Side::Right))),
            progress,
        },
        None => NextQuery {
            done: true,
            query_index: None,
            left_image_url: None,
            right_image_url: None,
            progress,
        },
    }))
}

async fn rate(
    State(st): State<Shared>,
    UrlPath(judge): UrlPath<String>,
    body: Result<Json<RatingRequest>, JsonRejection>,
) -> Result<Json<RatingAck>, ApiError> {
    let Json(req) = body.map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.body_text()))?;
    let mut s = st.session.write().expect("session lock");
    s.record_rating(&judge, req.query_index, req.score)?;
    Ok(Json(RatingAck {
        query_index: req.query_index,
        accepted: true,
        progress: judge_progress(&s, &judge)?,
    }))
}

async fn image(State(st): State<Shared>, UrlPath(token): UrlPath<String>) -> Result<Response, ApiError> {
    let path = st
        .images
        .get(&token)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, "unknown image".into()))?;
    let bytes = tokio::fs::read(path)
        .await
        .map_err(|_| ApiError(StatusCode::INTERNAL_SERVER_ERROR, "image unavailable".into()))?;
    Ok((
        [(header::CONTENT_TYPE, "image/png"), (header::CACHE_CONTROL, "private, max-age=3600")],
        bytes,
    )
        .into_response())
}

async fn progress(State(st): State<Shared>) -> Json<ProgressReport> {
    let s = st.session.read().expect("session lock");
    let judges: Vec<JudgeProgress> = s
        .study
        .judges
        .iter()
        .map(|j| {
            let (rated, total) = s.judge_progress(j).expect("study judge");
            JudgeProgress {
                judge: j.clone(),
                rated,
                total,
                completeness: ratio(rated, total),
            }
        })
        .collect();
    let rated = judges.iter().map(|j| j.rated).sum();
    let total = judges.iter().map(|j| j.total).sum();
    Json(ProgressReport {
        judges,
        rated,
        total,
        completeness: ratio(rated, total),
    })
}

async fn export(State(st): State<Shared>, headers: HeaderMap) -> Result<Json<MosExport>, ApiError> {
    let given = headers.get(OPERATOR_HEADER).and_then(|v| v.to_str().ok());
    match (&st.operator_key, given) {
        (Some(key), Some(g)) if key == g => {}
        _ => return Err(ApiError(StatusCode::FORBIDDEN, "export requires the operator key".into())),
    }
    Ok(Json(st.session.read().expect("session lock").export()))
}

