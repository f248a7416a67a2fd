//! Routes, shared state and the single writer.
//!
//! Reads take the current immutable snapshot of the review items. Every
//! mutation goes through one writer thread, which validates it, appends the
//! audit entry, rewrites `review.jsonl` atomically and then publishes a new
//! snapshot.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::header::{CONTENT_DISPOSITION, CONTENT_TYPE};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pcg_core::features::{Extractor, FeatureKind, FeatureParams};
use pcg_core::label::RELABEL_RULE;
use pcg_core::store::{append_jsonl, read_jsonl, to_jsonl, write_jsonl};
use pcg_core::wav::encode_pcm16;
use pcg_core::ClassLabel;
use pcg_pipeline::SegmentStore;
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, oneshot, watch};
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;

use crate::error::{AnnotatorError, Result};
use crate::render::{render_png, MAX_SCALE};
use crate::review::{apply, export, initial_items, replay, Action, AuditEntry, ReviewError, ReviewItem, ReviewStatus};

pub const DEFAULT_PAGE_SIZE: usize = 50;
pub const MAX_PAGE_SIZE: usize = 1000;
pub const DEFAULT_IMAGE_SCALE: u32 = 2;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub store_dir: PathBuf,
    /// Holds `review.jsonl` and `audit.jsonl`; defaults to `<store>/review`.
    pub review_dir: Option<PathBuf>,
    /// Served for every path that is not an API route.
    pub static_dir: Option<PathBuf>,
    /// Allowed CORS origins; empty allows any localhost origin.
    pub cors_origins: Vec<String>,
    pub feature_params: FeatureParams,
}

impl ServerConfig {
    pub fn new(store_dir: impl Into<PathBuf>) -> Self {
        Self {
            store_dir: store_dir.into(),
            review_dir: None,
            static_dir: None,
            cors_origins: Vec::new(),
            feature_params: FeatureParams::default(),
        }
    }

    pub fn review_dir(&self) -> PathBuf {
        self.review_dir.clone().unwrap_or_else(|| self.store_dir.join("review"))
    }
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
    Conflict(String),
    Internal(String),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    rule: Option<&'static str>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, msg, rule) = match &self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m, None),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m, None),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, m, Some(RELABEL_RULE)),
            ApiError::Internal(m) => {
                log::error!("{m}");
                (StatusCode::INTERNAL_SERVER_ERROR, m, None)
            }
        };
        (status, Json(ErrorBody { error: msg, rule })).into_response()
    }
}

impl From<ReviewError> for ApiError {
    fn from(e: ReviewError) -> Self {
        ApiError::Conflict(e.to_string())
    }
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError::Internal(e.to_string())
}

type ImageKey = (String, FeatureKind, u64, u32);

struct WriteCmd {
    index: usize,
    action: Action,
    note: Option<String>,
    reply: oneshot::Sender<Result<ReviewItem, ApiError>>,
}

struct Shared {
    store: SegmentStore,
    index: HashMap<String, usize>,
    snapshot: watch::Receiver<Arc<Vec<ReviewItem>>>,
    writer: mpsc::Sender<WriteCmd>,
    images: Mutex<HashMap<ImageKey, Arc<Vec<u8>>>>,
    params: FeatureParams,
}

impl Shared {
    fn items(&self) -> Arc<Vec<ReviewItem>> {
        self.snapshot.borrow().clone()
    }

    fn lookup(&self, id: &str) -> Result<usize, ApiError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| ApiError::NotFound(format!("no segment {id:?}")))
    }
}

type AppState = Arc<Shared>;

struct ReviewFiles {
    review: PathBuf,
    audit: PathBuf,
}

fn writer_loop(
    mut items: Vec<ReviewItem>,
    files: ReviewFiles,
    mut rx: mpsc::Receiver<WriteCmd>,
    publish: watch::Sender<Arc<Vec<ReviewItem>>>,
) {
    while let Some(cmd) = rx.blocking_recv() {
        let result = apply(&items[cmd.index], cmd.action, cmd.note)
            .map_err(ApiError::from)
            .and_then(|next| {
                append_jsonl(&files.audit, &AuditEntry::record(&next)).map_err(internal)?;
                items[cmd.index] = next.clone();
                write_jsonl(&files.review, &items).map_err(internal)?;
                publish.send_replace(Arc::new(items.clone()));
                Ok(next)
            });
        let _ = cmd.reply.send(result);
    }
}

/// Load the review state of a segment store. The audit log is the source of
/// truth: replaying it over the store manifest must succeed, and
/// `review.jsonl` is rewritten if it disagrees.
pub fn load_review_state(config: &ServerConfig) -> Result<(SegmentStore, Vec<ReviewItem>)> {
    let store = SegmentStore::open(&config.store_dir)?;
    let manifest = store.load_manifest()?;
    let initial = initial_items(&manifest.entries);
    let dir = config.review_dir();
    std::fs::create_dir_all(&dir).map_err(|e| AnnotatorError::Io { path: dir.clone(), source: e })?;
    let audit_path = dir.join("audit.jsonl");
    let log: Vec<AuditEntry> = if audit_path.is_file() { read_jsonl(&audit_path)? } else { Vec::new() };
    let items = replay(&initial, &log).map_err(AnnotatorError::Corrupt)?;
    let review_path = dir.join("review.jsonl");
    let saved: Option<Vec<ReviewItem>> = if review_path.is_file() { Some(read_jsonl(&review_path)?) } else { None };
    if saved.as_ref() != Some(&items) {
        if saved.is_some() {
            log::warn!("{} disagrees with the audit log; rewriting it", review_path.display());
        }
        write_jsonl(&review_path, &items)?;
    }
    Ok((store, items))
}

fn is_local_origin(origin: &HeaderValue) -> bool {
    let Ok(o) = origin.to_str() else { return false };
    ["http://localhost", "http://127.0.0.1", "http://[::1]"].iter().any(|base| {
        o.strip_prefix(base)
            .is_some_and(|rest| rest.is_empty() || rest.starts_with(':'))
    })
}

fn cors_layer(origins: &[String]) -> Result<CorsLayer> {
    let allow = if origins.is_empty() {
        AllowOrigin::predicate(|o: &HeaderValue, _| is_local_origin(o))
    } else {
        let values = origins
            .iter()
            .map(|o| HeaderValue::from_str(o).map_err(|_| AnnotatorError::Config(format!("bad origin {o:?}"))))
            .collect::<Result<Vec<_>>>()?;
        AllowOrigin::list(values)
    };
    Ok(CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([CONTENT_TYPE]))
}

/// The HTTP application. Must be called inside a Tokio runtime; the writer
/// thread stops once the router is dropped.
pub fn router(config: &ServerConfig) -> Result<Router> {
    let (store, items) = load_review_state(config)?;
    let index = items.iter().enumerate().map(|(i, it)| (it.segment_id.clone(), i)).collect();
    let (publish, snapshot) = watch::channel(Arc::new(items.clone()));
    let (writer, rx) = mpsc::channel(64);
    let dir = config.review_dir();
    let files = ReviewFiles {
        review: dir.join("review.jsonl"),
        audit: dir.join("audit.jsonl"),
    };
    std::thread::Builder::new()
        .name("review-writer".into())
        .spawn(move || writer_loop(items, files, rx, publish))
        .map_err(|e| AnnotatorError::Io { path: dir, source: e })?;

    let state = Arc::new(Shared {
        store,
        index,
        snapshot,
        writer,
        images: Mutex::new(HashMap::new()),
        params: config.feature_params,
    });
    let mut app = Router::new()
        .route("/segments", get(list_segments))
        .route("/segments/{id}/audio", get(segment_audio))
        .route("/segments/{id}/image", get(segment_image))
        .route("/segments/{id}/label", post(label_segment))
        .route("/export", get(export_relabels));
    if let Some(dir) = &config.static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    Ok(app.with_state(state).layer(cors_layer(&config.cors_origins)?))
}

/// Bind `addr` and serve until the process is stopped.
pub async fn serve(config: &ServerConfig, addr: SocketAddr) -> Result<()> {
    let app = router(config)?;
    let io = |e| AnnotatorError::Io { path: PathBuf::from(addr.to_string()), source: e };
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(io)?;
    log::info!("review service listening on http://{}", listener.local_addr().map_err(io)?);
    axum::serve(listener, app).await.map_err(io)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SegmentPage {
    pub items: Vec<ReviewItem>,
    pub page: usize,
    pub page_size: usize,
    /// Items matching the filter, over all pages.
    pub total: usize,
    /// Effective label counts over the whole manifest, including zero
    /// counts for every original label.
    pub counts: BTreeMap<ClassLabel, usize>,
}

fn parse_param<T: std::str::FromStr>(q: &HashMap<String, String>, key: &str) -> Result<Option<T>, ApiError> {
    q.get(key)
        .map(|v| v.parse().map_err(|_| ApiError::BadRequest(format!("invalid {key} {v:?}"))))
        .transpose()
}

async fn list_segments(State(s): State<AppState>, Query(q): Query<HashMap<String, String>>) -> Result<Json<SegmentPage>, ApiError> {
    let status: Option<ReviewStatus> = parse_param(&q, "status")?;
    let page: usize = parse_param(&q, "page")?.unwrap_or(0);
    let page_size: usize = parse_param(&q, "page_size")?.unwrap_or(DEFAULT_PAGE_SIZE);
    if page_size == 0 || page_size > MAX_PAGE_SIZE {
        return Err(ApiError::BadRequest(format!("page_size must be in 1..={MAX_PAGE_SIZE}")));
    }
    let items = s.items();
    let mut counts = BTreeMap::new();
    for it in items.iter() {
        counts.entry(it.original_label).or_insert(0);
        *counts.entry(it.effective_label).or_insert(0) += 1;
    }
    let matching: Vec<&ReviewItem> = items.iter().filter(|it| status.is_none_or(|st| it.status == st)).collect();
    let total = matching.len();
    let start = page.saturating_mul(page_size).min(total);
    let end = (start + page_size).min(total);
    Ok(Json(SegmentPage {
        items: matching[start..end].iter().map(|&it| it.clone()).collect(),
        page,
        page_size,
        total,
        counts,
    }))
}

async fn read_samples(s: &AppState, id: String) -> Result<(Vec<f64>, u32), ApiError> {
    let store = s.store.clone();
    tokio::task::spawn_blocking(move || store.read_segment(&id))
        .await
        .map_err(internal)?
        .map_err(internal)
}

/// The stored normalized segment, peak-scaled to 16-bit PCM.
async fn segment_audio(State(s): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    s.lookup(&id)?;
    let (samples, rate) = read_samples(&s, id).await?;
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(([(CONTENT_TYPE, "audio/wav")], encode_pcm16(&samples, rate, peak)).into_response())
}

async fn segment_image(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    s.lookup(&id)?;
    let kind = match q.get("kind").map(String::as_str).unwrap_or("wst") {
        "wst" => FeatureKind::Wst,
        "stft" => FeatureKind::Stft,
        other => return Err(ApiError::BadRequest(format!("unknown image kind {other:?}"))),
    };
    let scale: u32 = parse_param(&q, "scale")?.unwrap_or(DEFAULT_IMAGE_SCALE);
    if !(1..=MAX_SCALE).contains(&scale) {
        return Err(ApiError::BadRequest(format!("scale must be in 1..={MAX_SCALE}")));
    }
    let key = (id.clone(), kind, s.params.hash_for(kind), scale);
    let cached = s.images.lock().expect("image cache").get(&key).cloned();
    let png = match cached {
        Some(png) => png,
        None => {
            let (samples, rate) = read_samples(&s, id).await?;
            let params = s.params;
            let png = tokio::task::spawn_blocking(move || -> Result<Vec<u8>, pcg_core::CoreError> {
                let map = Extractor::new(kind, &params, samples.len(), rate as f64)?.extract(&samples)?;
                Ok(render_png(&map, &params, scale))
            })
            .await
            .map_err(internal)?
            .map_err(internal)?;
            let png = Arc::new(png);
            s.images.lock().expect("image cache").insert(key, png.clone());
            png
        }
    };
    Ok(([(CONTENT_TYPE, "image/png")], png.as_ref().clone()).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LabelRequest {
    /// `"Unknown"` or `"confirm"`.
    pub to: String,
    #[serde(default)]
    pub note: Option<String>,
}

async fn label_segment(
    State(s): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<LabelRequest>, JsonRejection>,
) -> Result<Json<ReviewItem>, ApiError> {
    let index = s.lookup(&id)?;
    let Json(req) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let action: Action = req.to.parse().map_err(ApiError::BadRequest)?;
    let (reply, rx) = oneshot::channel();
    s.writer
        .send(WriteCmd { index, action, note: req.note, reply })
        .await
        .map_err(|_| internal("review writer stopped"))?;
    rx.await.map_err(|_| internal("review writer stopped"))?.map(Json)
}

async fn export_relabels(State(s): State<AppState>) -> Response {
    let body = to_jsonl(&export(&s.items()));
    (
        [
            (CONTENT_TYPE, "application/x-ndjson"),
            (CONTENT_DISPOSITION, "attachment; filename=\"relabels.jsonl\""),
        ],
        body,
    )
        .into_response()
}

