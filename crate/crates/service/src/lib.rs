//! Local HTTP API over one workspace directory: catalog queries,
//! background interpolation jobs, palette tables, annotations, and the
//! browser workspace's static assets. Nothing here reaches beyond the
//! bound interface.

pub mod error;
pub mod jobs;
pub mod routes;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::Router;
use thiserror::Error;
use tokio::sync::Mutex;

use seafloor_core::annotate::{AnnotateError, AnnotationLog};
use seafloor_core::ingest::{IngestError, IngestReport, Workspace};
use seafloor_core::interp::GridLimits;
use seafloor_core::Catalog;

pub use error::ApiError;
pub use jobs::{job_id, JobQueue};

pub const DEFAULT_PORT: u16 = 8765;
pub const DEFAULT_BIND: &str = "127.0.0.1";

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot open workspace: {0}")]
    Workspace(#[from] IngestError),
    #[error("cannot load annotations: {0}")]
    Annotations(#[from] AnnotateError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub workspace: PathBuf,
    /// Interpolation jobs running at once.
    pub concurrency: usize,
    pub limits: GridLimits,
}

impl ServiceConfig {
    pub fn new(workspace: impl Into<PathBuf>) -> Self {
        Self {
            workspace: workspace.into(),
            concurrency: 1,
            limits: GridLimits::default(),
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub catalog: Arc<Catalog>,
    pub report: Arc<IngestReport>,
    pub jobs: Arc<JobQueue>,
    pub annotations: Arc<Mutex<AnnotationLog>>,
    pub annotations_path: PathBuf,
}

impl AppState {
    /// Opens the workspace and starts the job workers; needs a tokio runtime.
    pub fn open(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let ws = Workspace::open(&config.workspace)?;
        let annotations_path = ws.annotations_path();
        let log = if annotations_path.is_file() {
            AnnotationLog::load(&annotations_path)?
        } else {
            AnnotationLog::default()
        };
        Ok(Self {
            catalog: Arc::new(ws.catalog),
            report: Arc::new(ws.report),
            jobs: JobQueue::start(config.concurrency, config.limits),
            annotations: Arc::new(Mutex::new(log)),
            annotations_path,
        })
    }
}

const INDEX_HTML: &str = include_str!("../assets/index.html");
const APP_JS: &str = include_str!("../assets/app.js");
const STYLE_CSS: &str = include_str!("../assets/style.css");

/// Paths of the bundled UI assets.
pub const ASSET_PATHS: [&str; 3] = ["/", "/app.js", "/style.css"];

fn asset(content_type: &'static str, body: &'static str) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, content_type)], body)
}

pub fn router(state: AppState) -> Router {
    use routes::*;
    let api = Router::new()
        .route("/cores", get(list_cores))
        .route("/cores/{id}", get(get_core))
        .route("/cores/{id}/horizons", get(core_horizons))
        .route("/parameters", get(list_parameters))
        .route("/maps", get(list_maps))
        .route("/maps/{id}/image", get(map_image))
        .route("/selection", get(select))
        .route("/interpolations", post(submit_interpolation))
        .route("/interpolations/{id}", get(get_interpolation))
        .route("/interpolations/{id}/grid", get(get_grid))
        .route("/interpolations/{id}/clip", post(clip))
        .route("/virtual-core", post(virtual_core))
        .route("/palettes", get(list_palettes))
        .route("/palettes/{id}", get(palette))
        .route("/annotations", get(get_annotations))
        .route("/annotations/strokes", post(add_stroke))
        .route("/annotations/undo", post(undo))
        .route("/annotations/redo", post(redo))
        .route("/workspace", get(workspace))
        .route("/ingest", post(ingest_reserved))
        .fallback(api_not_found);
    Router::new()
        .nest("/api", api)
        .route(
            "/",
            get(|| async { asset("text/html; charset=utf-8", INDEX_HTML) }),
        )
        .route(
            "/index.html",
            get(|| async { asset("text/html; charset=utf-8", INDEX_HTML) }),
        )
        .route(
            "/app.js",
            get(|| async { asset("text/javascript; charset=utf-8", APP_JS) }),
        )
        .route(
            "/style.css",
            get(|| async { asset("text/css; charset=utf-8", STYLE_CSS) }),
        )
        .with_state(state)
}

/// Serves until the listener fails. Returns the bound address through
/// `on_bound` before accepting connections.
pub async fn serve(
    config: ServiceConfig,
    addr: SocketAddr,
    on_bound: impl FnOnce(SocketAddr),
) -> Result<(), ServiceError> {
    let state = AppState::open(&config)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}
