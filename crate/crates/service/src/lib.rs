//! HTTP front end for the recognition engine.
//!
//! `POST /api/v1/plates` takes a multipart upload with an `image` part (and
//! an optional `device_id`), runs recognition, looks the plate up in the
//! vehicle store and answers with an [`ApiResponse`] keyed by a fresh
//! session id. `GET /api/v1/plates/{id}` replays that response and
//! `GET /healthz` reports readiness.

pub mod session;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use axum::extract::{DefaultBodyLimit, Multipart, Path, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use lpr_core::imaging::io::decode_color;
use lpr_core::recognition::load_templates;
use lpr_core::{recognize, PipelineConfig, TemplateSet};
use lpr_datastore::{EmptyStore, FileStore, MatchKind, VehicleLookup, VehicleRecord};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use session::{SessionLog, SessionRecord, SessionState};

pub const MAX_IMAGE_BYTES: usize = 5 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum Error {
    #[error("session store {path}: {source}")]
    Sessions { path: PathBuf, source: std::io::Error },
    #[error("session log {path} line {line}: {message}")]
    SessionLog { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Datastore(#[from] lpr_datastore::Error),
    #[error(transparent)]
    Engine(#[from] lpr_core::Error),
    #[error("invalid CORS origin {0:?}")]
    CorsOrigin(String),
    #[error("server: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Body of every recognition response. Field order is the wire order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiResponse {
    pub session_id: String,
    /// `ok`, `no_plate`, `no_characters` or `low_confidence`.
    pub status: String,
    pub plate_text: Option<String>,
    pub confidence: Option<f64>,
    pub vehicle: Option<VehicleRecord>,
    pub match_kind: MatchKind,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ServerOptions {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Address to bind.
    #[arg(long, default_value = "0.0.0.0")]
    pub host: std::net::IpAddr,
    /// Vehicle store (JSON lines); without it every lookup misses.
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Template archive (directory or zip); defaults to the bundled set.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Directory for the session log and uploaded images.
    #[arg(long, default_value = "sessions")]
    pub sessions: PathBuf,
    /// Pipeline config file (key=value).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Origin allowed to call the API from a browser; any origin when unset.
    #[arg(long)]
    pub cors_origin: Option<String>,
}

pub struct AppState {
    templates: OnceLock<Arc<TemplateSet>>,
    config: PipelineConfig,
    store: Arc<dyn VehicleLookup>,
    sessions: SessionLog,
}

impl AppState {
    /// Templates are installed separately, see [`AppState::set_templates`];
    /// until then the service answers 503.
    pub fn new(config: PipelineConfig, store: Arc<dyn VehicleLookup>, sessions: SessionLog) -> AppState {
        AppState { templates: OnceLock::new(), config, store, sessions }
    }

    /// Returns false if templates were already installed.
    pub fn set_templates(&self, templates: TemplateSet) -> bool {
        self.templates.set(Arc::new(templates)).is_ok()
    }

    pub fn sessions(&self) -> &SessionLog {
        &self.sessions
    }

    /// Runs one upload end to end. Blocking.
    pub fn process(&self, image: &[u8], device_id: Option<String>) -> std::result::Result<String, ApiError> {
        let templates = self.templates.get().ok_or(ApiError::NotReady)?;
        if image.len() > MAX_IMAGE_BYTES {
            return Err(ApiError::TooLarge);
        }
        let decoded = decode_color(image).map_err(|_| ApiError::Undecodable)?;
        let extension = match image.first() {
            Some(0x89) => "png",
            Some(0xFF) => "jpg",
            _ => "img",
        };
        let record = self.sessions.begin(device_id, image, extension).map_err(ApiError::internal)?;
        let result = recognize(&decoded, &self.config, templates);
        let (vehicle, response) = match &result.plate {
            Some(plate) if result.failure.is_none() => {
                let outcome = self.store.lookup(&plate.text);
                let response = ApiResponse {
                    session_id: record.session_id.clone(),
                    status: result.status().to_string(),
                    plate_text: Some(plate.text.clone()),
                    confidence: Some(plate.confidence),
                    vehicle: outcome.record.clone(),
                    match_kind: outcome.match_kind,
                };
                (Some(outcome), response)
            }
            _ => (
                None,
                ApiResponse {
                    session_id: record.session_id.clone(),
                    status: result.status().to_string(),
                    plate_text: None,
                    confidence: None,
                    vehicle: None,
                    match_kind: MatchKind::None,
                },
            ),
        };
        self.sessions.complete(record, result, vehicle, response).map_err(ApiError::internal)
    }
}

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("missing image part")]
    MissingImage,
    #[error("undecodable image")]
    Undecodable,
    #[error("image too large")]
    TooLarge,
    #[error("malformed multipart body")]
    Malformed,
    #[error("template set not loaded")]
    NotReady,
    #[error("unknown session")]
    UnknownSession,
    #[error("internal error")]
    Internal,
}

impl ApiError {
    fn internal(e: Error) -> ApiError {
        tracing::error!("{e}");
        ApiError::Internal
    }

    fn status(&self) -> StatusCode {
        match self {
            ApiError::MissingImage | ApiError::Undecodable | ApiError::TooLarge | ApiError::Malformed => {
                StatusCode::BAD_REQUEST
            }
            ApiError::NotReady => StatusCode::SERVICE_UNAVAILABLE,
            ApiError::UnknownSession => StatusCode::NOT_FOUND,
            ApiError::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json(self.status(), serde_json::json!({ "error": self.to_string() }).to_string())
    }
}

fn json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json; charset=utf-8")], body).into_response()
}

async fn upload(State(state): State<Arc<AppState>>, mut form: Multipart) -> std::result::Result<Response, ApiError> {
    let part_error = |e: axum::extract::multipart::MultipartError| {
        if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
            ApiError::TooLarge
        } else {
            ApiError::Malformed
        }
    };
    let mut image = None;
    let mut device_id = None;
    while let Some(field) = form.next_field().await.map_err(part_error)? {
        match field.name() {
            Some("image") => image = Some(field.bytes().await.map_err(part_error)?),
            Some("device_id") => device_id = Some(field.text().await.map_err(part_error)?),
            _ => {}
        }
    }
    // checked after draining the body so clients see the 503, not a reset
    if state.templates.get().is_none() {
        return Err(ApiError::NotReady);
    }
    let image = image.ok_or(ApiError::MissingImage)?;
    let body = tokio::task::spawn_blocking(move || state.process(&image, device_id))
        .await
        .map_err(|_| ApiError::Internal)??;
    Ok(json(StatusCode::OK, body))
}

async fn fetch(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> std::result::Result<Response, ApiError> {
    match state.sessions.get(&id) {
        Some(SessionState::Done(body)) => Ok(json(StatusCode::OK, body)),
        // the server stopped before this upload finished
        Some(SessionState::Pending) => {
            Ok(json(StatusCode::ACCEPTED, serde_json::json!({ "session_id": id, "status": "pending" }).to_string()))
        }
        None => Err(ApiError::UnknownSession),
    }
}

async fn healthz(State(state): State<Arc<AppState>>) -> Response {
    match state.templates.get() {
        Some(t) => {
            (StatusCode::OK, format!("ready templates={} records={}\n", t.version(), state.store.record_count()))
                .into_response()
        }
        None => (StatusCode::SERVICE_UNAVAILABLE, "starting\n").into_response(),
    }
}

pub fn router(state: Arc<AppState>, cors_origin: Option<&str>) -> Result<Router> {
    let origin = match cors_origin {
        Some(o) => AllowOrigin::exact(HeaderValue::from_str(o).map_err(|_| Error::CorsOrigin(o.to_string()))?),
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    Ok(Router::new()
        .route("/api/v1/plates", post(upload))
        .route("/api/v1/plates/{id}", get(fetch))
        .route("/healthz", get(healthz))
        // room for the multipart framing around a maximal image
        .layer(DefaultBodyLimit::max(MAX_IMAGE_BYTES + 64 * 1024))
        .layer(cors)
        .with_state(state))
}

/// Opens the store and session log, binds, then loads templates in the
/// background so `/healthz` answers 503 until they are ready.
pub async fn run(opts: ServerOptions) -> Result<()> {
    let config = match &opts.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let store: Arc<dyn VehicleLookup> = match &opts.db {
        Some(p) => Arc::new(FileStore::open(p)?),
        None => Arc::new(EmptyStore),
    };
    let sessions = SessionLog::open(&opts.sessions)?;
    let state = Arc::new(AppState::new(config, store, sessions));
    let app = router(state.clone(), opts.cors_origin.as_deref())?;

    let listener = tokio::net::TcpListener::bind(SocketAddr::new(opts.host, opts.port)).await?;
    tracing::info!("listening on {}", listener.local_addr()?);

    let templates = opts.templates.clone();
    tokio::task::spawn_blocking(move || {
        let loaded = match &templates {
            Some(p) => load_templates(p),
            None => Ok(TemplateSet::builtin().clone()),
        };
        match loaded {
            Ok(t) => {
                tracing::info!("templates {} loaded", t.version());
                state.set_templates(t);
            }
            Err(e) => tracing::error!("cannot load templates: {e}"),
        }
    });

    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

pub fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into());
    let _ = tracing_subscriber::fmt().with_env_filter(filter).try_init();
}
