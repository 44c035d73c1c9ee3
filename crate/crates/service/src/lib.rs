//! HTTP front end for medpredict model files.
//!
//! Endpoints: `POST /predict/{disease}` (JSON features or a multipart image),
//! `GET /models`, `GET /health`. Every error is a JSON body
//! `{"error": ..., "fields": [...]}`. There is no authentication; the service
//! is meant for a single-user desk deployment.

mod error;
mod registry;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use medpredict::advice::AdviceTable;
use medpredict::persistence::ModelArtifact;
use medpredict::predict::{is_image_model, predict_features, predict_image, ModelInfo, PredictResponse};
use serde::Serialize;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;

pub use error::{ApiError, ErrorBody};
pub use registry::{LoadReport, Registry, MODEL_EXTENSION};

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_BODY_LIMIT: usize = 10 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub models_dir: PathBuf,
    pub port: u16,
    pub host: [u8; 4],
    pub advice: AdviceTable,
    /// Directory served at `/` (the web UI build), if any.
    pub static_dir: Option<PathBuf>,
    pub max_body_bytes: usize,
    /// Allowed browser origin; `None` allows any origin.
    pub cors_origin: Option<String>,
}

impl ServiceConfig {
    pub fn new(models_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            models_dir: models_dir.into(),
            port: DEFAULT_PORT,
            host: [127, 0, 0, 1],
            advice: AdviceTable::builtin(),
            static_dir: None,
            max_body_bytes: DEFAULT_BODY_LIMIT,
            cors_origin: None,
        }
    }
}

/// Shared request state. The registry slot is filled once, after startup
/// loading finishes; until then `/health` answers 503.
#[derive(Clone)]
pub struct AppState {
    registry: Arc<OnceLock<Registry>>,
    advice: Arc<AdviceTable>,
}

impl AppState {
    pub fn loading(advice: AdviceTable) -> Self {
        AppState {
            registry: Arc::new(OnceLock::new()),
            advice: Arc::new(advice),
        }
    }

    pub fn ready(registry: Registry, advice: AdviceTable) -> Self {
        let s = Self::loading(advice);
        s.set_registry(registry);
        s
    }

    /// Publishes the registry. Later calls are ignored.
    pub fn set_registry(&self, registry: Registry) {
        if self.registry.set(registry).is_err() {
            log::warn!("registry already set");
        }
    }

    fn registry(&self) -> Result<&Registry, ApiError> {
        self.registry
            .get()
            .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "models are still loading"))
    }
}

#[derive(Debug, Serialize)]
struct Health {
    status: &'static str,
    model_count: usize,
}

async fn health(State(state): State<AppState>) -> Response {
    match state.registry.get() {
        Some(r) => Json(Health { status: "ok", model_count: r.len() }).into_response(),
        None => (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(Health { status: "unavailable", model_count: 0 }),
        )
            .into_response(),
    }
}

async fn models(State(state): State<AppState>) -> Result<Json<Vec<ModelInfo>>, ApiError> {
    Ok(Json(state.registry()?.infos()))
}

fn content_type(req: &Request) -> String {
    req.headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("")
        .to_ascii_lowercase()
}

async fn first_file(mut multipart: Multipart) -> Result<Bytes, ApiError> {
    let bad = |e: axum::extract::multipart::MultipartError| ApiError::new(e.status(), e.body_text());
    while let Some(field) = multipart.next_field().await.map_err(bad)? {
        if field.file_name().is_none() && field.name() != Some("image") {
            continue;
        }
        if let Some(ct) = field.content_type() {
            if !(ct.starts_with("image/") || ct == "application/octet-stream") {
                return Err(ApiError::new(
                    StatusCode::UNSUPPORTED_MEDIA_TYPE,
                    format!("uploaded file has content type {ct}; expected a PNG or JPEG image"),
                ));
            }
        }
        return field.bytes().await.map_err(bad);
    }
    Err(ApiError::new(StatusCode::BAD_REQUEST, "multipart body contains no image file"))
}

async fn predict(
    State(state): State<AppState>,
    Path(disease): Path<String>,
    req: Request,
) -> Result<Json<PredictResponse>, ApiError> {
    let artifact: Arc<ModelArtifact> = state
        .registry()?
        .get(&disease)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no model registered for disease {disease:?}")))?;
    let advice = state.advice.clone();
    let ct = content_type(&req);

    if is_image_model(&artifact) {
        if !ct.starts_with("multipart/form-data") {
            return Err(ApiError::new(
                StatusCode::UNSUPPORTED_MEDIA_TYPE,
                format!("the {disease} model expects a multipart/form-data image upload"),
            ));
        }
        let multipart = Multipart::from_request(req, &state)
            .await
            .map_err(|e| ApiError::new(e.status(), e.body_text()))?;
        let bytes = first_file(multipart).await?;
        let response = tokio::task::spawn_blocking(move || predict_image(&artifact, &bytes, &advice))
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
        return Ok(Json(response));
    }

    if !ct.starts_with("application/json") {
        return Err(ApiError::new(
            StatusCode::UNSUPPORTED_MEDIA_TYPE,
            format!("the {disease} model expects a JSON object of features"),
        ));
    }
    let body = Bytes::from_request(req, &state)
        .await
        .map_err(|e| ApiError::new(e.status(), e.body_text()))?;
    let value: serde_json::Value = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("request body is not valid JSON: {e}")))?;
    Ok(Json(predict_features(&artifact, &value, &advice)?))
}

fn cors(origin: Option<&str>) -> CorsLayer {
    let allow = match origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(v) => AllowOrigin::exact(v),
        None => AllowOrigin::any(),
    };
    CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([axum::http::Method::GET, axum::http::Method::POST])
        .allow_headers([header::CONTENT_TYPE])
}

/// The full application router.
pub fn router(state: AppState, cfg: &ServiceConfig) -> Router {
    let mut app = Router::new()
        .route("/health", get(health))
        .route("/models", get(models))
        .route("/predict/{disease}", post(predict));
    if let Some(dir) = &cfg.static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    app.layer(DefaultBodyLimit::max(cfg.max_body_bytes))
        .layer(cors(cfg.cors_origin.as_deref()))
        .with_state(state)
}

/// Binds the port, then loads the models directory in the background and
/// serves until Ctrl-C.
pub async fn serve(cfg: ServiceConfig) -> std::io::Result<()> {
    if !cfg.models_dir.is_dir() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("models directory {} does not exist", cfg.models_dir.display()),
        ));
    }
    let state = AppState::loading(cfg.advice.clone());
    let app = router(state.clone(), &cfg);
    let addr = SocketAddr::from((cfg.host, cfg.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);

    let dir = cfg.models_dir.clone();
    tokio::task::spawn_blocking(move || match Registry::load_dir(&dir) {
        Ok((registry, _)) => {
            let names: Vec<&str> = registry.diseases().collect();
            log::info!("serving {} model(s): {}", names.len(), names.join(", "));
            state.set_registry(registry);
        }
        Err(e) => {
            log::error!("cannot read {}: {e}", dir.display());
            state.set_registry(Registry::default());
        }
    });

    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
