//! HTTP/JSON service over the forecasting pipeline.
//!
//! Every operation is a `POST /v1/<name>` taking and returning the bodies in
//! [`seqfusion_core::api`]. Artifacts travel as file contents, so the service
//! never reads or writes the caller's disk. CPU-bound work runs on the
//! blocking pool.

pub mod ops;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tokio::net::TcpListener;

use seqfusion_core::api::*;
use seqfusion_core::error::Error as CoreError;
use seqfusion_core::zoo::{sha256_hex, Zoo};

/// Request bodies carry whole datasets and zoos.
pub const BODY_LIMIT: usize = 512 * 1024 * 1024;
const CACHE_CAPACITY: usize = 8;

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    Unprocessable(String),
    Internal(String),
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Io { .. } => ApiError::Internal(e.to_string()),
            _ => ApiError::Unprocessable(e.to_string()),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, error) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::Unprocessable(m) => (StatusCode::UNPROCESSABLE_ENTITY, m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        if status.is_server_error() {
            tracing::error!("{error}");
        }
        (status, Json(ErrorBody { error })).into_response()
    }
}

/// Loaded zoos keyed by a digest of their files, so repeated forecasts
/// against one zoo skip digest checks and model parsing.
#[derive(Default)]
pub struct ZooCache {
    zoos: Mutex<HashMap<String, Arc<Zoo>>>,
}

impl ZooCache {
    pub fn get_or_load(&self, bundle: &FileBundle) -> Result<Arc<Zoo>, CoreError> {
        let key = sha256_hex(&serde_json::to_vec(&bundle.files)?);
        if let Some(z) = self.zoos.lock().unwrap().get(&key) {
            return Ok(z.clone());
        }
        let zoo = Arc::new(Zoo::from_files(&bundle.to_zoo_files())?);
        let mut zoos = self.zoos.lock().unwrap();
        if zoos.len() >= CACHE_CAPACITY {
            zoos.clear();
        }
        zoos.insert(key, zoo.clone());
        Ok(zoo)
    }

    pub fn len(&self) -> usize {
        self.zoos.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Default)]
pub struct AppState {
    pub zoos: ZooCache,
}

type Shared = State<Arc<AppState>>;
type Body<T> = Result<Json<T>, JsonRejection>;
type Reply<T> = Result<Json<T>, ApiError>;

async fn blocking<T, F>(f: F) -> Reply<T>
where
    T: Serialize + Send + 'static,
    F: FnOnce() -> Result<T, CoreError> + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => Ok(Json(r?)),
        Err(e) => Err(ApiError::Internal(format!("worker failed: {e}"))),
    }
}

fn body<T: DeserializeOwned>(b: Body<T>) -> Result<T, ApiError> {
    Ok(b?.0)
}

async fn health() -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    })
}

async fn synth(b: Body<SynthRequest>) -> Reply<DatasetPayload> {
    let req = body(b)?;
    blocking(move || ops::synth(req)).await
}

async fn train_ptm(b: Body<TrainPtmRequest>) -> Reply<TrainPtmResponse> {
    let req = body(b)?;
    blocking(move || ops::train_ptm(req)).await
}

async fn transfer_matrix(b: Body<TransferMatrixRequest>) -> Reply<seqfusion_core::zoo::TransferMatrix> {
    let req = body(b)?;
    blocking(move || ops::transfer_matrix(req)).await
}

async fn train_extractor(b: Body<TrainExtractorRequest>) -> Reply<TrainExtractorResponse> {
    let req = body(b)?;
    blocking(move || ops::train_extractor_op(req)).await
}

async fn build_zoo(b: Body<BuildZooRequest>) -> Reply<FileBundle> {
    let req = body(b)?;
    blocking(move || ops::build_zoo(req)).await
}

async fn embed(State(s): Shared, b: Body<EmbedRequest>) -> Reply<EmbedResponse> {
    let req = body(b)?;
    blocking(move || ops::embed(&*s.zoos.get_or_load(&req.zoo)?, &req)).await
}

async fn forecast(State(s): Shared, b: Body<ForecastRequest>) -> Reply<ForecastResponse> {
    let req = body(b)?;
    blocking(move || ops::forecast(&*s.zoos.get_or_load(&req.zoo)?, &req)).await
}

async fn evaluate(b: Body<EvaluateRequest>) -> Reply<EvaluateResponse> {
    let req = body(b)?;
    blocking(move || ops::evaluate(req)).await
}

async fn benchmark(State(s): Shared, b: Body<BenchmarkRequest>) -> Reply<BenchmarkResponse> {
    let req = body(b)?;
    blocking(move || {
        let zoo = req.zoo.as_ref().map(|z| s.zoos.get_or_load(z)).transpose()?;
        ops::benchmark(zoo.as_deref(), &req)
    })
    .await
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/synth", post(synth))
        .route("/v1/train-ptm", post(train_ptm))
        .route("/v1/transfer-matrix", post(transfer_matrix))
        .route("/v1/train-extractor", post(train_extractor))
        .route("/v1/build-zoo", post(build_zoo))
        .route("/v1/embed", post(embed))
        .route("/v1/forecast", post(forecast))
        .route("/v1/evaluate", post(evaluate))
        .route("/v1/benchmark", post(benchmark))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(listener: TcpListener, shutdown: impl std::future::Future<Output = ()> + Send + 'static) -> std::io::Result<()> {
    axum::serve(listener, router(Arc::default()))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Binds `addr` and serves in a background task; returns the bound address.
pub async fn spawn(addr: SocketAddr) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    tokio::spawn(async move {
        if let Err(e) = serve(listener, std::future::pending()).await {
            tracing::error!("server stopped: {e}");
        }
    });
    Ok(local)
}
