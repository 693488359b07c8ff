//! Typed HTTP client for the seqfusion service.

use serde::de::DeserializeOwned;
use serde::Serialize;

use seqfusion_core::api::*;
use seqfusion_core::zoo::TransferMatrix;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    /// The service answered with an error body.
    #[error("{message}")]
    Service { status: u16, message: String },
    #[error("request to {url} failed: {source}")]
    Transport {
        url: String,
        #[source]
        source: reqwest::Error,
    },
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Self {
            base: base.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    async fn decode<R: DeserializeOwned>(&self, url: String, resp: reqwest::Response) -> Result<R> {
        let status = resp.status();
        if status.is_success() {
            return resp.json().await.map_err(|source| ClientError::Transport { url, source });
        }
        let text = resp.text().await.unwrap_or_default();
        let message = serde_json::from_str::<ErrorBody>(&text)
            .map(|b| b.error)
            .unwrap_or(text);
        Err(ClientError::Service {
            status: status.as_u16(),
            message,
        })
    }

    async fn post<B: Serialize, R: DeserializeOwned>(&self, route: &str, body: &B) -> Result<R> {
        let url = format!("{}/v1/{route}", self.base);
        let resp = self
            .http
            .post(&url)
            .json(body)
            .send()
            .await
            .map_err(|source| ClientError::Transport { url: url.clone(), source })?;
        self.decode(url, resp).await
    }

    pub async fn health(&self) -> Result<Health> {
        let url = format!("{}/health", self.base);
        let resp = self
            .http
            .get(&url)
            .send()
            .await
            .map_err(|source| ClientError::Transport { url: url.clone(), source })?;
        self.decode(url, resp).await
    }

    pub async fn synth(&self, req: &SynthRequest) -> Result<DatasetPayload> {
        self.post("synth", req).await
    }

    pub async fn train_ptm(&self, req: &TrainPtmRequest) -> Result<TrainPtmResponse> {
        self.post("train-ptm", req).await
    }

    pub async fn transfer_matrix(&self, req: &TransferMatrixRequest) -> Result<TransferMatrix> {
        self.post("transfer-matrix", req).await
    }

    pub async fn train_extractor(&self, req: &TrainExtractorRequest) -> Result<TrainExtractorResponse> {
        self.post("train-extractor", req).await
    }

    pub async fn build_zoo(&self, req: &BuildZooRequest) -> Result<FileBundle> {
        self.post("build-zoo", req).await
    }

    pub async fn embed(&self, req: &EmbedRequest) -> Result<EmbedResponse> {
        self.post("embed", req).await
    }

    pub async fn forecast(&self, req: &ForecastRequest) -> Result<ForecastResponse> {
        self.post("forecast", req).await
    }

    pub async fn evaluate(&self, req: &EvaluateRequest) -> Result<EvaluateResponse> {
        self.post("evaluate", req).await
    }

    pub async fn benchmark(&self, req: &BenchmarkRequest) -> Result<BenchmarkResponse> {
        self.post("benchmark", req).await
    }
}
