//! Typed client for the oplaceran HTTP service.

use std::time::Duration;

use reqwest::{Method, RequestBuilder, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use oplaceran_core::api::{
    ApiError, DeploymentSubmission, PlacementSubmission, RunResponse, SeqResponse, TokenResponse,
};
use oplaceran_core::catalogs::{CnfImageEntry, NfviSnapshot, SolverDescriptor};
use oplaceran_core::deployer::{ClusterMetrics, DeploymentRecord};
use oplaceran_core::model::CrosshaulTopology;
use oplaceran_core::optimizer::jobs::JobTicket;
use oplaceran_core::placer::{ExternalInputs, OrchestrationRecord};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("{status}: {error}")]
    Api { status: StatusCode, error: ApiError },
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("unexpected response ({status}): {body}")]
    Unexpected { status: StatusCode, body: String },
}

impl ClientError {
    pub fn api(&self) -> Option<&ApiError> {
        match self {
            ClientError::Api { error, .. } => Some(error),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base_url` such as `http://127.0.0.1:8080`.
    pub fn new(base_url: impl Into<String>) -> Self {
        Client {
            base: base_url.into().trim_end_matches('/').to_owned(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        self.http.request(method, format!("{}{path}", self.base))
    }

    async fn send_raw(&self, req: RequestBuilder) -> Result<String, ClientError> {
        let resp = req.send().await?;
        let status = resp.status();
        let body = resp.text().await?;
        if status.is_success() {
            return Ok(body);
        }
        match serde_json::from_str::<ApiError>(&body) {
            Ok(error) => Err(ClientError::Api { status, error }),
            Err(_) => Err(ClientError::Unexpected { status, body }),
        }
    }

    async fn send<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T, ClientError> {
        let body = self.send_raw(req).await?;
        serde_json::from_str(&body).map_err(|_| ClientError::Unexpected {
            status: StatusCode::OK,
            body,
        })
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        self.send(self.request(Method::GET, path)).await
    }

    async fn post<B: Serialize + ?Sized, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        self.send(self.request(Method::POST, path).json(body)).await
    }

    /// Upload a topology or a whole scenario document.
    pub async fn put_topology<B: Serialize + ?Sized>(&self, doc: &B) -> Result<CrosshaulTopology, ClientError> {
        self.send(self.request(Method::PUT, "/catalog/topology").json(doc)).await
    }

    pub async fn topology(&self) -> Result<CrosshaulTopology, ClientError> {
        self.get("/catalog/topology").await
    }

    pub async fn nfvi(&self) -> Result<NfviSnapshot, ClientError> {
        self.get("/catalog/nfvi").await
    }

    pub async fn refresh_nfvi(&self) -> Result<u64, ClientError> {
        let r: SeqResponse = self.post("/catalog/nfvi/refresh", &()).await?;
        Ok(r.seq)
    }

    pub async fn solvers(&self) -> Result<Vec<SolverDescriptor>, ClientError> {
        self.get("/catalog/solvers").await
    }

    pub async fn cnfs(&self) -> Result<Vec<CnfImageEntry>, ClientError> {
        self.get("/catalog/cnfs").await
    }

    pub async fn submit_placement(&self, sub: &PlacementSubmission) -> Result<String, ClientError> {
        let r: TokenResponse = self.post("/placements", sub).await?;
        Ok(r.token)
    }

    pub async fn placement(&self, token: &str) -> Result<JobTicket, ClientError> {
        self.get(&format!("/placements/{token}")).await
    }

    /// Poll until the ticket is terminal.
    pub async fn wait_placement(&self, token: &str, interval: Duration) -> Result<JobTicket, ClientError> {
        loop {
            let t = self.placement(token).await?;
            if t.status.is_terminal() {
                return Ok(t);
            }
            tokio::time::sleep(interval).await;
        }
    }

    pub async fn start_orchestration(&self, inputs: &ExternalInputs) -> Result<String, ClientError> {
        let r: RunResponse = self.post("/orchestrations", inputs).await?;
        Ok(r.run_id)
    }

    pub async fn orchestration(&self, run_id: &str) -> Result<OrchestrationRecord, ClientError> {
        self.get(&format!("/orchestrations/{run_id}")).await
    }

    /// Poll until the run has an outcome.
    pub async fn wait_orchestration(&self, run_id: &str, interval: Duration) -> Result<OrchestrationRecord, ClientError> {
        loop {
            let r = self.orchestration(run_id).await?;
            if r.outcome.is_some() {
                return Ok(r);
            }
            tokio::time::sleep(interval).await;
        }
    }

    pub async fn deploy(&self, sub: &DeploymentSubmission) -> Result<DeploymentRecord, ClientError> {
        self.post("/deployments", sub).await
    }

    pub async fn deployment(&self, id: &str) -> Result<DeploymentRecord, ClientError> {
        self.get(&format!("/deployments/{id}")).await
    }

    pub async fn release(&self, id: &str) -> Result<DeploymentRecord, ClientError> {
        self.send(self.request(Method::DELETE, &format!("/deployments/{id}"))).await
    }

    /// The `<sim_seconds> <marker> <detail>` export.
    pub async fn timeline(&self, id: &str) -> Result<String, ClientError> {
        self.send_raw(self.request(Method::GET, &format!("/deployments/{id}/timeline"))).await
    }

    pub async fn metrics(&self) -> Result<ClusterMetrics, ClientError> {
        self.get("/metrics").await
    }
}
