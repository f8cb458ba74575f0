//! HTTP/JSON front end over the catalogs, placement jobs, workflow runs and
//! the simulated NFVI. Handlers only decode, delegate and re-encode.

mod error;

use std::future::Future;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use tokio::net::TcpListener;

use oplaceran_core::api::{
    DeploymentSubmission, ErrorCode, PlacementSubmission, RunResponse, SeqResponse, TokenResponse,
};
use oplaceran_core::catalogs::{CatalogError, Catalogs, SolverDescriptor};
use oplaceran_core::deployer::{export_timeline, NfviSimulator, TimelineConfig};
use oplaceran_core::model::{CrosshaulTopology, NfviResourceEntry};
use oplaceran_core::optimizer::jobs::{JobRunner, JobRunnerConfig};
use oplaceran_core::optimizer::{PlacementRequest, Solver, SolverRegistry};
use oplaceran_core::placer::{ExternalInputs, Placer, PlacerConfig};
use oplaceran_core::scenario::Scenario;

pub use error::Failure;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Catalogs, job tickets and run records persist here when set.
    pub data_dir: Option<PathBuf>,
    pub job_workers: usize,
    pub poll_interval: Duration,
    pub timeline: TimelineConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: None,
            job_workers: 2,
            poll_interval: Duration::from_millis(50),
            timeline: TimelineConfig::default(),
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    placer: Arc<Placer>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> anyhow::Result<Self> {
        let dir = config.data_dir.as_ref();
        let catalogs = match dir {
            Some(d) => Catalogs::open(d.join("catalogs")).context("opening catalogs")?,
            None => Catalogs::in_memory(),
        };
        let registry = Arc::new(SolverRegistry::with_builtins());
        for d in registry.descriptors() {
            match catalogs.register_solver(d) {
                Ok(()) | Err(CatalogError::DuplicateId(_)) => {}
                Err(e) => return Err(e).context("registering built-in solvers"),
            }
        }
        let jobs = JobRunner::new(
            registry,
            JobRunnerConfig {
                workers: config.job_workers,
                store: dir.map(|d| d.join("jobs")),
            },
        )
        .context("starting job runner")?;

        // simulated deployments do not outlive the process, so the VIM
        // restarts from bare capacities
        let sim = match catalogs.topology() {
            Some(t) => {
                let entries: Vec<NfviResourceEntry> = catalogs
                    .nfvi()
                    .entries
                    .iter()
                    .map(|e| NfviResourceEntry::new(e.node.clone(), e.capacity))
                    .collect();
                NfviSimulator::new(&t.with_full_residuals(), &entries, config.timeline.clone())
            }
            None => NfviSimulator::new(&CrosshaulTopology::default(), &[], config.timeline.clone()),
        }
        .context("starting NFVI simulator")?;

        let placer = Placer::new(
            Arc::new(catalogs),
            Arc::new(jobs),
            Arc::new(sim),
            PlacerConfig {
                poll_interval: config.poll_interval,
                store: dir.map(|d| d.join("runs")),
            },
        )
        .context("starting placer")?;
        Ok(AppState {
            placer: Arc::new(placer),
        })
    }

    pub fn placer(&self) -> &Arc<Placer> {
        &self.placer
    }

    /// Add a solver next to the built-ins.
    pub fn register_solver(&self, descriptor: SolverDescriptor, solver: Arc<dyn Solver>) -> anyhow::Result<()> {
        self.placer.jobs().registry().register(descriptor.clone(), solver)?;
        self.placer.catalogs().register_solver(descriptor)?;
        Ok(())
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/catalog/topology", put(put_topology).get(get_topology))
        .route("/catalog/nfvi", get(get_nfvi))
        .route("/catalog/nfvi/refresh", post(refresh_nfvi))
        .route("/catalog/solvers", get(get_solvers))
        .route("/catalog/cnfs", get(get_cnfs))
        .route("/placements", post(post_placement))
        .route("/placements/{token}", get(get_placement))
        .route("/orchestrations", post(post_orchestration))
        .route("/orchestrations/{run_id}", get(get_orchestration))
        .route("/deployments", post(post_deployment))
        .route("/deployments/{id}", get(get_deployment).delete(delete_deployment))
        .route("/deployments/{id}/timeline", get(get_timeline))
        .route("/metrics", get(get_metrics))
        .fallback(|| async { Failure::new(ErrorCode::NotFound, "no such endpoint") })
        .with_state(state)
}

/// Serve until `shutdown` resolves.
pub async fn serve_with_shutdown(
    listener: TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    if let Ok(addr) = listener.local_addr() {
        tracing::info!(%addr, "listening");
    }
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

/// Serve until Ctrl-C.
pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    serve_with_shutdown(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}

type Reply<T> = Result<T, Failure>;

fn decode<T: DeserializeOwned>(body: &[u8]) -> Reply<T> {
    serde_json::from_slice(body).map_err(|e| Failure::new(ErrorCode::BadRequest, format!("malformed body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Reply<T> + Send + 'static) -> Reply<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| Failure::new(ErrorCode::Internal, e.to_string()))?
}

/// Accepts a full scenario document (its NFVI entries provision the VIM) or
/// a bare topology (current capacities are kept).
async fn put_topology(State(s): State<AppState>, body: Bytes) -> Reply<Json<CrosshaulTopology>> {
    let value: serde_json::Value = decode(&body)?;
    let (topology, entries) = if value.get("topology").is_some() {
        let scenario: Scenario = decode(&body)?;
        let problems = scenario.problems();
        if !problems.is_empty() {
            return Err(Failure::new(ErrorCode::BadRequest, "invalid scenario").detail(problems));
        }
        (scenario.topology, Some(scenario.nfvi))
    } else {
        (decode::<CrosshaulTopology>(&body)?, None)
    };
    let placer = s.placer.clone();
    blocking(move || {
        let entries = match entries {
            Some(e) => e,
            None => placer.simulator().nfvi_entries()?,
        };
        placer.provision(&topology, &entries)?;
        Ok(())
    })
    .await?;
    get_topology(State(s)).await
}

async fn get_topology(State(s): State<AppState>) -> Reply<Json<CrosshaulTopology>> {
    let t = s.placer.catalogs().topology().ok_or(CatalogError::NoTopology)?;
    Ok(Json((*t).clone()))
}

async fn get_nfvi(State(s): State<AppState>) -> impl IntoResponse {
    Json((*s.placer.catalogs().nfvi()).clone())
}

async fn refresh_nfvi(State(s): State<AppState>) -> Reply<Json<SeqResponse>> {
    let placer = s.placer.clone();
    let seq = blocking(move || Ok(placer.refresh_nfvi_view()?)).await?;
    Ok(Json(SeqResponse { seq }))
}

async fn get_solvers(State(s): State<AppState>) -> impl IntoResponse {
    Json(s.placer.catalogs().solvers())
}

async fn get_cnfs(State(s): State<AppState>) -> impl IntoResponse {
    Json(s.placer.catalogs().cnf_images())
}

fn placement_request(s: &AppState, sub: PlacementSubmission) -> Reply<PlacementRequest> {
    let mut request = match sub.scenario {
        Some(scenario) => {
            let mut r = PlacementRequest::from_scenario(&scenario);
            if let Some(chains) = sub.chains {
                r.chains = chains;
            }
            r
        }
        None => {
            let catalogs = s.placer.catalogs();
            let chains = sub.chains.ok_or_else(|| {
                Failure::new(ErrorCode::BadRequest, "chains are required when no scenario is given")
            })?;
            let topology = catalogs.topology().ok_or(CatalogError::NoTopology)?;
            let nfvi = catalogs.nfvi();
            PlacementRequest {
                topology: (*topology).clone(),
                nfvi: nfvi.entries.clone(),
                chains,
                split_profile: Default::default(),
                cnf_specs: catalogs.cnf_spec_set()?,
                solver_id: String::new(),
                nfvi_seq: nfvi.seq,
            }
        }
    };
    if let Some(p) = sub.split_profile {
        request.split_profile = p;
    }
    request.solver_id = sub.solver_id;
    Ok(request)
}

async fn post_placement(State(s): State<AppState>, body: Bytes) -> Reply<(StatusCode, Json<TokenResponse>)> {
    let sub: PlacementSubmission = decode(&body)?;
    let request = placement_request(&s, sub)?;
    let token = s.placer.jobs().submit(request)?;
    Ok((StatusCode::ACCEPTED, Json(TokenResponse { token })))
}

async fn get_placement(State(s): State<AppState>, Path(token): Path<String>) -> Reply<impl IntoResponse> {
    Ok(Json(s.placer.jobs().status(&token)?))
}

async fn post_orchestration(State(s): State<AppState>, body: Bytes) -> Reply<(StatusCode, Json<RunResponse>)> {
    let inputs: ExternalInputs = decode(&body)?;
    let run_id = s.placer.begin_workflow(inputs);
    Ok((StatusCode::ACCEPTED, Json(RunResponse { run_id })))
}

async fn get_orchestration(State(s): State<AppState>, Path(run_id): Path<String>) -> Reply<impl IntoResponse> {
    Ok(Json(s.placer.run(&run_id)?))
}

async fn post_deployment(State(s): State<AppState>, body: Bytes) -> Reply<impl IntoResponse> {
    let sub: DeploymentSubmission = decode(&body)?;
    let placer = s.placer.clone();
    let record = match (sub.token, sub.plan) {
        (Some(token), None) => blocking(move || Ok(placer.deploy_token(&token)?)).await?,
        (None, Some(plan)) => blocking(move || Ok(placer.deploy_plan(plan)?)).await?,
        _ => return Err(Failure::new(ErrorCode::BadRequest, "give exactly one of token or plan")),
    };
    Ok((StatusCode::CREATED, Json(record)))
}

async fn get_deployment(State(s): State<AppState>, Path(id): Path<String>) -> Reply<impl IntoResponse> {
    Ok(Json(s.placer.simulator().deployment(&id)?))
}

async fn delete_deployment(State(s): State<AppState>, Path(id): Path<String>) -> Reply<impl IntoResponse> {
    let placer = s.placer.clone();
    let record = blocking(move || Ok(placer.simulator().release_deployment(&id)?)).await?;
    Ok(Json(record))
}

async fn get_timeline(State(s): State<AppState>, Path(id): Path<String>) -> Reply<impl IntoResponse> {
    let record = s.placer.simulator().deployment(&id)?;
    Ok((
        [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
        export_timeline(&record.timeline),
    ))
}

async fn get_metrics(State(s): State<AppState>) -> impl IntoResponse {
    Json(s.placer.simulator().cluster_metrics())
}
