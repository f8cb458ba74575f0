//! The orchestration workflow: collect inputs, refresh the NFVI view, commit
//! catalogs, solve, and hand the result to the deployer, logging one event
//! per step.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

use crate::catalogs::{CatalogError, Catalogs, CnfImageEntry};
use crate::deployer::{build_allocation_plan, AllocationPlan, DeployError, DeploymentRecord, Marker, NfviSimulator};
use crate::model::{Chain, CrosshaulTopology, NfviResourceEntry, SplitProfile};
use crate::optimizer::jobs::{JobError, JobRunner, JobStatus};
use crate::optimizer::{diagnose_infeasibility, PlacementRequest, PlacementResult};
use crate::scenario::Scenario;

/// Step names, indexed by step number minus one.
pub const STEP_NAMES: [&str; 20] = [
    "inputs collected",
    "inputs validated",
    "VIM CR update requested",
    "NFVI view requested",
    "NFVI view returned",
    "NFVI update notified",
    "NFVI view updated",
    "topology inputs catalog updated",
    "NFVI resources catalog updated",
    "solver selected",
    "placement request submitted",
    "placement ticket polled",
    "placement returned",
    "plan sent to deployer",
    "CNF images requested",
    "CNF images fetched",
    "CNFs sent to VNFM",
    "CNF pods started",
    "VNFs allocated",
    "notification",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologySource {
    /// Provision the VIM from this scenario document when it differs.
    Scenario { scenario: Box<Scenario> },
    /// Use whatever the catalogs and the VIM currently hold.
    Catalog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalInputs {
    pub operator_chains: Vec<Chain>,
    pub topology_source: TopologySource,
    pub solver_id: String,
}

impl ExternalInputs {
    /// Chains and topology taken from `scenario`.
    pub fn from_scenario(scenario: &Scenario, solver_id: impl Into<String>) -> Self {
        ExternalInputs {
            operator_chains: scenario.chains.clone(),
            topology_source: TopologySource::Scenario {
                scenario: Box::new(scenario.clone()),
            },
            solver_id: solver_id.into(),
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.operator_chains.is_empty() {
            out.push("no chains given".to_string());
        }
        let mut ids = std::collections::BTreeSet::new();
        for c in &self.operator_chains {
            if !ids.insert(&c.chain_id) {
                out.push(format!("duplicate chain id {}", c.chain_id));
            }
        }
        if let TopologySource::Scenario { scenario } = &self.topology_source {
            let mut s = (**scenario).clone();
            s.chains = self.operator_chains.clone();
            out.extend(s.problems());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkflowEvent {
    pub step: u8,
    pub name: String,
    pub at: DateTime<Utc>,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Deployed,
    Infeasible,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureKind {
    ValidationError,
    CatalogUnavailable,
    OptimizerFailure,
    DeployerFailure,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrchestrationRecord {
    pub run_id: String,
    pub events: Vec<WorkflowEvent>,
    /// `None` while the run is in progress.
    pub outcome: Option<Outcome>,
    pub placement: Option<PlacementResult>,
    pub deployment_id: Option<String>,
    pub failure: Option<Failure>,
    pub token: Option<String>,
}

impl OrchestrationRecord {
    fn new(run_id: String) -> Self {
        OrchestrationRecord {
            run_id,
            events: Vec::new(),
            outcome: None,
            placement: None,
            deployment_id: None,
            failure: None,
            token: None,
        }
    }

    /// Last step that completed, 0 if none.
    pub fn last_step(&self) -> u8 {
        self.events.last().map_or(0, |e| e.step)
    }
}

#[derive(Debug, Error)]
pub enum PlacerError {
    #[error("unknown run {0}")]
    UnknownRun(String),
    #[error("invalid inputs: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("placement {token} is {status:?}")]
    NotReady { token: String, status: JobStatus },
    #[error("placement {token} is infeasible: {reason}")]
    Infeasible { token: String, reason: String },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Deploy(#[from] DeployError),
    #[error(transparent)]
    Job(#[from] JobError),
}

#[derive(Debug, Clone)]
pub struct PlacerConfig {
    /// Ticket polling interval.
    pub poll_interval: Duration,
    /// Directory for run records; `None` keeps them in memory.
    pub store: Option<PathBuf>,
}

impl Default for PlacerConfig {
    fn default() -> Self {
        PlacerConfig {
            poll_interval: Duration::from_millis(50),
            store: None,
        }
    }
}

pub struct Placer {
    catalogs: Arc<Catalogs>,
    jobs: Arc<JobRunner>,
    sim: Arc<NfviSimulator>,
    runs: RwLock<HashMap<String, OrchestrationRecord>>,
    config: PlacerConfig,
    /// Serializes VIM provisioning and catalog commits across runs.
    sync: Mutex<()>,
}

/// What steps 03-09 committed.
struct Synced {
    topology: CrosshaulTopology,
    entries: Vec<NfviResourceEntry>,
    seq: u64,
}

enum Abort {
    Failed(Failure),
    Infeasible(Failure),
}

fn failure(kind: FailureKind, message: impl Into<String>) -> Abort {
    Abort::Failed(Failure {
        kind,
        message: message.into(),
        details: Vec::new(),
    })
}

impl Placer {
    pub fn new(
        catalogs: Arc<Catalogs>,
        jobs: Arc<JobRunner>,
        sim: Arc<NfviSimulator>,
        config: PlacerConfig,
    ) -> Result<Self, PlacerError> {
        let mut runs = HashMap::new();
        if let Some(dir) = &config.store {
            fs::create_dir_all(dir).map_err(CatalogError::from)?;
            for entry in fs::read_dir(dir).map_err(CatalogError::from)? {
                let path = entry.map_err(CatalogError::from)?.path();
                let Ok(bytes) = fs::read(&path) else { continue };
                let Ok(mut r) = serde_json::from_slice::<OrchestrationRecord>(&bytes) else {
                    continue;
                };
                if r.outcome.is_none() {
                    r.outcome = Some(Outcome::Failed);
                    r.failure = Some(Failure {
                        kind: FailureKind::DeployerFailure,
                        message: "interrupted by restart".into(),
                        details: Vec::new(),
                    });
                }
                runs.insert(r.run_id.clone(), r);
            }
        }
        Ok(Placer {
            catalogs,
            jobs,
            sim,
            runs: RwLock::new(runs),
            config,
            sync: Mutex::new(()),
        })
    }

    pub fn catalogs(&self) -> &Arc<Catalogs> {
        &self.catalogs
    }

    pub fn jobs(&self) -> &Arc<JobRunner> {
        &self.jobs
    }

    pub fn simulator(&self) -> &Arc<NfviSimulator> {
        &self.sim
    }

    pub fn run(&self, run_id: &str) -> Result<OrchestrationRecord, PlacerError> {
        self.runs
            .read()
            .get(run_id)
            .cloned()
            .ok_or_else(|| PlacerError::UnknownRun(run_id.to_owned()))
    }

    fn publish(&self, record: &OrchestrationRecord) {
        if let Some(dir) = &self.config.store {
            // losing a write only costs restart durability for this run
            let _ = crate::catalogs::write_doc(&dir.join(format!("{}.json", record.run_id)), record);
        }
        self.runs.write().insert(record.run_id.clone(), record.clone());
    }

    /// Run the whole workflow on the calling thread.
    pub fn run_workflow(&self, inputs: ExternalInputs) -> OrchestrationRecord {
        let record = OrchestrationRecord::new(Uuid::new_v4().simple().to_string());
        self.publish(&record);
        self.execute(record, inputs)
    }

    /// Start the workflow on a background thread; poll with [`Placer::run`].
    pub fn begin_workflow(self: &Arc<Self>, inputs: ExternalInputs) -> String {
        let record = OrchestrationRecord::new(Uuid::new_v4().simple().to_string());
        let run_id = record.run_id.clone();
        self.publish(&record);
        let this = self.clone();
        std::thread::spawn(move || this.execute(record, inputs));
        run_id
    }

    /// Replace the VIM infrastructure and the topology and NFVI catalogs.
    pub fn provision(&self, topology: &CrosshaulTopology, entries: &[NfviResourceEntry]) -> Result<u64, PlacerError> {
        let _g = self.sync.lock();
        let report = crate::topology::validate_topology(topology);
        if !report.is_ok() {
            return Err(PlacerError::Validation(
                report.violations.iter().map(ToString::to_string).collect(),
            ));
        }
        self.sim.reprovision(topology, entries)?;
        self.commit_view().map(|s| s.seq)
    }

    /// Pull the VIM's current view into the catalogs.
    pub fn refresh_nfvi_view(&self) -> Result<u64, PlacerError> {
        let _g = self.sync.lock();
        self.commit_view().map(|s| s.seq)
    }

    fn commit_view(&self) -> Result<Synced, PlacerError> {
        let entries = self.sim.nfvi_entries()?;
        let topology = self.sim.topology();
        if self.catalogs.topology().is_none_or(|t| !t.same_shape(&topology)) {
            self.catalogs.clear_nfvi()?;
        }
        if self.catalogs.topology().as_deref() != Some(&topology) {
            self.catalogs.replace_topology(topology.clone())?;
        }
        let seq = self.catalogs.update_nfvi(entries.clone())?;
        let entries = entries
            .into_iter()
            .map(|e| NfviResourceEntry { snapshot_seq: seq, ..e })
            .collect();
        Ok(Synced { topology, entries, seq })
    }

    /// Deploy the result behind a succeeded placement token.
    pub fn deploy_token(&self, token: &str) -> Result<DeploymentRecord, PlacerError> {
        let ticket = self.jobs.status(token)?;
        match ticket.status {
            JobStatus::Succeeded => {}
            JobStatus::Infeasible => {
                return Err(PlacerError::Infeasible {
                    token: token.to_owned(),
                    reason: ticket.reason.unwrap_or_default(),
                })
            }
            status => {
                return Err(PlacerError::NotReady {
                    token: token.to_owned(),
                    status,
                })
            }
        }
        let result = ticket.result.expect("succeeded tickets carry a result");
        let plan = build_allocation_plan(&result, &self.catalogs)?;
        Ok(self.sim.apply_plan(plan)?)
    }

    pub fn deploy_plan(&self, plan: AllocationPlan) -> Result<DeploymentRecord, PlacerError> {
        Ok(self.sim.apply_plan(plan)?)
    }

    fn execute(&self, mut record: OrchestrationRecord, inputs: ExternalInputs) -> OrchestrationRecord {
        let result = self.steps(&mut record, &inputs);
        match result {
            Ok(()) => record.outcome = Some(Outcome::Deployed),
            Err(Abort::Infeasible(f)) => {
                record.outcome = Some(Outcome::Infeasible);
                record.failure = Some(f);
            }
            Err(Abort::Failed(f)) => {
                record.outcome = Some(Outcome::Failed);
                record.failure = Some(f);
            }
        }
        self.publish(&record);
        record
    }

    fn step(&self, record: &mut OrchestrationRecord, step: u8, detail: impl Into<String>) {
        debug_assert_eq!(step, record.last_step() + 1);
        record.events.push(WorkflowEvent {
            step,
            name: STEP_NAMES[step as usize - 1].to_owned(),
            at: Utc::now(),
            detail: detail.into(),
        });
        self.publish(record);
    }

    fn steps(&self, record: &mut OrchestrationRecord, inputs: &ExternalInputs) -> Result<(), Abort> {
        let source = match &inputs.topology_source {
            TopologySource::Scenario { .. } => "scenario",
            TopologySource::Catalog => "catalog",
        };
        self.step(
            record,
            1,
            format!(
                "{} chains, solver {}, topology from {source}",
                inputs.operator_chains.len(),
                inputs.solver_id
            ),
        );

        let mut problems = inputs.problems();
        if !self.jobs.registry().contains(&inputs.solver_id) {
            problems.push(format!("unknown solver {}", inputs.solver_id));
        }
        if !problems.is_empty() {
            return Err(Abort::Failed(Failure {
                kind: FailureKind::ValidationError,
                message: "invalid external inputs".into(),
                details: problems,
            }));
        }
        self.step(record, 2, "inputs valid");

        let (synced, split_profile) = {
            let _g = self.sync.lock();
            let (detail, profile) = match &inputs.topology_source {
                TopologySource::Scenario { scenario } => {
                    let detail = if self.sim.provisioned_from(&scenario.topology, &scenario.nfvi) {
                        "VIM already matches the scenario"
                    } else {
                        self.sim
                            .reprovision(&scenario.topology, &scenario.nfvi)
                            .map_err(|e| failure(FailureKind::CatalogUnavailable, e.to_string()))?;
                        "VIM provisioned from the scenario"
                    };
                    if self.catalogs.cnf_spec_set().ok().as_ref() != Some(&scenario.cnf_specs) {
                        let entries = Vec::<crate::model::CnfSpec>::from(scenario.cnf_specs.clone())
                            .into_iter()
                            .map(CnfImageEntry::from)
                            .collect();
                        self.catalogs
                            .replace_cnfs(entries)
                            .map_err(|e| failure(FailureKind::CatalogUnavailable, e.to_string()))?;
                    }
                    (detail, scenario.split_profile)
                }
                TopologySource::Catalog => {
                    if self.catalogs.topology().is_none() {
                        return Err(failure(FailureKind::CatalogUnavailable, CatalogError::NoTopology.to_string()));
                    }
                    ("VIM keeps its current CRs", SplitProfile::default())
                }
            };
            self.step(record, 3, detail);

            if !self.sim.is_running() {
                return Err(failure(FailureKind::CatalogUnavailable, DeployError::SimulatorUnavailable.to_string()));
            }
            self.step(record, 4, "asked the VIM for the NFVI view");
            let entries = self
                .sim
                .nfvi_entries()
                .map_err(|e| failure(FailureKind::CatalogUnavailable, e.to_string()))?;
            self.step(record, 5, format!("{} compute nodes reported", entries.len()));
            self.step(record, 6, "VIM notified the NFVI update");
            self.step(record, 7, "NFVI view confirmed");

            let synced = self
                .commit_view()
                .map_err(|e| failure(FailureKind::CatalogUnavailable, e.to_string()))?;
            self.step(
                record,
                8,
                format!(
                    "{} nodes, {} links",
                    synced.topology.nodes.len(),
                    synced.topology.links.len()
                ),
            );
            self.step(record, 9, format!("NFVI snapshot seq {}", synced.seq));
            (synced, profile)
        };

        let cnf_specs = self
            .catalogs
            .cnf_spec_set()
            .map_err(|e| failure(FailureKind::CatalogUnavailable, e.to_string()))?;
        let request = PlacementRequest {
            topology: synced.topology,
            nfvi: synced.entries,
            chains: inputs.operator_chains.clone(),
            split_profile,
            cnf_specs,
            solver_id: inputs.solver_id.clone(),
            nfvi_seq: synced.seq,
        };
        self.step(
            record,
            10,
            format!("solver {}, NFVI seq {}", request.solver_id, request.nfvi_seq),
        );

        let token = self
            .jobs
            .submit(request.clone())
            .map_err(|e| failure(FailureKind::OptimizerFailure, e.to_string()))?;
        record.token = Some(token.clone());
        self.step(record, 11, format!("token {token}"));

        let (ticket, polls) = self
            .jobs
            .wait(&token, self.config.poll_interval)
            .map_err(|e| failure(FailureKind::OptimizerFailure, e.to_string()))?;
        self.step(record, 12, format!("{polls} polls"));

        match ticket.status {
            JobStatus::Succeeded => {}
            JobStatus::Infeasible => {
                self.step(record, 13, "infeasible");
                return Err(Abort::Infeasible(Failure {
                    kind: FailureKind::Infeasible,
                    message: ticket.reason.unwrap_or_else(|| "infeasible".into()),
                    details: diagnose_infeasibility(&request),
                }));
            }
            _ => {
                self.step(record, 13, "solver failed");
                return Err(failure(
                    FailureKind::OptimizerFailure,
                    ticket.error.unwrap_or_else(|| "solver failed".into()),
                ));
            }
        }
        let result = ticket.result.expect("succeeded tickets carry a result");
        record.placement = Some(result.clone());
        self.step(
            record,
            13,
            format!(
                "cr_count {}, cn_distance {}",
                result.objective.cr_count, result.objective.cn_distance
            ),
        );

        let deploy_err = |e: DeployError| failure(FailureKind::DeployerFailure, e.to_string());
        let plan = build_allocation_plan(&result, &self.catalogs).map_err(deploy_err)?;
        self.step(record, 14, format!("plan {} with {} pods", plan.plan_id, plan.pod_specs.len()));

        let mut images: Vec<&str> = plan.pod_specs.iter().map(|p| p.image_ref.as_str()).collect();
        images.sort_unstable();
        images.dedup();
        self.step(record, 15, images.join(", "));
        self.step(record, 16, format!("{} images", images.len()));

        let rec = self.sim.begin_apply(plan).map_err(deploy_err)?;
        let id = rec.deployment_id.clone();
        record.deployment_id = Some(id.clone());
        self.step(record, 17, format!("deployment {id}"));

        // from here on a failure must hand back everything this run reserved
        let rollback = |e: DeployError| {
            let _ = self.sim.release_deployment(&id);
            deploy_err(e)
        };
        let rec = self.sim.advance_to(&id, Marker::PodsStarted).map_err(rollback)?;
        self.step(record, 18, format!("{} pods starting", rec.pods.len()));
        let rec = self.sim.advance_to(&id, Marker::T1).map_err(rollback)?;
        self.step(record, 19, format!("deployment {id} {:?}", rec.status));
        let rec = self.sim.advance_to(&id, Marker::T7).map_err(rollback)?;
        let last = rec.timeline.last().map_or("t0", |e| e.marker.name());
        self.step(record, 20, format!("deployment {id} active, timeline through {last}"));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::jobs::JobRunnerConfig;
    use crate::optimizer::SolverRegistry;
    use crate::scenario::{canonical_scenario, load_scenario};

    fn placer() -> Placer {
        let jobs = JobRunner::new(Arc::new(SolverRegistry::with_builtins()), JobRunnerConfig::default()).unwrap();
        Placer::new(
            Arc::new(Catalogs::in_memory()),
            Arc::new(jobs),
            Arc::new(NfviSimulator::empty()),
            PlacerConfig {
                poll_interval: Duration::from_millis(5),
                store: None,
            },
        )
        .unwrap()
    }

    fn steps(r: &OrchestrationRecord) -> Vec<u8> {
        r.events.iter().map(|e| e.step).collect()
    }

    #[test]
    fn canonical_run_deploys_in_twenty_steps() {
        let p = placer();
        let r = p.run_workflow(ExternalInputs::from_scenario(&canonical_scenario(), "aggregation-max"));
        assert_eq!(r.outcome, Some(Outcome::Deployed), "{:?}", r.failure);
        assert_eq!(steps(&r), (1..=20).collect::<Vec<_>>());
        for e in &r.events {
            assert_eq!(e.name, STEP_NAMES[e.step as usize - 1]);
        }
        let id = r.deployment_id.unwrap();
        assert_eq!(p.simulator().active_deployments(), vec![id]);
        assert_eq!(p.run(&r.run_id).unwrap().outcome, Some(Outcome::Deployed));
    }

    #[test]
    fn step_ten_uses_the_step_nine_snapshot() {
        let p = placer();
        let r = p.run_workflow(ExternalInputs::from_scenario(&canonical_scenario(), "greedy"));
        let seq = p.catalogs().nfvi().seq;
        assert_eq!(r.events[8].detail, format!("NFVI snapshot seq {seq}"));
        assert_eq!(r.events[9].detail, format!("solver greedy, NFVI seq {seq}"));
    }

    #[test]
    fn infeasible_stops_at_thirteen() {
        let s = load_scenario(&include_bytes!("../../../fixtures/strict-fronthaul.scn")[..]).unwrap();
        let p = placer();
        let r = p.run_workflow(ExternalInputs::from_scenario(&s, "aggregation-max"));
        assert_eq!(r.outcome, Some(Outcome::Infeasible));
        assert_eq!(r.last_step(), 13);
        assert!(!r.failure.unwrap().details.is_empty());
        assert!(p.simulator().active_deployments().is_empty());
    }

    #[test]
    fn zero_chains_fail_validation_after_step_one() {
        let mut s = canonical_scenario();
        s.chains.clear();
        let r = placer().run_workflow(ExternalInputs::from_scenario(&s, "aggregation-max"));
        assert_eq!(r.outcome, Some(Outcome::Failed));
        assert_eq!(steps(&r), [1]);
        assert_eq!(r.failure.unwrap().kind, FailureKind::ValidationError);
    }

    #[test]
    fn pod_failure_rolls_back_to_pre_run_state() {
        let p = placer();
        let s = canonical_scenario();
        p.provision(&s.topology, &s.nfvi).unwrap();
        let before = p.simulator().state();
        p.simulator().inject_pod_start_failure();
        let r = p.run_workflow(ExternalInputs::from_scenario(&s, "aggregation-max"));
        assert_eq!(r.outcome, Some(Outcome::Failed));
        assert_eq!(r.last_step(), 17);
        assert_eq!(r.failure.unwrap().kind, FailureKind::DeployerFailure);
        assert_eq!(p.simulator().state(), before);
    }

    #[test]
    fn stopped_simulator_fails_at_refresh() {
        let p = placer();
        p.simulator().stop();
        let r = p.run_workflow(ExternalInputs::from_scenario(&canonical_scenario(), "aggregation-max"));
        assert_eq!(r.outcome, Some(Outcome::Failed));
        assert_eq!(r.failure.unwrap().kind, FailureKind::CatalogUnavailable);
        assert!(matches!(p.refresh_nfvi_view(), Err(PlacerError::Deploy(DeployError::SimulatorUnavailable))));
    }

    #[test]
    fn refresh_tracks_consumption() {
        let p = placer();
        let s = canonical_scenario();
        let seq0 = p.provision(&s.topology, &s.nfvi).unwrap();
        let free_w1 = |p: &Placer| p.catalogs().nfvi().entry(&"W1".into()).unwrap().free();
        let before = free_w1(&p);
        let r = p.run_workflow(ExternalInputs::from_scenario(&s, "aggregation-max"));
        let used = r.placement.unwrap().node_loads[&"W1".into()];
        let seq1 = p.refresh_nfvi_view().unwrap();
        assert!(seq1 > seq0);
        assert_eq!(free_w1(&p).cpu, before.cpu - used.cpu);
        let entries = p.catalogs().nfvi().entries.clone();
        let seq2 = p.refresh_nfvi_view().unwrap();
        assert_eq!(seq2, seq1 + 1);
        let strip = |v: Vec<NfviResourceEntry>| -> Vec<NfviResourceEntry> {
            v.into_iter().map(|e| NfviResourceEntry { snapshot_seq: 0, ..e }).collect()
        };
        assert_eq!(strip(p.catalogs().nfvi().entries.clone()), strip(entries));
    }

    #[test]
    fn catalog_source_needs_a_topology() {
        let mut inputs = ExternalInputs::from_scenario(&canonical_scenario(), "aggregation-max");
        inputs.topology_source = TopologySource::Catalog;
        let r = placer().run_workflow(inputs);
        assert_eq!(r.failure.as_ref().unwrap().kind, FailureKind::CatalogUnavailable);
        assert_eq!(r.last_step(), 2);
    }

    #[test]
    fn second_run_sees_first_runs_reservations() {
        let p = placer();
        let s = canonical_scenario();
        let first = p.run_workflow(ExternalInputs::from_scenario(&s, "aggregation-max"));
        assert_eq!(first.outcome, Some(Outcome::Deployed));
        // the same four chains no longer fit next to the first deployment
        let second = p.run_workflow(ExternalInputs::from_scenario(&s, "aggregation-max"));
        assert_eq!(second.outcome, Some(Outcome::Infeasible));
        p.simulator().release_deployment(&first.deployment_id.unwrap()).unwrap();
        let third = p.run_workflow(ExternalInputs::from_scenario(&s, "aggregation-max"));
        assert_eq!(third.outcome, Some(Outcome::Deployed));
        assert_eq!(
            third.placement.unwrap().without_timing().placements,
            first.placement.unwrap().without_timing().placements
        );
    }

    #[test]
    fn background_run_is_observable() {
        let p = Arc::new(placer());
        let id = p.begin_workflow(ExternalInputs::from_scenario(&canonical_scenario(), "du-pinned"));
        let r = loop {
            let r = p.run(&id).unwrap();
            if r.outcome.is_some() {
                break r;
            }
            std::thread::sleep(Duration::from_millis(5));
        };
        assert_eq!(r.outcome, Some(Outcome::Deployed));
        assert!(matches!(p.run("nope"), Err(PlacerError::UnknownRun(_))));
    }

    #[test]
    fn runs_survive_restart() {
        let dir = tempfile::tempdir().unwrap();
        let make = || {
            let jobs = JobRunner::new(Arc::new(SolverRegistry::with_builtins()), JobRunnerConfig::default()).unwrap();
            Placer::new(
                Arc::new(Catalogs::in_memory()),
                Arc::new(jobs),
                Arc::new(NfviSimulator::empty()),
                PlacerConfig {
                    poll_interval: Duration::from_millis(5),
                    store: Some(dir.path().to_path_buf()),
                },
            )
            .unwrap()
        };
        let r = make().run_workflow(ExternalInputs::from_scenario(&canonical_scenario(), "greedy"));
        assert_eq!(make().run(&r.run_id).unwrap(), r);
    }
}
