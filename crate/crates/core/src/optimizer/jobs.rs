//! Placement jobs: token-addressed, run in the background by a fixed pool of
//! worker threads, polled by status.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use chrono::{DateTime, Utc};
use crossbeam_channel::{unbounded, Sender};
use parking_lot::{Condvar, Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

use super::{PlacementRequest, PlacementResult, SolveError, SolverRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JobStatus {
    Pending,
    Running,
    Succeeded,
    Failed,
    Infeasible,
}

impl JobStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobStatus::Succeeded | JobStatus::Failed | JobStatus::Infeasible)
    }

    fn rank(self) -> u8 {
        match self {
            JobStatus::Pending => 0,
            JobStatus::Running => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobTicket {
    pub token: String,
    pub status: JobStatus,
    pub result: Option<PlacementResult>,
    pub error: Option<String>,
    /// Why no placement exists, for `Infeasible` tickets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub solver_id: String,
    pub submitted_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Error)]
pub enum JobError {
    #[error("unknown token {0}")]
    UnknownToken(String),
    #[error("unknown solver {0}")]
    UnknownSolver(String),
    #[error("invalid request: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("job runner is shut down")]
    ShutDown,
    #[error("persistence failure: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct JobRunnerConfig {
    /// Concurrent jobs.
    pub workers: usize,
    /// Directory holding one document per ticket; `None` keeps tickets in memory.
    pub store: Option<PathBuf>,
}

impl Default for JobRunnerConfig {
    fn default() -> Self {
        JobRunnerConfig {
            workers: 2,
            store: None,
        }
    }
}

struct Shared {
    tickets: RwLock<HashMap<String, JobTicket>>,
    registry: Arc<SolverRegistry>,
    store: Option<PathBuf>,
    generation: Mutex<u64>,
    changed: Condvar,
}

impl Shared {
    fn update(&self, token: &str, f: impl FnOnce(&mut JobTicket)) {
        let snapshot = {
            let mut tickets = self.tickets.write();
            let Some(t) = tickets.get_mut(token) else { return };
            let before = t.status;
            f(t);
            debug_assert!(t.status.rank() >= before.rank(), "ticket status regressed");
            t.clone()
        };
        self.persist(&snapshot);
        *self.generation.lock() += 1;
        self.changed.notify_all();
    }

    fn persist(&self, ticket: &JobTicket) {
        if let Some(dir) = &self.store {
            // a failed write only loses restart durability for this ticket
            let _ = crate::catalogs::write_doc(&dir.join(format!("{}.json", ticket.token)), ticket);
        }
    }
}

struct Job {
    token: String,
    request: PlacementRequest,
}

pub struct JobRunner {
    shared: Arc<Shared>,
    queue: Option<Sender<Job>>,
    threads: Vec<JoinHandle<()>>,
}

impl JobRunner {
    pub fn new(registry: Arc<SolverRegistry>, config: JobRunnerConfig) -> Result<Self, JobError> {
        let mut tickets = HashMap::new();
        if let Some(dir) = &config.store {
            fs::create_dir_all(dir)?;
            tickets = load_tickets(dir)?;
        }
        let shared = Arc::new(Shared {
            tickets: RwLock::new(tickets),
            registry,
            store: config.store.clone(),
            generation: Mutex::new(0),
            changed: Condvar::new(),
        });
        let (tx, rx) = unbounded::<Job>();
        let threads = (0..config.workers.max(1))
            .map(|i| {
                let rx = rx.clone();
                let shared = shared.clone();
                std::thread::Builder::new()
                    .name(format!("placement-job-{i}"))
                    .spawn(move || {
                        for job in rx {
                            run_job(&shared, job);
                        }
                    })
                    .expect("spawn job worker")
            })
            .collect();
        Ok(JobRunner {
            shared,
            queue: Some(tx),
            threads,
        })
    }

    pub fn registry(&self) -> &Arc<SolverRegistry> {
        &self.shared.registry
    }

    /// Validate and enqueue; returns immediately with the ticket token.
    pub fn submit(&self, request: PlacementRequest) -> Result<String, JobError> {
        if !self.shared.registry.contains(&request.solver_id) {
            return Err(JobError::UnknownSolver(request.solver_id));
        }
        let problems = request.problems();
        if !problems.is_empty() {
            return Err(JobError::Validation(problems));
        }
        let token = Uuid::new_v4().simple().to_string();
        let ticket = JobTicket {
            token: token.clone(),
            status: JobStatus::Pending,
            result: None,
            error: None,
            reason: None,
            solver_id: request.solver_id.clone(),
            submitted_at: Utc::now(),
            finished_at: None,
        };
        self.shared.persist(&ticket);
        self.shared.tickets.write().insert(token.clone(), ticket);
        self.queue
            .as_ref()
            .ok_or(JobError::ShutDown)?
            .send(Job {
                token: token.clone(),
                request,
            })
            .map_err(|_| JobError::ShutDown)?;
        Ok(token)
    }

    pub fn status(&self, token: &str) -> Result<JobTicket, JobError> {
        self.shared
            .tickets
            .read()
            .get(token)
            .cloned()
            .ok_or_else(|| JobError::UnknownToken(token.to_owned()))
    }

    /// Poll `token` every `interval` (or sooner, on any ticket change) until
    /// it is terminal. Returns the terminal ticket and the number of polls.
    pub fn wait(&self, token: &str, interval: Duration) -> Result<(JobTicket, u32), JobError> {
        let mut polls = 0;
        loop {
            let seen = *self.shared.generation.lock();
            let t = self.status(token)?;
            polls += 1;
            if t.status.is_terminal() {
                return Ok((t, polls));
            }
            let mut g = self.shared.generation.lock();
            if *g == seen {
                self.shared.changed.wait_for(&mut g, interval);
            }
        }
    }
}

impl Drop for JobRunner {
    fn drop(&mut self) {
        self.queue.take();
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

fn run_job(shared: &Shared, job: Job) {
    shared.update(&job.token, |t| t.status = JobStatus::Running);
    let outcome = shared.registry.solve(&job.request);
    shared.update(&job.token, |t| {
        t.finished_at = Some(Utc::now().max(t.submitted_at));
        match outcome {
            Ok(result) => {
                t.status = JobStatus::Succeeded;
                t.result = Some(result);
            }
            Err(SolveError::Infeasible(reason)) => {
                t.status = JobStatus::Infeasible;
                t.reason = Some(reason);
            }
            Err(e) => {
                t.status = JobStatus::Failed;
                t.error = Some(e.to_string());
            }
        }
    });
}

fn load_tickets(dir: &Path) -> Result<HashMap<String, JobTicket>, JobError> {
    let mut out = HashMap::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let Ok(mut t) = serde_json::from_slice::<JobTicket>(&fs::read(&path)?) else {
            continue;
        };
        if !t.status.is_terminal() {
            // the process died while this job was queued or running
            t.status = JobStatus::Failed;
            t.error = Some("interrupted by restart".into());
            t.finished_at = Some(Utc::now());
        }
        out.insert(t.token.clone(), t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalogs::{SolverDescriptor, SolverKind};
    use crate::model::NfviResourceEntry;
    use crate::scenario::canonical_scenario;
    use crate::units::ComputeCapacity;

    fn runner() -> JobRunner {
        JobRunner::new(Arc::new(SolverRegistry::with_builtins()), JobRunnerConfig::default()).unwrap()
    }

    #[test]
    fn canonical_job_succeeds() {
        let r = runner();
        let token = r.submit(PlacementRequest::from_scenario(&canonical_scenario())).unwrap();
        let (t, _) = r.wait(&token, Duration::from_millis(50)).unwrap();
        assert_eq!(t.status, JobStatus::Succeeded);
        assert!(t.result.as_ref().unwrap().solve_time > 0.0);
        assert!(t.error.is_none());
        assert!(t.finished_at.unwrap() >= t.submitted_at);
    }

    #[test]
    fn unknown_token() {
        assert!(matches!(runner().status("deadbeef"), Err(JobError::UnknownToken(_))));
    }

    #[test]
    fn unknown_solver_rejected_at_submit() {
        let req = PlacementRequest::from_scenario(&canonical_scenario()).with_solver("simplex");
        assert!(matches!(runner().submit(req), Err(JobError::UnknownSolver(id)) if id == "simplex"));
    }

    #[test]
    fn starved_worker_ends_infeasible_not_failed() {
        let mut s = canonical_scenario();
        s.chains.truncate(1);
        s.nfvi = vec![NfviResourceEntry::new("W1", ComputeCapacity::new(100, 10))];
        let r = runner();
        let token = r.submit(PlacementRequest::from_scenario(&s)).unwrap();
        let (t, _) = r.wait(&token, Duration::from_millis(50)).unwrap();
        assert_eq!(t.status, JobStatus::Infeasible);
        assert!(t.result.is_none() && t.error.is_none());
    }

    #[test]
    fn solver_error_is_failed() {
        let reg = SolverRegistry::with_builtins();
        reg.register(
            SolverDescriptor {
                solver_id: "broken".into(),
                kind: SolverKind::Heuristic,
                description: String::new(),
            },
            Arc::new(|_: &PlacementRequest| -> Result<PlacementResult, SolveError> {
                Err(SolveError::Internal("backend unavailable".into()))
            }),
        )
        .unwrap();
        let r = JobRunner::new(Arc::new(reg), JobRunnerConfig::default()).unwrap();
        let token = r
            .submit(PlacementRequest::from_scenario(&canonical_scenario()).with_solver("broken"))
            .unwrap();
        let (t, _) = r.wait(&token, Duration::from_millis(50)).unwrap();
        assert_eq!(t.status, JobStatus::Failed);
        assert!(t.error.unwrap().contains("backend unavailable"));
    }

    #[test]
    fn tickets_survive_restart() {
        let dir = tempfile::tempdir().unwrap();
        let config = JobRunnerConfig {
            workers: 1,
            store: Some(dir.path().to_path_buf()),
        };
        let token = {
            let r = JobRunner::new(Arc::new(SolverRegistry::with_builtins()), config.clone()).unwrap();
            let token = r.submit(PlacementRequest::from_scenario(&canonical_scenario())).unwrap();
            r.wait(&token, Duration::from_millis(50)).unwrap();
            token
        };
        let r = JobRunner::new(Arc::new(SolverRegistry::with_builtins()), config).unwrap();
        let t = r.status(&token).unwrap();
        assert_eq!(t.status, JobStatus::Succeeded);
        assert!(t.result.is_some());
    }
}
