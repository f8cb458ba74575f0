//! Placement optimization: requests and results, the shared feasibility
//! kernel, built-in solvers, the exhaustive oracle and the asynchronous job
//! runner.

mod feasibility;
mod instance;
pub mod jobs;
mod oracle;
mod solvers;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use num_rational::Rational64;
use parking_lot::RwLock;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::catalogs::{SolverDescriptor, SolverKind};
use crate::model::{
    Chain, ChainPlacement, CnfSpecSet, CrosshaulTopology, LinkId, NfviResourceEntry, NodeId, NodeKind, SplitProfile,
};
use crate::scenario::Scenario;
use crate::units::{Bandwidth, ComputeCapacity};

pub use feasibility::{check_feasibility, Resource, Verdict, Violation};
pub use oracle::{brute_force_oracle, ORACLE_GUARD};
pub use solvers::{AggregationMax, DuPinned, DuPinnedWeights, Greedy};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementRequest {
    pub topology: CrosshaulTopology,
    pub nfvi: Vec<NfviResourceEntry>,
    pub chains: Vec<Chain>,
    pub split_profile: SplitProfile,
    pub cnf_specs: CnfSpecSet,
    pub solver_id: String,
    /// NFVI catalog commit the `nfvi` entries were read from.
    #[serde(default)]
    pub nfvi_seq: u64,
}

impl PlacementRequest {
    pub fn from_scenario(s: &Scenario) -> Self {
        PlacementRequest {
            topology: s.topology.clone(),
            nfvi: s.nfvi.clone(),
            chains: s.chains.clone(),
            split_profile: s.split_profile,
            cnf_specs: s.cnf_specs.clone(),
            solver_id: s.solver.clone(),
            nfvi_seq: 0,
        }
    }

    pub fn with_solver(mut self, solver_id: impl Into<String>) -> Self {
        self.solver_id = solver_id.into();
        self
    }

    /// Free capacity per node as seen by this request (capacity - allocated).
    pub fn free_capacity(&self, node: &NodeId) -> ComputeCapacity {
        self.nfvi
            .iter()
            .find(|e| &e.node == node)
            .map(NfviResourceEntry::free)
            .unwrap_or(ComputeCapacity::ZERO)
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out: Vec<String> = crate::topology::validate_topology(&self.topology)
            .violations
            .iter()
            .map(ToString::to_string)
            .collect();
        out.extend(self.split_profile.problems());
        out.extend(self.cnf_specs.problems());
        let mut pins = BTreeSet::new();
        let mut ids = BTreeSet::new();
        for c in &self.chains {
            if self.topology.kind_of(&c.vru_node) != Some(NodeKind::ComputeWorker) {
                out.push(format!("chain {} pins its vRU to non-worker {}", c.chain_id, c.vru_node));
            }
            if !pins.insert(&c.vru_node) {
                out.push(format!("more than one chain pins a vRU to {}", c.vru_node));
            }
            if !ids.insert(&c.chain_id) {
                out.push(format!("duplicate chain id {}", c.chain_id));
            }
        }
        for e in &self.nfvi {
            if !self.topology.kind_of(&e.node).is_some_and(NodeKind::is_compute) {
                out.push(format!("nfvi entry for unknown compute node {}", e.node));
            }
        }
        out
    }
}

/// Exact cost used by the du-pinned objective. Encoded as a string such as
/// `"110"` or `"221/2"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cost(pub Rational64);

impl Default for Cost {
    fn default() -> Self {
        Cost(Rational64::from_integer(0))
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Cost {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Cost {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse::<Rational64>().map(Cost).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ObjectiveValue {
    /// Distinct workers hosting at least one vDU or vCU.
    pub cr_count: u32,
    /// Sum over chains of the hop count from the vCU to the core network.
    pub cn_distance: u32,
    /// du-pinned cost; zero for the other solvers.
    pub cost: Cost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementResult {
    pub placements: Vec<ChainPlacement>,
    pub objective: ObjectiveValue,
    pub link_reservations: BTreeMap<LinkId, Bandwidth>,
    pub node_loads: BTreeMap<NodeId, ComputeCapacity>,
    pub solver_id: String,
    /// Wall-clock seconds.
    pub solve_time: f64,
}

impl PlacementResult {
    /// Workers hosting any vDU or vCU.
    pub fn du_cu_hosts(&self) -> BTreeSet<NodeId> {
        self.placements
            .iter()
            .flat_map(|p| [p.vdu_node.clone(), p.vcu_node.clone()])
            .collect()
    }

    /// Same result with the timing field cleared, for determinism checks.
    pub fn without_timing(&self) -> PlacementResult {
        PlacementResult {
            solve_time: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("unknown solver {0}")]
    UnknownSolver(String),
    #[error("invalid request: {}", .0.join("; "))]
    InvalidRequest(Vec<String>),
    #[error("instance too large for exhaustive search: {0} assignments")]
    TooLarge(u128),
    #[error("solver failure: {0}")]
    Internal(String),
}

/// A placement solution approach. Anything implementing this can be
/// registered next to the built-ins.
pub trait Solver: Send + Sync {
    fn solve(&self, request: &PlacementRequest) -> Result<PlacementResult, SolveError>;
}

impl<F> Solver for F
where
    F: Fn(&PlacementRequest) -> Result<PlacementResult, SolveError> + Send + Sync,
{
    fn solve(&self, request: &PlacementRequest) -> Result<PlacementResult, SolveError> {
        self(request)
    }
}

/// Which objective the oracle minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    AggregationMax,
    DuPinned(DuPinnedWeights),
}

impl ObjectiveKind {
    pub fn parse(s: &str) -> Option<ObjectiveKind> {
        match s {
            "aggregation-max" => Some(ObjectiveKind::AggregationMax),
            "du-pinned" => Some(ObjectiveKind::DuPinned(DuPinnedWeights::default())),
            _ => None,
        }
    }
}

#[derive(Clone)]
struct Registered {
    descriptor: SolverDescriptor,
    solver: Arc<dyn Solver>,
}

/// Solver implementations by id.
#[derive(Default)]
pub struct SolverRegistry {
    solvers: RwLock<BTreeMap<String, Registered>>,
}

impl SolverRegistry {
    /// Registry preloaded with `aggregation-max`, `du-pinned` and `greedy`.
    pub fn with_builtins() -> Self {
        let r = SolverRegistry::default();
        for (d, s) in builtin_solvers() {
            r.register(d, s).expect("built-in ids are distinct");
        }
        r
    }

    pub fn register(&self, descriptor: SolverDescriptor, solver: Arc<dyn Solver>) -> Result<(), SolveError> {
        let mut map = self.solvers.write();
        if map.contains_key(&descriptor.solver_id) {
            return Err(SolveError::InvalidRequest(vec![format!(
                "solver {} is already registered",
                descriptor.solver_id
            )]));
        }
        map.insert(descriptor.solver_id.clone(), Registered { descriptor, solver });
        Ok(())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.solvers.read().contains_key(id)
    }

    pub fn descriptors(&self) -> Vec<SolverDescriptor> {
        self.solvers.read().values().map(|r| r.descriptor.clone()).collect()
    }

    /// Dispatch on `request.solver_id`, then stamp id and wall time.
    pub fn solve(&self, request: &PlacementRequest) -> Result<PlacementResult, SolveError> {
        let solver = self
            .solvers
            .read()
            .get(&request.solver_id)
            .map(|r| r.solver.clone())
            .ok_or_else(|| SolveError::UnknownSolver(request.solver_id.clone()))?;
        let problems = request.problems();
        if !problems.is_empty() {
            return Err(SolveError::InvalidRequest(problems));
        }
        let started = Instant::now();
        let mut result = solver.solve(request)?;
        result.solver_id = request.solver_id.clone();
        result.solve_time = started.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
        Ok(result)
    }
}

pub fn builtin_solvers() -> Vec<(SolverDescriptor, Arc<dyn Solver>)> {
    vec![
        (
            SolverDescriptor {
                solver_id: "aggregation-max".into(),
                kind: SolverKind::Exact,
                description: "Exact search: fewest vDU/vCU-hosting workers, then fewest vCU-to-core hops".into(),
            },
            Arc::new(AggregationMax),
        ),
        (
            SolverDescriptor {
                solver_id: "du-pinned".into(),
                kind: SolverKind::Exact,
                description: "Exact search with each vDU pinned to its vRU; minimizes weighted vCU hosts plus path latency"
                    .into(),
            },
            Arc::new(DuPinned::default()),
        ),
        (
            SolverDescriptor {
                solver_id: "greedy".into(),
                kind: SolverKind::Heuristic,
                description: "Per-chain first fit preferring already-open workers, then low latency".into(),
            },
            Arc::new(Greedy),
        ),
    ]
}

/// Human-readable reasons why `request` admits no placement. Meaningful only
/// once a solver has reported it infeasible.
pub fn diagnose_infeasibility(request: &PlacementRequest) -> Vec<String> {
    match instance::Instance::new(request) {
        Ok(inst) => inst.diagnose(),
        Err(e) => vec![e.to_string()],
    }
}

/// Dispatch by id against a fresh built-in registry.
pub fn solve(request: &PlacementRequest) -> Result<PlacementResult, SolveError> {
    SolverRegistry::with_builtins().solve(request)
}
