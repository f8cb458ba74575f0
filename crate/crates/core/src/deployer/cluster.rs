//! Simulated NFVI: node and link accounting, pod lifecycle and the
//! deployment clock. All mutation goes through one mutex, so reservations,
//! releases and clock steps are serialized.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::model::{CrosshaulTopology, LinkId, NfviResourceEntry, NodeId, NodeKind, RanFunction, Segment};
use crate::optimizer::Resource;
use crate::units::{Bandwidth, ComputeCapacity, Latency};

use super::{AllocationPlan, DeployError, Marker, SimTime, TimelineConfig, TimelineEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PodPhase {
    PendingImage,
    Starting,
    Configuring,
    Running,
    Released,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PodRecord {
    pub pod_id: String,
    pub chain_id: String,
    pub function: RanFunction,
    pub node: NodeId,
    pub phase: PodPhase,
    /// Offset from the deployment's `t0` at which the pod started.
    pub started_at: Option<SimTime>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeploymentStatus {
    Applying,
    Active,
    ReleasedOk,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeploymentRecord {
    pub deployment_id: String,
    pub plan: AllocationPlan,
    pub pods: Vec<PodRecord>,
    pub timeline: Vec<TimelineEntry>,
    pub status: DeploymentStatus,
    /// Simulator clock at `t0`.
    pub started_at: SimTime,
}

impl DeploymentRecord {
    pub fn marker(&self, marker: Marker) -> Option<SimTime> {
        self.timeline.iter().find(|e| e.marker == marker).map(|e| e.at)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeState {
    pub node: NodeId,
    pub capacity: ComputeCapacity,
    pub allocated: ComputeCapacity,
    pub free: ComputeCapacity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkState {
    pub link: LinkId,
    pub capacity: Bandwidth,
    pub reserved: Bandwidth,
    pub residual: Bandwidth,
}

/// Accounting snapshot, independent of the clock.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterState {
    pub nodes: Vec<NodeState>,
    pub links: Vec<LinkState>,
    pub active_deployments: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeMetrics {
    pub node: NodeId,
    pub kind: NodeKind,
    pub capacity: ComputeCapacity,
    pub used: ComputeCapacity,
    /// Time-weighted over the simulated clock since provisioning.
    pub avg_cpu: f64,
    pub avg_memory: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub link: LinkId,
    pub capacity: Bandwidth,
    pub residual: Bandwidth,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLatency {
    pub deployment_id: String,
    pub chain_id: String,
    pub fronthaul: Latency,
    pub midhaul: Latency,
    pub backhaul: Latency,
    pub end_to_end: Latency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMetrics {
    pub at: SimTime,
    pub nodes: Vec<NodeMetrics>,
    pub links: Vec<LinkMetrics>,
    pub chains: Vec<ChainLatency>,
}

#[derive(Debug, Clone)]
struct NodeSlot {
    kind: NodeKind,
    capacity: ComputeCapacity,
    /// Usage not owned by any deployment.
    base: ComputeCapacity,
    pods: ComputeCapacity,
    /// `used * ms` since provisioning.
    cpu_integral: u128,
    mem_integral: u128,
}

impl NodeSlot {
    fn used(&self) -> ComputeCapacity {
        self.base + self.pods
    }

    fn free(&self) -> ComputeCapacity {
        self.capacity.saturating_sub(&self.used())
    }
}

#[derive(Debug, Clone)]
struct LinkSlot {
    latency: Latency,
    /// Residual at provisioning.
    capacity: Bandwidth,
    reserved: Bandwidth,
}

#[derive(Debug, Clone)]
struct Deployment {
    record: DeploymentRecord,
    demands: BTreeMap<NodeId, ComputeCapacity>,
    next_marker: usize,
}

#[derive(Debug)]
struct Cluster {
    config: TimelineConfig,
    topology: CrosshaulTopology,
    nodes: BTreeMap<NodeId, NodeSlot>,
    links: BTreeMap<LinkId, LinkSlot>,
    active: BTreeMap<String, Deployment>,
    finished: BTreeMap<String, DeploymentRecord>,
    clock: u64,
    epoch: u64,
    integrated_to: u64,
    fail_next_pod_start: bool,
}

impl Cluster {
    fn provision(&mut self, topology: &CrosshaulTopology, entries: &[NfviResourceEntry]) {
        let by_node: BTreeMap<&NodeId, &NfviResourceEntry> = entries.iter().map(|e| (&e.node, e)).collect();
        self.nodes = topology
            .nodes
            .iter()
            .filter(|n| n.kind.is_compute())
            .map(|n| {
                let (capacity, base) = by_node
                    .get(&n.id)
                    .map_or((ComputeCapacity::ZERO, ComputeCapacity::ZERO), |e| (e.capacity, e.allocated));
                let slot = NodeSlot {
                    kind: n.kind,
                    capacity,
                    base,
                    pods: ComputeCapacity::ZERO,
                    cpu_integral: 0,
                    mem_integral: 0,
                };
                (n.id.clone(), slot)
            })
            .collect();
        self.links = topology
            .links
            .iter()
            .map(|l| {
                let slot = LinkSlot {
                    latency: l.latency,
                    capacity: l.residual,
                    reserved: Bandwidth::ZERO,
                };
                (l.id.clone(), slot)
            })
            .collect();
        self.topology = topology.clone();
        self.epoch = self.clock;
        self.integrated_to = self.clock;
    }

    fn integrate(&mut self) {
        let dt = (self.clock - self.integrated_to) as u128;
        if dt > 0 {
            for slot in self.nodes.values_mut() {
                let used = slot.used();
                slot.cpu_integral += used.cpu as u128 * dt;
                slot.mem_integral += used.memory as u128 * dt;
            }
        }
        self.integrated_to = self.clock;
    }

    fn set_clock(&mut self, to: u64) {
        self.integrate();
        self.clock = to;
        self.integrate();
    }

    fn state(&self) -> ClusterState {
        ClusterState {
            nodes: self
                .nodes
                .iter()
                .map(|(id, s)| NodeState {
                    node: id.clone(),
                    capacity: s.capacity,
                    allocated: s.used(),
                    free: s.free(),
                })
                .collect(),
            links: self
                .links
                .iter()
                .map(|(id, s)| LinkState {
                    link: id.clone(),
                    capacity: s.capacity,
                    reserved: s.reserved,
                    residual: s.capacity - s.reserved,
                })
                .collect(),
            active_deployments: self.active.keys().cloned().collect(),
        }
    }

    /// Check the whole plan before touching anything.
    fn admit(&self, plan: &AllocationPlan) -> Result<BTreeMap<NodeId, ComputeCapacity>, DeployError> {
        let problems = plan.problems();
        if !problems.is_empty() {
            return Err(DeployError::InvalidPlan(problems));
        }
        let demands = plan.node_demands();
        for (node, demand) in &demands {
            let slot = self.nodes.get(node).ok_or_else(|| DeployError::UnknownNode(node.clone()))?;
            let free = slot.free();
            for (resource, d, f) in [
                (Resource::Cpu, demand.cpu, free.cpu),
                (Resource::Memory, demand.memory, free.memory),
            ] {
                if d > f {
                    return Err(DeployError::InsufficientResources {
                        node: node.clone(),
                        resource,
                        demand: d,
                        free: f,
                    });
                }
            }
        }
        for (link, bw) in &plan.link_reservations {
            let slot = self.links.get(link).ok_or_else(|| DeployError::UnknownLink(link.clone()))?;
            let residual = slot.capacity - slot.reserved;
            if *bw > residual {
                return Err(DeployError::LinkOverCommit {
                    link: link.clone(),
                    demand: *bw,
                    residual,
                });
            }
        }
        Ok(demands)
    }

    fn begin(&mut self, plan: AllocationPlan) -> Result<String, DeployError> {
        let demands = self.admit(&plan)?;
        self.integrate();
        for (node, d) in &demands {
            self.nodes.get_mut(node).expect("admitted").pods += *d;
        }
        for (link, bw) in &plan.link_reservations {
            self.links.get_mut(link).expect("admitted").reserved += *bw;
        }
        let deployment_id = Uuid::new_v4().simple().to_string();
        let pods = plan
            .pod_specs
            .iter()
            .map(|p| PodRecord {
                pod_id: format!("{}-{}", p.chain_id, p.function.to_string().to_lowercase()),
                chain_id: p.chain_id.clone(),
                function: p.function,
                node: p.node.clone(),
                phase: PodPhase::PendingImage,
                started_at: None,
            })
            .collect();
        let mut dep = Deployment {
            record: DeploymentRecord {
                deployment_id: deployment_id.clone(),
                plan,
                pods,
                timeline: Vec::new(),
                status: DeploymentStatus::Applying,
                started_at: SimTime::from_millis(self.clock),
            },
            demands,
            next_marker: 0,
        };
        emit(&self.config, &mut dep);
        self.active.insert(deployment_id.clone(), dep);
        Ok(deployment_id)
    }

    fn due(&self, dep: &Deployment) -> Option<u64> {
        let marker = *Marker::ALL.get(dep.next_marker)?;
        Some(dep.record.started_at.as_millis() + self.config.offset(marker).as_millis())
    }

    /// Move the clock to `target`, firing markers in time order. A pending
    /// pod-start fault stops the clock at the failing marker.
    fn run_until(&mut self, target: u64) -> Result<(), DeployError> {
        loop {
            let next = self
                .active
                .iter()
                .filter_map(|(id, d)| self.due(d).map(|t| (t, id.clone())))
                .filter(|(t, _)| *t <= target)
                .min();
            let Some((t, id)) = next else { break };
            self.set_clock(t.max(self.clock));
            let dep = self.active.get_mut(&id).expect("active");
            if Marker::ALL[dep.next_marker] == Marker::PodsStarted && self.fail_next_pod_start {
                self.fail_next_pod_start = false;
                return Err(DeployError::PodStartFailure(id));
            }
            emit(&self.config, dep);
        }
        if target > self.clock {
            self.set_clock(target);
        }
        Ok(())
    }

    fn release(&mut self, id: &str) -> Result<DeploymentRecord, DeployError> {
        let dep = self
            .active
            .remove(id)
            .ok_or_else(|| DeployError::UnknownDeployment(id.to_owned()))?;
        self.integrate();
        for (node, d) in &dep.demands {
            let slot = self.nodes.get_mut(node).expect("reserved node");
            slot.pods = slot.pods.checked_sub(d).expect("released more than reserved");
        }
        for (link, bw) in &dep.record.plan.link_reservations {
            self.links.get_mut(link).expect("reserved link").reserved -= *bw;
        }
        let mut record = dep.record;
        for p in &mut record.pods {
            p.phase = PodPhase::Released;
        }
        record.status = DeploymentStatus::ReleasedOk;
        self.finished.insert(id.to_owned(), record.clone());
        Ok(record)
    }
}

/// Fire every marker of `dep` that is due by now, applying pod transitions.
fn emit(config: &TimelineConfig, dep: &mut Deployment) {
    let Some(&marker) = Marker::ALL.get(dep.next_marker) else { return };
    let at = config.offset(marker);
    let pods = dep.record.pods.len();
    let detail = match marker {
        Marker::PodsStarted | Marker::T1 => format!("{} ({pods} pods)", marker.description()),
        _ => marker.description().to_owned(),
    };
    let phase = match marker {
        Marker::PodsStarted => Some(PodPhase::Starting),
        Marker::T1 => Some(PodPhase::Configuring),
        Marker::T2 => Some(PodPhase::Running),
        _ => None,
    };
    if let Some(phase) = phase {
        for p in &mut dep.record.pods {
            debug_assert!(p.phase < phase);
            p.phase = phase;
            if phase == PodPhase::Starting {
                p.started_at = Some(at);
            }
        }
    }
    if marker == Marker::T1 {
        dep.record.status = DeploymentStatus::Active;
    }
    dep.record.timeline.push(TimelineEntry { marker, at, detail });
    dep.next_marker += 1;
}

/// In-process stand-in for the VIM/VNFM and the infrastructure.
#[derive(Debug)]
pub struct NfviSimulator {
    cluster: Mutex<Cluster>,
    running: AtomicBool,
}

impl NfviSimulator {
    pub fn new(
        topology: &CrosshaulTopology,
        entries: &[NfviResourceEntry],
        config: TimelineConfig,
    ) -> Result<Self, DeployError> {
        let problems = config.problems();
        if !problems.is_empty() {
            return Err(DeployError::InvalidConfig(problems));
        }
        let mut cluster = Cluster {
            config,
            topology: CrosshaulTopology::default(),
            nodes: BTreeMap::new(),
            links: BTreeMap::new(),
            active: BTreeMap::new(),
            finished: BTreeMap::new(),
            clock: 0,
            epoch: 0,
            integrated_to: 0,
            fail_next_pod_start: false,
        };
        cluster.provision(topology, entries);
        Ok(NfviSimulator {
            cluster: Mutex::new(cluster),
            running: AtomicBool::new(true),
        })
    }

    /// A simulator with no nodes or links.
    pub fn empty() -> Self {
        NfviSimulator::new(&CrosshaulTopology::default(), &[], TimelineConfig::default()).expect("default config")
    }

    fn lock(&self) -> Result<parking_lot::MutexGuard<'_, Cluster>, DeployError> {
        if !self.running.load(Ordering::SeqCst) {
            return Err(DeployError::SimulatorUnavailable);
        }
        Ok(self.cluster.lock())
    }

    pub fn stop(&self) {
        self.running.store(false, Ordering::SeqCst);
    }

    pub fn start(&self) {
        self.running.store(true, Ordering::SeqCst);
    }

    pub fn is_running(&self) -> bool {
        self.running.load(Ordering::SeqCst)
    }

    /// Replace the infrastructure. Refused while deployments are active.
    pub fn reprovision(&self, topology: &CrosshaulTopology, entries: &[NfviResourceEntry]) -> Result<(), DeployError> {
        let mut c = self.lock()?;
        if !c.active.is_empty() {
            return Err(DeployError::Busy(c.active.len()));
        }
        c.integrate();
        c.provision(topology, entries);
        Ok(())
    }

    /// True if the simulator was provisioned from this topology and these
    /// capacities.
    pub fn provisioned_from(&self, topology: &CrosshaulTopology, entries: &[NfviResourceEntry]) -> bool {
        let c = self.cluster.lock();
        if !c.topology.same_shape(topology) {
            return false;
        }
        let by_node: BTreeMap<&NodeId, &NfviResourceEntry> = entries.iter().map(|e| (&e.node, e)).collect();
        c.nodes.iter().all(|(id, s)| match by_node.get(id) {
            Some(e) => e.capacity == s.capacity && e.allocated == s.base,
            None => s.capacity == ComputeCapacity::ZERO && s.base == ComputeCapacity::ZERO,
        }) && by_node.keys().all(|id| c.nodes.contains_key(*id))
    }

    /// The provisioned topology with link residuals as they stand now.
    pub fn topology(&self) -> CrosshaulTopology {
        let c = self.cluster.lock();
        let mut t = c.topology.clone();
        for l in &mut t.links {
            if let Some(s) = c.links.get(&l.id) {
                l.residual = s.capacity - s.reserved;
            }
        }
        t
    }

    pub fn config(&self) -> TimelineConfig {
        self.cluster.lock().config.clone()
    }

    pub fn clock(&self) -> SimTime {
        SimTime::from_millis(self.cluster.lock().clock)
    }

    /// Current compute view, one entry per compute node, with `allocated`
    /// covering every active deployment.
    pub fn nfvi_entries(&self) -> Result<Vec<NfviResourceEntry>, DeployError> {
        let c = self.lock()?;
        Ok(c.nodes
            .iter()
            .map(|(id, s)| NfviResourceEntry {
                node: id.clone(),
                capacity: s.capacity,
                allocated: s.used(),
                snapshot_seq: 0,
            })
            .collect())
    }

    pub fn state(&self) -> ClusterState {
        self.cluster.lock().state()
    }

    /// Reserve everything in `plan` or nothing, and start the deployment
    /// clock. The returned record is in `Applying`.
    pub fn begin_apply(&self, plan: AllocationPlan) -> Result<DeploymentRecord, DeployError> {
        let mut c = self.lock()?;
        let id = c.begin(plan)?;
        Ok(c.active[&id].record.clone())
    }

    /// Advance the clock by `by`, firing any markers that come due.
    pub fn advance(&self, by: SimTime) -> Result<(), DeployError> {
        let mut c = self.lock()?;
        let target = c.clock + by.as_millis();
        c.run_until(target)
    }

    /// Advance until `deployment_id` has reached `marker`.
    pub fn advance_to(&self, deployment_id: &str, marker: Marker) -> Result<DeploymentRecord, DeployError> {
        let mut c = self.lock()?;
        let dep = c
            .active
            .get(deployment_id)
            .ok_or_else(|| DeployError::UnknownDeployment(deployment_id.to_owned()))?;
        let target = dep.record.started_at.as_millis() + c.config.offset(marker).as_millis();
        let target = target.max(c.clock);
        c.run_until(target)?;
        Ok(c.active[deployment_id].record.clone())
    }

    /// Reserve, then drive the deployment through `t7`. If the pods fail to
    /// start the reservation is returned before the error is.
    pub fn apply_plan(&self, plan: AllocationPlan) -> Result<DeploymentRecord, DeployError> {
        let record = self.begin_apply(plan)?;
        match self.advance_to(&record.deployment_id, Marker::T7) {
            Ok(r) => Ok(r),
            Err(e) => {
                let mut c = self.cluster.lock();
                let _ = c.release(&record.deployment_id);
                Err(e)
            }
        }
    }

    pub fn release_deployment(&self, deployment_id: &str) -> Result<DeploymentRecord, DeployError> {
        self.lock()?.release(deployment_id)
    }

    pub fn deployment(&self, deployment_id: &str) -> Result<DeploymentRecord, DeployError> {
        let c = self.cluster.lock();
        c.active
            .get(deployment_id)
            .map(|d| d.record.clone())
            .or_else(|| c.finished.get(deployment_id).cloned())
            .ok_or_else(|| DeployError::UnknownDeployment(deployment_id.to_owned()))
    }

    pub fn active_deployments(&self) -> Vec<String> {
        self.cluster.lock().active.keys().cloned().collect()
    }

    /// Make the next deployment to reach `pods-started` fail there.
    pub fn inject_pod_start_failure(&self) {
        self.cluster.lock().fail_next_pod_start = true;
    }

    pub fn cluster_metrics(&self) -> ClusterMetrics {
        let mut c = self.cluster.lock();
        c.integrate();
        let span = (c.clock - c.epoch) as u128;
        let nodes = c
            .nodes
            .iter()
            .map(|(id, s)| {
                let used = s.used();
                let (avg_cpu, avg_memory) = if span == 0 {
                    (used.cpu as f64, used.memory as f64)
                } else {
                    (s.cpu_integral as f64 / span as f64, s.mem_integral as f64 / span as f64)
                };
                NodeMetrics {
                    node: id.clone(),
                    kind: s.kind,
                    capacity: s.capacity,
                    used,
                    avg_cpu,
                    avg_memory,
                }
            })
            .collect();
        let links = c
            .links
            .iter()
            .map(|(id, s)| LinkMetrics {
                link: id.clone(),
                capacity: s.capacity,
                residual: s.capacity - s.reserved,
            })
            .collect();
        let path_latency = |path: &[LinkId]| -> Latency { path.iter().filter_map(|l| c.links.get(l)).map(|s| s.latency).sum() };
        let mut chains = Vec::new();
        for (id, dep) in &c.active {
            for w in &dep.record.plan.chaining {
                let seg = |s: Segment| {
                    w.adjacencies
                        .iter()
                        .find(|a| a.segment == s)
                        .map_or(Latency::ZERO, |a| path_latency(&a.path))
                };
                let (fronthaul, midhaul, backhaul) = (seg(Segment::Fronthaul), seg(Segment::Midhaul), seg(Segment::Backhaul));
                chains.push(ChainLatency {
                    deployment_id: id.clone(),
                    chain_id: w.chain_id.clone(),
                    fronthaul,
                    midhaul,
                    backhaul,
                    end_to_end: fronthaul + midhaul + backhaul,
                });
            }
        }
        ClusterMetrics {
            at: SimTime::from_millis(c.clock),
            nodes,
            links,
            chains,
        }
    }
}
