//! Domain types: crosshaul topology, functional splits, RAN functions,
//! chains and their placements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::units::{Bandwidth, ComputeCapacity, Latency};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                $name(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

string_id!(
    /// Identifier of a topology node.
    NodeId
);
string_id!(
    /// Identifier of a crosshaul link.
    LinkId
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    ComputeWorker,
    ComputeMaster,
    VirtualSwitch,
    PhysicalSwitch,
    CoreNetworkAnchor,
}

impl NodeKind {
    pub fn is_compute(self) -> bool {
        matches!(self, NodeKind::ComputeWorker | NodeKind::ComputeMaster)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyNode {
    pub id: NodeId,
    pub kind: NodeKind,
}

/// Undirected crosshaul link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    pub endpoints: (NodeId, NodeId),
    pub latency: Latency,
    pub capacity: Bandwidth,
    pub residual: Bandwidth,
}

impl Link {
    pub fn connects(&self, a: &NodeId, b: &NodeId) -> bool {
        (&self.endpoints.0 == a && &self.endpoints.1 == b)
            || (&self.endpoints.0 == b && &self.endpoints.1 == a)
    }

    /// The endpoint opposite to `from`, if `from` is an endpoint at all.
    pub fn other_end(&self, from: &NodeId) -> Option<&NodeId> {
        if &self.endpoints.0 == from {
            Some(&self.endpoints.1)
        } else if &self.endpoints.1 == from {
            Some(&self.endpoints.0)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CrosshaulTopology {
    pub nodes: Vec<TopologyNode>,
    pub links: Vec<Link>,
}

impl CrosshaulTopology {
    pub fn node(&self, id: &NodeId) -> Option<&TopologyNode> {
        self.nodes.iter().find(|n| &n.id == id)
    }

    pub fn kind_of(&self, id: &NodeId) -> Option<NodeKind> {
        self.node(id).map(|n| n.kind)
    }

    pub fn link(&self, id: &LinkId) -> Option<&Link> {
        self.links.iter().find(|l| &l.id == id)
    }

    /// Worker ids in ascending order.
    pub fn workers(&self) -> Vec<NodeId> {
        let mut ws: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::ComputeWorker)
            .map(|n| n.id.clone())
            .collect();
        ws.sort();
        ws
    }

    pub fn compute_nodes(&self) -> Vec<NodeId> {
        let mut ns: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|n| n.kind.is_compute())
            .map(|n| n.id.clone())
            .collect();
        ns.sort();
        ns
    }

    /// The core-network anchor, when exactly one exists.
    pub fn cn_anchor(&self) -> Option<&NodeId> {
        let mut anchors = self.nodes.iter().filter(|n| n.kind == NodeKind::CoreNetworkAnchor);
        match (anchors.next(), anchors.next()) {
            (Some(a), None) => Some(&a.id),
            _ => None,
        }
    }

    pub fn latency_of(&self, path: &[LinkId]) -> Option<Latency> {
        path.iter().map(|id| self.link(id).map(|l| l.latency)).sum()
    }

    /// Same topology with link residuals reset to full capacity.
    pub fn with_full_residuals(&self) -> CrosshaulTopology {
        let mut t = self.clone();
        for l in &mut t.links {
            l.residual = l.capacity;
        }
        t
    }

    /// Structural equality ignoring link residuals.
    pub fn same_shape(&self, other: &CrosshaulTopology) -> bool {
        self.with_full_residuals() == other.with_full_residuals()
    }
}

/// Functional split option. O2 is the F1 interface between vCU and vDU,
/// O6 is nFAPI between vDU and vRU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SplitOption {
    O2,
    O6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRequirement {
    pub max_latency: Latency,
    pub bitrate: Bandwidth,
}

impl SegmentRequirement {
    pub fn new(max_latency_ms: f64, bitrate_mbps: f64) -> Self {
        SegmentRequirement {
            max_latency: Latency::from_ms(max_latency_ms),
            bitrate: Bandwidth::from_mbps(bitrate_mbps),
        }
    }
}

/// Crosshaul segment of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    /// vRU to vDU (O6).
    Fronthaul,
    /// vDU to vCU (O2).
    Midhaul,
    /// vCU to the core network.
    Backhaul,
}

impl Segment {
    pub const ALL: [Segment; 3] = [Segment::Fronthaul, Segment::Midhaul, Segment::Backhaul];
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Segment::Fronthaul => "fronthaul",
            Segment::Midhaul => "midhaul",
            Segment::Backhaul => "backhaul",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitProfile {
    pub fronthaul_o6: SegmentRequirement,
    pub midhaul_o2: SegmentRequirement,
    pub backhaul_cn: SegmentRequirement,
}

impl Default for SplitProfile {
    fn default() -> Self {
        SplitProfile {
            fronthaul_o6: SegmentRequirement::new(2.0, 152.0),
            midhaul_o2: SegmentRequirement::new(10.0, 151.0),
            backhaul_cn: SegmentRequirement::new(30.0, 150.0),
        }
    }
}

impl SplitProfile {
    pub fn requirement(&self, segment: Segment) -> &SegmentRequirement {
        match segment {
            Segment::Fronthaul => &self.fronthaul_o6,
            Segment::Midhaul => &self.midhaul_o2,
            Segment::Backhaul => &self.backhaul_cn,
        }
    }

    /// Positivity and fronthaul <= midhaul <= backhaul latency ordering.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for seg in Segment::ALL {
            let r = self.requirement(seg);
            if r.max_latency <= Latency::ZERO {
                out.push(format!("{seg} max_latency must be positive"));
            }
            if r.bitrate <= Bandwidth::ZERO {
                out.push(format!("{seg} bitrate must be positive"));
            }
        }
        if self.fronthaul_o6.max_latency > self.midhaul_o2.max_latency {
            out.push("fronthaul max_latency exceeds midhaul max_latency".into());
        }
        if self.midhaul_o2.max_latency > self.backhaul_cn.max_latency {
            out.push("midhaul max_latency exceeds backhaul max_latency".into());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RanFunction {
    #[serde(rename = "vRU")]
    Vru,
    #[serde(rename = "vDU")]
    Vdu,
    #[serde(rename = "vCU")]
    Vcu,
}

impl RanFunction {
    pub const ALL: [RanFunction; 3] = [RanFunction::Vru, RanFunction::Vdu, RanFunction::Vcu];
}

impl fmt::Display for RanFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RanFunction::Vru => "vRU",
            RanFunction::Vdu => "vDU",
            RanFunction::Vcu => "vCU",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfSpec {
    pub function: RanFunction,
    pub cpu_demand: u64,
    pub memory_demand: u64,
    pub image_ref: String,
}

impl CnfSpec {
    pub fn demand(&self) -> ComputeCapacity {
        ComputeCapacity::new(self.cpu_demand, self.memory_demand)
    }
}

/// One CNF spec per RAN function. Encoded as a list of [`CnfSpec`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CnfSpec>", into = "Vec<CnfSpec>")]
pub struct CnfSpecSet {
    pub vru: CnfSpec,
    pub vdu: CnfSpec,
    pub vcu: CnfSpec,
}

impl CnfSpecSet {
    pub fn get(&self, function: RanFunction) -> &CnfSpec {
        match function {
            RanFunction::Vru => &self.vru,
            RanFunction::Vdu => &self.vdu,
            RanFunction::Vcu => &self.vcu,
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for f in RanFunction::ALL {
            let s = self.get(f);
            if s.cpu_demand == 0 || s.memory_demand == 0 {
                out.push(format!("{f} demands must be positive"));
            }
        }
        out
    }
}

impl Default for CnfSpecSet {
    fn default() -> Self {
        CnfSpecSet {
            vru: CnfSpec {
                function: RanFunction::Vru,
                cpu_demand: 300,
                memory_demand: 100,
                image_ref: "registry.local/oai/vru:split-o6".into(),
            },
            vdu: CnfSpec {
                function: RanFunction::Vdu,
                cpu_demand: 700,
                memory_demand: 100,
                image_ref: "registry.local/oai/vdu:split-o2-o6".into(),
            },
            vcu: CnfSpec {
                function: RanFunction::Vcu,
                cpu_demand: 600,
                memory_demand: 150,
                image_ref: "registry.local/oai/vcu:split-o2".into(),
            },
        }
    }
}

impl TryFrom<Vec<CnfSpec>> for CnfSpecSet {
    type Error = String;

    fn try_from(specs: Vec<CnfSpec>) -> Result<Self, String> {
        let mut by_fn: BTreeMap<RanFunction, CnfSpec> = BTreeMap::new();
        for s in specs {
            let f = s.function;
            if by_fn.insert(f, s).is_some() {
                return Err(format!("duplicate cnf spec for {f}"));
            }
        }
        let mut take = |f: RanFunction| by_fn.remove(&f).ok_or_else(|| format!("missing cnf spec for {f}"));
        Ok(CnfSpecSet {
            vru: take(RanFunction::Vru)?,
            vdu: take(RanFunction::Vdu)?,
            vcu: take(RanFunction::Vcu)?,
        })
    }
}

impl From<CnfSpecSet> for Vec<CnfSpec> {
    fn from(set: CnfSpecSet) -> Self {
        vec![set.vru, set.vdu, set.vcu]
    }
}

/// A vRU→vDU→vCU→CN service chain whose vRU is pinned to a worker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub chain_id: String,
    pub vru_node: NodeId,
}

impl Chain {
    pub fn new(chain_id: impl Into<String>, vru_node: impl Into<NodeId>) -> Self {
        Chain {
            chain_id: chain_id.into(),
            vru_node: vru_node.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainPlacement {
    pub chain_id: String,
    pub vru_node: NodeId,
    pub vdu_node: NodeId,
    pub vcu_node: NodeId,
    pub fronthaul_path: Vec<LinkId>,
    pub midhaul_path: Vec<LinkId>,
    pub backhaul_path: Vec<LinkId>,
    /// Splits whose interface crosses the network (the two functions sit on
    /// different nodes).
    pub splits_used: BTreeSet<SplitOption>,
}

impl ChainPlacement {
    pub fn path(&self, segment: Segment) -> &[LinkId] {
        match segment {
            Segment::Fronthaul => &self.fronthaul_path,
            Segment::Midhaul => &self.midhaul_path,
            Segment::Backhaul => &self.backhaul_path,
        }
    }

    /// Node that hosts `function`.
    pub fn host(&self, function: RanFunction) -> &NodeId {
        match function {
            RanFunction::Vru => &self.vru_node,
            RanFunction::Vdu => &self.vdu_node,
            RanFunction::Vcu => &self.vcu_node,
        }
    }

    pub fn splits_for(vru: &NodeId, vdu: &NodeId, vcu: &NodeId) -> BTreeSet<SplitOption> {
        let mut s = BTreeSet::new();
        if vru != vdu {
            s.insert(SplitOption::O6);
        }
        if vdu != vcu {
            s.insert(SplitOption::O2);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum ScenarioKind {
    FullySplit,
    CuDuColocated,
    CRan_DuRuIntegrated,
    DRan_Monolithic,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::FullySplit => "fully-split",
            ScenarioKind::CuDuColocated => "cu-du-colocated",
            ScenarioKind::CRan_DuRuIntegrated => "c-ran",
            ScenarioKind::DRan_Monolithic => "d-ran",
        })
    }
}

pub fn classify_scenario(p: &ChainPlacement) -> ScenarioKind {
    classify_nodes(&p.vru_node, &p.vdu_node, &p.vcu_node)
}

pub fn classify_nodes(vru: &NodeId, vdu: &NodeId, vcu: &NodeId) -> ScenarioKind {
    match (vru == vdu, vdu == vcu) {
        (true, true) => ScenarioKind::DRan_Monolithic,
        (true, false) => ScenarioKind::CRan_DuRuIntegrated,
        (false, true) => ScenarioKind::CuDuColocated,
        // vru == vcu with a remote vDU falls here as well
        (false, false) => ScenarioKind::FullySplit,
    }
}

/// Per-node compute view held by the NFVI catalog.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NfviResourceEntry {
    pub node: NodeId,
    pub capacity: ComputeCapacity,
    #[serde(default)]
    pub allocated: ComputeCapacity,
    #[serde(default)]
    pub snapshot_seq: u64,
}

impl NfviResourceEntry {
    pub fn new(node: impl Into<NodeId>, capacity: ComputeCapacity) -> Self {
        NfviResourceEntry {
            node: node.into(),
            capacity,
            allocated: ComputeCapacity::ZERO,
            snapshot_seq: 0,
        }
    }

    pub fn free(&self) -> ComputeCapacity {
        self.capacity.saturating_sub(&self.allocated)
    }
}
