//! Topology validation and minimum-latency routing.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CrosshaulTopology, LinkId, NodeId, NodeKind};
use crate::units::{Bandwidth, Latency};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologyViolation {
    EmptyNodeId,
    EmptyLinkId,
    DuplicateNode { node: NodeId },
    DuplicateLink { link: LinkId },
    MissingCnAnchor,
    MultipleCnAnchors { anchors: Vec<NodeId> },
    DanglingEndpoint { link: LinkId, node: NodeId },
    SelfLoop { link: LinkId },
    ParallelLink { link: LinkId, existing: LinkId },
    NegativeLatency { link: LinkId },
    NonPositiveCapacity { link: LinkId },
    ResidualOutOfRange { link: LinkId },
    Disconnected { node: NodeId },
}

impl fmt::Display for TopologyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TopologyViolation::*;
        match self {
            EmptyNodeId => write!(f, "empty node id"),
            EmptyLinkId => write!(f, "empty link id"),
            DuplicateNode { node } => write!(f, "duplicate node id {node}"),
            DuplicateLink { link } => write!(f, "duplicate link id {link}"),
            MissingCnAnchor => write!(f, "missing CN anchor"),
            MultipleCnAnchors { anchors } => {
                let names: Vec<&str> = anchors.iter().map(NodeId::as_str).collect();
                write!(f, "multiple CN anchors: {}", names.join(", "))
            }
            DanglingEndpoint { link, node } => write!(f, "link {link} references unknown node {node}"),
            SelfLoop { link } => write!(f, "link {link} is a self loop"),
            ParallelLink { link, existing } => {
                write!(f, "link {link} duplicates the node pair of link {existing}")
            }
            NegativeLatency { link } => write!(f, "link {link} has negative latency"),
            NonPositiveCapacity { link } => write!(f, "link {link} has non-positive capacity"),
            ResidualOutOfRange { link } => write!(f, "link {link} residual outside [0, capacity]"),
            Disconnected { node } => write!(f, "node {node} is disconnected from the CN anchor"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<TopologyViolation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_topology(topology: &CrosshaulTopology) -> ValidationReport {
    let mut violations = Vec::new();

    let mut node_ids = BTreeSet::new();
    for n in &topology.nodes {
        if n.id.as_str().is_empty() {
            violations.push(TopologyViolation::EmptyNodeId);
        }
        if !node_ids.insert(&n.id) {
            violations.push(TopologyViolation::DuplicateNode { node: n.id.clone() });
        }
    }

    let anchors: Vec<NodeId> = topology
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::CoreNetworkAnchor)
        .map(|n| n.id.clone())
        .collect();
    match anchors.len() {
        0 => violations.push(TopologyViolation::MissingCnAnchor),
        1 => {}
        _ => violations.push(TopologyViolation::MultipleCnAnchors { anchors: anchors.clone() }),
    }

    let mut link_ids = BTreeSet::new();
    let mut pairs: BTreeMap<(&NodeId, &NodeId), &LinkId> = BTreeMap::new();
    for l in &topology.links {
        if l.id.as_str().is_empty() {
            violations.push(TopologyViolation::EmptyLinkId);
        }
        if !link_ids.insert(&l.id) {
            violations.push(TopologyViolation::DuplicateLink { link: l.id.clone() });
        }
        for end in [&l.endpoints.0, &l.endpoints.1] {
            if !node_ids.contains(end) {
                violations.push(TopologyViolation::DanglingEndpoint {
                    link: l.id.clone(),
                    node: end.clone(),
                });
            }
        }
        if l.endpoints.0 == l.endpoints.1 {
            violations.push(TopologyViolation::SelfLoop { link: l.id.clone() });
        } else {
            let key = if l.endpoints.0 < l.endpoints.1 {
                (&l.endpoints.0, &l.endpoints.1)
            } else {
                (&l.endpoints.1, &l.endpoints.0)
            };
            if let Some(existing) = pairs.insert(key, &l.id) {
                violations.push(TopologyViolation::ParallelLink {
                    link: l.id.clone(),
                    existing: existing.clone(),
                });
            }
        }
        if l.latency < Latency::ZERO {
            violations.push(TopologyViolation::NegativeLatency { link: l.id.clone() });
        }
        if l.capacity <= Bandwidth::ZERO {
            violations.push(TopologyViolation::NonPositiveCapacity { link: l.id.clone() });
        }
        if l.residual < Bandwidth::ZERO || l.residual > l.capacity {
            violations.push(TopologyViolation::ResidualOutOfRange { link: l.id.clone() });
        }
    }

    // Reachability from the anchor over links with known endpoints.
    if anchors.len() == 1 {
        let mut adj: HashMap<&NodeId, Vec<&NodeId>> = HashMap::new();
        for l in &topology.links {
            adj.entry(&l.endpoints.0).or_default().push(&l.endpoints.1);
            adj.entry(&l.endpoints.1).or_default().push(&l.endpoints.0);
        }
        let mut seen: BTreeSet<&NodeId> = BTreeSet::new();
        let mut queue = VecDeque::from([&anchors[0]]);
        seen.insert(&anchors[0]);
        while let Some(n) = queue.pop_front() {
            for m in adj.get(n).into_iter().flatten() {
                if seen.insert(m) {
                    queue.push_back(m);
                }
            }
        }
        let mut reported = BTreeSet::new();
        for n in &topology.nodes {
            if !seen.contains(&n.id) && reported.insert(&n.id) {
                violations.push(TopologyViolation::Disconnected { node: n.id.clone() });
            }
        }
    }

    ValidationReport { violations }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoutingError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("no path from {from} to {to}")]
    NoPath { from: NodeId, to: NodeId },
}

/// A routed path: links in traversal order plus the visited nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub links: Vec<LinkId>,
    pub nodes: Vec<NodeId>,
    pub latency: Latency,
}

impl Route {
    pub fn hops(&self) -> usize {
        self.links.len()
    }
}

/// Index-based adjacency over a topology. Node indices follow ascending id
/// order so that comparing index sequences compares id sequences.
struct Graph<'a> {
    ids: Vec<&'a NodeId>,
    index: HashMap<&'a NodeId, usize>,
    adj: Vec<Vec<(usize, Latency, &'a LinkId)>>,
}

impl<'a> Graph<'a> {
    fn new(topology: &'a CrosshaulTopology) -> Self {
        let mut ids: Vec<&NodeId> = topology.nodes.iter().map(|n| &n.id).collect();
        ids.sort();
        ids.dedup();
        let index: HashMap<&NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for l in &topology.links {
            if let (Some(&a), Some(&b)) = (index.get(&l.endpoints.0), index.get(&l.endpoints.1)) {
                adj[a].push((b, l.latency, &l.id));
                adj[b].push((a, l.latency, &l.id));
            }
        }
        Graph { ids, index, adj }
    }

    /// Dijkstra keyed on (latency, hops, node sequence). Equal-hop sequences
    /// have equal length, so lexicographic order on them is preserved under
    /// extension and the label-setting argument still holds.
    fn shortest_from(&self, src: usize) -> Vec<Option<Label>> {
        let mut best: Vec<Option<Label>> = vec![None; self.ids.len()];
        let mut heap = BinaryHeap::new();
        let start = Label {
            latency: Latency::ZERO,
            nodes: vec![src],
            links: vec![],
        };
        heap.push(Reverse(start));
        while let Some(Reverse(label)) = heap.pop() {
            let at = *label.nodes.last().expect("labels are never empty");
            if best[at].is_some() {
                continue;
            }
            for &(next, lat, link) in &self.adj[at] {
                if best[next].is_some() || label.nodes.contains(&next) {
                    continue;
                }
                let mut nodes = label.nodes.clone();
                nodes.push(next);
                let mut links = label.links.clone();
                links.push(link.clone());
                heap.push(Reverse(Label {
                    latency: label.latency + lat,
                    nodes,
                    links,
                }));
            }
            best[at] = Some(label);
        }
        best
    }

    fn to_route(&self, label: Label) -> Route {
        Route {
            nodes: label.nodes.iter().map(|&i| self.ids[i].clone()).collect(),
            links: label.links,
            latency: label.latency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Label {
    latency: Latency,
    nodes: Vec<usize>,
    links: Vec<LinkId>,
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.latency
            .cmp(&other.latency)
            .then(self.nodes.len().cmp(&other.nodes.len()))
            .then_with(|| self.nodes.cmp(&other.nodes))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-latency path. Ties go to fewer hops, then to the lexicographically
/// smallest node-id sequence.
pub fn min_latency_path(
    topology: &CrosshaulTopology,
    src: &NodeId,
    dst: &NodeId,
) -> Result<Route, RoutingError> {
    let g = Graph::new(topology);
    let s = *g.index.get(src).ok_or_else(|| RoutingError::UnknownNode(src.clone()))?;
    let d = *g.index.get(dst).ok_or_else(|| RoutingError::UnknownNode(dst.clone()))?;
    let mut labels = g.shortest_from(s);
    labels[d].take().map(|l| g.to_route(l)).ok_or_else(|| RoutingError::NoPath {
        from: src.clone(),
        to: dst.clone(),
    })
}

/// Precomputed routes between every pair of endpoints of interest.
#[derive(Debug, Clone, Default)]
pub struct RouteTable {
    routes: HashMap<(NodeId, NodeId), Route>,
}

impl RouteTable {
    /// Routes from every node in `sources` to every node in `targets`.
    pub fn build(
        topology: &CrosshaulTopology,
        sources: &[NodeId],
        targets: &[NodeId],
    ) -> Result<Self, RoutingError> {
        let g = Graph::new(topology);
        let mut routes = HashMap::new();
        for src in sources {
            let s = *g.index.get(src).ok_or_else(|| RoutingError::UnknownNode(src.clone()))?;
            let mut labels = g.shortest_from(s);
            for dst in targets {
                let d = *g.index.get(dst).ok_or_else(|| RoutingError::UnknownNode(dst.clone()))?;
                let label = labels[d].clone().ok_or_else(|| RoutingError::NoPath {
                    from: src.clone(),
                    to: dst.clone(),
                })?;
                routes.insert((src.clone(), dst.clone()), g.to_route(label));
            }
            labels.clear();
        }
        Ok(RouteTable { routes })
    }

    pub fn get(&self, src: &NodeId, dst: &NodeId) -> Option<&Route> {
        self.routes.get(&(src.clone(), dst.clone()))
    }
}
