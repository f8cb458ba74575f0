//! The deployer and the simulated VNFM/VIM/NFVI it drives.

mod cluster;
mod plan;
mod timeline;

use thiserror::Error;

use crate::model::{LinkId, NodeId, RanFunction};
use crate::optimizer::Resource;
use crate::units::Bandwidth;

pub use cluster::{
    ChainLatency, ClusterMetrics, ClusterState, DeploymentRecord, DeploymentStatus, LinkMetrics, LinkState, NfviSimulator,
    NodeMetrics, NodeState, PodPhase, PodRecord,
};
pub use plan::{build_allocation_plan, Adjacency, AllocationPlan, ChainWiring, Endpoint, PodSpec};
pub use timeline::{export_timeline, Marker, SimTime, TimelineConfig, TimelineEntry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeployError {
    #[error("insufficient resources on {node}: {resource} {demand} > {free} free")]
    InsufficientResources {
        node: NodeId,
        resource: Resource,
        demand: u64,
        free: u64,
    },
    #[error("link {link} over-committed: {demand} > {residual} Mbps residual")]
    LinkOverCommit {
        link: LinkId,
        demand: Bandwidth,
        residual: Bandwidth,
    },
    #[error("unknown deployment {0}")]
    UnknownDeployment(String),
    #[error("plan targets unknown node {0}")]
    UnknownNode(NodeId),
    #[error("plan reserves unknown link {0}")]
    UnknownLink(LinkId),
    #[error("no catalog image for {0}")]
    MissingEntry(RanFunction),
    #[error("invalid plan: {}", .0.join("; "))]
    InvalidPlan(Vec<String>),
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("pods of deployment {0} failed to start")]
    PodStartFailure(String),
    #[error("cluster has {0} active deployments")]
    Busy(usize),
    #[error("NFVI simulator unavailable")]
    SimulatorUnavailable,
}
