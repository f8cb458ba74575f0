//! Allocation plans: a placement result turned into pod specs and chaining.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::catalogs::Catalogs;
use crate::model::{CnfSpec, LinkId, NodeId, RanFunction, Segment, SplitOption};
use crate::optimizer::PlacementResult;
use crate::units::Bandwidth;

use super::DeployError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PodSpec {
    pub chain_id: String,
    pub function: RanFunction,
    pub node: NodeId,
    pub spec: CnfSpec,
    pub image_ref: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endpoint {
    #[serde(rename = "vRU")]
    Vru,
    #[serde(rename = "vDU")]
    Vdu,
    #[serde(rename = "vCU")]
    Vcu,
    #[serde(rename = "CN")]
    CoreNetwork,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adjacency {
    pub from: Endpoint,
    pub to: Endpoint,
    pub segment: Segment,
    /// Split interface, absent on the backhaul.
    pub split: Option<SplitOption>,
    pub path: Vec<LinkId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainWiring {
    pub chain_id: String,
    pub adjacencies: Vec<Adjacency>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub plan_id: String,
    pub pod_specs: Vec<PodSpec>,
    pub chaining: Vec<ChainWiring>,
    pub link_reservations: BTreeMap<LinkId, Bandwidth>,
}

impl AllocationPlan {
    /// Summed pod demand per node.
    pub fn node_demands(&self) -> BTreeMap<NodeId, crate::units::ComputeCapacity> {
        let mut out: BTreeMap<NodeId, crate::units::ComputeCapacity> = BTreeMap::new();
        for p in &self.pod_specs {
            *out.entry(p.node.clone()).or_default() += p.spec.demand();
        }
        out
    }

    pub fn problems(&self) -> Vec<String> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        for p in &self.pod_specs {
            if !seen.insert((p.chain_id.as_str(), p.function)) {
                out.push(format!("{} has more than one {} pod", p.chain_id, p.function));
            }
            if p.spec.function != p.function {
                out.push(format!("{} {} pod carries a {} spec", p.chain_id, p.function, p.spec.function));
            }
        }
        for (link, bw) in &self.link_reservations {
            if bw.as_kbps() < 0 {
                out.push(format!("negative reservation on {link}"));
            }
        }
        out
    }
}

/// Resolve images from the CNF catalog and lay out one pod per
/// (chain, function) plus the chain adjacencies.
pub fn build_allocation_plan(result: &PlacementResult, catalogs: &Catalogs) -> Result<AllocationPlan, DeployError> {
    let images = RanFunction::ALL
        .into_iter()
        .map(|f| catalogs.get_cnf_image(f).map_err(|_| DeployError::MissingEntry(f)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut pod_specs = Vec::with_capacity(3 * result.placements.len());
    let mut chaining = Vec::with_capacity(result.placements.len());
    for p in &result.placements {
        for image in &images {
            pod_specs.push(PodSpec {
                chain_id: p.chain_id.clone(),
                function: image.function,
                node: p.host(image.function).clone(),
                spec: image.spec.clone(),
                image_ref: image.image_ref.clone(),
            });
        }
        let hop = |from, to, segment, split| Adjacency {
            from,
            to,
            segment,
            split,
            path: p.path(segment).to_vec(),
        };
        chaining.push(ChainWiring {
            chain_id: p.chain_id.clone(),
            adjacencies: vec![
                hop(Endpoint::Vru, Endpoint::Vdu, Segment::Fronthaul, Some(SplitOption::O6)),
                hop(Endpoint::Vdu, Endpoint::Vcu, Segment::Midhaul, Some(SplitOption::O2)),
                hop(Endpoint::Vcu, Endpoint::CoreNetwork, Segment::Backhaul, None),
            ],
        });
    }
    Ok(AllocationPlan {
        plan_id: Uuid::new_v4().simple().to_string(),
        pod_specs,
        chaining,
        link_reservations: result.link_reservations.clone(),
    })
}
