//! Index-based view of a placement request shared by solvers and the oracle.

use std::collections::{BTreeMap, HashMap};

use crate::model::{Chain, ChainPlacement, LinkId, NodeId, Segment};
use crate::topology::{Route, RouteTable};
use crate::units::{Bandwidth, ComputeCapacity, Latency};

use super::feasibility::{Footprint, Ledger};
use super::{ObjectiveValue, PlacementRequest, PlacementResult, SolveError};

/// One `(vdu, vcu)` choice for a chain.
#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub vdu: usize,
    pub vcu: usize,
    pub footprint: Footprint,
    pub latency_ok: bool,
    /// fronthaul + midhaul + backhaul latency.
    pub total_latency: Latency,
    pub cn_hops: u32,
}

#[derive(Debug, Clone)]
pub(crate) struct ChainCtx {
    pub chain: Chain,
    pub pin: usize,
    /// All `(vdu, vcu)` pairs, in ascending `(vdu id, vcu id)` order.
    pub candidates: Vec<Candidate>,
}

pub(crate) struct Instance<'r> {
    pub request: &'r PlacementRequest,
    pub workers: Vec<NodeId>,
    pub free: Vec<ComputeCapacity>,
    pub links: Vec<LinkId>,
    pub residual: Vec<i64>,
    /// Sorted by chain id.
    pub chains: Vec<ChainCtx>,
    routes: RouteTable,
    cn: NodeId,
}

impl<'r> Instance<'r> {
    pub fn new(request: &'r PlacementRequest) -> Result<Self, SolveError> {
        let problems = request.problems();
        if !problems.is_empty() {
            return Err(SolveError::InvalidRequest(problems));
        }
        let topology = &request.topology;
        let workers = topology.workers();
        let cn = topology
            .cn_anchor()
            .cloned()
            .ok_or_else(|| SolveError::InvalidRequest(vec!["missing CN anchor".into()]))?;
        let worker_index: HashMap<&NodeId, usize> = workers.iter().enumerate().map(|(i, w)| (w, i)).collect();
        let free = workers.iter().map(|w| request.free_capacity(w)).collect();

        let links: Vec<LinkId> = topology.links.iter().map(|l| l.id.clone()).collect();
        let link_index: HashMap<&LinkId, usize> = links.iter().enumerate().map(|(i, l)| (l, i)).collect();
        let residual = topology.links.iter().map(|l| l.residual.as_kbps()).collect();

        let mut targets = workers.clone();
        targets.push(cn.clone());
        let routes =
            RouteTable::build(topology, &workers, &targets).map_err(|e| SolveError::InvalidRequest(vec![e.to_string()]))?;

        let profile = &request.split_profile;
        let specs = &request.cnf_specs;
        let mut chain_list = request.chains.clone();
        chain_list.sort_by(|a, b| a.chain_id.cmp(&b.chain_id));

        let mut chains = Vec::with_capacity(chain_list.len());
        for chain in chain_list {
            let pin = worker_index[&chain.vru_node];
            let mut candidates = Vec::with_capacity(workers.len() * workers.len());
            for vdu in 0..workers.len() {
                for vcu in 0..workers.len() {
                    let segs = [
                        routes.get(&workers[pin], &workers[vdu]).expect("worker routes"),
                        routes.get(&workers[vdu], &workers[vcu]).expect("worker routes"),
                        routes.get(&workers[vcu], &cn).expect("cn routes"),
                    ];
                    let mut footprint = Footprint::default();
                    footprint.add_node(pin, specs.vru.demand());
                    footprint.add_node(vdu, specs.vdu.demand());
                    footprint.add_node(vcu, specs.vcu.demand());
                    for (seg, route) in Segment::ALL.iter().zip(segs) {
                        let bitrate = profile.requirement(*seg).bitrate.as_kbps();
                        for l in &route.links {
                            footprint.add_link(link_index[l], bitrate);
                        }
                    }
                    footprint.segment_latency = [segs[0].latency, segs[1].latency, segs[2].latency];
                    let latency_ok = Segment::ALL
                        .iter()
                        .zip(footprint.segment_latency)
                        .all(|(s, lat)| lat <= profile.requirement(*s).max_latency);
                    candidates.push(Candidate {
                        vdu,
                        vcu,
                        total_latency: footprint.segment_latency.iter().copied().sum(),
                        cn_hops: segs[2].hops() as u32,
                        footprint,
                        latency_ok,
                    });
                }
            }
            chains.push(ChainCtx { chain, pin, candidates });
        }

        Ok(Instance {
            request,
            workers,
            free,
            links,
            residual,
            chains,
            routes,
            cn,
        })
    }

    pub fn ledger(&self) -> Ledger<'_> {
        Ledger::new(&self.free, &self.residual)
    }

    /// Why no joint assignment exists, chain by chain where possible.
    pub fn diagnose(&self) -> Vec<String> {
        let profile = &self.request.split_profile;
        let mut out = Vec::new();
        for ctx in &self.chains {
            let in_bounds: Vec<&Candidate> = ctx.candidates.iter().filter(|c| c.latency_ok).collect();
            if in_bounds.is_empty() {
                out.push(format!(
                    "{}: every vDU/vCU pair breaks a latency bound (fronthaul {} ms, midhaul {} ms, backhaul {} ms)",
                    ctx.chain.chain_id,
                    profile.fronthaul_o6.max_latency,
                    profile.midhaul_o2.max_latency,
                    profile.backhaul_cn.max_latency
                ));
                continue;
            }
            let ledger = self.ledger();
            if !in_bounds.iter().any(|c| ledger.fits(&c.footprint)) {
                out.push(format!(
                    "{}: none of the {} pairs within the latency bounds fits the free capacity and bandwidth",
                    ctx.chain.chain_id,
                    in_bounds.len()
                ));
            }
        }
        if out.is_empty() {
            out.push("each chain fits alone but the chains cannot share the free capacity and bandwidth".into());
        }
        out
    }

    fn route(&self, a: usize, b: usize) -> &Route {
        self.routes.get(&self.workers[a], &self.workers[b]).expect("worker routes")
    }

    fn route_to_cn(&self, a: usize) -> &Route {
        self.routes.get(&self.workers[a], &self.cn).expect("cn routes")
    }

    /// Objective of a complete choice (candidate index per chain).
    pub fn objective(&self, choice: &[usize], cost: Option<super::Cost>) -> ObjectiveValue {
        let mut hosts = vec![false; self.workers.len()];
        let mut cn_distance = 0;
        for (ctx, &ci) in self.chains.iter().zip(choice) {
            let c = &ctx.candidates[ci];
            hosts[c.vdu] = true;
            hosts[c.vcu] = true;
            cn_distance += c.cn_hops;
        }
        ObjectiveValue {
            cr_count: hosts.iter().filter(|h| **h).count() as u32,
            cn_distance,
            cost: cost.unwrap_or_default(),
        }
    }

    /// Materialize a choice into a result. Timing and solver id are filled by
    /// the registry.
    pub fn assemble(&self, choice: &[usize], objective: ObjectiveValue) -> PlacementResult {
        let mut link_reservations: BTreeMap<LinkId, Bandwidth> = BTreeMap::new();
        let mut node_loads: BTreeMap<NodeId, ComputeCapacity> = BTreeMap::new();
        let mut placements = Vec::with_capacity(choice.len());
        for (ctx, &ci) in self.chains.iter().zip(choice) {
            let c = &ctx.candidates[ci];
            for &(n, demand) in &c.footprint.nodes {
                *node_loads.entry(self.workers[n].clone()).or_default() += demand;
            }
            for &(l, kbps) in &c.footprint.links {
                *link_reservations.entry(self.links[l].clone()).or_default() += Bandwidth::from_kbps(kbps);
            }
            let (vru, vdu, vcu) = (&self.workers[ctx.pin], &self.workers[c.vdu], &self.workers[c.vcu]);
            placements.push(ChainPlacement {
                chain_id: ctx.chain.chain_id.clone(),
                vru_node: vru.clone(),
                vdu_node: vdu.clone(),
                vcu_node: vcu.clone(),
                fronthaul_path: self.route(ctx.pin, c.vdu).links.clone(),
                midhaul_path: self.route(c.vdu, c.vcu).links.clone(),
                backhaul_path: self.route_to_cn(c.vcu).links.clone(),
                splits_used: ChainPlacement::splits_for(vru, vdu, vcu),
            });
        }
        PlacementResult {
            placements,
            objective,
            link_reservations,
            node_loads,
            solver_id: self.request.solver_id.clone(),
            solve_time: 0.0,
        }
    }
}
