//! Random instances and a reference checker written without the crate's
//! routing, ledger or search code. Shared by the core integration tests and
//! the acceptance target.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;

use oplaceran_core::model::{
    Chain, ChainPlacement, CnfSpecSet, CrosshaulTopology, Link, LinkId, NfviResourceEntry, NodeId, NodeKind,
    SplitProfile, TopologyNode,
};
use oplaceran_core::optimizer::PlacementRequest;
use oplaceran_core::scenario::Scenario;
use oplaceran_core::units::{Bandwidth, ComputeCapacity, Latency};

fn node(id: &str, kind: NodeKind) -> TopologyNode {
    TopologyNode { id: id.into(), kind }
}

fn link(rng: &mut impl Rng, a: &str, b: &str, lat_ms: (u32, u32)) -> Link {
    let capacity = rng.gen_range(2..=10) * 100;
    let used = rng.gen_range(0..=capacity / 2);
    Link {
        id: format!("{a}-{b}").into(),
        endpoints: (a.into(), b.into()),
        latency: Latency::from_micros(rng.gen_range(lat_ms.0..=lat_ms.1) as i64 * 100),
        capacity: Bandwidth::from_mbps(capacity as f64),
        residual: Bandwidth::from_mbps((capacity - used) as f64),
    }
}

/// A tree-shaped crosshaul: CN - P1, vSwitches below P1, workers (and
/// sometimes a master) hanging off random switches.
pub fn random_scenario(rng: &mut impl Rng, workers: usize, chains: usize) -> Scenario {
    assert!(chains <= workers);
    let mut nodes = vec![node("CN", NodeKind::CoreNetworkAnchor), node("P1", NodeKind::PhysicalSwitch)];
    let mut links = vec![link(rng, "P1", "CN", (5, 20))];
    let mut switches = vec!["P1".to_string()];
    for s in 1..=rng.gen_range(1..=2) {
        let id = format!("S{s}");
        let parent = switches.choose(rng).unwrap().clone();
        nodes.push(node(&id, NodeKind::VirtualSwitch));
        links.push(link(rng, &id, &parent, (1, 10)));
        switches.push(id);
    }
    let mut nfvi = Vec::new();
    let mut computes: Vec<(String, NodeKind)> =
        (1..=workers).map(|w| (format!("W{w}"), NodeKind::ComputeWorker)).collect();
    if rng.gen_bool(0.3) {
        computes.push(("M1".into(), NodeKind::ComputeMaster));
    }
    for (id, kind) in computes {
        let parent = switches.choose(rng).unwrap().clone();
        nodes.push(node(&id, kind));
        links.push(link(rng, &id, &parent, (2, 10)));
        let capacity = ComputeCapacity::new(rng.gen_range(7..=40) * 100, rng.gen_range(4..=30) * 50);
        let mut entry = NfviResourceEntry::new(id.as_str(), capacity);
        if rng.gen_bool(0.3) {
            entry.allocated = ComputeCapacity::new(rng.gen_range(0..=capacity.cpu / 4), rng.gen_range(0..=capacity.memory / 4));
        }
        nfvi.push(entry);
    }
    let mut pins: Vec<usize> = (1..=workers).collect();
    pins.shuffle(rng);
    let chains = pins[..chains]
        .iter()
        .enumerate()
        .map(|(i, w)| Chain::new(format!("chain-{}", i + 1), format!("W{w}")))
        .collect();
    Scenario {
        topology: CrosshaulTopology { nodes, links },
        nfvi,
        chains,
        split_profile: SplitProfile::default(),
        cnf_specs: CnfSpecSet::default(),
        solver: "aggregation-max".into(),
    }
}

/// The unique simple path between two nodes of an acyclic topology.
pub fn tree_path(topology: &CrosshaulTopology, from: &NodeId, to: &NodeId) -> Option<Vec<LinkId>> {
    let mut parent: BTreeMap<NodeId, (NodeId, LinkId)> = BTreeMap::new();
    let mut seen = BTreeSet::from([from.clone()]);
    let mut queue = VecDeque::from([from.clone()]);
    while let Some(at) = queue.pop_front() {
        if &at == to {
            let mut path = Vec::new();
            let mut cur = at;
            while let Some((prev, l)) = parent.get(&cur) {
                path.push(l.clone());
                cur = prev.clone();
            }
            path.reverse();
            return Some(path);
        }
        for l in &topology.links {
            let next = if l.endpoints.0 == at {
                &l.endpoints.1
            } else if l.endpoints.1 == at {
                &l.endpoints.0
            } else {
                continue;
            };
            if seen.insert(next.clone()) {
                parent.insert(next.clone(), (at.clone(), l.id.clone()));
                queue.push_back(next.clone());
            }
        }
    }
    None
}

pub fn placement_on(topology: &CrosshaulTopology, chain: &Chain, vdu: &NodeId, vcu: &NodeId) -> ChainPlacement {
    let cn: NodeId = cn_of(topology);
    ChainPlacement {
        chain_id: chain.chain_id.clone(),
        vru_node: chain.vru_node.clone(),
        vdu_node: vdu.clone(),
        vcu_node: vcu.clone(),
        fronthaul_path: tree_path(topology, &chain.vru_node, vdu).unwrap(),
        midhaul_path: tree_path(topology, vdu, vcu).unwrap(),
        backhaul_path: tree_path(topology, vcu, &cn).unwrap(),
        splits_used: ChainPlacement::splits_for(&chain.vru_node, vdu, vcu),
    }
}

fn cn_of(topology: &CrosshaulTopology) -> NodeId {
    topology
        .nodes
        .iter()
        .find(|n| n.kind == NodeKind::CoreNetworkAnchor)
        .expect("CN anchor")
        .id
        .clone()
}

fn workers_of(topology: &CrosshaulTopology) -> Vec<NodeId> {
    let mut w: Vec<NodeId> = topology
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::ComputeWorker)
        .map(|n| n.id.clone())
        .collect();
    w.sort();
    w
}

/// Segment latencies in microseconds, or `None` if a path does not connect
/// its endpoints.
fn walk_latency(topology: &CrosshaulTopology, from: &NodeId, to: &NodeId, path: &[LinkId]) -> Option<i64> {
    let mut at = from.clone();
    let mut total = 0;
    for id in path {
        let l = topology.links.iter().find(|l| &l.id == id)?;
        at = if l.endpoints.0 == at {
            l.endpoints.1.clone()
        } else if l.endpoints.1 == at {
            l.endpoints.0.clone()
        } else {
            return None;
        };
        total += l.latency.as_micros();
    }
    (&at == to).then_some(total)
}

/// Straight-line feasibility: every chain placed once on its pin, all
/// functions on workers, paths connected, latency bounds, then summed node
/// and link demand against free capacity and residual bandwidth.
pub fn reference_feasible(placements: &[ChainPlacement], request: &PlacementRequest) -> bool {
    let t = &request.topology;
    let cn = cn_of(t);
    let placed: Vec<&str> = placements.iter().map(|p| p.chain_id.as_str()).collect();
    let mut expected: Vec<&str> = request.chains.iter().map(|c| c.chain_id.as_str()).collect();
    let mut got = placed.clone();
    expected.sort();
    got.sort();
    if expected != got {
        return false;
    }

    let workers = workers_of(t);
    let profile = &request.split_profile;
    let mut cpu: BTreeMap<&NodeId, u64> = BTreeMap::new();
    let mut mem: BTreeMap<&NodeId, u64> = BTreeMap::new();
    let mut bw: BTreeMap<&LinkId, i64> = BTreeMap::new();
    for p in placements {
        let chain = request.chains.iter().find(|c| c.chain_id == p.chain_id).unwrap();
        if chain.vru_node != p.vru_node {
            return false;
        }
        let specs = [
            (&p.vru_node, &request.cnf_specs.vru),
            (&p.vdu_node, &request.cnf_specs.vdu),
            (&p.vcu_node, &request.cnf_specs.vcu),
        ];
        for (n, spec) in specs {
            if !workers.contains(n) {
                return false;
            }
            *cpu.entry(n).or_default() += spec.cpu_demand;
            *mem.entry(n).or_default() += spec.memory_demand;
        }
        let segments = [
            (&p.vru_node, &p.vdu_node, &p.fronthaul_path, &profile.fronthaul_o6),
            (&p.vdu_node, &p.vcu_node, &p.midhaul_path, &profile.midhaul_o2),
            (&p.vcu_node, &cn, &p.backhaul_path, &profile.backhaul_cn),
        ];
        for (from, to, path, req) in segments {
            match walk_latency(t, from, to, path) {
                Some(us) if us <= req.max_latency.as_micros() => {}
                _ => return false,
            }
            for l in path.iter() {
                *bw.entry(l).or_default() += req.bitrate.as_kbps();
            }
        }
    }
    for (n, used) in &cpu {
        let e = request.nfvi.iter().find(|e| &&e.node == n);
        let free_cpu = e.map_or(0, |e| e.capacity.cpu.saturating_sub(e.allocated.cpu));
        let free_mem = e.map_or(0, |e| e.capacity.memory.saturating_sub(e.allocated.memory));
        if *used > free_cpu || mem[n] > free_mem {
            return false;
        }
    }
    for (l, used) in &bw {
        let link = t.links.iter().find(|x| &&x.id == l).unwrap();
        if *used > link.residual.as_kbps() {
            return false;
        }
    }
    true
}

fn within_bounds(t: &CrosshaulTopology, profile: &SplitProfile, p: &ChainPlacement) -> bool {
    let sum = |path: &[LinkId]| -> i64 {
        path.iter()
            .map(|l| t.links.iter().find(|x| &x.id == l).unwrap().latency.as_micros())
            .sum()
    };
    sum(&p.fronthaul_path) <= profile.fronthaul_o6.max_latency.as_micros()
        && sum(&p.midhaul_path) <= profile.midhaul_o2.max_latency.as_micros()
        && sum(&p.backhaul_path) <= profile.backhaul_cn.max_latency.as_micros()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefObjective {
    AggregationMax,
    DuPinned,
}

/// Optimal key by exhaustive enumeration: `(distinct vDU/vCU hosts,
/// backhaul hops)` or the du-pinned cost in thousandths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RefKey {
    Aggregation(u32, u32),
    DuPinned(i64),
}

pub fn reference_optimum(request: &PlacementRequest, objective: RefObjective) -> Option<RefKey> {
    let t = &request.topology;
    let workers = workers_of(t);
    let mut chains = request.chains.clone();
    chains.sort_by(|a, b| a.chain_id.cmp(&b.chain_id));

    // per chain, every (vdu, vcu) whose own latencies are within bounds
    let options: Vec<Vec<ChainPlacement>> = chains
        .iter()
        .map(|c| {
            let mut v = Vec::new();
            for vdu in &workers {
                if objective == RefObjective::DuPinned && vdu != &c.vru_node {
                    continue;
                }
                for vcu in &workers {
                    let p = placement_on(t, c, vdu, vcu);
                    if within_bounds(t, &request.split_profile, &p) {
                        v.push(p);
                    }
                }
            }
            v
        })
        .collect();

    let mut best: Option<RefKey> = None;
    let mut idx = vec![0usize; chains.len()];
    if options.iter().any(Vec::is_empty) {
        return None;
    }
    loop {
        let set: Vec<ChainPlacement> = idx.iter().zip(&options).map(|(i, o)| o[*i].clone()).collect();
        if reference_feasible(&set, request) {
            let key = match objective {
                RefObjective::AggregationMax => {
                    let hosts: BTreeSet<&NodeId> = set.iter().flat_map(|p| [&p.vdu_node, &p.vcu_node]).collect();
                    let hops: usize = set.iter().map(|p| p.backhaul_path.len()).sum();
                    RefKey::Aggregation(hosts.len() as u32, hops as u32)
                }
                RefObjective::DuPinned => {
                    let hosts: BTreeSet<&NodeId> = set.iter().map(|p| &p.vcu_node).collect();
                    let latency: i64 = set
                        .iter()
                        .map(|p| {
                            [&p.fronthaul_path, &p.midhaul_path, &p.backhaul_path]
                                .into_iter()
                                .flatten()
                                .map(|l| t.links.iter().find(|x| &x.id == l).unwrap().latency.as_micros())
                                .sum::<i64>()
                        })
                        .sum();
                    RefKey::DuPinned(100 * 1000 * hosts.len() as i64 + latency)
                }
            };
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        // odometer
        let mut k = 0;
        loop {
            if k == idx.len() {
                return best;
            }
            idx[k] += 1;
            if idx[k] < options[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Random placements near the valid region: correct routes with some hosts,
/// paths or chain sets perturbed.
pub fn random_placements(rng: &mut impl Rng, request: &PlacementRequest) -> Vec<ChainPlacement> {
    let t = &request.topology;
    let workers = workers_of(t);
    let all: Vec<NodeId> = t.nodes.iter().map(|n| n.id.clone()).collect();
    let mut out: Vec<ChainPlacement> = request
        .chains
        .iter()
        .map(|c| {
            let [vdu, vcu] = [0, 1].map(|_| {
                let pool = if rng.gen_bool(0.05) { &all } else { &workers };
                pool.choose(rng).unwrap().clone()
            });
            let mut p = placement_on(t, c, &vdu, &vcu);
            if rng.gen_bool(0.05) {
                p.vru_node = workers.choose(rng).unwrap().clone();
            }
            if rng.gen_bool(0.05) {
                p.midhaul_path.pop();
            }
            if rng.gen_bool(0.05) {
                p.backhaul_path.push(t.links.choose(rng).unwrap().id.clone());
            }
            if rng.gen_bool(0.02) {
                p.fronthaul_path.push("no-such-link".into());
            }
            p
        })
        .collect();
    if !out.is_empty() && rng.gen_bool(0.03) {
        out.pop();
    }
    if !out.is_empty() && rng.gen_bool(0.03) {
        let dup = out[0].clone();
        out.push(dup);
    }
    out.shuffle(rng);
    out
}
