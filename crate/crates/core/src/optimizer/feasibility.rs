//! The feasibility kernel. Solvers, the oracle and `check_feasibility` all
//! account resources through [`Ledger`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{ChainPlacement, LinkId, NodeId, NodeKind, Segment};
use crate::units::{Bandwidth, ComputeCapacity, Latency};

use super::PlacementRequest;

/// Resources one chain consumes: merged per-node demands, merged per-link
/// bit rates (kbit/s), and the latency of each segment.
#[derive(Debug, Clone, Default)]
pub(crate) struct Footprint {
    pub nodes: Vec<(usize, ComputeCapacity)>,
    pub links: Vec<(usize, i64)>,
    pub segment_latency: [Latency; 3],
}

impl Footprint {
    pub fn add_node(&mut self, node: usize, demand: ComputeCapacity) {
        match self.nodes.iter_mut().find(|(n, _)| *n == node) {
            Some((_, d)) => *d += demand,
            None => self.nodes.push((node, demand)),
        }
    }

    pub fn add_link(&mut self, link: usize, kbps: i64) {
        match self.links.iter_mut().find(|(l, _)| *l == link) {
            Some((_, b)) => *b += kbps,
            None => self.links.push((link, kbps)),
        }
    }
}

/// Cumulative usage against fixed per-node free capacity and per-link
/// residual bandwidth.
#[derive(Debug, Clone)]
pub(crate) struct Ledger<'a> {
    free: &'a [ComputeCapacity],
    residual: &'a [i64],
    node_used: Vec<ComputeCapacity>,
    link_used: Vec<i64>,
}

impl<'a> Ledger<'a> {
    pub fn new(free: &'a [ComputeCapacity], residual: &'a [i64]) -> Self {
        Ledger {
            free,
            residual,
            node_used: vec![ComputeCapacity::ZERO; free.len()],
            link_used: vec![0; residual.len()],
        }
    }

    pub fn fits(&self, fp: &Footprint) -> bool {
        fp.nodes
            .iter()
            .all(|&(n, d)| (self.node_used[n] + d).fits_within(&self.free[n]))
            && fp.links.iter().all(|&(l, b)| self.link_used[l] + b <= self.residual[l])
    }

    /// Account `fp` unconditionally.
    pub fn add(&mut self, fp: &Footprint) {
        for &(n, d) in &fp.nodes {
            self.node_used[n] += d;
        }
        for &(l, b) in &fp.links {
            self.link_used[l] += b;
        }
    }

    pub fn try_commit(&mut self, fp: &Footprint) -> bool {
        if self.fits(fp) {
            self.add(fp);
            true
        } else {
            false
        }
    }

    pub fn release(&mut self, fp: &Footprint) {
        for &(n, d) in &fp.nodes {
            self.node_used[n] = self.node_used[n]
                .checked_sub(&d)
                .expect("released more than committed");
        }
        for &(l, b) in &fp.links {
            self.link_used[l] -= b;
        }
    }

    pub fn reset(&mut self) {
        self.node_used.iter_mut().for_each(|u| *u = ComputeCapacity::ZERO);
        self.link_used.iter_mut().for_each(|u| *u = 0);
    }

    /// `(node, resource, used, free)` for every exceeded node dimension.
    pub fn node_overloads(&self) -> impl Iterator<Item = (usize, Resource, u64, u64)> + '_ {
        self.node_used.iter().enumerate().flat_map(move |(n, used)| {
            let free = self.free[n];
            let cpu = (used.cpu > free.cpu).then_some((n, Resource::Cpu, used.cpu, free.cpu));
            let mem = (used.memory > free.memory).then_some((n, Resource::Memory, used.memory, free.memory));
            cpu.into_iter().chain(mem)
        })
    }

    pub fn link_overloads(&self) -> impl Iterator<Item = (usize, i64, i64)> + '_ {
        self.link_used
            .iter()
            .enumerate()
            .filter(move |(l, used)| **used > self.residual[*l])
            .map(move |(l, used)| (l, *used, self.residual[l]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resource {
    Cpu,
    Memory,
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resource::Cpu => "CPU",
            Resource::Memory => "memory",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    MissingChain { chain_id: String },
    UnexpectedChain { chain_id: String },
    PinMismatch { chain_id: String, expected: NodeId, found: NodeId },
    NotAWorker { chain_id: String, node: NodeId },
    MalformedPath { chain_id: String, segment: Segment, reason: String },
    SegmentLatency { chain_id: String, segment: Segment, latency: Latency, bound: Latency },
    LinkBandwidth { link: LinkId, demand: Bandwidth, available: Bandwidth },
    NodeCapacity { node: NodeId, resource: Resource, demand: u64, available: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            MissingChain { chain_id } => write!(f, "{chain_id}: no placement"),
            UnexpectedChain { chain_id } => write!(f, "{chain_id}: placement for unknown or repeated chain"),
            PinMismatch { chain_id, expected, found } => {
                write!(f, "{chain_id}: vRU on {found} but pinned to {expected}")
            }
            NotAWorker { chain_id, node } => write!(f, "{chain_id}: {node} is not a worker"),
            MalformedPath { chain_id, segment, reason } => write!(f, "{chain_id}: {segment} path {reason}"),
            SegmentLatency {
                chain_id,
                segment,
                latency,
                bound,
            } => write!(f, "{chain_id}: {segment} latency {latency} > {bound} ms"),
            LinkBandwidth { link, demand, available } => {
                write!(f, "link {link}: bandwidth {demand} > {available} Mbps")
            }
            NodeCapacity {
                node,
                resource,
                demand,
                available,
            } => write!(f, "node {node}: {resource} {demand} > {available}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Follow `path` from `from`; the node reached, or why the walk broke.
fn walk(
    topology: &crate::model::CrosshaulTopology,
    from: &NodeId,
    path: &[LinkId],
) -> Result<NodeId, String> {
    let mut at = from.clone();
    for id in path {
        let link = topology.link(id).ok_or_else(|| format!("uses unknown link {id}"))?;
        at = link
            .other_end(&at)
            .cloned()
            .ok_or_else(|| format!("breaks at link {id}"))?;
    }
    Ok(at)
}

/// Check placements against latency bounds, link bandwidth and node
/// capacity. Co-located segments have empty paths and cost nothing.
pub fn check_feasibility(placements: &[ChainPlacement], request: &PlacementRequest) -> Verdict {
    let topology = &request.topology;
    let profile = &request.split_profile;
    let mut violations = BTreeSet::new();

    let workers = topology.workers();
    let worker_index: HashMap<&NodeId, usize> = workers.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let free: Vec<ComputeCapacity> = workers.iter().map(|w| request.free_capacity(w)).collect();
    let link_index: HashMap<&LinkId, usize> = topology.links.iter().enumerate().map(|(i, l)| (&l.id, i)).collect();
    let residual: Vec<i64> = topology.links.iter().map(|l| l.residual.as_kbps()).collect();
    let mut ledger = Ledger::new(&free, &residual);

    let mut pins: BTreeMap<&str, &NodeId> = request.chains.iter().map(|c| (c.chain_id.as_str(), &c.vru_node)).collect();
    let cn = topology.cn_anchor();

    for p in placements {
        let Some(expected) = pins.remove(p.chain_id.as_str()) else {
            violations.insert(Violation::UnexpectedChain {
                chain_id: p.chain_id.clone(),
            });
            continue;
        };
        if expected != &p.vru_node {
            violations.insert(Violation::PinMismatch {
                chain_id: p.chain_id.clone(),
                expected: expected.clone(),
                found: p.vru_node.clone(),
            });
        }

        let mut fp = Footprint::default();
        let specs = &request.cnf_specs;
        for (node, demand) in [
            (&p.vru_node, specs.vru.demand()),
            (&p.vdu_node, specs.vdu.demand()),
            (&p.vcu_node, specs.vcu.demand()),
        ] {
            match worker_index.get(node) {
                Some(&i) if topology.kind_of(node) == Some(NodeKind::ComputeWorker) => fp.add_node(i, demand),
                _ => {
                    violations.insert(Violation::NotAWorker {
                        chain_id: p.chain_id.clone(),
                        node: node.clone(),
                    });
                }
            }
        }

        let ends = [
            (Segment::Fronthaul, &p.vru_node, Some(&p.vdu_node)),
            (Segment::Midhaul, &p.vdu_node, Some(&p.vcu_node)),
            (Segment::Backhaul, &p.vcu_node, cn),
        ];
        for (k, (segment, from, to)) in ends.into_iter().enumerate() {
            let path = p.path(segment);
            let req = profile.requirement(segment);
            let malformed = |reason: String| Violation::MalformedPath {
                chain_id: p.chain_id.clone(),
                segment,
                reason,
            };
            let Some(to) = to else {
                violations.insert(malformed("has no CN anchor to reach".into()));
                continue;
            };
            match walk(topology, from, path) {
                Ok(end) if &end == to => {}
                Ok(end) => {
                    violations.insert(malformed(format!("ends at {end}, expected {to}")));
                    continue;
                }
                Err(reason) => {
                    violations.insert(malformed(reason));
                    continue;
                }
            }
            let mut latency = Latency::ZERO;
            for id in path {
                let i = link_index[id];
                latency += topology.links[i].latency;
                fp.add_link(i, req.bitrate.as_kbps());
            }
            fp.segment_latency[k] = latency;
            if latency > req.max_latency {
                violations.insert(Violation::SegmentLatency {
                    chain_id: p.chain_id.clone(),
                    segment,
                    latency,
                    bound: req.max_latency,
                });
            }
        }
        ledger.add(&fp);
    }

    for chain_id in pins.into_keys() {
        violations.insert(Violation::MissingChain {
            chain_id: chain_id.to_owned(),
        });
    }
    for (n, resource, used, avail) in ledger.node_overloads() {
        violations.insert(Violation::NodeCapacity {
            node: workers[n].clone(),
            resource,
            demand: used,
            available: avail,
        });
    }
    for (l, used, avail) in ledger.link_overloads() {
        violations.insert(Violation::LinkBandwidth {
            link: topology.links[l].id.clone(),
            demand: Bandwidth::from_kbps(used),
            available: Bandwidth::from_kbps(avail),
        });
    }

    Verdict {
        violations: violations.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CnfSpecSet, SplitProfile};
    use crate::scenario::{canonical_scenario, load_scenario};
    use crate::topology::min_latency_path;

    fn place(req: &PlacementRequest, chain: &str, vru: &str, vdu: &str, vcu: &str) -> ChainPlacement {
        let t = &req.topology;
        let path = |a: &str, b: &str| min_latency_path(t, &a.into(), &b.into()).unwrap().links;
        ChainPlacement {
            chain_id: chain.into(),
            vru_node: vru.into(),
            vdu_node: vdu.into(),
            vcu_node: vcu.into(),
            fronthaul_path: path(vru, vdu),
            midhaul_path: path(vdu, vcu),
            backhaul_path: path(vcu, "CN"),
            splits_used: ChainPlacement::splits_for(&vru.into(), &vdu.into(), &vcu.into()),
        }
    }

    #[test]
    fn monolithic_everywhere_overloads_w2_and_w4() {
        let req = PlacementRequest::from_scenario(&canonical_scenario());
        let ps: Vec<_> = (1..=4)
            .map(|i| {
                let w = format!("W{i}");
                place(&req, &format!("chain-{i}"), &w, &w, &w)
            })
            .collect();
        let v = check_feasibility(&ps, &req);
        assert!(!v.is_feasible());
        // 300+700+600 = 1600 m and 100+100+150 = 350 MiB against 1000 m / 200 MiB
        for node in ["W2", "W4"] {
            assert!(v.violations.contains(&Violation::NodeCapacity {
                node: node.into(),
                resource: Resource::Cpu,
                demand: 1600,
                available: 1000,
            }));
            assert!(v.violations.contains(&Violation::NodeCapacity {
                node: node.into(),
                resource: Resource::Memory,
                demand: 350,
                available: 200,
            }));
        }
        assert_eq!(v.violations.len(), 4);
    }

    #[test]
    fn single_monolithic_chain_on_w1_is_feasible() {
        let mut req = PlacementRequest::from_scenario(&canonical_scenario());
        req.chains.truncate(1);
        let p = place(&req, "chain-1", "W1", "W1", "W1");
        assert!(p.fronthaul_path.is_empty() && p.midhaul_path.is_empty());
        assert!(check_feasibility(&[p], &req).is_feasible());
    }

    #[test]
    fn fronthaul_bound_violation_is_itemized() {
        let mut req = PlacementRequest::from_scenario(&canonical_scenario());
        req.chains.truncate(1);
        req.split_profile.fronthaul_o6.max_latency = Latency::from_ms(1.0);
        let p = place(&req, "chain-1", "W1", "W3", "W3");
        let v = check_feasibility(&[p], &req);
        assert_eq!(
            v.violations,
            vec![Violation::SegmentLatency {
                chain_id: "chain-1".into(),
                segment: Segment::Fronthaul,
                latency: Latency::from_ms(2.0),
                bound: Latency::from_ms(1.0),
            }]
        );
        assert_eq!(v.violations[0].to_string(), "chain-1: fronthaul latency 2 > 1 ms");
    }

    #[test]
    fn link_overcommit() {
        let mut s = load_scenario(crate::scenario::CANONICAL_FIXTURE.as_bytes()).unwrap();
        s.split_profile = SplitProfile::default();
        s.split_profile.backhaul_cn.bitrate = Bandwidth::from_mbps(600.0);
        s.split_profile.midhaul_o2.bitrate = Bandwidth::from_mbps(500.0);
        s.split_profile.fronthaul_o6.bitrate = Bandwidth::from_mbps(400.0);
        s.cnf_specs = CnfSpecSet::default();
        let mut req = PlacementRequest::from_scenario(&s);
        req.chains.retain(|c| c.vru_node.as_str() == "W4");
        // vDU on W1 and vCU on W4: fronthaul and midhaul plus backhaul all cross W4-pSw
        let p = place(&req, "chain-4", "W4", "W1", "W4");
        let v = check_feasibility(&[p], &req);
        assert!(v.violations.iter().any(|x| matches!(x,
            Violation::LinkBandwidth { link, demand, .. } if link.as_str() == "W4-pSw" && *demand == Bandwidth::from_mbps(1500.0))));
    }

    #[test]
    fn structural_problems() {
        let req = PlacementRequest::from_scenario(&canonical_scenario());
        let mut p = place(&req, "chain-1", "W1", "M1", "W1");
        p.backhaul_path.clear();
        let v = check_feasibility(&[p], &req);
        let kinds: Vec<String> = v.violations.iter().map(ToString::to_string).collect();
        assert!(kinds.iter().any(|k| k.contains("M1 is not a worker")), "{kinds:?}");
        assert!(kinds.iter().any(|k| k.contains("backhaul path ends at W1")), "{kinds:?}");
        assert!(kinds.iter().any(|k| k == "chain-2: no placement"), "{kinds:?}");
    }
}
