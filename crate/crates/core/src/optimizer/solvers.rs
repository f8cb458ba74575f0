//! Built-in solvers.
//!
//! Chains are always processed in ascending chain id and candidates in
//! ascending `(vdu id, vcu id)`, so a depth-first search meets complete
//! assignments in lexicographic order. The exact solvers keep the first
//! assignment reaching the best key and prune any branch whose lower bound is
//! not strictly better, which yields the canonical tie-break for free.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use super::feasibility::Ledger;
use super::instance::Instance;
use super::{Cost, PlacementRequest, PlacementResult, SolveError, Solver};

fn infeasible() -> SolveError {
    SolveError::Infeasible("no assignment satisfies the latency, bandwidth and capacity constraints".into())
}

/// Tracks how many functions each worker hosts and how many workers are open.
#[derive(Debug, Clone)]
struct HostSet {
    count: Vec<u32>,
    distinct: u32,
}

impl HostSet {
    fn new(n: usize) -> Self {
        HostSet {
            count: vec![0; n],
            distinct: 0,
        }
    }

    fn opened_by(&self, nodes: &[usize]) -> u32 {
        let mut opened = 0;
        for (i, n) in nodes.iter().enumerate() {
            if self.count[*n] == 0 && !nodes[..i].contains(n) {
                opened += 1;
            }
        }
        opened
    }

    fn add(&mut self, nodes: &[usize]) {
        for &n in nodes {
            if self.count[n] == 0 {
                self.distinct += 1;
            }
            self.count[n] += 1;
        }
    }

    fn remove(&mut self, nodes: &[usize]) {
        for &n in nodes {
            self.count[n] -= 1;
            if self.count[n] == 0 {
                self.distinct -= 1;
            }
        }
    }
}

/// Minimize `(distinct vDU/vCU workers, total vCU-to-core hops)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct AggregationMax;

impl Solver for AggregationMax {
    fn solve(&self, request: &PlacementRequest) -> Result<PlacementResult, SolveError> {
        let inst = Instance::new(request)?;
        let choice = AggregationSearch::run(&inst).ok_or_else(infeasible)?;
        let objective = inst.objective(&choice, None);
        Ok(inst.assemble(&choice, objective))
    }
}

struct AggregationSearch<'i, 'r> {
    inst: &'i Instance<'r>,
    ledger: Ledger<'i>,
    hosts: HostSet,
    min_hops_suffix: Vec<u32>,
    stack: Vec<usize>,
    best: Option<((u32, u32), Vec<usize>)>,
}

impl<'i, 'r> AggregationSearch<'i, 'r> {
    fn run(inst: &'i Instance<'r>) -> Option<Vec<usize>> {
        let n = inst.chains.len();
        let mut min_hops_suffix = vec![0u32; n + 1];
        for i in (0..n).rev() {
            let min = inst.chains[i]
                .candidates
                .iter()
                .filter(|c| c.latency_ok)
                .map(|c| c.cn_hops)
                .min()?;
            min_hops_suffix[i] = min_hops_suffix[i + 1] + min;
        }
        let mut s = AggregationSearch {
            inst,
            ledger: inst.ledger(),
            hosts: HostSet::new(inst.workers.len()),
            min_hops_suffix,
            stack: Vec::with_capacity(n),
            best: None,
        };
        s.dfs(0, 0);
        s.best.map(|(_, choice)| choice)
    }

    fn dfs(&mut self, depth: usize, cn: u32) {
        if depth == self.inst.chains.len() {
            let key = (self.hosts.distinct, cn);
            if self.best.as_ref().is_none_or(|(b, _)| key < *b) {
                self.best = Some((key, self.stack.clone()));
            }
            return;
        }
        let inst = self.inst;
        for (ci, c) in inst.chains[depth].candidates.iter().enumerate() {
            if !c.latency_ok {
                continue;
            }
            let nodes = [c.vdu, c.vcu];
            let bound = (
                self.hosts.distinct + self.hosts.opened_by(&nodes),
                cn + c.cn_hops + self.min_hops_suffix[depth + 1],
            );
            if matches!(&self.best, Some((b, _)) if bound >= *b) {
                continue;
            }
            if !self.ledger.try_commit(&c.footprint) {
                continue;
            }
            self.hosts.add(&nodes);
            self.stack.push(ci);
            self.dfs(depth + 1, cn + c.cn_hops);
            self.stack.pop();
            self.hosts.remove(&nodes);
            self.ledger.release(&c.footprint);
        }
    }
}

/// Weights of the du-pinned cost: `alpha * (workers hosting vCUs) +
/// beta * (sum of chain path latencies in ms)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuPinnedWeights {
    pub alpha: u32,
    pub beta: u32,
}

impl Default for DuPinnedWeights {
    fn default() -> Self {
        DuPinnedWeights { alpha: 100, beta: 1 }
    }
}

impl DuPinnedWeights {
    /// Cost in thousandths, so microsecond latencies stay integral.
    pub(crate) fn scaled_cost(&self, vcu_hosts: u32, latency_us: i64) -> i64 {
        self.alpha as i64 * 1000 * vcu_hosts as i64 + self.beta as i64 * latency_us
    }

    pub(crate) fn to_cost(scaled: i64) -> Cost {
        Cost(Rational64::new(scaled, 1000))
    }
}

/// Each vDU sits on its chain's vRU worker; only vCUs are placed.
#[derive(Debug, Clone, Copy, Default)]
pub struct DuPinned {
    pub weights: DuPinnedWeights,
}

impl Solver for DuPinned {
    fn solve(&self, request: &PlacementRequest) -> Result<PlacementResult, SolveError> {
        let inst = Instance::new(request)?;
        let (scaled, choice) = DuPinnedSearch::run(&inst, self.weights).ok_or_else(infeasible)?;
        let objective = inst.objective(&choice, Some(DuPinnedWeights::to_cost(scaled)));
        Ok(inst.assemble(&choice, objective))
    }
}

struct DuPinnedSearch<'i, 'r> {
    inst: &'i Instance<'r>,
    weights: DuPinnedWeights,
    ledger: Ledger<'i>,
    vcu_hosts: HostSet,
    min_latency_suffix: Vec<i64>,
    stack: Vec<usize>,
    best: Option<(i64, Vec<usize>)>,
}

impl<'i, 'r> DuPinnedSearch<'i, 'r> {
    fn run(inst: &'i Instance<'r>, weights: DuPinnedWeights) -> Option<(i64, Vec<usize>)> {
        let n = inst.chains.len();
        let mut min_latency_suffix = vec![0i64; n + 1];
        for i in (0..n).rev() {
            let ctx = &inst.chains[i];
            let min = ctx
                .candidates
                .iter()
                .filter(|c| c.vdu == ctx.pin && c.latency_ok)
                .map(|c| c.total_latency.as_micros())
                .min()?;
            min_latency_suffix[i] = min_latency_suffix[i + 1] + min;
        }
        let mut s = DuPinnedSearch {
            inst,
            weights,
            ledger: inst.ledger(),
            vcu_hosts: HostSet::new(inst.workers.len()),
            min_latency_suffix,
            stack: Vec::with_capacity(n),
            best: None,
        };
        s.dfs(0, 0);
        s.best
    }

    fn dfs(&mut self, depth: usize, latency_us: i64) {
        if depth == self.inst.chains.len() {
            let key = self.weights.scaled_cost(self.vcu_hosts.distinct, latency_us);
            if self.best.as_ref().is_none_or(|(b, _)| key < *b) {
                self.best = Some((key, self.stack.clone()));
            }
            return;
        }
        let inst = self.inst;
        let ctx = &inst.chains[depth];
        for (ci, c) in ctx.candidates.iter().enumerate() {
            if c.vdu != ctx.pin || !c.latency_ok {
                continue;
            }
            let lat = latency_us + c.total_latency.as_micros();
            let bound = self.weights.scaled_cost(
                self.vcu_hosts.distinct + self.vcu_hosts.opened_by(&[c.vcu]),
                lat + self.min_latency_suffix[depth + 1],
            );
            if matches!(&self.best, Some((b, _)) if bound >= *b) {
                continue;
            }
            if !self.ledger.try_commit(&c.footprint) {
                continue;
            }
            self.vcu_hosts.add(&[c.vcu]);
            self.stack.push(ci);
            self.dfs(depth + 1, lat);
            self.stack.pop();
            self.vcu_hosts.remove(&[c.vcu]);
            self.ledger.release(&c.footprint);
        }
    }
}

/// Chain-by-chain first fit. Candidates are ranked by workers newly opened,
/// then added latency, then id order; the first one that fits is committed.
#[derive(Debug, Clone, Copy, Default)]
pub struct Greedy;

impl Solver for Greedy {
    fn solve(&self, request: &PlacementRequest) -> Result<PlacementResult, SolveError> {
        let inst = Instance::new(request)?;
        let mut ledger = inst.ledger();
        let mut hosts = HostSet::new(inst.workers.len());
        let mut choice = Vec::with_capacity(inst.chains.len());
        for ctx in &inst.chains {
            let mut ranked: Vec<(u32, i64, usize)> = ctx
                .candidates
                .iter()
                .enumerate()
                .filter(|(_, c)| c.latency_ok)
                .map(|(ci, c)| (hosts.opened_by(&[c.vdu, c.vcu]), c.total_latency.as_micros(), ci))
                .collect();
            ranked.sort_unstable();
            let picked = ranked
                .into_iter()
                .map(|(_, _, ci)| ci)
                .find(|&ci| ledger.try_commit(&ctx.candidates[ci].footprint))
                .ok_or_else(|| {
                    SolveError::Infeasible(format!("no feasible placement left for {}", ctx.chain.chain_id))
                })?;
            let c = &ctx.candidates[picked];
            hosts.add(&[c.vdu, c.vcu]);
            choice.push(picked);
        }
        let objective = inst.objective(&choice, None);
        Ok(inst.assemble(&choice, objective))
    }
}
