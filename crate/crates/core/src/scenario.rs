//! The scenario document: the one canonical input file.
//!
//! Encoding is JSON with the sections `topology`, `nfvi`, `chains`,
//! `split_profile`, `cnf_specs` and `solver`. Latencies are fractional
//! milliseconds, bandwidths fractional Mbps, CPU integer millicores and
//! memory integer MiB.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Chain, CnfSpecSet, CrosshaulTopology, NfviResourceEntry, NodeKind, SplitProfile};
use crate::topology::validate_topology;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub topology: CrosshaulTopology,
    pub nfvi: Vec<NfviResourceEntry>,
    pub chains: Vec<Chain>,
    #[serde(default)]
    pub split_profile: SplitProfile,
    #[serde(default)]
    pub cnf_specs: CnfSpecSet,
    pub solver: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
}

impl Scenario {
    /// Every problem that makes this scenario unusable, as human-readable lines.
    pub fn problems(&self) -> Vec<String> {
        let mut out: Vec<String> = validate_topology(&self.topology)
            .violations
            .iter()
            .map(ToString::to_string)
            .collect();
        out.extend(self.split_profile.problems());
        out.extend(self.cnf_specs.problems());

        let mut seen = BTreeSet::new();
        for e in &self.nfvi {
            match self.topology.kind_of(&e.node) {
                Some(k) if k.is_compute() => {}
                _ => out.push(format!("nfvi entry for unknown compute node {}", e.node)),
            }
            if !seen.insert(&e.node) {
                out.push(format!("duplicate nfvi entry for {}", e.node));
            }
            if !e.allocated.fits_within(&e.capacity) {
                out.push(format!("nfvi entry for {} allocates more than its capacity", e.node));
            }
        }

        let mut ids = BTreeSet::new();
        let mut pins = BTreeSet::new();
        for c in &self.chains {
            if !ids.insert(&c.chain_id) {
                out.push(format!("duplicate chain id {}", c.chain_id));
            }
            if self.topology.kind_of(&c.vru_node) != Some(NodeKind::ComputeWorker) {
                out.push(format!("chain {} pins its vRU to non-worker {}", c.chain_id, c.vru_node));
            }
            if !pins.insert(&c.vru_node) {
                out.push(format!("more than one chain pins a vRU to {}", c.vru_node));
            }
        }
        out
    }
}

/// Parse and validate a scenario document.
pub fn load_scenario(source: impl Read) -> Result<Scenario, ScenarioError> {
    let scenario = parse_scenario(source)?;
    let problems = scenario.problems();
    if problems.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Validation(problems))
    }
}

/// Parse without semantic validation. Duplicate node ids are a parse error.
pub fn parse_scenario(mut source: impl Read) -> Result<Scenario, ScenarioError> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let scenario: Scenario = serde_json::from_str(&text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let mut ids = BTreeSet::new();
    for n in &scenario.topology.nodes {
        if !ids.insert(&n.id) {
            return Err(ScenarioError::Parse(format!("duplicate node id {}", n.id)));
        }
    }
    Ok(scenario)
}

pub fn store_scenario(scenario: &Scenario, mut sink: impl Write) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut sink, scenario)?;
    sink.write_all(b"\n")
}

pub fn scenario_to_string(scenario: &Scenario) -> String {
    let mut buf = Vec::new();
    store_scenario(scenario, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub const CANONICAL_FIXTURE: &str = include_str!("../../../fixtures/paper6.scn");

/// The six-node experimental cluster: four workers, two masters, two
/// vSwitches, one pSwitch and the core-network anchor. Reconstructed from a
/// prose description, so node placement behind each vSwitch is a best guess.
pub fn canonical_scenario() -> Scenario {
    load_scenario(CANONICAL_FIXTURE.as_bytes()).expect("shipped fixture is valid")
}
