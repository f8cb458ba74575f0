//! The four sub-catalogs: topology inputs, NFVI resources, placement
//! solutions and RAN CNF images.
//!
//! Each sub-catalog publishes immutable snapshots behind an `Arc`. Writers
//! serialize on a per-catalog mutex and swap in a new snapshot; readers
//! clone the current `Arc` and never observe a half-applied update. When a
//! data directory is configured every commit is also written to one JSON
//! document per sub-catalog.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CnfSpec, CnfSpecSet, CrosshaulTopology, NfviResourceEntry, NodeId, RanFunction};
use crate::scenario::{parse_scenario, ScenarioError};
use crate::topology::validate_topology;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("invalid nfvi entry for {node}: {reason}")]
    InvalidEntry { node: NodeId, reason: String },
    #[error("solver {0} is already registered")]
    DuplicateId(String),
    #[error("no catalog entry for {0}")]
    MissingEntry(RanFunction),
    #[error("no topology loaded")]
    NoTopology,
    #[error("persistence failure: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SolverKind {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverDescriptor {
    pub solver_id: String,
    pub kind: SolverKind,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfImageEntry {
    pub function: RanFunction,
    pub image_ref: String,
    pub spec: CnfSpec,
}

impl From<CnfSpec> for CnfImageEntry {
    fn from(spec: CnfSpec) -> Self {
        CnfImageEntry {
            function: spec.function,
            image_ref: spec.image_ref.clone(),
            spec,
        }
    }
}

/// Committed NFVI view. `seq` is the global commit counter.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NfviSnapshot {
    pub seq: u64,
    pub entries: Vec<NfviResourceEntry>,
}

impl NfviSnapshot {
    pub fn entry(&self, node: &NodeId) -> Option<&NfviResourceEntry> {
        self.entries.iter().find(|e| &e.node == node)
    }
}

struct SubCatalog<T> {
    current: RwLock<Arc<T>>,
    writer: Mutex<()>,
}

impl<T> SubCatalog<T> {
    fn new(value: T) -> Self {
        SubCatalog {
            current: RwLock::new(Arc::new(value)),
            writer: Mutex::new(()),
        }
    }

    fn read(&self) -> Arc<T> {
        self.current.read().clone()
    }

    fn publish(&self, value: T) {
        *self.current.write() = Arc::new(value);
    }
}

const TOPOLOGY_DOC: &str = "topology.json";
const NFVI_DOC: &str = "nfvi.json";
const SOLVERS_DOC: &str = "solvers.json";
const CNFS_DOC: &str = "cnfs.json";

pub struct Catalogs {
    topology: SubCatalog<Option<CrosshaulTopology>>,
    nfvi: SubCatalog<NfviSnapshot>,
    solvers: SubCatalog<BTreeMap<String, SolverDescriptor>>,
    cnfs: SubCatalog<BTreeMap<RanFunction, CnfImageEntry>>,
    data_dir: Option<PathBuf>,
}

impl Default for Catalogs {
    fn default() -> Self {
        Catalogs::in_memory()
    }
}

impl Catalogs {
    /// Empty topology and NFVI, default CNF images, no solvers.
    pub fn in_memory() -> Self {
        let cnfs = Vec::<CnfSpec>::from(CnfSpecSet::default())
            .into_iter()
            .map(|s| (s.function, CnfImageEntry::from(s)))
            .collect();
        Catalogs {
            topology: SubCatalog::new(None),
            nfvi: SubCatalog::new(NfviSnapshot::default()),
            solvers: SubCatalog::new(BTreeMap::new()),
            cnfs: SubCatalog::new(cnfs),
            data_dir: None,
        }
    }

    /// Catalogs persisted under `dir`. Existing documents are loaded; missing
    /// ones start from the in-memory defaults.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut cat = Catalogs::in_memory();
        if let Some(t) = read_doc::<CrosshaulTopology>(&dir.join(TOPOLOGY_DOC))? {
            let report = validate_topology(&t);
            if !report.is_ok() {
                return Err(CatalogError::Validation(
                    report.violations.iter().map(ToString::to_string).collect(),
                ));
            }
            cat.topology.publish(Some(t));
        }
        if let Some(n) = read_doc::<NfviSnapshot>(&dir.join(NFVI_DOC))? {
            cat.nfvi.publish(n);
        }
        if let Some(s) = read_doc::<Vec<SolverDescriptor>>(&dir.join(SOLVERS_DOC))? {
            cat.solvers.publish(s.into_iter().map(|d| (d.solver_id.clone(), d)).collect());
        }
        if let Some(c) = read_doc::<Vec<CnfImageEntry>>(&dir.join(CNFS_DOC))? {
            cat.cnfs.publish(c.into_iter().map(|e| (e.function, e)).collect());
        }
        cat.data_dir = Some(dir.to_path_buf());
        Ok(cat)
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.data_dir.as_deref()
    }

    fn persist<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<(), CatalogError> {
        if let Some(dir) = &self.data_dir {
            write_doc(&dir.join(name), value)?;
        }
        Ok(())
    }

    // --- Topology Inputs ---------------------------------------------------

    pub fn topology(&self) -> Option<Arc<CrosshaulTopology>> {
        let snap = self.topology.read();
        snap.as_ref().as_ref().map(|t| Arc::new(t.clone()))
    }

    /// Parse a scenario document and take its topology.
    pub fn load_topology(source: impl Read) -> Result<CrosshaulTopology, CatalogError> {
        let scenario = parse_scenario(source).map_err(|e| match e {
            ScenarioError::Parse(m) => CatalogError::Parse(m),
            ScenarioError::Validation(v) => CatalogError::Validation(v),
        })?;
        let report = validate_topology(&scenario.topology);
        if !report.is_ok() {
            return Err(CatalogError::Validation(
                report.violations.iter().map(ToString::to_string).collect(),
            ));
        }
        Ok(scenario.topology)
    }

    pub fn replace_topology(&self, topology: CrosshaulTopology) -> Result<(), CatalogError> {
        let report = validate_topology(&topology);
        if !report.is_ok() {
            return Err(CatalogError::Validation(
                report.violations.iter().map(ToString::to_string).collect(),
            ));
        }
        let _w = self.topology.writer.lock();
        self.persist(TOPOLOGY_DOC, &topology)?;
        self.topology.publish(Some(topology));
        Ok(())
    }

    // --- NFVI Resources ----------------------------------------------------

    pub fn nfvi(&self) -> Arc<NfviSnapshot> {
        self.nfvi.read()
    }

    /// Upsert the given entries in one atomic commit. Each written entry is
    /// stamped with the new global sequence number, which is returned.
    pub fn update_nfvi(&self, entries: Vec<NfviResourceEntry>) -> Result<u64, CatalogError> {
        let topology = self.topology.read();
        for e in &entries {
            let known = topology
                .as_ref()
                .as_ref()
                .and_then(|t| t.kind_of(&e.node))
                .is_some_and(|k| k.is_compute());
            if !known {
                return Err(CatalogError::UnknownNode(e.node.clone()));
            }
            if !e.allocated.fits_within(&e.capacity) {
                return Err(CatalogError::InvalidEntry {
                    node: e.node.clone(),
                    reason: "allocated exceeds capacity".into(),
                });
            }
        }

        let _w = self.nfvi.writer.lock();
        let current = self.nfvi.read();
        let seq = current.seq + 1;
        let mut by_node: BTreeMap<NodeId, NfviResourceEntry> =
            current.entries.iter().map(|e| (e.node.clone(), e.clone())).collect();
        for mut e in entries {
            e.snapshot_seq = seq;
            by_node.insert(e.node.clone(), e);
        }
        let next = NfviSnapshot {
            seq,
            entries: by_node.into_values().collect(),
        };
        self.persist(NFVI_DOC, &next)?;
        self.nfvi.publish(next);
        Ok(seq)
    }

    /// Drop every NFVI entry (used when the topology is re-provisioned).
    pub fn clear_nfvi(&self) -> Result<u64, CatalogError> {
        let _w = self.nfvi.writer.lock();
        let next = NfviSnapshot {
            seq: self.nfvi.read().seq + 1,
            entries: Vec::new(),
        };
        self.persist(NFVI_DOC, &next)?;
        let seq = next.seq;
        self.nfvi.publish(next);
        Ok(seq)
    }

    // --- Placement Solutions -----------------------------------------------

    pub fn register_solver(&self, d: SolverDescriptor) -> Result<(), CatalogError> {
        let _w = self.solvers.writer.lock();
        let mut next = (*self.solvers.read()).clone();
        if next.contains_key(&d.solver_id) {
            return Err(CatalogError::DuplicateId(d.solver_id));
        }
        next.insert(d.solver_id.clone(), d);
        self.persist(SOLVERS_DOC, &next.values().collect::<Vec<_>>())?;
        self.solvers.publish(next);
        Ok(())
    }

    /// Descriptors sorted by id.
    pub fn solvers(&self) -> Vec<SolverDescriptor> {
        self.solvers.read().values().cloned().collect()
    }

    pub fn solver(&self, id: &str) -> Option<SolverDescriptor> {
        self.solvers.read().get(id).cloned()
    }

    // --- RAN CNFs ----------------------------------------------------------

    pub fn get_cnf_image(&self, function: RanFunction) -> Result<CnfImageEntry, CatalogError> {
        self.cnfs
            .read()
            .get(&function)
            .cloned()
            .ok_or(CatalogError::MissingEntry(function))
    }

    pub fn cnf_images(&self) -> Vec<CnfImageEntry> {
        self.cnfs.read().values().cloned().collect()
    }

    /// Replace the CNF catalog wholesale. An empty list leaves it empty.
    pub fn replace_cnfs(&self, entries: Vec<CnfImageEntry>) -> Result<(), CatalogError> {
        let _w = self.cnfs.writer.lock();
        let next: BTreeMap<RanFunction, CnfImageEntry> = entries.into_iter().map(|e| (e.function, e)).collect();
        self.persist(CNFS_DOC, &next.values().collect::<Vec<_>>())?;
        self.cnfs.publish(next);
        Ok(())
    }

    /// The catalog's CNF specs as a complete set, if every function has an entry.
    pub fn cnf_spec_set(&self) -> Result<CnfSpecSet, CatalogError> {
        let spec = |f| -> Result<CnfSpec, CatalogError> {
            let e = self.get_cnf_image(f)?;
            Ok(CnfSpec {
                image_ref: e.image_ref,
                ..e.spec
            })
        };
        Ok(CnfSpecSet {
            vru: spec(RanFunction::Vru)?,
            vdu: spec(RanFunction::Vdu)?,
            vcu: spec(RanFunction::Vcu)?,
        })
    }
}

fn read_doc<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Option<T>, CatalogError> {
    match fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| CatalogError::Parse(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Write-then-rename so a crash never leaves a truncated document behind.
pub(crate) fn write_doc<T: Serialize + ?Sized>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(std::io::Error::other)?;
    bytes.push(b'\n');
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{canonical_scenario, CANONICAL_FIXTURE};
    use crate::units::ComputeCapacity;

    fn loaded() -> Catalogs {
        let c = Catalogs::in_memory();
        c.replace_topology(canonical_scenario().topology).unwrap();
        c
    }

    fn paper_entries() -> Vec<NfviResourceEntry> {
        vec![
            NfviResourceEntry::new("W1", ComputeCapacity::new(5000, 2000)),
            NfviResourceEntry::new("W2", ComputeCapacity::new(1000, 200)),
            NfviResourceEntry::new("W3", ComputeCapacity::new(2000, 1200)),
            NfviResourceEntry::new("W4", ComputeCapacity::new(1000, 200)),
        ]
    }

    #[test]
    fn load_topology_from_fixture() {
        let t = Catalogs::load_topology(CANONICAL_FIXTURE.as_bytes()).unwrap();
        assert_eq!(t.workers().len(), 4);
    }

    #[test]
    fn nfvi_update_commits_and_stamps() {
        let c = loaded();
        let seq = c.update_nfvi(paper_entries()).unwrap();
        assert_eq!(seq, 1);
        let snap = c.nfvi();
        assert_eq!(snap.entries.len(), 4);
        assert!(snap.entries.iter().all(|e| e.snapshot_seq == 1));
        assert_eq!(snap.entry(&"W3".into()).unwrap().capacity, ComputeCapacity::new(2000, 1200));
    }

    #[test]
    fn empty_update_advances_seq_only() {
        let c = loaded();
        c.update_nfvi(paper_entries()).unwrap();
        let before = c.nfvi();
        let seq = c.update_nfvi(vec![]).unwrap();
        assert_eq!(seq, before.seq + 1);
        assert_eq!(c.nfvi().entries, before.entries);
    }

    #[test]
    fn unknown_node_is_rejected() {
        let c = loaded();
        let err = c
            .update_nfvi(vec![NfviResourceEntry::new("W9", ComputeCapacity::new(1, 1))])
            .unwrap_err();
        assert!(matches!(err, CatalogError::UnknownNode(n) if n.as_str() == "W9"));
        assert_eq!(c.nfvi().seq, 0);
    }

    #[test]
    fn update_is_idempotent_modulo_seq() {
        let c = loaded();
        c.update_nfvi(paper_entries()).unwrap();
        let first = c.nfvi();
        c.update_nfvi(paper_entries()).unwrap();
        let second = c.nfvi();
        let strip = |s: &NfviSnapshot| {
            s.entries
                .iter()
                .map(|e| NfviResourceEntry { snapshot_seq: 0, ..e.clone() })
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&first), strip(&second));
        assert!(second.seq > first.seq);
    }

    #[test]
    fn readers_keep_their_snapshot() {
        let c = loaded();
        c.update_nfvi(paper_entries()).unwrap();
        let held = c.nfvi();
        let mut bigger = paper_entries();
        bigger[0].capacity = ComputeCapacity::new(9000, 9000);
        c.update_nfvi(bigger).unwrap();
        assert_eq!(held.seq, 1);
        assert!(held.entries.iter().all(|e| e.snapshot_seq <= held.seq));
        assert_eq!(held.entry(&"W1".into()).unwrap().capacity, ComputeCapacity::new(5000, 2000));
    }

    #[test]
    fn solver_registry() {
        let c = Catalogs::in_memory();
        let d = SolverDescriptor {
            solver_id: "aggregation-max".into(),
            kind: SolverKind::Exact,
            description: "max aggregation".into(),
        };
        c.register_solver(d.clone()).unwrap();
        assert!(matches!(c.register_solver(d), Err(CatalogError::DuplicateId(id)) if id == "aggregation-max"));
    }

    #[test]
    fn cnf_images() {
        let c = Catalogs::in_memory();
        let vru = c.get_cnf_image(RanFunction::Vru).unwrap();
        for f in [RanFunction::Vdu, RanFunction::Vcu] {
            let other = c.get_cnf_image(f).unwrap();
            assert!(vru.spec.cpu_demand < other.spec.cpu_demand);
            assert!(!other.image_ref.is_empty());
        }
        c.replace_cnfs(vec![]).unwrap();
        assert!(matches!(c.get_cnf_image(RanFunction::Vcu), Err(CatalogError::MissingEntry(RanFunction::Vcu))));
    }

    #[test]
    fn persisted_catalogs_reopen() {
        let dir = tempfile::tempdir().unwrap();
        {
            let c = Catalogs::open(dir.path()).unwrap();
            c.replace_topology(canonical_scenario().topology).unwrap();
            c.update_nfvi(paper_entries()).unwrap();
            c.register_solver(SolverDescriptor {
                solver_id: "greedy".into(),
                kind: SolverKind::Heuristic,
                description: String::new(),
            })
            .unwrap();
        }
        let c = Catalogs::open(dir.path()).unwrap();
        assert_eq!(*c.topology().unwrap(), canonical_scenario().topology);
        assert_eq!(c.nfvi().seq, 1);
        assert_eq!(c.solvers().len(), 1);
        assert_eq!(c.cnf_images().len(), 3);
    }
}
