//! Plain-text tables for operators. Output is a pure function of its inputs
//! so that offline and service-backed runs print the same bytes.

use std::fmt::Write as _;

use crate::model::{classify_scenario, CrosshaulTopology, Segment};
use crate::optimizer::PlacementResult;
use crate::placer::{OrchestrationRecord, Outcome};

fn latency_cell(topology: &CrosshaulTopology, path: &[crate::model::LinkId]) -> String {
    topology
        .latency_of(path)
        .map_or_else(|| "?".into(), |l| l.to_string())
}

/// One row per chain: hosts, scenario kind and segment latencies (ms).
pub fn placement_table(result: &PlacementResult, topology: &CrosshaulTopology) -> String {
    let mut rows = vec![[
        "chain".to_string(),
        "vRU".into(),
        "vDU".into(),
        "vCU".into(),
        "scenario".into(),
        "fronthaul_ms".into(),
        "midhaul_ms".into(),
        "backhaul_ms".into(),
    ]];
    let mut placements: Vec<_> = result.placements.iter().collect();
    placements.sort_by(|a, b| a.chain_id.cmp(&b.chain_id));
    for p in placements {
        rows.push([
            p.chain_id.clone(),
            p.vru_node.to_string(),
            p.vdu_node.to_string(),
            p.vcu_node.to_string(),
            classify_scenario(p).to_string(),
            latency_cell(topology, p.path(Segment::Fronthaul)),
            latency_cell(topology, p.path(Segment::Midhaul)),
            latency_cell(topology, p.path(Segment::Backhaul)),
        ]);
    }
    render(&rows)
}

pub fn objective_line(result: &PlacementResult) -> String {
    let hosts: Vec<String> = result.du_cu_hosts().into_iter().map(|n| n.0).collect();
    format!(
        "objective: solver={} cr_count={} cn_distance={} cost={} du_cu_hosts={{{}}}\n",
        result.solver_id,
        result.objective.cr_count,
        result.objective.cn_distance,
        result.objective.cost,
        hosts.join(",")
    )
}

/// Step log without wall-clock timestamps.
pub fn event_log(record: &OrchestrationRecord) -> String {
    let mut out = String::new();
    for e in &record.events {
        let _ = writeln!(out, "{:02} {:<32} {}", e.step, e.name, e.detail);
    }
    out
}

/// Everything `run` prints.
pub fn run_report(record: &OrchestrationRecord, topology: &CrosshaulTopology) -> String {
    let mut out = String::new();
    if let Some(result) = &record.placement {
        out.push_str(&placement_table(result, topology));
        out.push_str(&objective_line(result));
        out.push('\n');
    }
    out.push_str(&event_log(record));
    let outcome = match record.outcome {
        Some(Outcome::Deployed) => "deployed",
        Some(Outcome::Infeasible) => "infeasible",
        Some(Outcome::Failed) => "failed",
        None => "running",
    };
    let _ = writeln!(out, "\noutcome: {outcome}");
    if let Some(f) = &record.failure {
        let _ = writeln!(out, "{:?}: {}", f.kind, f.message);
        for d in &f.details {
            let _ = writeln!(out, "  - {d}");
        }
    }
    out
}

/// Side-by-side objective values, one row per solver.
pub fn compare_table(results: &[(String, Result<PlacementResult, String>)]) -> String {
    let mut rows = vec![[
        "solver".to_string(),
        "cr_count".into(),
        "cn_distance".into(),
        "cost".into(),
        "solve_time_s".into(),
        "du_cu_hosts".into(),
    ]];
    for (solver, r) in results {
        rows.push(match r {
            Ok(r) => [
                solver.clone(),
                r.objective.cr_count.to_string(),
                r.objective.cn_distance.to_string(),
                r.objective.cost.to_string(),
                format!("{:.6}", r.solve_time),
                r.du_cu_hosts().into_iter().map(|n| n.0).collect::<Vec<_>>().join(","),
            ],
            Err(e) => [solver.clone(), "-".into(), "-".into(), "-".into(), "-".into(), e.clone()],
        });
    }
    render(&rows)
}

fn render<const N: usize>(rows: &[[String; N]]) -> String {
    let mut widths = [0usize; N];
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .zip(widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}
