//! Exhaustive reference search used to check the exact solvers.

use super::instance::Instance;
use super::solvers::DuPinnedWeights;
use super::{ObjectiveKind, PlacementRequest, PlacementResult, SolveError};

/// Largest joint assignment space the oracle will enumerate.
pub const ORACLE_GUARD: u128 = 10_000_000;

/// Enumerate every joint `(vdu, vcu)` assignment, keep the feasible ones and
/// return the minimum under `objective`, ties going to the lexicographically
/// smallest node-id vector.
pub fn brute_force_oracle(request: &PlacementRequest, objective: ObjectiveKind) -> Result<PlacementResult, SolveError> {
    let inst = Instance::new(request)?;

    let options: Vec<Vec<usize>> = inst
        .chains
        .iter()
        .map(|ctx| {
            (0..ctx.candidates.len())
                .filter(|&ci| match objective {
                    ObjectiveKind::AggregationMax => true,
                    ObjectiveKind::DuPinned(_) => ctx.candidates[ci].vdu == ctx.pin,
                })
                .collect()
        })
        .collect();
    let space = options.iter().fold(1u128, |acc, o| acc.saturating_mul(o.len() as u128));
    if space > ORACLE_GUARD {
        return Err(SolveError::TooLarge(space));
    }

    let n = options.len();
    let mut digits = vec![0usize; n];
    let mut choice = vec![0usize; n];
    let mut ledger = inst.ledger();
    let mut best: Option<(i128, i128, Vec<usize>)> = None;

    loop {
        for i in 0..n {
            choice[i] = options[i][digits[i]];
        }

        ledger.reset();
        let feasible = inst.chains.iter().zip(&choice).all(|(ctx, &ci)| {
            let c = &ctx.candidates[ci];
            c.latency_ok && ledger.try_commit(&c.footprint)
        });
        if feasible {
            let key = key_of(&inst, &choice, objective);
            if best.as_ref().is_none_or(|(a, b, _)| (key.0, key.1) < (*a, *b)) {
                best = Some((key.0, key.1, choice.clone()));
            }
        }

        // odometer, last chain fastest, so vectors come out in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                let (_, _, choice) = best.ok_or_else(|| {
                    SolveError::Infeasible("exhaustive search found no feasible assignment".into())
                })?;
                return Ok(finish(&inst, &choice, objective));
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < options[i].len() {
                break;
            }
            digits[i] = 0;
        }
    }
}

fn key_of(inst: &Instance<'_>, choice: &[usize], objective: ObjectiveKind) -> (i128, i128) {
    let mut du_cu = vec![false; inst.workers.len()];
    let mut cu = vec![false; inst.workers.len()];
    let mut hops = 0i128;
    let mut latency_us = 0i64;
    for (ctx, &ci) in inst.chains.iter().zip(choice) {
        let c = &ctx.candidates[ci];
        du_cu[c.vdu] = true;
        du_cu[c.vcu] = true;
        cu[c.vcu] = true;
        hops += c.cn_hops as i128;
        latency_us += c.footprint.segment_latency.iter().map(|l| l.as_micros()).sum::<i64>();
    }
    match objective {
        ObjectiveKind::AggregationMax => (du_cu.iter().filter(|x| **x).count() as i128, hops),
        ObjectiveKind::DuPinned(w) => {
            let hosts = cu.iter().filter(|x| **x).count() as u32;
            (w.scaled_cost(hosts, latency_us) as i128, 0)
        }
    }
}

fn finish(inst: &Instance<'_>, choice: &[usize], objective: ObjectiveKind) -> PlacementResult {
    let cost = match objective {
        ObjectiveKind::AggregationMax => None,
        ObjectiveKind::DuPinned(w) => Some(DuPinnedWeights::to_cost(key_of(inst, choice, ObjectiveKind::DuPinned(w)).0 as i64)),
    };
    let value = inst.objective(choice, cost);
    inst.assemble(choice, value)
}
