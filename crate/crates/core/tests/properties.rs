mod support;

use std::path::PathBuf;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use oplaceran_core::optimizer::{
    brute_force_oracle, check_feasibility, AggregationMax, DuPinned, Greedy, ObjectiveKind, PlacementRequest,
    SolveError, Solver,
};
use oplaceran_core::report;
use oplaceran_core::scenario::{load_scenario, scenario_to_string};

use support::{random_placements, random_scenario, reference_feasible, reference_optimum, RefKey, RefObjective};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn request(seed: u64, workers: usize, chains: usize) -> PlacementRequest {
    let mut rng = StdRng::seed_from_u64(seed);
    PlacementRequest::from_scenario(&random_scenario(&mut rng, workers, chains.min(workers)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aggregation_max_is_optimal(seed in any::<u64>(), w in 2usize..=5, c in 1usize..=4) {
        let req = request(seed, w, c);
        let expected = reference_optimum(&req, RefObjective::AggregationMax);
        match AggregationMax.solve(&req) {
            Ok(r) => {
                prop_assert!(reference_feasible(&r.placements, &req));
                prop_assert_eq!(Some(RefKey::Aggregation(r.objective.cr_count, r.objective.cn_distance)), expected);
            }
            Err(SolveError::Infeasible(_)) => prop_assert_eq!(expected, None),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn du_pinned_is_optimal(seed in any::<u64>(), w in 2usize..=5, c in 1usize..=4) {
        let req = request(seed, w, c);
        let expected = reference_optimum(&req, RefObjective::DuPinned);
        match DuPinned::default().solve(&req) {
            Ok(r) => {
                prop_assert!(reference_feasible(&r.placements, &req));
                for p in &r.placements {
                    prop_assert_eq!(&p.vdu_node, &p.vru_node);
                }
                let scaled = r.objective.cost.0 * 1000;
                prop_assert!(scaled.is_integer());
                prop_assert_eq!(Some(RefKey::DuPinned(scaled.to_integer())), expected);
            }
            Err(SolveError::Infeasible(_)) => prop_assert_eq!(expected, None),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn greedy_is_feasible_and_never_beats_the_optimum(seed in any::<u64>(), w in 2usize..=5, c in 1usize..=4) {
        let req = request(seed, w, c);
        if let Ok(g) = Greedy.solve(&req) {
            prop_assert!(reference_feasible(&g.placements, &req));
            let best = AggregationMax.solve(&req).expect("greedy found a feasible point");
            prop_assert!(g.objective.cr_count >= best.objective.cr_count);
        }
    }

    #[test]
    fn crate_oracle_agrees_with_reference(seed in any::<u64>(), w in 2usize..=4, c in 1usize..=3) {
        let req = request(seed, w, c);
        let agg = brute_force_oracle(&req, ObjectiveKind::AggregationMax)
            .ok()
            .map(|r| RefKey::Aggregation(r.objective.cr_count, r.objective.cn_distance));
        prop_assert_eq!(agg, reference_optimum(&req, RefObjective::AggregationMax));
    }

    #[test]
    fn feasibility_check_matches_reference(seed in any::<u64>(), w in 2usize..=5, c in 0usize..=4) {
        let req = request(seed, w, c);
        let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..16 {
            let ps = random_placements(&mut rng, &req);
            prop_assert_eq!(check_feasibility(&ps, &req).is_feasible(), reference_feasible(&ps, &req));
        }
    }

    #[test]
    fn solving_is_deterministic(seed in any::<u64>(), w in 2usize..=5, c in 1usize..=4) {
        let req = request(seed, w, c);
        for s in [&AggregationMax as &dyn Solver, &DuPinned::default(), &Greedy] {
            let a = s.solve(&req).map(|r| r.without_timing());
            let b = s.solve(&req).map(|r| r.without_timing());
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn scenario_text_round_trips(seed in any::<u64>(), w in 1usize..=5, c in 0usize..=4) {
        let mut rng = StdRng::seed_from_u64(seed);
        let s = random_scenario(&mut rng, w, c.min(w));
        let text = scenario_to_string(&s);
        let back = load_scenario(text.as_bytes()).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(scenario_to_string(&back), text);
    }
}

#[test]
fn every_fixture_round_trips() {
    let mut n = 0;
    for entry in std::fs::read_dir(fixtures()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "scn") {
            let s = load_scenario(std::fs::File::open(&path).unwrap()).unwrap();
            let text = scenario_to_string(&s);
            assert_eq!(load_scenario(text.as_bytes()).unwrap(), s, "{}", path.display());
            n += 1;
        }
    }
    assert!(n >= 3);
}

#[test]
fn golden_tables() {
    let s = load_scenario(std::fs::File::open(fixtures().join("paper6.scn")).unwrap()).unwrap();
    let req = PlacementRequest::from_scenario(&s);
    for (id, solver) in [
        ("aggregation-max", &AggregationMax as &dyn Solver),
        ("du-pinned", &DuPinned::default()),
        ("greedy", &Greedy),
    ] {
        let mut r = solver.solve(&req).unwrap();
        r.solver_id = id.into();
        let got = report::placement_table(&r, &s.topology) + &report::objective_line(&r);
        let want = std::fs::read_to_string(fixtures().join(format!("golden/paper6.{id}.txt"))).unwrap();
        assert_eq!(got, want, "{id}");
    }
}

#[test]
fn golden_exact_tables_match_the_oracle() {
    let s = load_scenario(std::fs::File::open(fixtures().join("paper6.scn")).unwrap()).unwrap();
    let req = PlacementRequest::from_scenario(&s);
    for id in ["aggregation-max", "du-pinned"] {
        let mut r = brute_force_oracle(&req, ObjectiveKind::parse(id).unwrap()).unwrap();
        r.solver_id = id.into();
        let got = report::placement_table(&r, &s.topology) + &report::objective_line(&r);
        let want = std::fs::read_to_string(fixtures().join(format!("golden/paper6.{id}.txt"))).unwrap();
        assert_eq!(got, want, "{id}");
    }
}

#[test]
fn generator_yields_both_outcomes() {
    let (mut feasible, mut infeasible, mut split) = (0, 0, 0);
    for seed in 0..200 {
        let req = request(seed, 2 + (seed % 4) as usize, 1 + (seed % 4) as usize);
        match AggregationMax.solve(&req) {
            Ok(r) => {
                feasible += 1;
                if r.placements.iter().any(|p| p.vdu_node != p.vcu_node) {
                    split += 1;
                }
            }
            Err(_) => infeasible += 1,
        }
    }
    assert!(feasible >= 40 && infeasible >= 20 && split >= 5, "{feasible} {infeasible} {split}");
}
