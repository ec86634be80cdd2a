use std::path::PathBuf;

use tierwalk::fluid::{mark_placement, FluidTree};
use tierwalk::sim::run_placement_convergence;
use tierwalk::{parse_scenario, Scenario, WalkMode};

fn load(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    let text = std::fs::read_to_string(&path).unwrap();
    parse_scenario(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn every_shipped_scenario_parses() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        parse_scenario(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert!(count >= 5);
}

#[test]
fn reference_file_has_five_routers_and_three_sites() {
    let s = load("reference-5node.scn");
    let tier = s.hierarchy.bottom();
    assert_eq!(tier.graph.node_count(), 5);
    assert_eq!(tier.placement.support().count(), 3);
    assert_eq!(s.mode, WalkMode::Discrete);
    assert_eq!(s.t_grid().len(), 200);
}

#[test]
fn tree_files_flatten_to_the_hand_computed_markings() {
    let heavy = load("tree-heavy-leaf.scn");
    let tree = FluidTree::from_hierarchy(&heavy.hierarchy, heavy.lambda, heavy.counters.gamma)
        .unwrap();
    assert_eq!(mark_placement(&tree).unwrap().stores, vec![true, true]);

    let light = load("tree-light-leaves.scn");
    let tree = FluidTree::from_hierarchy(&light.hierarchy, light.lambda, light.counters.gamma)
        .unwrap();
    let m = mark_placement(&tree).unwrap();
    assert_eq!(m.stores, vec![true, true, false, false]);
    assert!((m.offered[1] - 1.2).abs() < 1e-12);
}

#[test]
fn flow_equal_to_gamma_rarely_holds_a_copy() {
    // Zero drift: the counter wanders like a reflected random walk and needs
    // on the order of gap^2 decrement periods to reach the upper threshold.
    let mut s = load("tree-heavy-leaf.scn");
    s.lambda = 1.0;
    s.counters.up = 500.0;
    let occ = run_placement_convergence(&s, 5, 10_000.0).unwrap();
    let leaf = occ.iter().find(|o| o.tier == 2).unwrap();
    assert!(leaf.fraction() < 0.05, "{}", leaf.fraction());
}

#[test]
fn no_demand_leaves_every_lower_router_empty() {
    let mut s = load("tree-light-leaves.scn");
    s.lambda = 1e-9;
    let occ = run_placement_convergence(&s, 9, 2_000.0).unwrap();
    assert!(occ.iter().filter(|o| o.tier > 1).all(|o| o.fraction() == 0.0));
}
