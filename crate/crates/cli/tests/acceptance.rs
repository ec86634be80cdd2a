//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use tierwalk::fluid::{mark_placement, FluidTree};
use tierwalk::hierarchy::ttl_grid;
use tierwalk::markov::hitting_time_from_parts;
use tierwalk::optimizer::{constrained_ttl, find_optimal_ttl};
use tierwalk::sim::{
    estimate_reliability, run_placement_convergence, simulate, simulate_streams, Horizon,
};
use tierwalk::topology::path_graph;
use tierwalk::{
    parse_scenario, Execution, HierarchyModel, InitialDistribution, ModelError, PlacementMode,
    PlacementVector, PublisherModel, Scenario, Tier, TierHierarchy, TierModel, WalkMode,
};

type Outcome = Result<String, String>;

const SEED: u64 = 20_240_601;

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load(name: &str) -> Scenario {
    let text = std::fs::read_to_string(scenarios_dir().join(name)).expect("fixture exists");
    parse_scenario(&text).expect("fixture parses")
}

fn model(s: &Scenario, t_max: f64) -> HierarchyModel {
    HierarchyModel::new(&s.hierarchy, s.mode, s.publisher, s.lambda, t_max).expect("valid model")
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn closed_form_reliability() -> Outcome {
    let s = load("two-node.scn");
    let m = model(&s, 10.0);
    let mut worst = 0.0f64;
    for t in [0.1, 1.0, 5.0, 10.0] {
        let err = (m.bottom().reliability(t).unwrap() - (-t).exp()).abs();
        worst = worst.max(err);
        ensure(err <= 1e-9, || format!("T = {t}: |R - exp(-T)| = {err:e}"))?;
    }
    Ok(format!("max |R - exp(-T)| = {worst:e}"))
}

fn trivial_endpoints() -> Outcome {
    let grid = ttl_grid(1.0, 200.0, 1.0).unwrap();
    let base = load("reference-5node.scn");
    for mode in [WalkMode::Discrete, WalkMode::Continuous] {
        let mut s = base.with_param("p", 0.0).unwrap();
        s.mode = mode;
        let m = model(&s, 200.0);
        for &t in &grid {
            let h = m.mean_hitting_time(t).unwrap();
            ensure((h - (100.0 + t)).abs() <= 1e-12, || {
                format!("{mode:?} p = 0, T = {t}: E[H] = {h}")
            })?;
        }
        let mut empty = base.clone();
        empty.mode = mode;
        empty.hierarchy.bottom_mut().placement = PlacementVector::empty(5, PlacementMode::Quenched);
        let m = model(&empty, 200.0);
        for &t in &grid {
            let r = m.bottom().reliability(t).unwrap();
            let l = m.bottom().mean_lifetime(t).unwrap();
            // Continuous mode drops a Poisson tail below 1e-12.
            let tol = if mode == WalkMode::Discrete { 0.0 } else { 1e-12 };
            ensure((r - 1.0).abs() <= tol, || format!("{mode:?} omega = 0, T = {t}: R = {r}"))?;
            ensure((l - t).abs() <= 1e-12, || format!("{mode:?} omega = 0, T = {t}: E[L] = {l}"))?;
        }
    }
    Ok("p = 0 gives T0 + T; omega = 0 gives R = 1, E[L] = T, all within 1e-12 (discrete R exact)".into())
}

fn series_form_agreement() -> Outcome {
    let s = load("reference-5node.scn");
    let m = model(&s, 200.0);
    let p = s.hierarchy.bottom().availability;
    let PublisherModel::Fixed { t0 } = s.publisher else { return Err("fixed publisher".into()) };
    ensure(p == 0.5 && t0 == 100.0, || format!("fixture drifted: p = {p}, T0 = {t0}"))?;
    let mut worst = 0.0f64;
    for t in ttl_grid(1.0, 200.0, 1.0).unwrap() {
        let composed = m.mean_hitting_time(t).unwrap();
        let series = m.bottom().hitting_time_series_form(t, p, t0).unwrap();
        let r = m.bottom().reliability(t).unwrap();
        let quad = m.bottom().mean_lifetime_quadrature(t).unwrap();
        let from_quadrature = hitting_time_from_parts(r, quad, p, t0, t);
        for other in [series, from_quadrature] {
            let err = (composed - other).abs();
            worst = worst.max(err);
            ensure(err <= 1e-9, || format!("T = {t}: {composed} vs {other}"))?;
        }
    }
    Ok(format!("max disagreement over T = 1..200 is {worst:e}"))
}

fn monotonicity() -> Outcome {
    let s = load("reference-5node.scn");
    let tier = s.hierarchy.bottom();
    for mode in [WalkMode::Discrete, WalkMode::Continuous] {
        let m = TierModel::new(tier, mode, 200.0).unwrap();
        for (_, curve) in m.components() {
            ensure(curve.omegas().windows(2).all(|w| w[1] <= w[0]), || {
                format!("{mode:?}: Omega increases")
            })?;
        }
        let mut last = f64::INFINITY;
        for t in ttl_grid(0.0, 200.0, 1.0).unwrap() {
            let r = m.reliability(t).unwrap();
            let strict = mode == WalkMode::Continuous && last > 0.0;
            let ok = if strict { r < last || r == 0.0 } else { r <= last };
            ensure(ok, || format!("{mode:?}: R({t}) = {r} after {last}"))?;
            last = r;
        }
    }
    let mut slopes = Vec::new();
    for p in [0.2, 0.4, 0.6, 0.8] {
        let m = model(&s.with_param("p", p).unwrap(), 200.0);
        let slope =
            (m.mean_hitting_time(200.0).unwrap() - m.mean_hitting_time(150.0).unwrap()) / 50.0;
        ensure((slope - (1.0 - p)).abs() <= 0.05 * (1.0 - p), || {
            format!("p = {p}: slope {slope} vs {}", 1.0 - p)
        })?;
        slopes.push(format!("{slope:.6}"));
    }
    Ok(format!("Omega and R non-increasing; E[H] slopes on [150,200] = {}", slopes.join(", ")))
}

/// Probability that a discrete walk from `start` on `graph` has not
/// touched `target` within `steps` moves, by enumerating every path.
fn enumerate_misses(neighbors: &[Vec<usize>], start: usize, target: usize, steps: usize) -> f64 {
    fn go(nb: &[Vec<usize>], at: usize, target: usize, left: usize, prob: f64) -> f64 {
        if left == 0 {
            return prob;
        }
        let share = prob / nb[at].len() as f64;
        nb[at]
            .iter()
            .filter(|&&next| next != target)
            .map(|&next| go(nb, next, target, left - 1, share))
            .sum()
    }
    go(neighbors, start, target, steps, 1.0)
}

fn discrete_dead_zone() -> Outcome {
    let graph = path_graph(5, 1.0).unwrap();
    let tier = Tier::top(
        graph.clone(),
        PlacementVector::one_hot(5, 4, PlacementMode::Quenched),
        InitialDistribution::point(5, 0),
        1.0,
    );
    let h = TierHierarchy::single(tier).unwrap();
    let m = HierarchyModel::new(&h, WalkMode::Discrete, PublisherModel::Fixed { t0: 100.0 }, 100.0, 6.0)
        .unwrap();
    let neighbors: Vec<Vec<usize>> = (0..5).map(|i| graph.neighbors(i).to_vec()).collect();
    for t in 1..=6 {
        let r = m.bottom().reliability(t as f64).unwrap();
        let oracle = enumerate_misses(&neighbors, 0, 4, t);
        ensure(r == oracle, || format!("T = {t}: R = {r}, enumeration = {oracle}"))?;
    }
    let loads: Vec<f64> = (1..=3).map(|t| m.compose(t as f64).unwrap().publisher_load).collect();
    ensure(loads.iter().all(|&l| l == 100.0), || format!("load not constant: {loads:?}"))?;
    let r4 = m.bottom().reliability(4.0).unwrap();
    ensure(r4 == 7.0 / 8.0, || format!("R(4) = {r4}"))?;
    Ok("R = 1 for T <= 3, R(4) = 7/8, matches path enumeration to T = 6".into())
}

fn cross_validation() -> Outcome {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for name in ["two-node.scn", "reference-5node.scn", "grid-8node.scn"] {
        let s = load(name);
        let m = model(&s, 80.0);
        for (j, t) in [5.0, 20.0, 80.0].into_iter().enumerate() {
            let exact = m.compose(t).unwrap();
            let hit = exact.mean_hit.unwrap();
            let streams = 10 * j as u64..10 * (j as u64 + 1);
            let report = simulate_streams(
                &s,
                t,
                SEED,
                streams,
                Horizon::Requests(10_000),
                Execution::default(),
            )
            .map_err(|e| e.to_string())?;
            ensure(report.requests_created == 100_000, || "sample count".into())?;
            let (r_sim, _) = estimate_reliability(&report).map_err(|e| e.to_string())?;
            let n = report.reliability_trials as f64;
            let r_se = (exact.reliability * (1.0 - exact.reliability) / n).sqrt();
            let z_r = if r_sim == exact.reliability { 0.0 } else { (r_sim - exact.reliability) / r_se };
            let z_h = (report.mean_hit_time() - hit) / report.hit_time.stderr();
            worst = worst.max(z_r.abs()).max(z_h.abs());
            ensure(z_r.abs() <= 3.0 && z_h.abs() <= 3.0, || {
                format!("{name} T = {t}: z_R = {z_r:.3}, z_H = {z_h:.3}")
            })?;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs <= 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("max |z| = {worst:.3} over 3 scenarios x 3 TTLs, {secs:.1} s"))
}

fn optimizer_ordering() -> Outcome {
    let base = load("reference-5node.scn");
    let grid = ttl_grid(1.0, 200.0, 1.0).unwrap();
    let exec = Execution::default();
    let mut by_p = Vec::new();
    for p in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
        let s = base.with_param("p", p).unwrap();
        by_p.push(find_optimal_ttl(&s, &grid, exec).unwrap().t_star());
    }
    ensure(by_p.windows(2).all(|w| w[0] <= w[1]), || format!("T*(p) = {by_p:?}"))?;
    let mut by_t0 = Vec::new();
    for t0 in [100.0, 200.0, 300.0, 400.0, 500.0, 600.0] {
        let s = base.with_param("t0", t0).unwrap();
        by_t0.push(find_optimal_ttl(&s, &grid, exec).unwrap().t_star());
    }
    ensure(by_t0.windows(2).all(|w| w[0] <= w[1]), || format!("T*(T0) = {by_t0:?}"))?;
    let free = find_optimal_ttl(&base, &grid, exec).unwrap();
    let load_at_opt = free.points[free.optimum].publisher_load;
    for factor in [0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 1e6] {
        let c = constrained_ttl(&base, &grid, factor * load_at_opt, exec).unwrap();
        if let Some(p) = c.constrained_point() {
            let h = p.mean_hit.unwrap();
            ensure(h >= free.best_hit(), || format!("budget x{factor}: {h} < {}", free.best_hit()))?;
        }
    }
    Ok(format!("T*(p) = {by_p:?}, T*(T0) = {by_t0:?}"))
}

fn mm1_coupling() -> Outcome {
    let s = load("two-node-mm1.scn");
    let PublisherModel::Mm1 { mu, scale } = s.publisher else { return Err("mm1 fixture".into()) };
    ensure(mu == 40.0 && s.lambda == 100.0 && scale == 1000.0, || "fixture drifted".into())?;
    let m = model(&s, 10.0);
    for t in [0.25, 0.5, 0.75, 0.9] {
        let r = m.bottom().reliability(t).unwrap();
        ensure(r >= 0.4, || format!("T = {t} should overload"))?;
        match m.mean_hitting_time(t) {
            Err(ModelError::UnstablePublisher { .. }) => {}
            other => return Err(format!("T = {t}: expected unstable, got {other:?}")),
        }
    }
    let mut details = Vec::new();
    for t in [1.5, 3.0] {
        let r = m.bottom().reliability(t).unwrap();
        ensure(r < 0.4, || format!("T = {t} should be stable"))?;
        let t0 = scale / (mu - r * s.lambda);
        let requests = (1.05e5 / r).ceil() as u64;
        let report =
            simulate(&s, t, SEED, Horizon::Requests(requests)).map_err(|e| e.to_string())?;
        ensure(report.publisher_services >= 100_000, || {
            format!("only {} services", report.publisher_services)
        })?;
        let est = scale * report.publisher_sojourn.mean;
        let se = scale * report.publisher_sojourn.stderr();
        let z = (est - t0) / se;
        ensure(z.abs() <= 3.0, || format!("T = {t}: T0 {t0} vs {est} (se {se})"))?;
        details.push(format!("T = {t}: {t0:.2} vs {est:.2} (z {z:.2})"));
    }
    Ok(format!("unstable for R >= 0.4; {}", details.join("; ")))
}

fn fluid_agreement() -> Outcome {
    let mut details = Vec::new();
    for (name, expected) in [
        ("tree-heavy-leaf.scn", vec![true, true]),
        ("tree-light-leaves.scn", vec![true, true, false, false]),
    ] {
        let s = load(name);
        ensure(s.counters.up - s.counters.low == 50.0 && s.counters.gamma == 1.0, || {
            format!("{name}: thresholds drifted")
        })?;
        let tree = FluidTree::from_hierarchy(&s.hierarchy, s.lambda, s.counters.gamma).unwrap();
        let marking = mark_placement(&tree).unwrap();
        ensure(marking.stores == expected, || format!("{name}: {:?}", marking.stores))?;
        let occ = run_placement_convergence(&s, SEED, 10_000.0).map_err(|e| e.to_string())?;
        for (i, label) in tree.labels().iter().enumerate() {
            if tree.is_root(i) {
                continue;
            }
            let o = occ
                .iter()
                .find(|o| o.tier == label.tier && o.router == label.router)
                .unwrap()
                .fraction();
            let ok = if marking.stores[i] { o > 0.95 } else { o < 0.05 };
            ensure(ok, || format!("{name} tier {} router {}: {o}", label.tier, label.router + 1))?;
            details.push(format!("{o:.3}"));
        }
    }
    Ok(format!("markings exact; non-root occupancy {}", details.join(", ")))
}

fn run_cli(args: &[&str], out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_tierwalk"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("TIERWALK_OUT_DIR")
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("{args:?} exited with {status}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scn = |n: &str| scenarios_dir().join(n).display().to_string();
    let reference = scn("reference-5node.scn");
    let two = scn("two-node.scn");
    let tier2 = scn("two-tier.scn");
    let light = scn("tree-light-leaves.scn");
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("analyze", vec!["analyze", "--scenario", &reference]),
        ("sweep", vec!["sweep", "--scenario", &reference, "--param", "p", "--values", "0,0.2,0.4,0.6,0.8,1"]),
        ("optimize", vec!["optimize", "--scenario", &reference, "--budget", "20"]),
        ("simulate", vec!["simulate", "--scenario", &tier2, "--ttl", "4", "--seed", "7", "--samples", "5000", "--replications", "4"]),
        ("validate", vec!["validate", "--scenario", &two, "--seed", "7", "--samples", "5000", "--replications", "4"]),
        ("place", vec!["place", "--scenario", &light, "--converge", "2000", "--seed", "7"]),
    ];
    let mut files = 0;
    for (name, args) in &runs {
        let a = dir.path().join(format!("{name}-a.csv"));
        let b = dir.path().join(format!("{name}-b.csv"));
        run_cli(args, &a)?;
        run_cli(args, &b)?;
        let mut pairs = vec![(a.clone(), b.clone())];
        if *name == "simulate" {
            pairs.push((a.with_extension("occupancy.csv"), b.with_extension("occupancy.csv")));
        }
        for (x, y) in pairs {
            let bx = std::fs::read(&x).map_err(|e| format!("{}: {e}", x.display()))?;
            let by = std::fs::read(&y).map_err(|e| format!("{}: {e}", y.display()))?;
            ensure(!bx.is_empty() && bx == by, || format!("{name}: outputs differ"))?;
            files += 1;
        }
    }
    Ok(format!("{files} output files byte-identical across reruns of 6 subcommands"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("closed-form reliability", closed_form_reliability),
        ("trivial endpoints", trivial_endpoints),
        ("series form agreement", series_form_agreement),
        ("monotonicity", monotonicity),
        ("discrete dead zone", discrete_dead_zone),
        ("analytic vs simulation", cross_validation),
        ("optimizer ordering", optimizer_ordering),
        ("M/M/1 coupling", mm1_coupling),
        ("fluid placement", fluid_agreement),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1} s): {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1} s): {reason}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
