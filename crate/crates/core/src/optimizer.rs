//! Grid search for the TTL minimizing the expected hitting time.

use crate::error::ModelError;
use crate::exec::{par_map, Execution};
use crate::hierarchy::{HierarchyModel, HierarchyPoint};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub ttl: f64,
    pub reliability: f64,
    pub mean_lifetime: f64,
    /// `None` where the publisher is overloaded.
    pub mean_hit: Option<f64>,
    pub publisher_load: f64,
    /// Publisher stable and, when a budget is set, `publisher_load <= budget`.
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Index of the unconstrained argmin.
    pub optimum: usize,
    pub budget: Option<f64>,
    /// Index of the argmin over feasible points; `None` if none is feasible.
    pub constrained: Option<usize>,
}

impl SweepResult {
    pub fn t_grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ttl).collect()
    }

    pub fn objective(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.mean_hit).collect()
    }

    pub fn t_star(&self) -> f64 {
        self.points[self.optimum].ttl
    }

    pub fn best_hit(&self) -> f64 {
        self.points[self.optimum].mean_hit.expect("optimum is stable")
    }

    pub fn constrained_point(&self) -> Option<&SweepPoint> {
        self.constrained.map(|i| &self.points[i])
    }
}

fn check_grid(grid: &[f64]) -> Result<(), ModelError> {
    let sorted = grid.windows(2).all(|w| w[0] < w[1]);
    if grid.is_empty() || !sorted || grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(ModelError::BadGrid);
    }
    Ok(())
}

fn evaluate(
    scenario: &Scenario,
    grid: &[f64],
    exec: Execution,
) -> Result<Vec<HierarchyPoint>, ModelError> {
    check_grid(grid)?;
    let t_max = *grid.last().expect("nonempty grid");
    let model = HierarchyModel::new(
        &scenario.hierarchy,
        scenario.mode,
        scenario.publisher,
        scenario.lambda,
        t_max,
    )?;
    par_map(exec, grid, |&t| model.compose(t)).into_iter().collect()
}

/// First index minimizing `mean_hit` among points passing `keep`; earlier
/// points win ties.
fn argmin(points: &[SweepPoint], keep: impl Fn(&SweepPoint) -> bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        let Some(h) = p.mean_hit else { continue };
        if keep(p) && best.is_none_or(|(_, b)| h < b) {
            best = Some((i, h));
        }
    }
    best.map(|(i, _)| i)
}

fn sweep(
    scenario: &Scenario,
    grid: &[f64],
    budget: Option<f64>,
    exec: Execution,
) -> Result<SweepResult, ModelError> {
    let points: Vec<SweepPoint> = evaluate(scenario, grid, exec)?
        .into_iter()
        .map(|p| SweepPoint {
            ttl: p.ttl,
            reliability: p.reliability,
            mean_lifetime: p.mean_lifetime,
            mean_hit: p.mean_hit,
            publisher_load: p.publisher_load,
            feasible: p.mean_hit.is_some() && budget.is_none_or(|b| p.publisher_load <= b),
        })
        .collect();
    let optimum = argmin(&points, |_| true).ok_or(ModelError::AllInfeasible)?;
    let constrained = argmin(&points, |p| p.feasible);
    Ok(SweepResult { points, optimum, budget, constrained })
}

/// Grid argmin of `E[H(T)]`. Fails when the publisher is overloaded at
/// every grid point.
pub fn find_optimal_ttl(
    scenario: &Scenario,
    grid: &[f64],
    exec: Execution,
) -> Result<SweepResult, ModelError> {
    sweep(scenario, grid, None, exec)
}

/// Argmin of `E[H(T)]` over the TTLs whose publisher load
/// `R(T) lambda` stays within `budget`.
pub fn constrained_ttl(
    scenario: &Scenario,
    grid: &[f64],
    budget: f64,
    exec: Execution,
) -> Result<SweepResult, ModelError> {
    if !(budget >= 0.0) {
        return Err(ModelError::BadGrid);
    }
    sweep(scenario, grid, Some(budget), exec)
}

/// Re-grids once at ten times the density between the unconstrained
/// optimum's neighbors and searches again. The result carries no budget.
pub fn refine(
    scenario: &Scenario,
    result: &SweepResult,
    exec: Execution,
) -> Result<SweepResult, ModelError> {
    let grid = result.t_grid();
    let k = result.optimum;
    let lo = grid[k.saturating_sub(1)];
    let hi = grid[(k + 1).min(grid.len() - 1)];
    let step = if grid.len() > 1 {
        (grid[1] - grid[0]) / 10.0
    } else {
        return Ok(result.clone());
    };
    let count = ((hi - lo) / step).round() as usize;
    let fine: Vec<f64> = (0..=count).map(|i| lo + i as f64 * step).collect();
    sweep(scenario, &fine, None, exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::ttl_grid;
    use crate::parse_scenario;

    const REFERENCE: &str = "
[walk]
mode = discrete
[tier 1]
nodes = 5
rate = 1
edge = 1 2
edge = 2 3
edge = 3 4
edge = 4 5
edge = 2 4
placement = 0 0 1/3 1/3 1/3
start = 0 1 0 0 0
availability = 0.5
[publisher]
kind = fixed
t0 = 100
[demand]
lambda = 100
";

    fn reference() -> Scenario {
        parse_scenario(REFERENCE).unwrap()
    }

    fn grid() -> Vec<f64> {
        ttl_grid(0.0, 60.0, 1.0).unwrap()
    }

    #[test]
    fn absent_content_prefers_no_walk() {
        let s = reference().with_param("p", 0.0).unwrap();
        let r = find_optimal_ttl(&s, &grid(), Execution::Sequential).unwrap();
        assert_eq!(r.t_star(), 0.0);
    }

    #[test]
    fn certain_content_prefers_the_longest_walk() {
        let s = reference().with_param("p", 1.0).unwrap().with_param("t0", 1e6).unwrap();
        let r = find_optimal_ttl(&s, &grid(), Execution::Sequential).unwrap();
        assert_eq!(r.t_star(), 60.0);
    }

    #[test]
    fn reference_optimum_is_interior_and_stable_under_refinement() {
        let s = reference();
        let coarse = find_optimal_ttl(&s, &grid(), Execution::Sequential).unwrap();
        assert!(coarse.t_star() > 0.0 && coarse.t_star() < 60.0);
        let fine = refine(&s, &coarse, Execution::Sequential).unwrap();
        assert!(fine.best_hit() <= coarse.best_hit());
        // Discrete walks only change at whole steps.
        assert_eq!(fine.best_hit(), coarse.best_hit());
    }

    #[test]
    fn vacuous_and_tight_budgets() {
        let s = reference();
        let free = find_optimal_ttl(&s, &grid(), Execution::Sequential).unwrap();
        let loose = constrained_ttl(&s, &grid(), s.lambda, Execution::Sequential).unwrap();
        assert_eq!(loose.constrained, Some(free.optimum));
        let budget = 0.5 * free.points[free.optimum].publisher_load;
        let tight = constrained_ttl(&s, &grid(), budget, Execution::Sequential).unwrap();
        let c = tight.constrained_point().unwrap();
        assert!(c.ttl >= free.t_star());
        assert!(c.mean_hit.unwrap() >= free.best_hit());
    }

    #[test]
    fn zero_budget_is_infeasible_for_continuous_walks() {
        let mut s = reference();
        s.mode = crate::WalkMode::Continuous;
        let r = constrained_ttl(&s, &grid(), 0.0, Execution::Sequential).unwrap();
        assert_eq!(r.constrained, None);
    }

    #[test]
    fn overloaded_everywhere_is_an_error() {
        let s = reference().with_param("mu", 1.0).unwrap();
        let short = ttl_grid(0.0, 3.0, 1.0).unwrap();
        let err = find_optimal_ttl(&s, &short, Execution::Sequential).unwrap_err();
        assert_eq!(err, ModelError::AllInfeasible);
    }

    #[test]
    fn grids_must_be_sorted_and_nonempty() {
        let s = reference();
        assert!(find_optimal_ttl(&s, &[], Execution::Sequential).is_err());
        assert!(find_optimal_ttl(&s, &[2.0, 1.0], Execution::Sequential).is_err());
    }

    #[test]
    fn optimum_grows_with_availability_and_publisher_delay() {
        let base = reference();
        let mut last = 0.0;
        for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let s = base.with_param("p", p).unwrap();
            let t = find_optimal_ttl(&s, &grid(), Execution::Sequential).unwrap().t_star();
            assert!(t >= last, "p = {p}");
            last = t;
        }
        last = 0.0;
        for t0 in [10.0, 50.0, 100.0, 500.0, 2000.0] {
            let s = base.with_param("t0", t0).unwrap();
            let t = find_optimal_ttl(&s, &grid(), Execution::Sequential).unwrap().t_star();
            assert!(t >= last, "t0 = {t0}");
            last = t;
        }
    }
}
