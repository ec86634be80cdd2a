use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tierwalk::fluid::{mark_placement, FluidTree};
use tierwalk::hierarchy::{ttl_grid, HierarchyModel};
use tierwalk::optimizer::{constrained_ttl, find_optimal_ttl, refine, SweepResult};
use tierwalk::sim::{
    estimate_reliability, run_placement_convergence, simulate_streams, Horizon, SimReport,
};
use tierwalk::{parse_scenario, Execution, Scenario, WalkMode};

use crate::output::{self, csv_writer, num, opt};

/// TTL-bounded random-walk search in tiered cache networks.
#[derive(Debug, Parser)]
#[command(name = "tierwalk", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// R(T), E[L(T)], E[H(T)] and publisher load over the TTL grid.
    Analyze(Common),
    /// One analytic series per value of a scenario parameter.
    Sweep(SweepArgs),
    /// TTL minimizing E[H(T)], optionally under a publisher-load budget.
    Optimize(OptimizeArgs),
    /// Monte Carlo run of the full protocol.
    Simulate(SimulateArgs),
    /// Analytic values against Monte Carlo estimates, as z-scores.
    Validate(ValidateArgs),
    /// Fluid-limit cache placement on a tree hierarchy.
    Place(PlaceArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Continuous,
    Discrete,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario's walk mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    t_step: Option<f64>,
    /// Output file; defaults to $TIERWALK_OUT_DIR/<command>.csv, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// One of p, t0, mu, scale, lambda, rate.
    #[arg(long)]
    param: String,
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[command(flatten)]
    common: Common,
    /// Upper bound on the publisher load R(T) lambda.
    #[arg(long)]
    budget: Option<f64>,
    /// Search once more at ten times the grid density around the optimum.
    #[arg(long)]
    refine: bool,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Requests generated per replication.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    replications: u64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sim: SimArgs,
    /// TTL; defaults to the scenario's `ttl`.
    #[arg(long)]
    ttl: Option<f64>,
    /// Stop at this simulated time instead of after `--samples` requests.
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sim: SimArgs,
    /// TTLs to compare at.
    #[arg(long, value_delimiter = ',', default_value = "5,20,80")]
    ttl: Vec<f64>,
    /// Exit with status 2 when any |z| exceeds this.
    #[arg(long)]
    max_z: Option<f64>,
}

#[derive(Debug, Args)]
struct PlaceArgs {
    #[command(flatten)]
    common: Common,
    /// Overrides the counter decrement rate.
    #[arg(long)]
    gamma: Option<f64>,
    /// Also simulate the counters for this long and report occupancy.
    #[arg(long)]
    converge: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Analyze(args) => analyze(&args),
        Command::Sweep(args) => sweep(&args),
        Command::Optimize(args) => optimize(&args),
        Command::Simulate(args) => simulate(&args),
        Command::Validate(args) => validate(&args),
        Command::Place(args) => place(&args),
    }
    .map(|()| ExitCode::SUCCESS)
    .or_else(|err| match err.downcast_ref::<ZLimit>() {
        Some(_) => {
            eprintln!("{err}");
            Ok(ExitCode::from(2))
        }
        None => Err(err),
    })
}

#[derive(Debug)]
struct ZLimit(f64, f64);

impl std::fmt::Display for ZLimit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "max |z| = {} exceeds {}", self.0, self.1)
    }
}

impl std::error::Error for ZLimit {}

impl Common {
    fn load(&self) -> Result<Scenario> {
        let text = std::fs::read_to_string(&self.scenario)
            .with_context(|| format!("reading {}", self.scenario.display()))?;
        let mut scenario = parse_scenario(&text)
            .map_err(|e| anyhow!("{}: {e}", self.scenario.display()))?;
        if let Some(mode) = self.mode {
            scenario.mode = match mode {
                ModeArg::Continuous => WalkMode::Continuous,
                ModeArg::Discrete => WalkMode::Discrete,
            };
        }
        if let Some(v) = self.t_min {
            scenario.grid.min = v;
        }
        if let Some(v) = self.t_max {
            scenario.grid.max = v;
        }
        if let Some(v) = self.t_step {
            scenario.grid.step = v;
        }
        Ok(scenario)
    }

    fn grid(&self, scenario: &Scenario) -> Result<Vec<f64>> {
        let g = &scenario.grid;
        ttl_grid(g.min, g.max, g.step).context("TTL grid")
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }

    fn destination(&self, name: &str) -> Option<PathBuf> {
        output::destination(self.out.as_deref(), name)
    }
}

const SERIES_HEADER: [&str; 5] = ["T", "R", "E_L", "E_H", "lambda_pub"];

fn series_rows(scenario: &Scenario, grid: &[f64], exec: Execution) -> Result<Vec<[String; 5]>> {
    let t_max = grid.last().copied().unwrap_or(0.0);
    let model = HierarchyModel::new(
        &scenario.hierarchy,
        scenario.mode,
        scenario.publisher,
        scenario.lambda,
        t_max,
    )?;
    let series = model.series(grid, exec)?;
    Ok((0..series.len())
        .map(|i| {
            [
                num(series.t_grid[i]),
                num(series.reliability[i]),
                num(series.mean_lifetime[i]),
                opt(series.mean_hit[i]),
                num(series.publisher_load[i]),
            ]
        })
        .collect())
}

fn analyze(args: &Common) -> Result<()> {
    let scenario = args.load()?;
    let grid = args.grid(&scenario)?;
    let rows = series_rows(&scenario, &grid, args.exec())?;
    let mut w = csv_writer(args.destination("analyze.csv").as_deref())?;
    w.write_record(SERIES_HEADER)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let base = args.common.load()?;
    let grid = args.common.grid(&base)?;
    let mut w = csv_writer(args.common.destination("sweep.csv").as_deref())?;
    let mut header = vec![args.param.as_str()];
    header.extend(SERIES_HEADER);
    w.write_record(&header)?;
    for &value in &args.values {
        let scenario = base
            .with_param(&args.param, value)
            .map_err(|e| anyhow!("{} = {value}: {e}", args.param))?;
        for row in series_rows(&scenario, &grid, args.common.exec())? {
            let mut record = vec![num(value)];
            record.extend(row);
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_sweep(path: Option<&Path>, result: &SweepResult) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["T", "R", "E_L", "E_H", "lambda_pub", "feasible"])?;
    for p in &result.points {
        w.write_record([
            num(p.ttl),
            num(p.reliability),
            num(p.mean_lifetime),
            opt(p.mean_hit),
            num(p.publisher_load),
            p.feasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn optimize(args: &OptimizeArgs) -> Result<()> {
    let scenario = args.common.load()?;
    let grid = args.common.grid(&scenario)?;
    let exec = args.common.exec();
    let result = match args.budget {
        Some(budget) => constrained_ttl(&scenario, &grid, budget, exec)?,
        None => find_optimal_ttl(&scenario, &grid, exec)?,
    };
    write_sweep(args.common.destination("optimize.csv").as_deref(), &result)?;
    let best = if args.refine { refine(&scenario, &result, exec)? } else { result.clone() };
    eprintln!("t_star={}", num(best.t_star()));
    eprintln!("e_h={}", num(best.best_hit()));
    if let Some(budget) = result.budget {
        eprintln!("budget={}", num(budget));
        match result.constrained_point() {
            Some(p) => {
                eprintln!("constrained_t={}", num(p.ttl));
                eprintln!("constrained_e_h={}", opt(p.mean_hit));
            }
            None => eprintln!("constrained_t=infeasible"),
        }
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let scenario = args.common.load()?;
    let ttl = args
        .ttl
        .or(scenario.ttl)
        .ok_or_else(|| anyhow!("no TTL: pass --ttl or set `ttl` in [walk]"))?;
    let horizon = match args.duration {
        Some(d) => Horizon::Duration(d),
        None => Horizon::Requests(args.sim.samples),
    };
    let report = simulate_streams(
        &scenario,
        ttl,
        args.sim.seed,
        0..args.sim.replications,
        horizon,
        args.common.exec(),
    )?;
    print!("{}", report.summary());
    if let Some(path) = args.common.destination("simulate.csv") {
        write_report(&path, &report)?;
    }
    Ok(())
}

/// Summary as a one-row CSV plus per-router occupancy rows below it.
fn write_report(path: &Path, report: &SimReport) -> Result<()> {
    let summary = report.summary();
    let pairs: Vec<(&str, &str)> =
        summary.lines().filter_map(|l| l.split_once('=')).collect();
    let mut w = csv_writer(Some(path))?;
    w.write_record(pairs.iter().map(|(k, _)| *k))?;
    w.write_record(pairs.iter().map(|(_, v)| *v))?;
    w.flush()?;
    let occupancy = path.with_extension("occupancy.csv");
    let mut w = csv_writer(Some(&occupancy))?;
    w.write_record(["tier", "router", "occupancy"])?;
    for o in &report.occupancy {
        w.write_record([o.tier.to_string(), (o.router + 1).to_string(), num(o.fraction())])?;
    }
    w.flush()?;
    Ok(())
}

fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / se
    }
}

fn validate(args: &ValidateArgs) -> Result<()> {
    let scenario = args.common.load()?;
    if args.ttl.is_empty() {
        bail!("no TTLs to validate at");
    }
    let t_max = args.ttl.iter().copied().fold(0.0, f64::max);
    let model = HierarchyModel::new(
        &scenario.hierarchy,
        scenario.mode,
        scenario.publisher,
        scenario.lambda,
        t_max,
    )?;
    let reps = args.sim.replications.max(1);
    let mut w = csv_writer(args.common.destination("validate.csv").as_deref())?;
    w.write_record([
        "T", "R_model", "R_sim", "R_se", "z_R", "E_H_model", "E_H_sim", "E_H_se", "z_H",
    ])?;
    let mut max_z = 0.0f64;
    for (j, &t) in args.ttl.iter().enumerate() {
        let exact = model.compose(t)?;
        let hit = exact
            .mean_hit
            .ok_or_else(|| anyhow!("publisher overloaded at T = {t}"))?;
        let streams = j as u64 * reps..(j as u64 + 1) * reps;
        let report = simulate_streams(
            &scenario,
            t,
            args.sim.seed,
            streams,
            Horizon::Requests(args.sim.samples),
            args.common.exec(),
        )?;
        let (r_sim, _) = estimate_reliability(&report)?;
        let n = report.reliability_trials as f64;
        let r_se = (exact.reliability * (1.0 - exact.reliability) / n).sqrt();
        let z_r = z_score(r_sim - exact.reliability, r_se);
        let h_se = report.hit_time.stderr();
        let z_h = z_score(report.mean_hit_time() - hit, h_se);
        max_z = max_z.max(z_r.abs()).max(z_h.abs());
        w.write_record([
            num(t),
            num(exact.reliability),
            num(r_sim),
            num(r_se),
            num(z_r),
            num(hit),
            num(report.mean_hit_time()),
            num(h_se),
            num(z_h),
        ])?;
    }
    w.flush()?;
    eprintln!("seed={}", args.sim.seed);
    eprintln!("max_z={}", num(max_z));
    match args.max_z {
        Some(limit) if !(max_z <= limit) => Err(ZLimit(max_z, limit).into()),
        _ => Ok(()),
    }
}

fn place(args: &PlaceArgs) -> Result<()> {
    let mut scenario = args.common.load()?;
    if let Some(gamma) = args.gamma {
        scenario.counters.gamma = gamma;
    }
    let tree = FluidTree::from_hierarchy(&scenario.hierarchy, scenario.lambda, scenario.counters.gamma)?;
    let marking = mark_placement(&tree)?;
    let occupancy = match args.converge {
        Some(duration) => Some(run_placement_convergence(&scenario, args.seed, duration)?),
        None => None,
    };
    let mut w = csv_writer(args.common.destination("place.csv").as_deref())?;
    let mut header = vec!["tier", "router", "demand", "offered", "stored"];
    if occupancy.is_some() {
        header.push("occupancy");
    }
    w.write_record(&header)?;
    for (i, label) in tree.labels().iter().enumerate() {
        let mut record = vec![
            label.tier.to_string(),
            (label.router + 1).to_string(),
            num(tree.demand()[i]),
            num(marking.offered[i]),
            marking.stores[i].to_string(),
        ];
        if let Some(occ) = &occupancy {
            let o = occ
                .iter()
                .find(|o| o.tier == label.tier && o.router == label.router)
                .expect("one occupancy entry per router");
            record.push(num(o.fraction()));
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
