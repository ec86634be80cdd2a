//! Scenario files: a small line-oriented `key = value` format.
//!
//! ```text
//! # comments start with '#'
//! [walk]
//! mode = discrete            # or continuous
//! placement = quenched       # or annealed
//! ttl = 20                   # optional default TTL
//! t_min = 1                  # optional TTL grid
//! t_max = 200
//! t_step = 1
//! entry_check = false        # check the entry router before the first move
//! hop_delay = 0              # per-crumb content return delay
//!
//! [tier 1]                   # tier 1 is the top, next to the publisher
//! nodes = 5
//! rate = 1                   # walker rate psi
//! edge = 1 2                 # undirected, one-based router labels
//! arc = 2 3                  # directed
//! placement = 0 0 1/3 1/3 1/3
//! start = 0 1 0 0 0          # or "uniform"
//! availability = 0.5
//! forward_delay = 0          # hand-off time to the tier above
//! uplink = 3 1 2             # (tiers below 1) router 3 -> parents 1 and 2
//!
//! [publisher]
//! kind = fixed               # or mm1
//! t0 = 100
//! mu = 40                    # mm1 only
//! scale = 1000               # mm1 only, T0 = scale / (mu - load)
//!
//! [demand]
//! lambda = 100
//!
//! [rc]                       # optional: reinforced counters
//! dynamic = false            # drive placement by counters instead of `placement`
//! low = 0
//! up = 50
//! gamma = 1
//! clamp = true
//! timer = periodic           # or exponential
//! increment = all            # or escalation
//! ```

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::hierarchy::ttl_grid;
use crate::markov::{PublisherModel, WalkMode};
use crate::topology::{
    DomainGraph, InitialDistribution, PlacementMode, PlacementVector, Tier, TierHierarchy,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ScenarioError {
    pub line: usize,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(key) => write!(f, "line {}: `{}`: {}", self.line, key, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

fn err(line: usize, key: Option<&str>, message: impl Into<String>) -> ScenarioError {
    ScenarioError { line, key: key.map(str::to_owned), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecrementTimer {
    /// Every router decrements at `k / gamma`.
    #[default]
    Periodic,
    /// Exponential gaps with rate `gamma`, independently per router.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IncrementPolicy {
    /// Every router the request occupies, walk visits included.
    #[default]
    EveryVisit,
    /// Only routers where the request enters a tier.
    EscalationOnly,
}

/// Reinforced-counter parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterConfig {
    /// When false, cache contents follow the static placement vectors and
    /// counters are not simulated.
    pub dynamic: bool,
    pub low: f64,
    pub up: f64,
    pub gamma: f64,
    pub clamp: bool,
    pub timer: DecrementTimer,
    pub increment: IncrementPolicy,
}

impl Default for CounterConfig {
    fn default() -> Self {
        Self {
            dynamic: false,
            low: 0.0,
            up: 50.0,
            gamma: 1.0,
            clamp: true,
            timer: DecrementTimer::Periodic,
            increment: IncrementPolicy::EveryVisit,
        }
    }
}

/// Protocol switches that only the simulator honors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProtocolConfig {
    pub entry_check: bool,
    pub hop_delay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { min: 1.0, max: 200.0, step: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mode: WalkMode,
    pub hierarchy: TierHierarchy,
    pub publisher: PublisherModel,
    pub lambda: f64,
    pub counters: CounterConfig,
    pub protocol: ProtocolConfig,
    pub ttl: Option<f64>,
    pub grid: GridSpec,
}

impl Scenario {
    pub fn t_grid(&self) -> Vec<f64> {
        ttl_grid(self.grid.min, self.grid.max, self.grid.step).unwrap_or_default()
    }

    pub fn t_max(&self) -> f64 {
        self.t_grid().last().copied().unwrap_or(0.0).max(self.ttl.unwrap_or(0.0))
    }

    /// Overrides one named parameter, as used by parameter sweeps.
    ///
    /// `p` sets the bottom tier's availability, `t0` switches to a fixed
    /// publisher, `mu` and `scale` switch to an M/M/1 publisher, `lambda`
    /// sets the demand and `rate` the walker rate of every tier.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self, String> {
        let mut s = self.clone();
        match name {
            "p" => {
                if !(0.0..=1.0).contains(&value) {
                    return Err(format!("p = {value} is outside [0, 1]"));
                }
                s.hierarchy.bottom_mut().availability = value;
            }
            "t0" => s.publisher = PublisherModel::Fixed { t0: value },
            "mu" => {
                let scale = match self.publisher {
                    PublisherModel::Mm1 { scale, .. } => scale,
                    PublisherModel::Fixed { .. } => DEFAULT_SCALE,
                };
                s.publisher = PublisherModel::Mm1 { mu: value, scale };
            }
            "scale" => {
                let PublisherModel::Mm1 { mu, .. } = self.publisher else {
                    return Err("scale needs an mm1 publisher".into());
                };
                s.publisher = PublisherModel::Mm1 { mu, scale: value };
            }
            "lambda" => s.lambda = value,
            "rate" => {
                for tier in s.hierarchy.tiers_mut() {
                    tier.graph = tier.graph.with_rate(value).map_err(|e| e.to_string())?;
                }
            }
            other => return Err(format!("unknown parameter `{other}`")),
        }
        s.publisher.validate().map_err(|e| e.to_string())?;
        Ok(s)
    }
}

const DEFAULT_SCALE: f64 = 1000.0;

/// `key = value` entries of one section, with line numbers.
#[derive(Debug, Default)]
struct Section {
    header_line: usize,
    entries: Vec<(usize, String, String)>,
}

impl Section {
    fn single(&self, key: &str) -> Result<Option<(usize, &str)>, ScenarioError> {
        let mut found = None;
        for (line, k, v) in &self.entries {
            if k == key {
                if found.is_some() {
                    return Err(err(*line, Some(key), "duplicate key"));
                }
                found = Some((*line, v.as_str()));
            }
        }
        Ok(found)
    }

    fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = (usize, &'a str)> + 'a {
        self.entries
            .iter()
            .filter(move |(_, k, _)| k == key)
            .map(|(line, _, v)| (*line, v.as_str()))
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), ScenarioError> {
        for (line, key, _) in &self.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(err(*line, Some(key), "unknown key"));
            }
        }
        Ok(())
    }

    fn number(&self, key: &str) -> Result<Option<f64>, ScenarioError> {
        self.single(key)?.map(|(line, v)| parse_number(line, key, v)).transpose()
    }

    fn required_number(&self, key: &str) -> Result<f64, ScenarioError> {
        self.number(key)?
            .ok_or_else(|| err(self.header_line, Some(key), "missing required key"))
    }

    fn flag(&self, key: &str) -> Result<Option<bool>, ScenarioError> {
        self.single(key)?
            .map(|(line, v)| match v {
                "true" | "yes" | "on" => Ok(true),
                "false" | "no" | "off" => Ok(false),
                _ => Err(err(line, Some(key), format!("expected true/false, got `{v}`"))),
            })
            .transpose()
    }

    fn word(&self, key: &str) -> Result<Option<(usize, &str)>, ScenarioError> {
        self.single(key)
    }
}

/// Accepts decimals and simple fractions such as `1/3`.
fn parse_number(line: usize, key: &str, text: &str) -> Result<f64, ScenarioError> {
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad_number(line, key, text))?;
            let den: f64 = den.trim().parse().map_err(|_| bad_number(line, key, text))?;
            if den == 0.0 {
                return Err(bad_number(line, key, text));
            }
            num / den
        }
        None => text.parse().map_err(|_| bad_number(line, key, text))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad_number(line, key, text))
    }
}

fn bad_number(line: usize, key: &str, text: &str) -> ScenarioError {
    err(line, Some(key), format!("`{text}` is not a number"))
}

fn parse_vector(line: usize, key: &str, text: &str) -> Result<Vec<f64>, ScenarioError> {
    text.split_whitespace().map(|t| parse_number(line, key, t)).collect()
}

fn parse_labels(line: usize, key: &str, text: &str) -> Result<Vec<usize>, ScenarioError> {
    text.split_whitespace()
        .map(|t| match t.parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v - 1),
            _ => Err(err(line, Some(key), format!("`{t}` is not a router label (1-based)"))),
        })
        .collect()
}

enum SectionName {
    Walk,
    Tier(usize),
    Publisher,
    Demand,
    Rc,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut walk = None;
    let mut publisher = None;
    let mut demand = None;
    let mut rc = None;
    let mut tiers: BTreeMap<usize, Section> = BTreeMap::new();
    let mut current: Option<(SectionName, Section)> = None;

    let mut flush = |current: Option<(SectionName, Section)>| -> Result<(), ScenarioError> {
        let Some((name, section)) = current else { return Ok(()) };
        let line = section.header_line;
        let slot = match name {
            SectionName::Walk => &mut walk,
            SectionName::Publisher => &mut publisher,
            SectionName::Demand => &mut demand,
            SectionName::Rc => &mut rc,
            SectionName::Tier(n) => {
                if tiers.insert(n, section).is_some() {
                    return Err(err(line, None, format!("duplicate section [tier {n}]")));
                }
                return Ok(());
            }
        };
        if slot.is_some() {
            return Err(err(line, None, "duplicate section"));
        }
        *slot = Some(section);
        Ok(())
    };

    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| err(line, None, "unterminated section header"))?
                .trim();
            let name = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
                ["walk"] => SectionName::Walk,
                ["publisher"] => SectionName::Publisher,
                ["demand"] => SectionName::Demand,
                ["rc"] => SectionName::Rc,
                ["tier", n] => match n.parse::<usize>() {
                    Ok(n) if n >= 1 => SectionName::Tier(n),
                    _ => return Err(err(line, None, format!("bad tier number `{n}`"))),
                },
                _ => return Err(err(line, None, format!("unknown section [{header}]"))),
            };
            flush(current.take())?;
            current = Some((name, Section { header_line: line, entries: Vec::new() }));
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(err(line, None, "expected `key = value`"));
        };
        let Some((_, section)) = current.as_mut() else {
            return Err(err(line, Some(key.trim()), "entry outside any section"));
        };
        section.entries.push((line, key.trim().to_owned(), value.trim().to_owned()));
    }
    flush(current.take())?;

    let end = text.lines().count().max(1);
    let walk = walk.ok_or_else(|| err(end, None, "missing section [walk]"))?;
    let publisher = publisher.ok_or_else(|| err(end, None, "missing section [publisher]"))?;
    let demand = demand.ok_or_else(|| err(end, None, "missing section [demand]"))?;
    if tiers.is_empty() {
        return Err(err(end, None, "missing section [tier 1]"));
    }

    walk.check_keys(&[
        "mode",
        "placement",
        "ttl",
        "t_min",
        "t_max",
        "t_step",
        "entry_check",
        "hop_delay",
    ])?;
    let mode = match walk.word("mode")? {
        None | Some((_, "discrete")) => WalkMode::Discrete,
        Some((_, "continuous")) => WalkMode::Continuous,
        Some((line, other)) => return Err(err(line, Some("mode"), format!("unknown mode `{other}`"))),
    };
    let placement_mode = match walk.word("placement")? {
        None | Some((_, "quenched")) => PlacementMode::Quenched,
        Some((_, "annealed")) => PlacementMode::Annealed,
        Some((line, other)) => {
            return Err(err(line, Some("placement"), format!("unknown placement `{other}`")))
        }
    };
    let ttl = walk.number("ttl")?;
    if let Some(t) = ttl {
        if t < 0.0 {
            return Err(err(walk.single("ttl")?.unwrap().0, Some("ttl"), "TTL must be >= 0"));
        }
    }
    let defaults = GridSpec::default();
    let grid = GridSpec {
        min: walk.number("t_min")?.unwrap_or(defaults.min),
        max: walk.number("t_max")?.unwrap_or(defaults.max),
        step: walk.number("t_step")?.unwrap_or(defaults.step),
    };
    if ttl_grid(grid.min, grid.max, grid.step).is_err() {
        return Err(err(walk.header_line, Some("t_min/t_max/t_step"), "invalid TTL grid"));
    }
    let protocol = ProtocolConfig {
        entry_check: walk.flag("entry_check")?.unwrap_or(false),
        hop_delay: walk.number("hop_delay")?.unwrap_or(0.0),
    };
    if protocol.hop_delay < 0.0 {
        return Err(err(walk.header_line, Some("hop_delay"), "must be >= 0"));
    }

    let expected: Vec<usize> = (1..=tiers.len()).collect();
    if tiers.keys().copied().collect::<Vec<_>>() != expected {
        let (_, first) = tiers.iter().next().unwrap();
        return Err(err(first.header_line, None, "tiers must be numbered 1..N without gaps"));
    }
    let mut built = Vec::with_capacity(tiers.len());
    for (&number, section) in &tiers {
        built.push(parse_tier(number, section, placement_mode)?);
    }
    let hierarchy = TierHierarchy::new(built)
        .map_err(|e| err(tiers[&tiers.len()].header_line, None, e.to_string()))?;

    publisher.check_keys(&["kind", "t0", "mu", "scale"])?;
    let publisher_model = match publisher.word("kind")? {
        None | Some((_, "fixed")) => PublisherModel::Fixed { t0: publisher.required_number("t0")? },
        Some((_, "mm1")) => PublisherModel::Mm1 {
            mu: publisher.required_number("mu")?,
            scale: publisher.number("scale")?.unwrap_or(DEFAULT_SCALE),
        },
        Some((line, other)) => {
            return Err(err(line, Some("kind"), format!("unknown publisher kind `{other}`")))
        }
    };
    publisher_model.validate().map_err(|e| err(publisher.header_line, None, e.to_string()))?;

    demand.check_keys(&["lambda"])?;
    let lambda = demand.required_number("lambda")?;
    if !(lambda > 0.0) {
        return Err(err(demand.header_line, Some("lambda"), "demand rate must be positive"));
    }

    let counters = match rc {
        None => CounterConfig::default(),
        Some(rc) => parse_counters(&rc)?,
    };

    Ok(Scenario {
        mode,
        hierarchy,
        publisher: publisher_model,
        lambda,
        counters,
        protocol,
        ttl,
        grid,
    })
}

fn parse_tier(
    number: usize,
    section: &Section,
    placement_mode: PlacementMode,
) -> Result<Tier, ScenarioError> {
    section.check_keys(&[
        "nodes",
        "rate",
        "edge",
        "arc",
        "placement",
        "start",
        "availability",
        "forward_delay",
        "uplink",
    ])?;
    let header = section.header_line;
    let nodes_value = section.required_number("nodes")?;
    if nodes_value < 1.0 || nodes_value.fract() != 0.0 {
        return Err(err(header, Some("nodes"), "must be a positive integer"));
    }
    let nodes = nodes_value as usize;
    let rate = section.number("rate")?.unwrap_or(1.0);

    let mut arcs = Vec::new();
    for (key, undirected) in [("edge", true), ("arc", false)] {
        for (line, value) in section.all(key) {
            let labels = parse_labels(line, key, value)?;
            let [a, b] = labels[..] else {
                return Err(err(line, Some(key), "expected two router labels"));
            };
            if a >= nodes || b >= nodes {
                return Err(err(line, Some(key), format!("router label exceeds nodes = {nodes}")));
            }
            arcs.push((a, b));
            if undirected {
                arcs.push((b, a));
            }
        }
    }
    let graph = DomainGraph::new(nodes, arcs, rate).map_err(|e| err(header, None, e.to_string()))?;

    let placement = match section.single("placement")? {
        None => PlacementVector::empty(nodes, placement_mode),
        Some((line, value)) => {
            let probs = parse_vector(line, "placement", value)?;
            if probs.len() != nodes {
                return Err(err(line, Some("placement"), format!("expected {nodes} entries")));
            }
            PlacementVector::new(probs, placement_mode)
                .map_err(|e| err(line, Some("placement"), e.to_string()))?
        }
    };
    let start = match section.single("start")? {
        None => return Err(err(header, Some("start"), "missing required key")),
        Some((_, "uniform")) => InitialDistribution::uniform(nodes),
        Some((line, value)) => {
            let probs = parse_vector(line, "start", value)?;
            if probs.len() != nodes {
                return Err(err(line, Some("start"), format!("expected {nodes} entries")));
            }
            InitialDistribution::new(probs).map_err(|e| err(line, Some("start"), e.to_string()))?
        }
    };
    let availability = section.number("availability")?.unwrap_or(1.0);
    if !(0.0..=1.0).contains(&availability) {
        return Err(err(header, Some("availability"), "must lie in [0, 1]"));
    }
    let forward_delay = section.number("forward_delay")?.unwrap_or(0.0);
    if forward_delay < 0.0 {
        return Err(err(header, Some("forward_delay"), "must be >= 0"));
    }
    let mut uplinks = vec![Vec::new(); nodes];
    for (line, value) in section.all("uplink") {
        if number == 1 {
            return Err(err(line, Some("uplink"), "tier 1 has no parent tier"));
        }
        let labels = parse_labels(line, "uplink", value)?;
        let Some((&node, parents)) = labels.split_first() else {
            return Err(err(line, Some("uplink"), "expected a router and its parents"));
        };
        if node >= nodes || parents.is_empty() {
            return Err(err(line, Some("uplink"), "expected a router of this tier and parents"));
        }
        uplinks[node].extend_from_slice(parents);
    }
    Ok(Tier { graph, placement, start, availability, forward_delay, uplinks })
}

fn parse_counters(rc: &Section) -> Result<CounterConfig, ScenarioError> {
    rc.check_keys(&["dynamic", "low", "up", "gamma", "clamp", "timer", "increment"])?;
    let d = CounterConfig::default();
    let config = CounterConfig {
        dynamic: rc.flag("dynamic")?.unwrap_or(d.dynamic),
        low: rc.number("low")?.unwrap_or(d.low),
        up: rc.number("up")?.unwrap_or(d.up),
        gamma: rc.number("gamma")?.unwrap_or(d.gamma),
        clamp: rc.flag("clamp")?.unwrap_or(d.clamp),
        timer: match rc.word("timer")? {
            None | Some((_, "periodic")) => DecrementTimer::Periodic,
            Some((_, "exponential")) => DecrementTimer::Exponential,
            Some((line, other)) => {
                return Err(err(line, Some("timer"), format!("unknown timer `{other}`")))
            }
        },
        increment: match rc.word("increment")? {
            None | Some((_, "all")) => IncrementPolicy::EveryVisit,
            Some((_, "escalation")) => IncrementPolicy::EscalationOnly,
            Some((line, other)) => {
                return Err(err(line, Some("increment"), format!("unknown policy `{other}`")))
            }
        },
    };
    if !(config.low >= 0.0 && config.low < config.up) {
        return Err(err(rc.header_line, Some("low/up"), "need 0 <= low < up"));
    }
    if !(config.gamma > 0.0) {
        return Err(err(rc.header_line, Some("gamma"), "must be positive"));
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[walk]
mode = continuous
[tier 1]
nodes = 2
edge = 1 2
placement = 0 1
start = 1 0
[publisher]
t0 = 100
[demand]
lambda = 100
";

    #[test]
    fn minimal_scenario_parses() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.mode, WalkMode::Continuous);
        assert_eq!(s.hierarchy.depth(), 1);
        let tier = s.hierarchy.bottom();
        assert_eq!(tier.graph.neighbors(0), &[1]);
        assert_eq!(tier.availability, 1.0);
        assert_eq!(s.publisher, PublisherModel::Fixed { t0: 100.0 });
        assert_eq!(s.counters, CounterConfig::default());
        assert_eq!(s.t_grid().len(), 200);
    }

    #[test]
    fn quenched_placement_must_sum_to_one() {
        let text = MINIMAL.replace("placement = 0 1", "placement = 0 0.9");
        let e = parse_scenario(&text).unwrap_err();
        assert_eq!(e.line, 6);
        assert_eq!(e.key.as_deref(), Some("placement"));
        let annealed = text.replace("mode = continuous", "placement = annealed");
        assert!(parse_scenario(&annealed).is_ok());
    }

    #[test]
    fn fractions_are_accepted() {
        let text = MINIMAL
            .replace("nodes = 2", "nodes = 3")
            .replace("edge = 1 2", "edge = 1 2\nedge = 2 3")
            .replace("placement = 0 1", "placement = 0 1/3 2/3")
            .replace("start = 1 0", "start = uniform");
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.hierarchy.bottom().placement.probs()[1], 1.0 / 3.0);
    }

    #[test]
    fn diagnostics_name_line_and_key() {
        let unknown = MINIMAL.replace("t0 = 100", "t0 = 100\ncolour = red");
        let e = parse_scenario(&unknown).unwrap_err();
        assert_eq!((e.line, e.key.as_deref()), (10, Some("colour")));
        assert_eq!(e.to_string(), "line 10: `colour`: unknown key");

        let missing = MINIMAL.replace("[demand]\nlambda = 100\n", "");
        assert!(parse_scenario(&missing).unwrap_err().message.contains("[demand]"));

        let bad_edge = MINIMAL.replace("edge = 1 2", "edge = 1 3");
        assert_eq!(parse_scenario(&bad_edge).unwrap_err().line, 5);

        let stranded = MINIMAL.replace("edge = 1 2", "arc = 1 2");
        assert!(parse_scenario(&stranded).unwrap_err().message.contains("no outgoing"));

        let gap = MINIMAL.replace("[tier 1]", "[tier 2]");
        assert!(parse_scenario(&gap).is_err());

        let dup = MINIMAL.replace("t0 = 100", "t0 = 100\nt0 = 50");
        assert_eq!(parse_scenario(&dup).unwrap_err().message, "duplicate key");
    }

    #[test]
    fn uplinks_and_counters() {
        let text = "\
[walk]
[tier 1]
nodes = 1
start = 1
[tier 2]
nodes = 2
edge = 1 2
start = 1/2 1/2
uplink = 1 1
uplink = 2 1
forward_delay = 2
availability = 0
[publisher]
kind = mm1
mu = 40
[demand]
lambda = 3
[rc]
dynamic = true
up = 10
increment = escalation
";
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.hierarchy.depth(), 2);
        assert_eq!(s.hierarchy.tiers()[1].uplinks, vec![vec![0], vec![0]]);
        assert_eq!(s.publisher, PublisherModel::Mm1 { mu: 40.0, scale: 1000.0 });
        assert!(s.counters.dynamic);
        assert_eq!(s.counters.increment, IncrementPolicy::EscalationOnly);
        let no_uplink = text.replace("uplink = 2 1\n", "");
        assert!(parse_scenario(&no_uplink).unwrap_err().message.contains("uplink"));
    }

    #[test]
    fn parameter_overrides() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.with_param("p", 0.4).unwrap().hierarchy.bottom().availability, 0.4);
        assert_eq!(
            s.with_param("mu", 40.0).unwrap().publisher,
            PublisherModel::Mm1 { mu: 40.0, scale: 1000.0 }
        );
        assert!(s.with_param("p", 1.5).is_err());
        assert!(s.with_param("nope", 1.0).is_err());
        assert_eq!(s.with_param("rate", 2.0).unwrap().hierarchy.bottom().graph.walker_rate(), 2.0);
    }
}
