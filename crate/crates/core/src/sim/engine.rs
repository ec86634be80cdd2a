use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;

use crate::error::SimError;
use crate::markov::{discrete_steps, effective_ttl, PublisherModel, WalkMode};
use crate::scenario::{CounterConfig, DecrementTimer, IncrementPolicy, Scenario};
use crate::sim::report::{MeanEstimate, RouterOccupancy, SimReport};
use crate::topology::PlacementMode;

/// When a run stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Generate this many requests, then run until all are served.
    Requests(u64),
    /// Stop at this simulated time; unfinished requests are reported in flight.
    Duration(f64),
}

const SOJOURN_BATCHES: usize = 30;

#[derive(Debug, Clone, Copy)]
enum EventKind {
    Arrival,
    Step(usize),
    Expire(usize),
    /// A request lands in `tier` at `router` after a forward delay.
    Enter { slot: usize, tier: usize, router: usize },
    PublisherDeparture,
    PublisherFound(usize),
    ReturnHop(usize),
    CounterTick,
    CounterDecay { tier: usize, router: usize },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // Min-heap on (time, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Static content position for one tier visit.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Presence {
    Absent,
    At(usize),
    /// Re-sampled per visit from the placement vector.
    PerVisit,
}

#[derive(Debug, Clone, Default)]
struct Request {
    created: f64,
    tier: usize,
    router: usize,
    entered: f64,
    deadline: f64,
    steps_in_visit: u64,
    presence: Option<Presence>,
    bottom_trial: bool,
    /// `(tier, router)` of every router that forwarded the request upwards.
    crumbs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy)]
struct Counter {
    value: f64,
    cached: bool,
    cached_since: f64,
    cached_time: f64,
}

struct TierRuntime {
    start: WeightedIndex<f64>,
    placement: Option<WeightedIndex<f64>>,
    neighbors: Vec<Vec<usize>>,
    uplinks: Vec<Vec<usize>>,
    probs: Vec<f64>,
    placement_mode: PlacementMode,
    availability: f64,
    forward_delay: f64,
    step: Exp<f64>,
    step_period: f64,
}

struct Engine<'a> {
    scenario: &'a Scenario,
    counters_cfg: CounterConfig,
    ttl: f64,
    rng: ChaCha8Rng,
    now: f64,
    seq: u64,
    events: BinaryHeap<Event>,
    tiers: Vec<TierRuntime>,
    requests: Vec<Request>,
    free: Vec<usize>,
    active: u64,
    unserved: u64,
    generated: u64,
    horizon: Horizon,
    arrival: Exp<f64>,
    counters: Vec<Vec<Counter>>,
    ticks: u64,
    queue: VecDeque<(usize, f64)>,
    server_busy: bool,
    service: Option<Exp<f64>>,
    sojourns: Vec<f64>,
    report: SimReport,
}

fn validate(scenario: &Scenario, ttl: f64, horizon: Horizon) -> Result<(), SimError> {
    if !(ttl.is_finite() && ttl >= 0.0) {
        return Err(SimError::NegativeTtl(ttl));
    }
    match horizon {
        Horizon::Requests(0) => return Err(SimError::EmptyHorizon),
        Horizon::Duration(d) if !(d.is_finite() && d > 0.0) => return Err(SimError::EmptyHorizon),
        _ => {}
    }
    if !(scenario.lambda.is_finite() && scenario.lambda > 0.0) {
        return Err(SimError::BadDemand(scenario.lambda));
    }
    scenario.publisher.validate().map_err(|e| SimError::BadPublisher(e.to_string()))?;
    let c = &scenario.counters;
    if !(c.low >= 0.0 && c.low < c.up && c.gamma.is_finite() && c.gamma > 0.0) {
        return Err(SimError::BadCounter(format!(
            "low = {}, up = {}, gamma = {}",
            c.low, c.up, c.gamma
        )));
    }
    if !(scenario.protocol.hop_delay >= 0.0) {
        return Err(SimError::BadPublisher("hop delay must be non-negative".into()));
    }
    Ok(())
}

/// Runs one seeded simulation on the stream `stream` of `seed`.
pub fn simulate_stream(
    scenario: &Scenario,
    ttl: f64,
    seed: u64,
    stream: u64,
    horizon: Horizon,
) -> Result<SimReport, SimError> {
    validate(scenario, ttl, horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut tiers = Vec::new();
    for tier in scenario.hierarchy.tiers() {
        let graph = &tier.graph;
        let rate = graph.walker_rate();
        let start = WeightedIndex::new(tier.start.probs()).expect("start distribution sums to 1");
        let placement = match tier.placement.mode() {
            PlacementMode::Quenched if !tier.placement.is_empty() => {
                WeightedIndex::new(tier.placement.probs()).ok()
            }
            _ => None,
        };
        tiers.push(TierRuntime {
            start,
            placement,
            neighbors: (0..graph.node_count()).map(|i| graph.neighbors(i).to_vec()).collect(),
            uplinks: tier.uplinks.clone(),
            probs: tier.placement.probs().to_vec(),
            placement_mode: tier.placement.mode(),
            availability: tier.availability,
            forward_delay: tier.forward_delay,
            step: Exp::new(rate).expect("positive walker rate"),
            step_period: 1.0 / rate,
        });
    }
    let counters = scenario
        .hierarchy
        .tiers()
        .iter()
        .map(|t| {
            vec![
                Counter {
                    value: scenario.counters.low,
                    cached: false,
                    cached_since: 0.0,
                    cached_time: 0.0,
                };
                t.graph.node_count()
            ]
        })
        .collect();
    let service = match scenario.publisher {
        PublisherModel::Mm1 { mu, .. } => Some(Exp::new(mu).expect("positive mu")),
        PublisherModel::Fixed { .. } => None,
    };
    let mut engine = Engine {
        scenario,
        counters_cfg: scenario.counters,
        ttl,
        rng,
        now: 0.0,
        seq: 0,
        events: BinaryHeap::new(),
        tiers,
        requests: Vec::new(),
        free: Vec::new(),
        active: 0,
        unserved: 0,
        generated: 0,
        horizon,
        arrival: Exp::new(scenario.lambda).expect("positive lambda"),
        counters,
        ticks: 0,
        queue: VecDeque::new(),
        server_busy: false,
        service,
        sojourns: Vec::new(),
        report: SimReport { seed, replications: 1, ttl, ..Default::default() },
    };
    engine.run();
    Ok(engine.finish())
}

impl<'a> Engine<'a> {
    fn schedule(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.events.push(Event { time, seq: self.seq, kind });
    }

    fn dynamic(&self) -> bool {
        self.counters_cfg.dynamic
    }

    fn run(&mut self) {
        let first = self.rng.sample(self.arrival);
        self.schedule(first, EventKind::Arrival);
        if self.dynamic() {
            match self.counters_cfg.timer {
                DecrementTimer::Periodic => {
                    self.schedule(1.0 / self.counters_cfg.gamma, EventKind::CounterTick)
                }
                DecrementTimer::Exponential => {
                    let decay = Exp::new(self.counters_cfg.gamma).expect("positive gamma");
                    for tier in 0..self.tiers.len() {
                        for router in 0..self.tiers[tier].neighbors.len() {
                            let t = self.rng.sample(decay);
                            self.schedule(t, EventKind::CounterDecay { tier, router });
                        }
                    }
                }
            }
        }
        while let Some(event) = self.events.pop() {
            if let Horizon::Duration(end) = self.horizon {
                if event.time > end {
                    self.now = end;
                    break;
                }
            }
            self.now = event.time;
            match event.kind {
                EventKind::Arrival => self.on_arrival(),
                EventKind::Step(slot) => self.on_step(slot),
                EventKind::Expire(slot) => self.on_expire(slot),
                EventKind::Enter { slot, tier, router } => self.enter_tier(slot, tier, router),
                EventKind::PublisherDeparture => self.on_departure(),
                EventKind::PublisherFound(slot) => {
                    self.report.publisher_services += 1;
                    self.found(slot);
                }
                EventKind::ReturnHop(slot) => self.return_hop(slot),
                EventKind::CounterTick => {
                    self.ticks += 1;
                    for tier in 0..self.counters.len() {
                        for router in 0..self.counters[tier].len() {
                            self.decrement(tier, router);
                        }
                    }
                    let next = (self.ticks + 1) as f64 / self.counters_cfg.gamma;
                    self.schedule(next, EventKind::CounterTick);
                }
                EventKind::CounterDecay { tier, router } => {
                    self.decrement(tier, router);
                    let decay = Exp::new(self.counters_cfg.gamma).expect("positive gamma");
                    let t = self.now + self.rng.sample(decay);
                    self.schedule(t, EventKind::CounterDecay { tier, router });
                }
            }
            if let Horizon::Requests(n) = self.horizon {
                if self.generated >= n && self.active == 0 {
                    break;
                }
            }
        }
    }

    fn on_arrival(&mut self) {
        self.generated += 1;
        self.report.requests_created += 1;
        self.unserved += 1;
        let bottom = self.tiers.len() - 1;
        let origin = self.tiers[bottom].start.sample(&mut self.rng);
        let slot = match self.free.pop() {
            Some(slot) => slot,
            None => {
                self.requests.push(Request::default());
                self.requests.len() - 1
            }
        };
        let request = &mut self.requests[slot];
        request.created = self.now;
        request.crumbs.clear();
        request.bottom_trial = false;
        self.active += 1;
        let more = match self.horizon {
            Horizon::Requests(n) => self.generated < n,
            Horizon::Duration(_) => true,
        };
        if more {
            let next = self.now + self.rng.sample(self.arrival);
            self.schedule(next, EventKind::Arrival);
        }
        self.enter_tier(slot, bottom, origin);
    }

    fn enter_tier(&mut self, slot: usize, tier: usize, router: usize) {
        let bottom = tier == self.tiers.len() - 1;
        let presence = if self.dynamic() { None } else { Some(self.sample_presence(tier)) };
        let ttl = effective_ttl(self.ttl, 1.0 / self.tiers[tier].step_period, self.scenario.mode);
        {
            let request = &mut self.requests[slot];
            request.tier = tier;
            request.router = router;
            request.entered = self.now;
            request.deadline = self.now + ttl;
            request.steps_in_visit = 0;
            request.presence = presence;
            if bottom && request.crumbs.is_empty() {
                request.bottom_trial = self.counters_cfg.dynamic
                    || !matches!(presence, Some(Presence::Absent));
                if request.bottom_trial {
                    self.report.reliability_trials += 1;
                }
            }
        }
        self.increment(tier, router);
        if self.scenario.protocol.entry_check && self.is_hit(slot) {
            self.report.hits_in_tier += 1;
            self.found(slot);
            return;
        }
        self.schedule_move(slot);
    }

    fn sample_presence(&mut self, tier: usize) -> Presence {
        let rt = &self.tiers[tier];
        if rt.availability < 1.0 && self.rng.random::<f64>() >= rt.availability {
            return Presence::Absent;
        }
        match rt.placement_mode {
            PlacementMode::Annealed => Presence::PerVisit,
            PlacementMode::Quenched => match &self.tiers[tier].placement {
                Some(dist) => Presence::At(dist.sample(&mut self.rng)),
                None => Presence::Absent,
            },
        }
    }

    fn is_hit(&mut self, slot: usize) -> bool {
        let request = &self.requests[slot];
        let (tier, router) = (request.tier, request.router);
        if self.dynamic() {
            return self.counters[tier][router].cached;
        }
        match request.presence {
            Some(Presence::At(u)) => u == router,
            Some(Presence::PerVisit) => {
                let w = self.tiers[tier].probs[router];
                w > 0.0 && self.rng.random::<f64>() < w
            }
            _ => false,
        }
    }

    fn schedule_move(&mut self, slot: usize) {
        let request = &self.requests[slot];
        let rt = &self.tiers[request.tier];
        if rt.neighbors[request.router].is_empty() {
            let deadline = request.deadline;
            self.schedule(deadline, EventKind::Expire(slot));
            return;
        }
        match self.scenario.mode {
            WalkMode::Continuous => {
                let next = self.now + self.rng.sample(rt.step);
                let deadline = self.requests[slot].deadline;
                if next < deadline {
                    self.schedule(next, EventKind::Step(slot));
                } else {
                    self.schedule(deadline, EventKind::Expire(slot));
                }
            }
            WalkMode::Discrete => {
                let budget = discrete_steps(self.ttl, 1.0 / rt.step_period) as u64;
                if request.steps_in_visit < budget {
                    let k = request.steps_in_visit + 1;
                    let next = request.entered + k as f64 * rt.step_period;
                    self.schedule(next, EventKind::Step(slot));
                } else {
                    let deadline = request.deadline;
                    self.schedule(deadline, EventKind::Expire(slot));
                }
            }
        }
    }

    fn on_step(&mut self, slot: usize) {
        let (tier, from) = (self.requests[slot].tier, self.requests[slot].router);
        let choices = &self.tiers[tier].neighbors[from];
        let to = choices[self.rng.random_range(0..choices.len())];
        let request = &mut self.requests[slot];
        request.router = to;
        request.steps_in_visit += 1;
        self.report.walk_steps += 1;
        self.report.max_steps_per_visit =
            self.report.max_steps_per_visit.max(request.steps_in_visit);
        if self.counters_cfg.increment == IncrementPolicy::EveryVisit {
            self.increment(tier, to);
        }
        if self.is_hit(slot) {
            self.report.hits_in_tier += 1;
            self.found(slot);
        } else {
            self.schedule_move(slot);
        }
    }

    fn on_expire(&mut self, slot: usize) {
        let bottom = self.tiers.len() - 1;
        let request = &mut self.requests[slot];
        let (tier, router) = (request.tier, request.router);
        if tier == bottom && request.bottom_trial {
            self.report.reliability_misses += 1;
        }
        request.crumbs.push((tier, router));
        self.report.crumbs_laid += 1;
        self.report.escalations += 1;
        if tier == 0 {
            self.to_publisher(slot);
            return;
        }
        let parents = &self.tiers[tier].uplinks[router];
        let parent = parents[self.rng.random_range(0..parents.len())];
        let delay = self.tiers[tier].forward_delay;
        if delay > 0.0 {
            self.schedule(self.now + delay, EventKind::Enter { slot, tier: tier - 1, router: parent });
        } else {
            self.enter_tier(slot, tier - 1, parent);
        }
    }

    fn to_publisher(&mut self, slot: usize) {
        self.report.publisher_arrivals += 1;
        match self.scenario.publisher {
            PublisherModel::Fixed { t0 } => {
                self.schedule(self.now + t0, EventKind::PublisherFound(slot));
            }
            PublisherModel::Mm1 { .. } => {
                self.queue.push_back((slot, self.now));
                if !self.server_busy {
                    self.start_service();
                }
            }
        }
    }

    fn start_service(&mut self) {
        let service = self.service.expect("mm1 publisher");
        self.server_busy = true;
        let done = self.now + self.rng.sample(service);
        self.schedule(done, EventKind::PublisherDeparture);
    }

    fn on_departure(&mut self) {
        let (slot, arrived) = self.queue.pop_front().expect("server busy with a request");
        let sojourn = self.now - arrived;
        self.sojourns.push(sojourn);
        let PublisherModel::Mm1 { scale, .. } = self.scenario.publisher else {
            unreachable!("departures only occur with an mm1 publisher")
        };
        let found_at = (arrived + scale * sojourn).max(self.now);
        self.schedule(found_at, EventKind::PublisherFound(slot));
        self.server_busy = false;
        if !self.queue.is_empty() {
            self.start_service();
        }
    }

    /// Content located; it now travels back over the crumb trail.
    fn found(&mut self, slot: usize) {
        let created = self.requests[slot].created;
        self.report.hit_time.push(self.now - created);
        self.unserved -= 1;
        self.continue_return(slot);
    }

    fn continue_return(&mut self, slot: usize) {
        let hop_delay = self.scenario.protocol.hop_delay;
        if hop_delay > 0.0 && !self.requests[slot].crumbs.is_empty() {
            self.schedule(self.now + hop_delay, EventKind::ReturnHop(slot));
            return;
        }
        while let Some((tier, router)) = self.requests[slot].crumbs.pop() {
            self.consume_crumb(tier, router);
        }
        self.release(slot);
    }

    fn return_hop(&mut self, slot: usize) {
        if let Some((tier, router)) = self.requests[slot].crumbs.pop() {
            self.consume_crumb(tier, router);
        }
        if self.requests[slot].crumbs.is_empty() {
            self.release(slot);
        } else {
            self.continue_return(slot);
        }
    }

    fn consume_crumb(&mut self, tier: usize, router: usize) {
        self.report.crumbs_consumed += 1;
        if !self.dynamic() {
            return;
        }
        let up = self.counters_cfg.up;
        let now = self.now;
        let counter = &mut self.counters[tier][router];
        if !counter.cached && counter.value >= up {
            counter.cached = true;
            counter.cached_since = now;
            self.report.cache_stores += 1;
        }
    }

    fn release(&mut self, slot: usize) {
        self.active -= 1;
        self.free.push(slot);
    }

    fn increment(&mut self, tier: usize, router: usize) {
        if !self.dynamic() {
            return;
        }
        let cfg = self.counters_cfg;
        let counter = &mut self.counters[tier][router];
        counter.value += 1.0;
        if cfg.clamp {
            counter.value = counter.value.min(cfg.up);
        }
    }

    fn decrement(&mut self, tier: usize, router: usize) {
        let low = self.counters_cfg.low;
        let now = self.now;
        let counter = &mut self.counters[tier][router];
        counter.value = (counter.value - 1.0).max(low);
        if counter.value <= low && counter.cached {
            counter.cached = false;
            counter.cached_time += now - counter.cached_since;
            self.report.evictions += 1;
        }
    }

    fn finish(self) -> SimReport {
        let end = self.now;
        let mut occupancy = Vec::new();
        for (tier, routers) in self.counters.iter().enumerate() {
            for (router, c) in routers.iter().enumerate() {
                let cached = c.cached_time + if c.cached { end - c.cached_since } else { 0.0 };
                occupancy.push(RouterOccupancy {
                    tier: tier + 1,
                    router,
                    cached_time: cached,
                    observed_time: end,
                });
            }
        }
        let mut report = self.report;
        report.in_flight = self.unserved;
        report.elapsed = end;
        report.occupancy = occupancy;
        report.publisher_sojourn = MeanEstimate::batch_means(&self.sojourns, SOJOURN_BATCHES);
        report
    }
}
