//! Search performance of TTL-bounded random walks in tiered cache networks.
//!
//! Two independent views of the same system:
//!
//! * [`markov`] and [`hierarchy`] compute the miss probability `R(T)`, the
//!   mean walk lifetime `E[L(T)]` and the expected hitting time `E[H(T)]`
//!   exactly, by uniformizing the walk's generator.
//! * [`sim`] runs the request protocol event by event: random walks with a
//!   TTL, escalation over uplinks with bread-crumb trails, reinforced
//!   counters driving cache placement, and a publisher that is either a
//!   fixed delay or an M/M/1 queue.
//!
//! [`optimizer`] picks the TTL that minimizes `E[H(T)]`, optionally under a
//! publisher-load budget, and [`fluid`] gives the fluid-limit placement
//! that the counters converge to on trees.

pub mod error;
pub mod exec;
pub mod fluid;
pub mod hierarchy;
pub mod markov;
pub mod optimizer;
pub mod poisson;
pub mod scenario;
pub mod sim;
pub mod topology;

pub use error::{FluidError, ModelError, SimError, TopologyError};
pub use exec::Execution;
pub use hierarchy::{compose_tiers, HierarchyModel, HierarchyPoint, TierModel, TransientSeries};
pub use markov::{MissCurve, PublisherModel, WalkMode};
pub use scenario::{parse_scenario, Scenario, ScenarioError};
pub use topology::{
    DomainGraph, InitialDistribution, PlacementMode, PlacementVector, Tier, TierHierarchy,
};
pub use optimizer::{constrained_ttl, find_optimal_ttl, SweepPoint, SweepResult};
pub use sim::{simulate, simulate_replicated, simulate_streams, Horizon, SimReport};
