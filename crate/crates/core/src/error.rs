use thiserror::Error;

/// Structural problems with a tier graph, placement or start vector.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("edge ({from}, {to}) references a node outside 0..{node_count}")]
    NodeOutOfRange { from: usize, to: usize, node_count: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("node {0} has no outgoing edge")]
    Stranded(usize),
    #[error("walker rate must be positive and finite, got {0}")]
    BadRate(f64),
    #[error("uniformization rate {rate} is below the largest exit rate {required}")]
    UnifRateTooSmall { rate: f64, required: f64 },
    #[error("vector has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("probability {value} at index {index} is outside [0, 1]")]
    ProbabilityRange { index: usize, value: f64 },
    #[error("entries must sum to 1, got {0}")]
    NotNormalized(f64),
    #[error("tier {tier}: node {node} has no uplink")]
    MissingUplink { tier: usize, node: usize },
    #[error("tier {tier}: uplink from node {node} to parent {parent} is out of range")]
    BadUplink { tier: usize, node: usize, parent: usize },
    #[error("top tier cannot have uplinks")]
    TopTierUplink,
    #[error("hierarchy needs at least one tier")]
    NoTiers,
    #[error("tier {tier}: {message}")]
    TierParameter { tier: usize, message: String },
}

/// Failures of the analytic model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("TTL must be finite and non-negative, got {0}")]
    NegativeTtl(f64),
    #[error("miss curve holds {available} steps but {needed} are required")]
    CurveTooShort { needed: usize, available: usize },
    #[error("availability probability {0} is outside [0, 1]")]
    BadAvailability(f64),
    #[error("publisher behind tier {tier} is unstable: load {load} >= service rate {mu}")]
    UnstablePublisher { tier: usize, load: f64, mu: f64 },
    #[error("invalid publisher model: {0}")]
    BadPublisher(String),
    #[error("TTL grid is empty or unsorted")]
    BadGrid,
    #[error("every grid point is infeasible")]
    AllInfeasible,
}

/// Failures of the fluid placement marking.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FluidError {
    #[error("node {0} lies on a parent cycle")]
    Cycle(usize),
    #[error("node {node}: parent {parent} is out of range")]
    BadParent { node: usize, parent: usize },
    #[error("demand rate at node {node} is invalid: {rate}")]
    BadRate { node: usize, rate: f64 },
    #[error("decrement rate gamma must be positive, got {0}")]
    BadGamma(f64),
    #[error("node {tier}:{node} has {count} parents; the fluid model needs a tree")]
    NotATree { tier: usize, node: usize, count: usize },
}

/// Failures of the discrete-event simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("horizon must be positive")]
    EmptyHorizon,
    #[error("TTL must be finite and non-negative, got {0}")]
    NegativeTtl(f64),
    #[error("demand rate must be positive, got {0}")]
    BadDemand(f64),
    #[error("publisher model is invalid: {0}")]
    BadPublisher(String),
    #[error("reinforced counter thresholds invalid: {0}")]
    BadCounter(String),
    #[error("reliability estimate needs at least one trial")]
    NoSamples,
    #[error("replication count must be positive")]
    NoReplications,
}
