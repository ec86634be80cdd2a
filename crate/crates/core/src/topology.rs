//! Tier graphs, content placement and the walk's generator / uniformized
//! transition matrices.
//!
//! Nodes are indexed `0..node_count`. The scenario file format uses
//! one-based labels; conversion happens at parse time.

use ndarray::Array2;

use crate::error::TopologyError;

const SUM_TOLERANCE: f64 = 1e-9;

/// Above this many nodes the per-step vector product switches from the
/// dense matrix to the edge list.
pub const SPARSE_THRESHOLD: usize = 256;

/// One tier's cache-router adjacency and walker rate.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainGraph {
    neighbors: Vec<Vec<usize>>,
    walker_rate: f64,
}

impl DomainGraph {
    /// Builds a directed graph. Duplicate edges collapse to one.
    ///
    /// A single router with no edges is accepted: a walk there has nowhere
    /// to go and simply waits out its TTL. Any larger graph must give every
    /// node at least one out-neighbor.
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        walker_rate: f64,
    ) -> Result<Self, TopologyError> {
        if node_count == 0 {
            return Err(TopologyError::Empty);
        }
        if !(walker_rate.is_finite() && walker_rate > 0.0) {
            return Err(TopologyError::BadRate(walker_rate));
        }
        let mut neighbors = vec![Vec::new(); node_count];
        for (from, to) in edges {
            if from >= node_count || to >= node_count {
                return Err(TopologyError::NodeOutOfRange { from, to, node_count });
            }
            if from == to {
                return Err(TopologyError::SelfLoop(from));
            }
            neighbors[from].push(to);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        if node_count > 1 {
            if let Some(stranded) = neighbors.iter().position(Vec::is_empty) {
                return Err(TopologyError::Stranded(stranded));
            }
        }
        Ok(Self { neighbors, walker_rate })
    }

    /// Builds a graph from undirected edges, expanding each into both arcs.
    pub fn undirected(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        walker_rate: f64,
    ) -> Result<Self, TopologyError> {
        let arcs: Vec<_> = edges.into_iter().flat_map(|(a, b)| [(a, b), (b, a)]).collect();
        Self::new(node_count, arcs, walker_rate)
    }

    pub fn node_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn walker_rate(&self) -> f64 {
        self.walker_rate
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(from, list)| list.iter().map(move |&to| (from, to)))
    }

    /// Same graph with a different walker rate.
    pub fn with_rate(&self, walker_rate: f64) -> Result<Self, TopologyError> {
        Self::new(self.node_count(), self.edges(), walker_rate)
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self, TopologyError> {
        if perm.len() != self.node_count() {
            return Err(TopologyError::Dimension { expected: self.node_count(), got: perm.len() });
        }
        Self::new(
            self.node_count(),
            self.edges().map(|(a, b)| (perm[a], perm[b])),
            self.walker_rate,
        )
    }
}

/// Undirected path `0 - 1 - ... - (n-1)`.
pub fn path_graph(node_count: usize, walker_rate: f64) -> Result<DomainGraph, TopologyError> {
    DomainGraph::undirected(node_count, (1..node_count).map(|i| (i - 1, i)), walker_rate)
}

/// Five-router stand-in for the reference domain: path 1-2-3-4-5 with an
/// extra 2-4 chord (one-based labels).
pub fn reference_five(walker_rate: f64) -> DomainGraph {
    DomainGraph::undirected(5, [(0, 1), (1, 2), (2, 3), (3, 4), (1, 3)], walker_rate)
        .expect("reference topology is valid")
}

/// Eight-router stand-in: a grid of four rows by two columns, labelled row
/// by row, so routers 5-8 (one-based) form the half far from router 1.
pub fn grid_eight(walker_rate: f64) -> DomainGraph {
    let mut edges = Vec::new();
    for row in 0..4 {
        let left = 2 * row;
        edges.push((left, left + 1));
        if row < 3 {
            edges.push((left, left + 2));
            edges.push((left + 1, left + 3));
        }
    }
    DomainGraph::undirected(8, edges, walker_rate).expect("grid topology is valid")
}

/// How the per-router placement probabilities are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlacementMode {
    /// Presence is re-sampled independently on every visit to a router.
    Annealed,
    /// Exactly one copy sits at a router drawn from the vector, fixed for
    /// the lifetime of the request.
    #[default]
    Quenched,
}

/// Per-router probability that the content is stored there.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementVector {
    probs: Vec<f64>,
    mode: PlacementMode,
}

impl PlacementVector {
    /// Validates entries in `[0, 1]`. In quenched mode the entries must also
    /// sum to one, except for the all-zero vector which means the tier never
    /// holds the content.
    pub fn new(probs: Vec<f64>, mode: PlacementMode) -> Result<Self, TopologyError> {
        check_unit_interval(&probs)?;
        if mode == PlacementMode::Quenched {
            let sum: f64 = probs.iter().sum();
            if sum != 0.0 && (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(TopologyError::NotNormalized(sum));
            }
        }
        Ok(Self { probs, mode })
    }

    pub fn empty(node_count: usize, mode: PlacementMode) -> Self {
        Self { probs: vec![0.0; node_count], mode }
    }

    /// All mass at one router.
    pub fn one_hot(node_count: usize, node: usize, mode: PlacementMode) -> Self {
        let mut probs = vec![0.0; node_count];
        probs[node] = 1.0;
        Self { probs, mode }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mode(&self) -> PlacementMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.iter().all(|&p| p == 0.0)
    }

    /// Routers with nonzero probability, with their weights.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs.iter().copied().enumerate().filter(|&(_, p)| p > 0.0)
    }

    pub fn relabeled(&self, perm: &[usize]) -> Self {
        Self { probs: permute(&self.probs, perm), mode: self.mode }
    }
}

/// Where the walk starts within the tier.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDistribution {
    probs: Vec<f64>,
}

impl InitialDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, TopologyError> {
        if probs.is_empty() {
            return Err(TopologyError::Empty);
        }
        for (index, &value) in probs.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(TopologyError::ProbabilityRange { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(TopologyError::NotNormalized(sum));
        }
        Ok(Self { probs })
    }

    pub fn point(node_count: usize, node: usize) -> Self {
        let mut probs = vec![0.0; node_count];
        probs[node] = 1.0;
        Self { probs }
    }

    pub fn uniform(node_count: usize) -> Self {
        Self { probs: vec![1.0 / node_count as f64; node_count] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn relabeled(&self, perm: &[usize]) -> Self {
        Self { probs: permute(&self.probs, perm) }
    }
}

fn check_unit_interval(probs: &[f64]) -> Result<(), TopologyError> {
    for (index, &value) in probs.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(TopologyError::ProbabilityRange { index, value });
        }
    }
    Ok(())
}

fn permute(values: &[f64], perm: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for (i, &v) in values.iter().enumerate() {
        out[perm[i]] = v;
    }
    out
}

/// One level of the hierarchy together with its search parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Tier {
    pub graph: DomainGraph,
    pub placement: PlacementVector,
    pub start: InitialDistribution,
    /// Probability that the content is available somewhere in this tier.
    pub availability: f64,
    /// Time to hand a request from this tier to its parent tier.
    pub forward_delay: f64,
    /// Parent routers (in the tier above) for each router. Empty for the top tier.
    pub uplinks: Vec<Vec<usize>>,
}

impl Tier {
    /// A tier with no parents, suitable as the top of a hierarchy.
    pub fn top(
        graph: DomainGraph,
        placement: PlacementVector,
        start: InitialDistribution,
        availability: f64,
    ) -> Self {
        let n = graph.node_count();
        Self {
            graph,
            placement,
            start,
            availability,
            forward_delay: 0.0,
            uplinks: vec![Vec::new(); n],
        }
    }
}

/// Ordered tiers; `tiers[0]` is tier 1 (adjacent to the publishing area) and
/// the last entry is the bottom tier where user requests arrive.
#[derive(Debug, Clone, PartialEq)]
pub struct TierHierarchy {
    tiers: Vec<Tier>,
}

impl TierHierarchy {
    pub fn new(tiers: Vec<Tier>) -> Result<Self, TopologyError> {
        if tiers.is_empty() {
            return Err(TopologyError::NoTiers);
        }
        for (index, tier) in tiers.iter().enumerate() {
            let number = index + 1;
            let n = tier.graph.node_count();
            let param = |message: String| TopologyError::TierParameter { tier: number, message };
            if tier.placement.len() != n {
                return Err(TopologyError::Dimension { expected: n, got: tier.placement.len() });
            }
            if tier.start.len() != n {
                return Err(TopologyError::Dimension { expected: n, got: tier.start.len() });
            }
            if !(0.0..=1.0).contains(&tier.availability) {
                return Err(param(format!("availability {} outside [0, 1]", tier.availability)));
            }
            if !(tier.forward_delay.is_finite() && tier.forward_delay >= 0.0) {
                return Err(param(format!("forward delay {} is invalid", tier.forward_delay)));
            }
            if tier.uplinks.len() != n {
                return Err(TopologyError::Dimension { expected: n, got: tier.uplinks.len() });
            }
            if index == 0 {
                if tier.uplinks.iter().any(|u| !u.is_empty()) {
                    return Err(TopologyError::TopTierUplink);
                }
                continue;
            }
            let parent_count = tiers[index - 1].graph.node_count();
            for (node, parents) in tier.uplinks.iter().enumerate() {
                if parents.is_empty() {
                    return Err(TopologyError::MissingUplink { tier: number, node });
                }
                if let Some(&parent) = parents.iter().find(|&&p| p >= parent_count) {
                    return Err(TopologyError::BadUplink { tier: number, node, parent });
                }
            }
        }
        Ok(Self { tiers })
    }

    pub fn single(tier: Tier) -> Result<Self, TopologyError> {
        Self::new(vec![tier])
    }

    /// Tiers from the top (tier 1) down.
    pub fn tiers(&self) -> &[Tier] {
        &self.tiers
    }

    pub fn tiers_mut(&mut self) -> &mut [Tier] {
        &mut self.tiers
    }

    pub fn depth(&self) -> usize {
        self.tiers.len()
    }

    /// The tier where user requests arrive.
    pub fn bottom(&self) -> &Tier {
        self.tiers.last().expect("hierarchy is nonempty")
    }

    pub fn bottom_mut(&mut self) -> &mut Tier {
        self.tiers.last_mut().expect("hierarchy is nonempty")
    }
}

/// Infinitesimal generator of the continuous-time walk.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    q: Array2<f64>,
    walker_rate: f64,
}

impl GeneratorMatrix {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.q
    }

    pub fn walker_rate(&self) -> f64 {
        self.walker_rate
    }

    pub fn node_count(&self) -> usize {
        self.q.nrows()
    }

    /// Largest exit rate, i.e. the largest magnitude on the diagonal.
    pub fn max_exit_rate(&self) -> f64 {
        self.q.diag().iter().fold(0.0_f64, |m, &d| m.max(d.abs()))
    }
}

/// `q_ii = -psi`, `q_ij = psi / deg(i)` on every edge.
pub fn build_generator(graph: &DomainGraph) -> Result<GeneratorMatrix, TopologyError> {
    let n = graph.node_count();
    let rate = graph.walker_rate();
    let mut q = Array2::zeros((n, n));
    for i in 0..n {
        let degree = graph.out_degree(i);
        if degree == 0 {
            return Err(TopologyError::Stranded(i));
        }
        q[[i, i]] = -rate;
        let share = rate / degree as f64;
        for &j in graph.neighbors(i) {
            q[[i, j]] = share;
        }
    }
    Ok(GeneratorMatrix { q, walker_rate: rate })
}

/// Row-stochastic jump chain `P = I + Q / unif_rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformizedChain {
    p: Array2<f64>,
    unif_rate: f64,
}

impl UniformizedChain {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.p
    }

    pub fn unif_rate(&self) -> f64 {
        self.unif_rate
    }

    pub fn node_count(&self) -> usize {
        self.p.nrows()
    }
}

pub fn uniformize(
    generator: &GeneratorMatrix,
    unif_rate: f64,
) -> Result<UniformizedChain, TopologyError> {
    let required = generator.max_exit_rate();
    if !(unif_rate.is_finite() && unif_rate >= required && unif_rate > 0.0) {
        return Err(TopologyError::UnifRateTooSmall { rate: unif_rate, required });
    }
    let n = generator.node_count();
    let mut p = &generator.q / unif_rate;
    for i in 0..n {
        p[[i, i]] += 1.0;
        // I + Q/L can leave -1e-17 style residue on the diagonal when L == psi.
        if p[[i, i]].abs() < 1e-15 {
            p[[i, i]] = 0.0;
        }
    }
    Ok(UniformizedChain { p, unif_rate })
}

/// Sub-stochastic miss matrix `P (I - diag(omega))`.
///
/// Entry `(i, j)` is the probability of jumping from `i` to `j` and then
/// missing the content at `j`. When the uniformization rate exceeds the
/// walker rate, the self-jumps on the diagonal are left unchecked.
#[derive(Debug, Clone, PartialEq)]
pub struct MissMatrix {
    dense: Array2<f64>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl MissMatrix {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.dense
    }

    pub fn node_count(&self) -> usize {
        self.dense.nrows()
    }

    /// Builds the miss matrix straight from a dense sub-stochastic matrix.
    pub fn from_dense(dense: Array2<f64>) -> Result<Self, TopologyError> {
        let (r, c) = dense.dim();
        if r != c {
            return Err(TopologyError::Dimension { expected: r, got: c });
        }
        let rows = (0..r)
            .map(|i| {
                (0..c)
                    .filter_map(|j| {
                        let v = dense[[i, j]];
                        (v != 0.0).then_some((j, v))
                    })
                    .collect()
            })
            .collect();
        Ok(Self { dense, rows })
    }

    /// `out = v * self` (row vector times matrix).
    pub fn propagate(&self, v: &[f64], out: &mut [f64]) {
        let n = self.node_count();
        debug_assert_eq!(v.len(), n);
        debug_assert_eq!(out.len(), n);
        out.fill(0.0);
        if n > SPARSE_THRESHOLD {
            for (i, row) in self.rows.iter().enumerate() {
                let vi = v[i];
                if vi == 0.0 {
                    continue;
                }
                for &(j, pij) in row {
                    out[j] += vi * pij;
                }
            }
        } else {
            for i in 0..n {
                let vi = v[i];
                if vi == 0.0 {
                    continue;
                }
                for (j, o) in out.iter_mut().enumerate() {
                    *o += vi * self.dense[[i, j]];
                }
            }
        }
    }
}

pub fn miss_matrix(
    chain: &UniformizedChain,
    omega: &PlacementVector,
) -> Result<MissMatrix, TopologyError> {
    let n = chain.node_count();
    if omega.len() != n {
        return Err(TopologyError::Dimension { expected: n, got: omega.len() });
    }
    check_unit_interval(omega.probs())?;
    let mut dense = chain.p.clone();
    for (j, &w) in omega.probs().iter().enumerate() {
        for (i, x) in dense.column_mut(j).iter_mut().enumerate() {
            // Graphs have no self-loops, so a diagonal entry is a fictitious
            // jump of the uniformized chain: the walker has not arrived
            // anywhere and nothing is checked.
            if i != j {
                *x *= 1.0 - w;
            }
        }
    }
    MissMatrix::from_dense(dense)
}
