//! Fluid-limit content placement on tree hierarchies.
//!
//! Under a constant request flow, a router's reinforced counter climbs to
//! its upper threshold iff the flow it sees exceeds the decrement rate
//! `gamma`; a router holding a copy serves its whole subtree and forwards
//! nothing upwards. Placement is therefore decided leaf-first.

use crate::error::FluidError;
use crate::topology::TierHierarchy;

/// Position of a fluid node in a tier hierarchy (tier 1 = top).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeLabel {
    pub tier: usize,
    pub router: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluidTree {
    parents: Vec<Option<usize>>,
    demand: Vec<f64>,
    gamma: f64,
    labels: Vec<NodeLabel>,
}

impl FluidTree {
    /// `parents[i] == None` marks a root (a tier-1 router).
    pub fn new(
        parents: Vec<Option<usize>>,
        demand: Vec<f64>,
        gamma: f64,
    ) -> Result<Self, FluidError> {
        let labels = (0..parents.len()).map(|router| NodeLabel { tier: 0, router }).collect();
        Self::with_labels(parents, demand, gamma, labels)
    }

    fn with_labels(
        parents: Vec<Option<usize>>,
        demand: Vec<f64>,
        gamma: f64,
        labels: Vec<NodeLabel>,
    ) -> Result<Self, FluidError> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(FluidError::BadGamma(gamma));
        }
        assert_eq!(parents.len(), demand.len(), "one demand rate per node");
        for (node, &rate) in demand.iter().enumerate() {
            if !(rate.is_finite() && rate >= 0.0) {
                return Err(FluidError::BadRate { node, rate });
            }
        }
        for (node, parent) in parents.iter().enumerate() {
            if let Some(parent) = *parent {
                if parent >= parents.len() {
                    return Err(FluidError::BadParent { node, parent });
                }
            }
        }
        Ok(Self { parents, demand, gamma, labels })
    }

    /// Flattens a hierarchy whose routers each have exactly one uplink.
    /// Exogenous demand arrives at bottom-tier routers as `lambda * pi(0)`.
    pub fn from_hierarchy(
        hierarchy: &TierHierarchy,
        lambda: f64,
        gamma: f64,
    ) -> Result<Self, FluidError> {
        let tiers = hierarchy.tiers();
        let mut offsets = Vec::with_capacity(tiers.len());
        let mut total = 0;
        for tier in tiers {
            offsets.push(total);
            total += tier.graph.node_count();
        }
        let mut parents = Vec::with_capacity(total);
        let mut demand = Vec::with_capacity(total);
        let mut labels = Vec::with_capacity(total);
        let bottom = tiers.len() - 1;
        for (index, tier) in tiers.iter().enumerate() {
            for (router, uplinks) in tier.uplinks.iter().enumerate() {
                let parent = match (index, uplinks.as_slice()) {
                    (0, _) => None,
                    (_, [single]) => Some(offsets[index - 1] + single),
                    _ => {
                        return Err(FluidError::NotATree {
                            tier: index + 1,
                            node: router,
                            count: uplinks.len(),
                        })
                    }
                };
                parents.push(parent);
                demand.push(if index == bottom { lambda * tier.start.probs()[router] } else { 0.0 });
                labels.push(NodeLabel { tier: index + 1, router });
            }
        }
        Self::with_labels(parents, demand, gamma, labels)
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parents
    }

    pub fn demand(&self) -> &[f64] {
        &self.demand
    }

    pub fn labels(&self) -> &[NodeLabel] {
        &self.labels
    }

    pub fn is_root(&self, node: usize) -> bool {
        self.parents[node].is_none()
    }

    pub fn set_demand(&mut self, node: usize, rate: f64) {
        self.demand[node] = rate;
    }

    /// Nodes from `node` up to its root, inclusive.
    pub fn root_path(&self, node: usize) -> Vec<usize> {
        let mut path = vec![node];
        let mut current = node;
        while let Some(parent) = self.parents[current] {
            if path.len() > self.len() {
                break;
            }
            path.push(parent);
            current = parent;
        }
        path
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementMarking {
    /// Whether each node ends up holding a copy.
    pub stores: Vec<bool>,
    /// Flow reaching each node: its own demand plus what unmarked children
    /// forward.
    pub offered: Vec<f64>,
}

impl PlacementMarking {
    /// Flow that reaches the publishing area through the roots.
    pub fn publisher_load(&self, tree: &FluidTree) -> f64 {
        (0..tree.len()).filter(|&n| tree.is_root(n)).map(|n| self.offered[n]).sum()
    }
}

/// Leaf-first marking: a non-root node stores a copy iff its offered flow
/// strictly exceeds `gamma`. Roots always store.
pub fn mark_placement(tree: &FluidTree) -> Result<PlacementMarking, FluidError> {
    let n = tree.len();
    let mut children = vec![Vec::new(); n];
    for (node, parent) in tree.parents.iter().enumerate() {
        if let Some(parent) = *parent {
            children[parent].push(node);
        }
    }
    // Pre-order from the roots; anything not reached sits on a cycle.
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&v| tree.is_root(v)).collect();
    while let Some(v) = stack.pop() {
        seen[v] = true;
        order.push(v);
        stack.extend(children[v].iter().copied());
    }
    if let Some(stuck) = seen.iter().position(|&s| !s) {
        return Err(FluidError::Cycle(stuck));
    }
    let mut stores = vec![false; n];
    let mut offered = tree.demand.clone();
    for &v in order.iter().rev() {
        let inflow: f64 = children[v].iter().filter(|&&c| !stores[c]).map(|&c| offered[c]).sum();
        offered[v] += inflow;
        stores[v] = tree.is_root(v) || offered[v] > tree.gamma;
    }
    Ok(PlacementMarking { stores, offered })
}
