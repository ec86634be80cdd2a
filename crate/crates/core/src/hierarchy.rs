//! Tier-level models built on the miss curves, and the top-down
//! composition of hitting times across a hierarchy.

use crate::poisson::DEFAULT_TAIL_TOLERANCE;
use crate::error::ModelError;
use crate::exec::{par_map, Execution};
use crate::markov::{
    self, hitting_time_from_parts, publisher_load, required_steps, MissCurve, PublisherModel,
    WalkMode,
};
use crate::topology::{
    build_generator, miss_matrix, uniformize, PlacementMode, PlacementVector, Tier,
    TierHierarchy,
};

/// Miss curves for one tier, precomputed up to a maximum TTL.
///
/// In quenched mode there is one curve per candidate router (a one-hot
/// placement) and every quantity is the placement-weighted average; in
/// annealed mode a single curve uses the placement vector directly.
#[derive(Debug, Clone)]
pub struct TierModel {
    components: Vec<(f64, MissCurve)>,
    rate: f64,
    mode: WalkMode,
}

impl TierModel {
    pub fn new(tier: &Tier, mode: WalkMode, t_max: f64) -> Result<Self, ModelError> {
        Self::with_unif_rate(tier, mode, t_max, tier.graph.walker_rate())
    }

    /// Uses a uniformization rate above the walker rate. In discrete mode
    /// this describes a lazy walk stepping every `1 / unif_rate`.
    pub fn with_unif_rate(
        tier: &Tier,
        mode: WalkMode,
        t_max: f64,
        unif_rate: f64,
    ) -> Result<Self, ModelError> {
        if !(t_max.is_finite() && t_max >= 0.0) {
            return Err(ModelError::NegativeTtl(t_max));
        }
        let n = tier.graph.node_count();
        let k_max = required_steps(t_max, unif_rate, mode);
        let start = &tier.start;
        if n == 1 || tier.placement.is_empty() {
            // A lone router never moves and an empty tier has nothing to
            // find: either way every walk misses.
            let curve = MissCurve::constant(k_max, 1.0);
            return Ok(Self { components: vec![(1.0, curve)], rate: unif_rate, mode });
        }
        let chain = uniformize(&build_generator(&tier.graph)?, unif_rate)?;
        let placements: Vec<(f64, PlacementVector)> = match tier.placement.mode() {
            PlacementMode::Annealed => vec![(1.0, tier.placement.clone())],
            PlacementMode::Quenched => tier
                .placement
                .support()
                .map(|(u, w)| (w, PlacementVector::one_hot(n, u, PlacementMode::Annealed)))
                .collect(),
        };
        let components = placements
            .into_iter()
            .map(|(w, omega)| {
                let m = miss_matrix(&chain, &omega)?;
                Ok((w, markov::miss_curve(&m, start, k_max)?))
            })
            .collect::<Result<_, ModelError>>()?;
        Ok(Self { components, rate: unif_rate, mode })
    }

    pub fn mode(&self) -> WalkMode {
        self.mode
    }

    pub fn unif_rate(&self) -> f64 {
        self.rate
    }

    pub fn components(&self) -> &[(f64, MissCurve)] {
        &self.components
    }

    fn average(
        &self,
        f: impl Fn(&MissCurve) -> Result<f64, ModelError>,
    ) -> Result<f64, ModelError> {
        let mut total = 0.0;
        for (w, curve) in &self.components {
            total += w * f(curve)?;
        }
        Ok(total)
    }

    pub fn reliability(&self, t: f64) -> Result<f64, ModelError> {
        self.reliability_with_tolerance(t, DEFAULT_TAIL_TOLERANCE)
    }

    pub fn reliability_with_tolerance(&self, t: f64, tolerance: f64) -> Result<f64, ModelError> {
        // Placement weights may sum to one plus an ulp.
        self.average(|c| markov::reliability_with_tolerance(c, self.rate, t, self.mode, tolerance))
            .map(|r| r.min(1.0))
    }

    pub fn mean_lifetime(&self, t: f64) -> Result<f64, ModelError> {
        self.average(|c| markov::mean_lifetime(c, self.rate, t, self.mode))
    }

    pub fn mean_lifetime_quadrature(&self, t: f64) -> Result<f64, ModelError> {
        self.average(|c| markov::mean_lifetime_quadrature(c, self.rate, t, self.mode))
    }

    /// `E[H(T)]` through the expanded series form, for a fixed escalation cost.
    pub fn hitting_time_series_form(
        &self,
        t: f64,
        availability: f64,
        t0: f64,
    ) -> Result<f64, ModelError> {
        self.average(|c| {
            markov::hitting_time_series_form(c, self.rate, t, availability, t0, self.mode)
        })
    }

    pub fn effective_ttl(&self, t: f64) -> f64 {
        markov::effective_ttl(t, self.rate, self.mode)
    }
}

/// One evaluated TTL for a hierarchy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyPoint {
    pub ttl: f64,
    /// `R(T)` of the bottom tier.
    pub reliability: f64,
    /// `E[L(T)]` of the bottom tier.
    pub mean_lifetime: f64,
    /// Expected time for a user request to obtain the content; `None` when
    /// the publisher is overloaded at this TTL.
    pub mean_hit: Option<f64>,
    /// Request rate reaching the publishing area.
    pub publisher_load: f64,
}

/// Analytic model of a full hierarchy.
#[derive(Debug, Clone)]
pub struct HierarchyModel {
    hierarchy: TierHierarchy,
    tiers: Vec<TierModel>,
    publisher: PublisherModel,
    lambda: f64,
}

impl HierarchyModel {
    pub fn new(
        hierarchy: &TierHierarchy,
        mode: WalkMode,
        publisher: PublisherModel,
        lambda: f64,
        t_max: f64,
    ) -> Result<Self, ModelError> {
        publisher.validate()?;
        let tiers = hierarchy
            .tiers()
            .iter()
            .map(|tier| TierModel::new(tier, mode, t_max))
            .collect::<Result<_, _>>()?;
        Ok(Self { hierarchy: hierarchy.clone(), tiers, publisher, lambda })
    }

    pub fn tier_models(&self) -> &[TierModel] {
        &self.tiers
    }

    pub fn bottom(&self) -> &TierModel {
        self.tiers.last().expect("nonempty")
    }

    pub fn publisher(&self) -> &PublisherModel {
        &self.publisher
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Composes per-tier hitting times from the top down.
    ///
    /// Loads propagate upwards first (`lambda_{i-1} = R_i(T) lambda_i`) so
    /// the publisher access time is known; then the escalation cost of tier
    /// 1 is that access time, and the cost of tier `i > 1` is its forward
    /// delay plus the hitting time of tier `i - 1`.
    pub fn compose(&self, t: f64) -> Result<HierarchyPoint, ModelError> {
        let depth = self.tiers.len();
        let mut reliabilities = vec![0.0; depth];
        let mut load = self.lambda;
        for i in (0..depth).rev() {
            reliabilities[i] = self.tiers[i].reliability(t)?;
            load = publisher_load(reliabilities[i], load);
        }
        let bottom_lifetime = self.bottom().mean_lifetime(t)?;
        let point = |mean_hit| HierarchyPoint {
            ttl: t,
            reliability: reliabilities[depth - 1],
            mean_lifetime: bottom_lifetime,
            mean_hit,
            publisher_load: load,
        };
        let t0 = match self.publisher.access_time(load) {
            Ok(t0) => t0,
            Err(ModelError::UnstablePublisher { .. }) => return Ok(point(None)),
            Err(e) => return Err(e),
        };
        let mut cost = t0;
        let mut hit = 0.0;
        for (i, (model, tier)) in self.tiers.iter().zip(self.hierarchy.tiers()).enumerate() {
            if i > 0 {
                cost = tier.forward_delay + hit;
            }
            let lifetime = if i == depth - 1 { bottom_lifetime } else { model.mean_lifetime(t)? };
            hit = hitting_time_from_parts(
                reliabilities[i],
                lifetime,
                tier.availability,
                cost,
                model.effective_ttl(t),
            );
        }
        Ok(point(Some(hit)))
    }

    /// Like [`compose`](Self::compose) but an overloaded publisher is an error.
    pub fn mean_hitting_time(&self, t: f64) -> Result<f64, ModelError> {
        let point = self.compose(t)?;
        point.mean_hit.ok_or_else(|| {
            let mu = match self.publisher {
                PublisherModel::Mm1 { mu, .. } => mu,
                PublisherModel::Fixed { .. } => f64::INFINITY,
            };
            ModelError::UnstablePublisher { tier: 1, load: point.publisher_load, mu }
        })
    }

    pub fn series(&self, grid: &[f64], exec: Execution) -> Result<TransientSeries, ModelError> {
        let points = par_map(exec, grid, |&t| self.compose(t))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TransientSeries::from_points(&points))
    }
}

/// Convenience wrapper: top-down hitting time of `hierarchy` at TTL `t`.
pub fn compose_tiers(
    hierarchy: &TierHierarchy,
    mode: WalkMode,
    publisher: PublisherModel,
    lambda: f64,
    t: f64,
) -> Result<f64, ModelError> {
    HierarchyModel::new(hierarchy, mode, publisher, lambda, t)?.mean_hitting_time(t)
}

/// Per-TTL table of the bottom tier's `R`, `E[L]`, the end-to-end `E[H]`
/// and the publisher load.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransientSeries {
    pub t_grid: Vec<f64>,
    pub reliability: Vec<f64>,
    pub mean_lifetime: Vec<f64>,
    pub mean_hit: Vec<Option<f64>>,
    pub publisher_load: Vec<f64>,
}

impl TransientSeries {
    pub fn from_points(points: &[HierarchyPoint]) -> Self {
        Self {
            t_grid: points.iter().map(|p| p.ttl).collect(),
            reliability: points.iter().map(|p| p.reliability).collect(),
            mean_lifetime: points.iter().map(|p| p.mean_lifetime).collect(),
            mean_hit: points.iter().map(|p| p.mean_hit).collect(),
            publisher_load: points.iter().map(|p| p.publisher_load).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.t_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_grid.is_empty()
    }
}

/// `start, start + step, ...` up to and including `end` (within rounding).
pub fn ttl_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>, ModelError> {
    if !(start.is_finite() && end.is_finite() && step > 0.0 && start >= 0.0 && end >= start) {
        return Err(ModelError::BadGrid);
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}
