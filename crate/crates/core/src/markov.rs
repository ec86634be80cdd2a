//! Transient analysis of a single tier: miss probabilities, reliability
//! `R(T)`, mean walk lifetime `E[L(T)]` and expected hitting time `E[H(T)]`.

use crate::error::{ModelError, TopologyError};
use crate::poisson::{CompensatedSum, PoissonWindow, DEFAULT_TAIL_TOLERANCE};
use crate::topology::{InitialDistribution, MissMatrix};

/// Timing of walker moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WalkMode {
    /// Exponentially distributed gaps between moves.
    Continuous,
    /// A move every `1 / rate` time units.
    #[default]
    Discrete,
}

/// `Omega(k)`: probability that the walk has not met the content after
/// `k` jumps of the uniformized chain.
#[derive(Debug, Clone, PartialEq)]
pub struct MissCurve {
    omegas: Vec<f64>,
}

impl MissCurve {
    /// A curve that stays at `value` forever.
    pub fn constant(k_max: usize, value: f64) -> Self {
        Self { omegas: vec![value; k_max + 1] }
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    /// Largest jump count stored.
    pub fn k_max(&self) -> usize {
        self.omegas.len() - 1
    }

    /// `Omega(k_max)`, an upper bound on every `Omega(k)` beyond the stored
    /// range since the curve is non-increasing.
    pub fn truncation_error_bound(&self) -> f64 {
        *self.omegas.last().expect("curve has at least Omega(0)")
    }

    fn get(&self, k: usize) -> Result<f64, ModelError> {
        self.omegas
            .get(k)
            .copied()
            .ok_or(ModelError::CurveTooShort { needed: k, available: self.k_max() })
    }
}

/// Runs `upsilon(k) = upsilon(k-1) P~` from `upsilon(0) = pi(0)`, recording
/// the remaining mass after every step.
pub fn miss_curve(
    miss: &MissMatrix,
    start: &InitialDistribution,
    k_max: usize,
) -> Result<MissCurve, TopologyError> {
    let n = miss.node_count();
    if start.len() != n {
        return Err(TopologyError::Dimension { expected: n, got: start.len() });
    }
    let mut current = start.probs().to_vec();
    let mut next = vec![0.0; n];
    let mut omegas = Vec::with_capacity(k_max + 1);
    // pi(0) sums to one up to validation tolerance.
    omegas.push(1.0);
    for _ in 0..k_max {
        miss.propagate(&current, &mut next);
        std::mem::swap(&mut current, &mut next);
        // Clamp the accumulated rounding so the curve stays monotone.
        let mass: f64 = current.iter().sum();
        let prev = *omegas.last().unwrap();
        omegas.push(mass.min(prev));
    }
    Ok(MissCurve { omegas })
}

fn check_ttl(t: f64) -> Result<(), ModelError> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::NegativeTtl(t))
    }
}

/// Whole steps a discrete walk completes within `t`.
pub fn discrete_steps(t: f64, rate: f64) -> usize {
    let x = t * rate;
    let floor = x.floor();
    // 2.9999999999999996 should count as three steps.
    if x - floor > 1.0 - 1e-9 {
        floor as usize + 1
    } else {
        floor as usize
    }
}

/// TTL actually honored: discrete walks round down to whole steps.
pub fn effective_ttl(t: f64, rate: f64, mode: WalkMode) -> f64 {
    match mode {
        WalkMode::Continuous => t,
        WalkMode::Discrete => discrete_steps(t, rate) as f64 / rate,
    }
}

/// Jump count the curve must reach to evaluate every quantity up to `t_max`.
pub fn required_steps(t_max: f64, rate: f64, mode: WalkMode) -> usize {
    match mode {
        WalkMode::Continuous => PoissonWindow::cap(rate * t_max),
        WalkMode::Discrete => discrete_steps(t_max, rate),
    }
}

/// `R(T)` with the default tail tolerance.
pub fn reliability(
    curve: &MissCurve,
    rate: f64,
    t: f64,
    mode: WalkMode,
) -> Result<f64, ModelError> {
    reliability_with_tolerance(curve, rate, t, mode, DEFAULT_TAIL_TOLERANCE)
}

/// `R(T) = sum_n phi(n, T) Omega(n)`, truncated once the Poisson tail drops
/// below `tolerance`; in discrete mode `R(T) = Omega(floor(T rate))`.
pub fn reliability_with_tolerance(
    curve: &MissCurve,
    rate: f64,
    t: f64,
    mode: WalkMode,
    tolerance: f64,
) -> Result<f64, ModelError> {
    check_ttl(t)?;
    match mode {
        WalkMode::Discrete => curve.get(discrete_steps(t, rate)),
        WalkMode::Continuous => {
            let window = PoissonWindow::new(rate * t, tolerance);
            weighted_sum(curve, &window.weights()[..=window.truncation()])
        }
    }
}

fn weighted_sum(curve: &MissCurve, weights: &[f64]) -> Result<f64, ModelError> {
    let omegas = curve.omegas();
    if weights.len() > omegas.len() {
        return Err(ModelError::CurveTooShort {
            needed: weights.len() - 1,
            available: curve.k_max(),
        });
    }
    Ok(weights.iter().zip(omegas).map(|(w, o)| w * o).collect::<CompensatedSum>().value())
}

/// `E[L(T)] = integral_0^T R(t) dt`, in closed form: the Poisson upper
/// tails weight each `Omega(n) / rate`. Discrete mode sums whole steps.
pub fn mean_lifetime(
    curve: &MissCurve,
    rate: f64,
    t: f64,
    mode: WalkMode,
) -> Result<f64, ModelError> {
    check_ttl(t)?;
    match mode {
        WalkMode::Discrete => {
            let steps = discrete_steps(t, rate);
            curve.get(steps)?;
            Ok(curve.omegas()[..steps].iter().copied().collect::<CompensatedSum>().value() / rate)
        }
        WalkMode::Continuous => {
            let window = PoissonWindow::new(rate * t, DEFAULT_TAIL_TOLERANCE);
            Ok(weighted_sum(curve, window.tails())? / rate)
        }
    }
}

/// 8-point Gauss-Legendre rule on `[-1, 1]`.
const GAUSS_NODES: [f64; 4] =
    [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GAUSS_WEIGHTS: [f64; 4] =
    [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// `integral_a^b R(t) dt` by composite Gauss-Legendre quadrature of the
/// reliability series itself. Panels are half a mean jump wide in continuous
/// mode and exactly one step wide in discrete mode, where `R` is constant on
/// each panel.
pub fn integrate_reliability(
    curve: &MissCurve,
    rate: f64,
    a: f64,
    b: f64,
    mode: WalkMode,
) -> Result<f64, ModelError> {
    check_ttl(a)?;
    check_ttl(b)?;
    if b <= a {
        return Ok(0.0);
    }
    let width = match mode {
        WalkMode::Continuous => 0.5 / rate,
        WalkMode::Discrete => 1.0 / rate,
    };
    // Panel boundaries on the global lattice k * width so discrete panels
    // never straddle a step.
    let first = (a / width).floor() as usize;
    let last = (b / width).ceil() as usize;
    let mut total = 0.0;
    for k in first..last {
        let lo = (k as f64 * width).max(a);
        let hi = ((k + 1) as f64 * width).min(b);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut panel = 0.0;
        for (&x, &w) in GAUSS_NODES.iter().zip(&GAUSS_WEIGHTS) {
            panel += w * reliability(curve, rate, mid - half * x, mode)?;
            panel += w * reliability(curve, rate, mid + half * x, mode)?;
        }
        total += panel * half;
    }
    Ok(total)
}

/// `E[L(T)]` by direct quadrature of `R`; an independent route to
/// [`mean_lifetime`].
pub fn mean_lifetime_quadrature(
    curve: &MissCurve,
    rate: f64,
    t: f64,
    mode: WalkMode,
) -> Result<f64, ModelError> {
    integrate_reliability(curve, rate, 0.0, effective_ttl(t, rate, mode), mode)
}

/// Cost of reaching the publishing area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PublisherModel {
    /// Constant access time `T0`.
    Fixed { t0: f64 },
    /// M/M/1 server: `T0 = scale / (mu - load)`.
    Mm1 { mu: f64, scale: f64 },
}

impl PublisherModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            Self::Fixed { t0 } if !(t0.is_finite() && t0 >= 0.0) => {
                Err(ModelError::BadPublisher(format!("T0 must be non-negative, got {t0}")))
            }
            Self::Mm1 { mu, .. } if !(mu.is_finite() && mu > 0.0) => {
                Err(ModelError::BadPublisher(format!("mu must be positive, got {mu}")))
            }
            Self::Mm1 { scale, .. } if !(scale.is_finite() && scale >= 0.0) => {
                Err(ModelError::BadPublisher(format!("scale must be non-negative, got {scale}")))
            }
            _ => Ok(()),
        }
    }

    /// Access time under the given request load.
    pub fn access_time(&self, load: f64) -> Result<f64, ModelError> {
        match *self {
            Self::Fixed { t0 } => Ok(t0),
            Self::Mm1 { mu, scale } => {
                if load >= mu {
                    Err(ModelError::UnstablePublisher { tier: 1, load, mu })
                } else {
                    Ok(scale / (mu - load))
                }
            }
        }
    }
}

/// `Lambda_pub = R lambda`.
pub fn publisher_load(reliability: f64, lambda: f64) -> f64 {
    reliability * lambda
}

/// `E[H(T)] = (E[L(T)] + T0 R(T)) p + (T0 + T)(1 - p)` for a known
/// escalation cost `T0`.
pub fn hitting_time_from_parts(
    reliability: f64,
    lifetime: f64,
    availability: f64,
    escalation_cost: f64,
    t: f64,
) -> f64 {
    (lifetime + escalation_cost * reliability) * availability
        + (escalation_cost + t) * (1.0 - availability)
}

/// Expected hitting time of a single tier in front of the publisher.
pub fn mean_hitting_time(
    reliability: f64,
    lifetime: f64,
    availability: f64,
    publisher: &PublisherModel,
    lambda: f64,
    t: f64,
) -> Result<f64, ModelError> {
    check_ttl(t)?;
    if !(0.0..=1.0).contains(&availability) {
        return Err(ModelError::BadAvailability(availability));
    }
    let t0 = publisher.access_time(publisher_load(reliability, lambda))?;
    Ok(hitting_time_from_parts(reliability, lifetime, availability, t0, t))
}

/// The expanded single-sum form of `E[H(T)]`, coded term by term:
/// `(sum_n (1 - sum_{m<=n} phi(m, T)) Omega(n) / rate + T0 R(T)) p + (T0 + T)(1 - p)`.
///
/// Shares nothing with [`mean_lifetime`] beyond the miss curve; the inner
/// Poisson CDF is accumulated forwards rather than as an upper tail.
pub fn hitting_time_series_form(
    curve: &MissCurve,
    rate: f64,
    t: f64,
    availability: f64,
    t0: f64,
    mode: WalkMode,
) -> Result<f64, ModelError> {
    check_ttl(t)?;
    let (lifetime, miss) = match mode {
        WalkMode::Discrete => {
            let steps = discrete_steps(t, rate);
            let mut acc = 0.0;
            for k in 0..steps {
                acc += curve.get(k)? / rate;
            }
            (acc, curve.get(steps)?)
        }
        WalkMode::Continuous => {
            let x = rate * t;
            let cap = PoissonWindow::cap(x);
            let omegas = curve.omegas();
            if cap >= omegas.len() {
                return Err(ModelError::CurveTooShort { needed: cap, available: curve.k_max() });
            }
            let mut cdf = 0.0;
            let mut lifetime = 0.0;
            let mut miss = 0.0;
            let mut phi = (-x).exp();
            let mut log_phi = -x;
            for (n, &omega) in omegas.iter().enumerate().take(cap + 1) {
                if n > 0 {
                    // Recurrence in log space survives e^{-x} underflow.
                    log_phi += x.ln() - (n as f64).ln();
                    phi = log_phi.exp();
                }
                cdf += phi;
                miss += phi * omega;
                lifetime += (1.0 - cdf).max(0.0) * omega / rate;
            }
            (lifetime, miss)
        }
    };
    let t = effective_ttl(t, rate, mode);
    Ok(hitting_time_from_parts(miss, lifetime, availability, t0, t))
}
