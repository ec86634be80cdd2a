use std::fmt::Write as _;

use crate::error::SimError;

/// Streaming mean and variance (Welford), mergeable across runs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunningStat {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStat {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// A mean together with the variance of that mean, for autocorrelated
/// output where the naive `s^2 / n` is too optimistic.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanEstimate {
    pub count: u64,
    pub mean: f64,
    pub var_of_mean: f64,
}

impl MeanEstimate {
    /// Non-overlapping batch means over a time-ordered series.
    pub fn batch_means(series: &[f64], batches: usize) -> Self {
        let n = series.len();
        if n == 0 {
            return Self::default();
        }
        let mean = series.iter().sum::<f64>() / n as f64;
        let batches = batches.min(n / 2).max(1);
        if batches < 2 {
            return Self { count: n as u64, mean, var_of_mean: 0.0 };
        }
        let size = n / batches;
        let means: Vec<f64> = series
            .chunks_exact(size)
            .take(batches)
            .map(|c| c.iter().sum::<f64>() / size as f64)
            .collect();
        let grand = means.iter().sum::<f64>() / batches as f64;
        let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
        Self { count: n as u64, mean, var_of_mean: var / batches as f64 }
    }

    /// Pools independent estimates, weighting by count.
    pub fn merge(&mut self, other: &Self) {
        let n = self.count + other.count;
        if n == 0 {
            return;
        }
        let (a, b) = (self.count as f64 / n as f64, other.count as f64 / n as f64);
        self.mean = a * self.mean + b * other.mean;
        self.var_of_mean = a * a * self.var_of_mean + b * b * other.var_of_mean;
        self.count = n;
    }

    pub fn stderr(&self) -> f64 {
        self.var_of_mean.sqrt()
    }
}

/// Time one router spent holding the content.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouterOccupancy {
    /// One-based tier number (1 = top).
    pub tier: usize,
    pub router: usize,
    pub cached_time: f64,
    pub observed_time: f64,
}

impl RouterOccupancy {
    pub fn fraction(&self) -> f64 {
        if self.observed_time > 0.0 {
            self.cached_time / self.observed_time
        } else {
            0.0
        }
    }
}

/// Monte Carlo estimates and event counts from one or more runs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimReport {
    pub seed: u64,
    pub replications: u64,
    pub ttl: f64,
    pub requests_created: u64,
    pub hits_in_tier: u64,
    pub publisher_arrivals: u64,
    pub publisher_services: u64,
    /// Requests not yet served when the horizon ended.
    pub in_flight: u64,
    /// Time from request creation to the content being found.
    pub hit_time: RunningStat,
    /// Bottom-tier searches that could have succeeded (the content was in
    /// the tier), and how many of them ran out of TTL.
    pub reliability_trials: u64,
    pub reliability_misses: u64,
    pub walk_steps: u64,
    /// Most moves any request made during a single tier visit.
    pub max_steps_per_visit: u64,
    pub escalations: u64,
    pub cache_stores: u64,
    pub evictions: u64,
    pub crumbs_laid: u64,
    pub crumbs_consumed: u64,
    pub elapsed: f64,
    /// Unscaled M/M/1 sojourn times at the publisher (batch means).
    pub publisher_sojourn: MeanEstimate,
    pub occupancy: Vec<RouterOccupancy>,
}

impl SimReport {
    pub fn requests_found(&self) -> u64 {
        self.hits_in_tier + self.publisher_services
    }

    pub fn mean_hit_time(&self) -> f64 {
        self.hit_time.mean
    }

    pub fn publisher_rate(&self) -> f64 {
        if self.elapsed > 0.0 {
            self.publisher_arrivals as f64 / self.elapsed
        } else {
            0.0
        }
    }

    pub fn outstanding_crumbs(&self) -> u64 {
        self.crumbs_laid - self.crumbs_consumed
    }

    /// Combines independent runs. Counts and occupancy times add; means pool.
    pub fn merge(&mut self, other: &Self) {
        if self.replications == 0 {
            *self = other.clone();
            return;
        }
        self.replications += other.replications;
        self.requests_created += other.requests_created;
        self.hits_in_tier += other.hits_in_tier;
        self.publisher_arrivals += other.publisher_arrivals;
        self.publisher_services += other.publisher_services;
        self.in_flight += other.in_flight;
        self.hit_time.merge(&other.hit_time);
        self.reliability_trials += other.reliability_trials;
        self.reliability_misses += other.reliability_misses;
        self.walk_steps += other.walk_steps;
        self.max_steps_per_visit = self.max_steps_per_visit.max(other.max_steps_per_visit);
        self.escalations += other.escalations;
        self.cache_stores += other.cache_stores;
        self.evictions += other.evictions;
        self.crumbs_laid += other.crumbs_laid;
        self.crumbs_consumed += other.crumbs_consumed;
        self.elapsed += other.elapsed;
        self.publisher_sojourn.merge(&other.publisher_sojourn);
        for (mine, theirs) in self.occupancy.iter_mut().zip(&other.occupancy) {
            mine.cached_time += theirs.cached_time;
            mine.observed_time += theirs.observed_time;
        }
    }

    /// `key=value` lines; stable order, no timing information.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let (r, r_se) = estimate_reliability(self).unwrap_or((f64::NAN, f64::NAN));
        let lines: [(&str, String); 26] = [
            ("seed", self.seed.to_string()),
            ("replications", self.replications.to_string()),
            ("ttl", self.ttl.to_string()),
            ("requests_created", self.requests_created.to_string()),
            ("requests_found", self.requests_found().to_string()),
            ("hits_in_tier", self.hits_in_tier.to_string()),
            ("publisher_services", self.publisher_services.to_string()),
            ("in_flight", self.in_flight.to_string()),
            ("hit_time_mean", self.hit_time.mean.to_string()),
            ("hit_time_variance", self.hit_time.variance().to_string()),
            ("hit_time_stderr", self.hit_time.stderr().to_string()),
            ("reliability", r.to_string()),
            ("reliability_stderr", r_se.to_string()),
            ("reliability_trials", self.reliability_trials.to_string()),
            ("publisher_rate", self.publisher_rate().to_string()),
            ("publisher_sojourn_mean", self.publisher_sojourn.mean.to_string()),
            ("publisher_sojourn_stderr", self.publisher_sojourn.stderr().to_string()),
            ("walk_steps", self.walk_steps.to_string()),
            ("max_steps_per_visit", self.max_steps_per_visit.to_string()),
            ("escalations", self.escalations.to_string()),
            ("cache_stores", self.cache_stores.to_string()),
            ("evictions", self.evictions.to_string()),
            ("crumbs_laid", self.crumbs_laid.to_string()),
            ("crumbs_consumed", self.crumbs_consumed.to_string()),
            ("outstanding_crumbs", self.outstanding_crumbs().to_string()),
            ("elapsed", self.elapsed.to_string()),
        ];
        for (k, v) in lines {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

/// Binomial point estimate of the bottom tier's miss probability and its
/// standard error.
pub fn estimate_reliability(report: &SimReport) -> Result<(f64, f64), SimError> {
    let n = report.reliability_trials;
    if n == 0 {
        return Err(SimError::NoSamples);
    }
    let p = report.reliability_misses as f64 / n as f64;
    Ok((p, (p * (1.0 - p) / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_estimates() {
        let mut r = SimReport { reliability_trials: 1000, ..Default::default() };
        assert_eq!(estimate_reliability(&r).unwrap(), (0.0, 0.0));
        r.reliability_misses = 500;
        let (p, se) = estimate_reliability(&r).unwrap();
        assert_eq!(p, 0.5);
        assert!((se - 0.015_811_388).abs() < 1e-8);
        r.reliability_trials = 0;
        assert_eq!(estimate_reliability(&r), Err(SimError::NoSamples));
    }

    #[test]
    fn running_stat_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 * 0.7).collect();
        let mut whole = RunningStat::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut a = RunningStat::default();
        let mut b = RunningStat::default();
        xs[..31].iter().for_each(|&x| a.push(x));
        xs[31..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert_eq!(a.count, whole.count);
        assert!((a.mean - whole.mean).abs() < 1e-12);
        assert!((a.variance() - whole.variance()).abs() < 1e-12);
    }

    #[test]
    fn batch_means_of_constant_series() {
        let est = MeanEstimate::batch_means(&[2.0; 100], 10);
        assert_eq!(est.mean, 2.0);
        assert_eq!(est.var_of_mean, 0.0);
        assert_eq!(MeanEstimate::batch_means(&[], 10).count, 0);
    }
}
