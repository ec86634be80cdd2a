//! Poisson jump-count weights for uniformization.

/// Default bound on the neglected Poisson tail mass.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

/// Weights `phi(n) = e^{-x} x^n / n!` for `n = 0..=cap`, with
/// `cap = ceil(x + 12 sqrt(x) + 50)`, plus their upper tails.
#[derive(Debug, Clone)]
pub struct PoissonWindow {
    weights: Vec<f64>,
    /// `tails[n] = P(N > n)`, accumulated from the right.
    tails: Vec<f64>,
    truncation: usize,
}

impl PoissonWindow {
    /// Largest jump count considered for mean `x`.
    pub fn cap(x: f64) -> usize {
        (x + 12.0 * x.sqrt() + 50.0).ceil() as usize
    }

    pub fn new(x: f64, tolerance: f64) -> Self {
        debug_assert!(x >= 0.0 && x.is_finite());
        if x == 0.0 {
            return Self { weights: vec![1.0], tails: vec![0.0], truncation: 0 };
        }
        let cap = Self::cap(x);
        // Ratios phi(n+1)/phi(n) = x/(n+1) walked outwards from the mode keep
        // every weight within a few ulps per step; normalizing afterwards
        // avoids evaluating e^{-x} or n! at all. The window holds all but a
        // negligible sliver of the mass.
        let mode = (x.floor() as usize).min(cap);
        let mut weights = vec![0.0; cap + 1];
        weights[mode] = 1.0;
        for n in mode..cap {
            weights[n + 1] = weights[n] * x / (n + 1) as f64;
        }
        for n in (1..=mode).rev() {
            weights[n - 1] = weights[n] * n as f64 / x;
        }
        let total = weights.iter().copied().collect::<CompensatedSum>().value();
        weights.iter_mut().for_each(|w| *w /= total);
        let mut tails = vec![0.0; cap + 1];
        let mut acc = CompensatedSum::default();
        for n in (0..cap).rev() {
            acc.add(weights[n + 1]);
            tails[n] = acc.value();
        }
        let truncation = tails.iter().position(|&t| t < tolerance).unwrap_or(cap);
        Self { weights, tails, truncation }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tails(&self) -> &[f64] {
        &self.tails
    }

    /// Smallest `K` whose tail mass `P(N > K)` is below the tolerance
    /// (or the cap).
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// `P(N > K)`: a bound on the error of any truncated sum of
    /// `phi(n) f(n)` with `0 <= f <= 1`.
    pub fn tail_mass(&self) -> f64 {
        self.tails[self.truncation]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::default();
        iter.into_iter().for_each(|x| acc.add(x));
        acc
    }
}
