//! Monte Carlo estimates with confidence intervals.

use std::fmt;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Uniform return type of the stochastic estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithCI {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Standard error of `estimate` (binomial or sample standard error).
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

impl EstimateWithCI {
    /// Proportion `successes / trials` with a 95% Wilson score interval.
    pub fn proportion(successes: u64, trials: u64, seed: u64) -> Self {
        assert!(trials > 0, "proportion of zero trials");
        let p = successes as f64 / trials as f64;
        let (lo, hi) = wilson_interval(successes, trials, Z95);
        EstimateWithCI {
            estimate: p,
            ci_low: lo.min(p),
            ci_high: hi.max(p),
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
            seed,
        }
    }

    /// Sample mean with a 95% normal-approximation interval.
    pub fn mean(samples: &[f64], seed: u64) -> Self {
        assert!(!samples.is_empty(), "mean of no samples");
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let se = (var / n).sqrt();
        EstimateWithCI {
            estimate: mean,
            ci_low: mean - Z95 * se,
            ci_high: mean + Z95 * se,
            std_error: se,
            trials: samples.len() as u64,
            seed,
        }
    }

    pub fn exact(value: f64, seed: u64) -> Self {
        EstimateWithCI {
            estimate: value,
            ci_low: value,
            ci_high: value,
            std_error: 0.0,
            trials: 0,
            seed,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }

    pub fn overlaps(&self, other: &EstimateWithCI) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

impl fmt::Display for EstimateWithCI {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.6} [{:.6}, {:.6}] (n={})",
            self.estimate, self.ci_low, self.ci_high, self.trials
        )
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}
