//! Step distributions `ψ(x) = p_x / Σ_{y∈A} p_y` on constrained sets `A`.
//!
//! The sets used by the path constructions are all of the form "some block
//! sums of disjoint coordinate blocks are positive / nonnegative / nonzero /
//! at least `t`", intersected with a cube `‖x‖∞ ≤ R`. For kernels that only
//! depend on `‖x‖∞` the shell sizes `|{‖x‖∞ = n} ∩ A|` are counted in closed
//! form, a shell is chosen by inverse CDF, and a uniform point of the shell
//! is drawn by rejection. Other kernels are enumerated once into an alias
//! table.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use super::PathError;
use crate::kernel::EdgeKernel;
use crate::lattice::{self, CubeIter};
use crate::rng::SimRng;

/// Largest cube enumerated for non-radial kernels.
pub const ENUMERATION_CAP: u128 = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    Positive,
    NonNegative,
    NonZero,
    /// Block sum `≥ t`; only for single-coordinate blocks.
    AtLeast(i64),
}

impl Constraint {
    fn holds(self, s: i64) -> bool {
        match self {
            Constraint::Positive => s > 0,
            Constraint::NonNegative => s >= 0,
            Constraint::NonZero => s != 0,
            Constraint::AtLeast(t) => s >= t,
        }
    }
}

/// Conjunction of block-sum constraints over disjoint coordinate blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepSet {
    pub dim: usize,
    pub rules: Vec<(Vec<usize>, Constraint)>,
}

impl StepSet {
    pub fn new(dim: usize, rules: Vec<(Vec<usize>, Constraint)>) -> Result<Self, PathError> {
        let mut seen = vec![false; dim];
        for (block, c) in &rules {
            if block.is_empty() {
                return Err(PathError::InvalidConfig("empty coordinate block".into()));
            }
            if matches!(c, Constraint::AtLeast(_)) && block.len() != 1 {
                return Err(PathError::InvalidConfig(
                    "threshold constraints need a single coordinate".into(),
                ));
            }
            for &i in block {
                if i >= dim || seen[i] {
                    return Err(PathError::InvalidConfig(format!(
                        "coordinate blocks must be disjoint and within 0..{dim}"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(StepSet { dim, rules })
    }

    /// Blocks given by 0/1 indicator vectors.
    pub fn from_indicators(dim: usize, rules: &[(&[i64], Constraint)]) -> Result<Self, PathError> {
        let rules = rules
            .iter()
            .map(|(w, c)| ((0..dim).filter(|&i| w[i] != 0).collect(), *c))
            .collect();
        StepSet::new(dim, rules)
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.rules
            .iter()
            .all(|(b, c)| c.holds(b.iter().map(|&i| x[i]).sum()))
    }

    fn free_coordinates(&self) -> usize {
        self.dim - self.rules.iter().map(|(b, _)| b.len()).sum::<usize>()
    }

    /// `|[-n, n]^d ∩ A|`.
    pub fn count_in_cube(&self, n: u64) -> Result<u128, PathError> {
        let side = 2 * n as u128 + 1;
        let mut total = checked_pow(side, self.free_coordinates())?;
        for (block, c) in &self.rules {
            let t = checked_pow(side, block.len())?;
            let z = zero_sum_count(block.len(), n)?;
            let k = match c {
                Constraint::Positive => (t - z) / 2,
                Constraint::NonNegative => (t + z) / 2,
                Constraint::NonZero => t - z,
                Constraint::AtLeast(th) => {
                    let lo = (*th).max(-(n as i64));
                    if lo > n as i64 {
                        0
                    } else {
                        (n as i64 - lo + 1) as u128
                    }
                }
            };
            total = total.checked_mul(k).ok_or(PathError::Overflow)?;
        }
        Ok(total)
    }

    /// `|{‖x‖∞ = n} ∩ A|`.
    pub fn shell_count(&self, n: u64) -> Result<u128, PathError> {
        if n == 0 {
            return Ok(0);
        }
        Ok(self.count_in_cube(n)? - self.count_in_cube(n - 1)?)
    }
}

fn checked_pow(base: u128, e: usize) -> Result<u128, PathError> {
    base.checked_pow(e as u32).ok_or(PathError::Overflow)
}

fn binomial(m: i128, k: usize) -> Result<u128, PathError> {
    if m < 0 || (k as i128) > m {
        return Ok(0);
    }
    let mut c: u128 = 1;
    for i in 0..k as u128 {
        c = c.checked_mul(m as u128 - i).ok_or(PathError::Overflow)? / (i + 1);
    }
    Ok(c)
}

/// Number of `y ∈ [-n, n]^b` with `Σ y = 0`, by inclusion–exclusion.
pub fn zero_sum_count(b: usize, n: u64) -> Result<u128, PathError> {
    let n = n as i128;
    let b_i = b as i128;
    let mut pos: u128 = 0;
    let mut neg: u128 = 0;
    for j in 0..=b {
        let top = b_i * n - j as i128 * (2 * n + 1) + b_i - 1;
        let term = binomial(b_i, j)?
            .checked_mul(binomial(top, b - 1)?)
            .ok_or(PathError::Overflow)?;
        if j % 2 == 0 {
            pos += term;
        } else {
            neg += term;
        }
    }
    Ok(pos - neg)
}

#[derive(Debug, Clone)]
enum Sampler {
    /// Shell `n = shells[i]` is chosen with probability proportional to
    /// `p(n) |shell ∩ A|`; `cdf` holds the cumulative weights.
    Radial { shells: Vec<u64>, cdf: Vec<f64> },
    Table { points: Vec<Vec<i64>>, alias: WeightedAliasIndex<f64> },
}

/// `ψ(x) = p_x / Σ_{y ∈ A, ‖y‖∞ ≤ R} p_y` on `A ∩ {‖x‖∞ ≤ R}`.
#[derive(Debug, Clone)]
pub struct StepDistribution {
    pub set: StepSet,
    pub radius: u64,
    pub total_mass: f64,
    /// `Σ p_y` over the whole cube `0 < ‖y‖∞ ≤ R`, for mass ratios.
    pub cube_mass: f64,
    /// Largest `‖x‖∞` with positive weight.
    pub reach: u64,
    sampler: Sampler,
}

impl StepDistribution {
    pub fn new<K: EdgeKernel + ?Sized>(
        kernel: &K,
        set: StepSet,
        radius: Option<u64>,
    ) -> Result<Self, PathError> {
        if kernel.dimension() != set.dim {
            return Err(PathError::DimensionMismatch { expected: set.dim, got: kernel.dimension() });
        }
        let r = match (kernel.support_radius(), radius) {
            (Some(s), Some(r)) => s.min(r),
            (Some(s), None) => s,
            (None, Some(r)) => r,
            (None, None) => return Err(PathError::UnboundedSupport),
        };
        let d = set.dim;
        if kernel.is_radial() {
            let mut shells = Vec::new();
            let mut cdf = Vec::new();
            let (mut total, mut cube) = (0.0, 0.0);
            let mut reach = 0;
            for n in 1..=r {
                let p = kernel.linf_profile(n).unwrap_or(0.0);
                if p == 0.0 {
                    continue;
                }
                cube += p * crate::kernel::shell_size(d, n) as f64;
                let c = set.shell_count(n)?;
                if c == 0 {
                    continue;
                }
                total += p * c as f64;
                shells.push(n);
                cdf.push(total);
                reach = n;
            }
            if total == 0.0 {
                return Err(PathError::EmptyStepSet);
            }
            return Ok(StepDistribution {
                set,
                radius: r,
                total_mass: total,
                cube_mass: cube,
                reach,
                sampler: Sampler::Radial { shells, cdf },
            });
        }
        let side = 2 * r as u128 + 1;
        if side.checked_pow(d as u32).is_none_or(|v| v > ENUMERATION_CAP) {
            return Err(PathError::TooLarge(format!(
                "non-radial kernel needs enumeration of (2*{r}+1)^{d} points"
            )));
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut cube = 0.0;
        for x in CubeIter::new(d, r) {
            if x.iter().all(|&c| c == 0) {
                continue;
            }
            let p = kernel.p(&x);
            if p <= 0.0 {
                continue;
            }
            cube += p;
            if set.contains(&x) {
                weights.push(p);
                points.push(x);
            }
        }
        if points.is_empty() {
            return Err(PathError::EmptyStepSet);
        }
        let total = weights.iter().sum();
        let reach = points.iter().map(|x| lattice::linf(x)).max().unwrap_or(0);
        let alias = WeightedAliasIndex::new(weights).map_err(|e| PathError::InvalidConfig(e.to_string()))?;
        Ok(StepDistribution {
            set,
            radius: r,
            total_mass: total,
            cube_mass: cube,
            reach,
            sampler: Sampler::Table { points, alias },
        })
    }

    pub fn dim(&self) -> usize {
        self.set.dim
    }

    /// `Σ_A p / Σ_cube p`.
    pub fn mass_ratio(&self) -> f64 {
        self.total_mass / self.cube_mass
    }

    /// `ψ(x)` computed from the kernel.
    pub fn prob<K: EdgeKernel + ?Sized>(&self, kernel: &K, x: &[i64]) -> f64 {
        if x.iter().all(|&c| c == 0) || lattice::linf(x) > self.radius || !self.set.contains(x) {
            return 0.0;
        }
        kernel.p(x) / self.total_mass
    }

    pub fn sample(&self, rng: &mut SimRng) -> Vec<i64> {
        match &self.sampler {
            Sampler::Table { points, alias } => points[alias.sample(rng)].clone(),
            Sampler::Radial { shells, cdf } => {
                let u = rng.random::<f64>() * cdf[cdf.len() - 1];
                let i = cdf.partition_point(|&c| c <= u).min(shells.len() - 1);
                self.sample_shell(shells[i], rng)
            }
        }
    }

    /// Uniform point of `{‖x‖∞ = n} ∩ A`. A face is picked uniformly, the
    /// other coordinates uniformly in `[-n, n]`; a point with `m` extremal
    /// coordinates is reached through `m` faces and kept with chance `1/m`.
    fn sample_shell(&self, n: u64, rng: &mut SimRng) -> Vec<i64> {
        let d = self.set.dim;
        let n = n as i64;
        let mut x = vec![0i64; d];
        loop {
            let face = rng.random_range(0..d);
            for (i, c) in x.iter_mut().enumerate() {
                *c = if i == face {
                    if rng.random::<bool>() { n } else { -n }
                } else {
                    rng.random_range(-n..=n)
                };
            }
            let m = x.iter().filter(|c| c.abs() == n).count();
            if m > 1 && rng.random_range(0..m) != 0 {
                continue;
            }
            if self.set.contains(&x) {
                return x;
            }
        }
    }
}

/// `Σ_{x∈A} p_x / Σ_{x≠0} p_x` over `‖x‖∞ ≤ R`.
pub fn mass_ratio<K: EdgeKernel + ?Sized>(kernel: &K, set: StepSet, radius: u64) -> Result<f64, PathError> {
    Ok(StepDistribution::new(kernel, set, Some(radius))?.mass_ratio())
}
