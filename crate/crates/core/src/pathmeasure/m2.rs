//! Six-periodic block construction for `d ≥ 4`.

use super::step::{Constraint, StepDistribution, StepSet};
use super::{MeasureTag, PathError, PathSample};
use crate::kernel::{EdgeKernel, Kernel};
use crate::potts::log10_threshold;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone)]
pub struct M2Config {
    pub kernel: Kernel,
    pub dim: usize,
    /// Block indicators `w_1..w_4`.
    pub w: [Vec<i64>; 4],
    /// `ψ_1..ψ_4`.
    pub psi: [StepDistribution; 4],
}

impl M2Config {
    /// Distribution used on step `k` of the measure with the given phase.
    pub fn step_index(k: usize, phase: u8) -> usize {
        match (k + phase as usize) % 6 {
            1 => 0,
            3 => 1,
            5 => 2,
            _ => 3,
        }
    }

    /// `Σ_{A_k} p / Σ p` for each `k`, over the truncated cube.
    pub fn mass_ratios(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|k| self.psi[k].mass_ratio())
    }

    /// Whether the kernel mass reaches `T(d)`.
    pub fn mass_condition_holds(&self) -> bool {
        let t = log10_threshold(self.dim).unwrap_or(f64::INFINITY);
        self.psi[3].cube_mass.log10() >= t
    }
}

/// Indicators of `{1..b}`, `{b+1..2b}`, `{2b+1..3b}`, `{3b+1..d}` with
/// `b = ⌊d/4⌋`.
pub fn block_vectors(d: usize) -> [Vec<i64>; 4] {
    let b = d / 4;
    let block = |lo: usize, hi: usize| (0..d).map(|i| i64::from(i >= lo && i < hi)).collect();
    [block(0, b), block(b, 2 * b), block(2 * b, 3 * b), block(3 * b, d)]
}

/// Builds `ψ_1..ψ_4`; `radius` truncates kernels of unbounded support.
pub fn build_m2(kernel: &Kernel, radius: Option<u64>) -> Result<M2Config, PathError> {
    let d = kernel.dimension();
    if d < 4 {
        return Err(PathError::InvalidConfig(format!("M2 needs d >= 4, got {d}")));
    }
    if !kernel.symmetry().is_isotropic() {
        return Err(PathError::InvalidConfig("M2 needs an isotropic kernel".into()));
    }
    let w = block_vectors(d);
    let sets = [
        StepSet::from_indicators(d, &[(&w[0], Constraint::NonZero), (&w[3], Constraint::NonNegative)])?,
        StepSet::from_indicators(d, &[(&w[1], Constraint::NonZero), (&w[3], Constraint::NonNegative)])?,
        StepSet::from_indicators(d, &[(&w[2], Constraint::NonZero), (&w[3], Constraint::NonNegative)])?,
        StepSet::from_indicators(d, &[(&w[3], Constraint::Positive)])?,
    ];
    let [a, b, c, e] = sets;
    let psi = [
        StepDistribution::new(kernel, a, radius)?,
        StepDistribution::new(kernel, b, radius)?,
        StepDistribution::new(kernel, c, radius)?,
        StepDistribution::new(kernel, e, radius)?,
    ];
    Ok(M2Config { kernel: kernel.clone(), dim: d, w, psi })
}

/// `n` steps of the measure started at `phase ∈ 0..6`.
pub fn sample_m2(config: &M2Config, n: usize, seed: u64, phase: u8) -> PathSample {
    let mut path = PathSample::start(MeasureTag::M2, config.dim, seed, n);
    let mut rng = rng_from_seed(seed);
    for k in 0..n {
        let j = M2Config::step_index(k, phase);
        let z = config.psi[j].sample(&mut rng);
        path.push_step(&z, j == 3);
    }
    path
}
