//! Four-periodic construction in `d = 3`: `Z`-steps at even indices,
//! signed `X`-steps at `k ≡ 1 (mod 4)` and `Y`-steps at `k ≡ 3 (mod 4)`.
//! The sign of the first coordinate of the `i`-th `X`-step is the `i`-th
//! increment of an unpredictable walk.

use super::step::{Constraint, StepDistribution, StepSet};
use super::{MeasureTag, PathError, PathSample};
use crate::kernel::{EdgeKernel, Kernel};
use crate::potts::log10_threshold;
use crate::rng::{derive_seed, rng_from_seed};
use crate::treepaths::WalkStream;

#[derive(Debug, Clone)]
pub struct M3Config {
    pub kernel: Kernel,
    /// Step laws on `A_1 = {x_1 > 0, x_3 ≥ 0}`, `A_2 = {x_2 ≠ 0, x_3 ≥ 0}`,
    /// `A_3 = {x_3 > 0}`.
    pub x: StepDistribution,
    pub y: StepDistribution,
    pub z: StepDistribution,
}

impl M3Config {
    pub fn mass_ratios(&self) -> [f64; 3] {
        [self.x.mass_ratio(), self.y.mass_ratio(), self.z.mass_ratio()]
    }

    pub fn mass_condition_holds(&self) -> bool {
        let t = log10_threshold(3).unwrap_or(f64::INFINITY);
        self.z.cube_mass.log10() >= t
    }
}

pub fn build_m3(kernel: &Kernel, radius: Option<u64>) -> Result<M3Config, PathError> {
    let d = kernel.dimension();
    if d != 3 {
        return Err(PathError::InvalidConfig(format!("M3 needs d = 3, got {d}")));
    }
    if !kernel.symmetry().is_isotropic() {
        return Err(PathError::InvalidConfig("M3 needs an isotropic kernel".into()));
    }
    let a1 = StepSet::new(3, vec![(vec![0], Constraint::Positive), (vec![2], Constraint::NonNegative)])?;
    let a2 = StepSet::new(3, vec![(vec![1], Constraint::NonZero), (vec![2], Constraint::NonNegative)])?;
    let a3 = StepSet::new(3, vec![(vec![2], Constraint::Positive)])?;
    Ok(M3Config {
        kernel: kernel.clone(),
        x: StepDistribution::new(kernel, a1, radius)?,
        y: StepDistribution::new(kernel, a2, radius)?,
        z: StepDistribution::new(kernel, a3, radius)?,
    })
}

pub fn sample_m3(config: &M3Config, n: usize, seed: u64) -> PathSample {
    let mut path = PathSample::start(MeasureTag::M3, 3, seed, n);
    let mut rng = rng_from_seed(derive_seed(seed, 0));
    let mut signs = WalkStream::new(derive_seed(seed, 1));
    for k in 0..n {
        match k % 4 {
            0 | 2 => path.push_step(&config.z.sample(&mut rng), true),
            1 => {
                let mut x = config.x.sample(&mut rng);
                x[0] *= signs.next_increment() as i64;
                path.push_step(&x, false);
            }
            _ => path.push_step(&config.y.sample(&mut rng), false),
        }
    }
    path
}
