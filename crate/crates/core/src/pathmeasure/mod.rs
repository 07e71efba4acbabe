//! Random self-avoiding path measures and their intersection estimators.
//!
//! Three families are provided: a 3-periodic construction driven by two
//! unpredictable walks ([`m1`]), a 6-periodic block construction for
//! `d ≥ 4` ([`m2`]) and a 4-periodic construction for `d = 3` whose first
//! coordinates are signed by an unpredictable walk ([`m3`]).

pub mod m1;
pub mod m2;
pub mod m3;
pub mod step;

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::kernel::{Kernel, KernelError};
use crate::lattice;
use crate::rng::derive_seed;
use crate::stats::EstimateWithCI;
use crate::trials::run_trials;

pub use m1::{build_m1, choose_m1_vectors, minimal_m, sample_m1, sample_m1_from, M1Config};
pub use m2::{build_m2, sample_m2, M2Config};
pub use m3::{build_m3, sample_m3, M3Config};
pub use step::{Constraint, StepDistribution, StepSet};

#[derive(Debug, Error)]
pub enum PathError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("tails of u and v are linearly dependent")]
    DependentTails,
    #[error("eta = min(p_u, p_v) is zero")]
    ZeroEta,
    #[error("M = {m} must exceed 3Q = {three_q}")]
    RadiusTooSmall { m: u64, three_q: u64 },
    #[error("step set carries no kernel mass")]
    EmptyStepSet,
    #[error("kernel has unbounded support; a truncation radius is required")]
    UnboundedSupport,
    #[error("strict mode: {0}")]
    StrictCondition(String),
    #[error("{0}")]
    TooLarge(String),
    #[error("count overflow")]
    Overflow,
    #[error("step index {k} below the minimum {min}")]
    HorizonTooSmall { k: u64, min: u64 },
    #[error("need at least one trial")]
    NoTrials,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureTag {
    M1,
    M2,
    M3,
}

impl fmt::Display for MeasureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureTag::M1 => "M1",
            MeasureTag::M2 => "M2",
            MeasureTag::M3 => "M3",
        })
    }
}

/// A finite path `γ_0 = 0, γ_1, …, γ_n`, stored as flat coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSample {
    pub tag: MeasureTag,
    pub dim: usize,
    pub seed: u64,
    coords: Vec<i64>,
    /// Step indices at which the monotone coordinate must strictly rise.
    strict: Vec<bool>,
}

impl PathSample {
    pub(crate) fn start(tag: MeasureTag, dim: usize, seed: u64, steps: usize) -> Self {
        let mut coords = Vec::with_capacity(dim * (steps + 1));
        coords.resize(dim, 0);
        PathSample { tag, dim, seed, coords, strict: Vec::with_capacity(steps) }
    }

    pub(crate) fn push_step(&mut self, step: &[i64], strict: bool) {
        let base = self.coords.len() - self.dim;
        for (i, s) in step.iter().enumerate().take(self.dim) {
            let c = self.coords[base + i] + s;
            self.coords.push(c);
        }
        self.strict.push(strict);
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.strict.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strict.is_empty()
    }

    pub fn vertex(&self, k: usize) -> &[i64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn vertices(&self) -> impl Iterator<Item = &[i64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn increment(&self, k: usize) -> Vec<i64> {
        let (a, b) = (self.vertex(k), self.vertex(k + 1));
        b.iter().zip(a).map(|(y, x)| y - x).collect()
    }

    /// Whether the construction requires the monotone coordinate to rise
    /// strictly on step `k`.
    pub fn is_strict_step(&self, k: usize) -> bool {
        self.strict[k]
    }

    /// The monotone direction: `e_1` (M1), `w_4` (M2) or `e_3` (M3).
    pub fn monotone_value(&self, k: usize, direction: &[i64]) -> i64 {
        lattice::dot(self.vertex(k), direction)
    }

    pub fn is_self_avoiding(&self) -> bool {
        let mut seen = HashSet::with_capacity(self.len() + 1);
        self.vertices().all(|v| seen.insert(v))
    }

    /// Nondecreasing along `direction`, strictly rising on designated steps.
    pub fn is_monotone(&self, direction: &[i64]) -> bool {
        (0..self.len()).all(|k| {
            let d = self.monotone_value(k + 1, direction) - self.monotone_value(k, direction);
            d > 0 || (d == 0 && !self.strict[k])
        })
    }

    /// Prefix `γ_0..γ_k`.
    pub fn truncated(&self, k: usize) -> PathSample {
        let k = k.min(self.len());
        PathSample {
            tag: self.tag,
            dim: self.dim,
            seed: self.seed,
            coords: self.coords[..(k + 1) * self.dim].to_vec(),
            strict: self.strict[..k].to_vec(),
        }
    }

    /// CSV rows `k, x_1, …, x_d`.
    pub fn rows(&self) -> impl Iterator<Item = (usize, &[i64])> {
        self.vertices().enumerate()
    }
}

/// A sampler for one member of a path-measure family. Built once per run,
/// so the size spread between variants does not matter.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum PathMeasure {
    M1 { config: M1Config, offset: u64 },
    M2 { config: M2Config, phase: u8 },
    M3(M3Config),
}

impl PathMeasure {
    pub fn tag(&self) -> MeasureTag {
        match self {
            PathMeasure::M1 { .. } => MeasureTag::M1,
            PathMeasure::M2 { .. } => MeasureTag::M2,
            PathMeasure::M3(_) => MeasureTag::M3,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            PathMeasure::M1 { config, .. } => config.dim(),
            PathMeasure::M2 { config, .. } => config.dim,
            PathMeasure::M3(_) => 3,
        }
    }

    pub fn sample(&self, steps: usize, seed: u64) -> PathSample {
        match self {
            PathMeasure::M1 { config, offset } => {
                let mut p = sample_m1_from(config, steps.div_ceil(3), seed, *offset);
                if p.len() > steps {
                    p = p.truncated(steps);
                }
                p
            }
            PathMeasure::M2 { config, phase } => sample_m2(config, steps, seed, *phase),
            PathMeasure::M3(c) => sample_m3(c, steps, seed),
        }
    }

    pub fn kernel(&self) -> &Kernel {
        match self {
            PathMeasure::M1 { config, .. } => &config.kernel,
            PathMeasure::M2 { config, .. } => &config.kernel,
            PathMeasure::M3(c) => &c.kernel,
        }
    }

    /// Direction whose coordinate is monotone along sampled paths.
    pub fn monotone_direction(&self) -> Vec<i64> {
        match self {
            PathMeasure::M1 { config, .. } => lattice::unit(config.dim(), 0),
            PathMeasure::M2 { config, .. } => config.w[3].clone(),
            PathMeasure::M3(_) => lattice::unit(3, 2),
        }
    }

    /// The hitting bound the construction proves under its preconditions.
    pub fn hitting_bound(&self) -> f64 {
        match self {
            PathMeasure::M1 { config, .. } => config.hitting_bound(),
            PathMeasure::M2 { .. } | PathMeasure::M3(_) => 0.25,
        }
    }

    /// Whether the quantitative preconditions hold for this config.
    pub fn preconditions_met(&self) -> bool {
        match self {
            PathMeasure::M1 { config, .. } => config.strict_conditions_hold(),
            PathMeasure::M2 { config, .. } => config.mass_condition_holds(),
            PathMeasure::M3(c) => c.mass_condition_holds(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IntersectionEstimate {
    pub estimate: EstimateWithCI,
    pub bound: f64,
    /// `bound ≥ 1`, so the bound carries no information.
    pub vacuous: bool,
    pub preconditions_met: bool,
}

/// Whether `x + γ_k = φ_n` for some `k ≤ K`, `n ≤ N`, excluding
/// `(k, n) = (0, 0)` when `x = 0`.
pub fn paths_intersect(gamma: &PathSample, phi: &PathSample, x: &[i64]) -> bool {
    let zero = x.iter().all(|&c| c == 0);
    let mut visited: HashMap<Vec<i64>, usize> = HashMap::with_capacity(gamma.len() + 1);
    for (k, v) in gamma.vertices().enumerate() {
        let shifted: Vec<i64> = v.iter().zip(x).map(|(a, b)| a + b).collect();
        visited.entry(shifted).or_insert(k);
    }
    phi.vertices().enumerate().any(|(n, v)| match visited.get(v) {
        None => false,
        Some(&k) => !(zero && k == 0 && n == 0) || gamma.vertices().skip(1).any(|w| w == v),
    })
}

/// Monte Carlo probability that `x + γ_0^K` meets `φ_0^N` for independent
/// `γ ~ first`, `φ ~ second`.
pub fn estimate_intersection(
    first: &PathMeasure,
    second: &PathMeasure,
    x: &[i64],
    horizons: (usize, usize),
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<IntersectionEstimate, PathError> {
    if trials == 0 {
        return Err(PathError::NoTrials);
    }
    if x.len() != first.dim() || first.dim() != second.dim() {
        return Err(PathError::DimensionMismatch { expected: first.dim(), got: x.len() });
    }
    let hits = run_trials(trials, workers, seed, |_, s| {
        let g = first.sample(horizons.0, derive_seed(s, 0));
        let f = second.sample(horizons.1, derive_seed(s, 1));
        paths_intersect(&g, &f, x)
    });
    let successes = hits.iter().filter(|&&h| h).count() as u64;
    let bound = first.hitting_bound().max(second.hitting_bound());
    Ok(IntersectionEstimate {
        estimate: EstimateWithCI::proportion(successes, trials, seed),
        bound,
        vacuous: bound >= 1.0,
        preconditions_met: first.preconditions_met() && second.preconditions_met(),
    })
}

#[derive(Debug, Clone)]
pub struct LayerMassEstimate {
    /// Empirical conditional point mass on the most populated layer.
    pub estimate: EstimateWithCI,
    pub layer: i64,
    pub layer_samples: u64,
    pub bound: f64,
    pub vacuous: bool,
}

/// Largest conditional point mass of `γ_k` given its monotone coordinate,
/// measured on the most populated layer.
pub fn conditional_layer_mass(
    measure: &PathMeasure,
    k: usize,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<LayerMassEstimate, PathError> {
    if trials == 0 {
        return Err(PathError::NoTrials);
    }
    let bound = match measure {
        PathMeasure::M2 { .. } => {
            if k < 6 {
                return Err(PathError::HorizonTooSmall { k: k as u64, min: 6 });
            }
            3.0 * ((k / 6) as f64).powf(-1.5)
        }
        PathMeasure::M3(_) => {
            if k < 4 {
                return Err(PathError::HorizonTooSmall { k: k as u64, min: 4 });
            }
            100.0 * ((k / 4) as f64).powf(-1.13)
        }
        PathMeasure::M1 { .. } => {
            return Err(PathError::InvalidConfig(
                "layer masses are defined for the M2 and M3 families".into(),
            ))
        }
    };
    let dir = measure.monotone_direction();
    let ends = run_trials(trials, workers, seed, |_, s| measure.sample(k, s).vertex(k).to_vec());
    let mut layers: HashMap<i64, HashMap<Vec<i64>, u64>> = HashMap::new();
    for e in ends {
        let l = lattice::dot(&e, &dir);
        *layers.entry(l).or_default().entry(e).or_insert(0) += 1;
    }
    let (layer, hist) = layers
        .iter()
        .max_by_key(|(l, h)| (h.values().sum::<u64>(), std::cmp::Reverse(**l)))
        .expect("at least one trial");
    let n: u64 = hist.values().sum();
    let top = *hist.values().max().unwrap_or(&0);
    Ok(LayerMassEstimate {
        estimate: EstimateWithCI::proportion(top, n, seed),
        layer: *layer,
        layer_samples: n,
        bound,
        vacuous: bound >= 1.0,
    })
}
