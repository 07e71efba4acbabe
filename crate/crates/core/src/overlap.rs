//! Weighted overlaps `ov(γ, φ) = ∏_{e ∈ γ∩φ} p_e^{-1}`, their expectation
//! under independent path pairs, an exact Paley–Zygmund verifier, and the
//! planar cutset obstruction.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

use crate::kernel::{EdgeKernel, Kernel};
use crate::lattice;
use crate::pathmeasure::{
    Constraint, MeasureTag, PathError, PathMeasure, PathSample, StepDistribution, StepSet,
};
use crate::rng::{derive_seed, rng_from_seed, SimRng};
use crate::stats::EstimateWithCI;
use crate::trials::run_trials;

/// Largest edge count enumerated by the brute-force verifier.
pub const BRUTE_FORCE_EDGE_CAP: usize = 24;

#[derive(Debug, Error)]
pub enum OverlapError {
    #[error("expected overlap {0} is below 1")]
    BelowOne(f64),
    #[error("shared edge with zero probability in trial {trial}")]
    InfiniteOverlap { trial: u64 },
    #[error("need at least {0} trials")]
    TooFewTrials(u64),
    #[error("{edges} edges exceed the enumeration cap {cap}")]
    TooManyEdges { edges: usize, cap: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("cutset check needs d = 2, got {0}")]
    NotPlanar(usize),
    #[error(transparent)]
    Path(#[from] PathError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapValue {
    /// `ln ov`.
    pub log_value: f64,
    pub shared_edge_count: usize,
    /// Some shared edge has `p = 0`, so `ov = ∞`.
    pub infinite: bool,
}

impl OverlapValue {
    pub fn value(&self) -> f64 {
        if self.infinite {
            f64::INFINITY
        } else {
            self.log_value.exp()
        }
    }
}

type Edge = (Vec<i64>, Vec<i64>);

fn undirected(a: &[i64], b: &[i64]) -> Edge {
    if a <= b {
        (a.to_vec(), b.to_vec())
    } else {
        (b.to_vec(), a.to_vec())
    }
}

/// Shared undirected edges of two vertex sequences, each with the first
/// prefix length `n` at which both `γ_0^n` and `φ_0^n` contain it.
fn shared_edges<'a>(
    a: impl Iterator<Item = &'a [i64]>,
    b: impl Iterator<Item = &'a [i64]>,
) -> Vec<(usize, Vec<i64>)> {
    let mut first: HashMap<Edge, usize> = HashMap::new();
    let mut prev: Option<&[i64]> = None;
    for (k, v) in a.enumerate() {
        if let Some(u) = prev {
            first.entry(undirected(u, v)).or_insert(k);
        }
        prev = Some(v);
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    prev = None;
    for (k, v) in b.enumerate() {
        if let Some(u) = prev {
            let e = undirected(u, v);
            if let Some(&ka) = first.get(&e) {
                if seen.insert(e) {
                    let delta = v.iter().zip(u).map(|(x, y)| x - y).collect();
                    out.push((ka.max(k), delta));
                }
            }
        }
        prev = Some(v);
    }
    out
}

fn accumulate<K: EdgeKernel + ?Sized>(kernel: &K, deltas: &[Vec<i64>]) -> OverlapValue {
    let mut v = OverlapValue { log_value: 0.0, shared_edge_count: deltas.len(), infinite: false };
    for d in deltas {
        let p = kernel.p(d);
        if p <= 0.0 {
            v.infinite = true;
        } else {
            v.log_value -= p.ln();
        }
    }
    v
}

/// `ov(γ, φ)`: each distinct shared undirected edge contributes `1/p_e` once.
pub fn weighted_overlap<K: EdgeKernel + ?Sized>(a: &PathSample, b: &PathSample, kernel: &K) -> OverlapValue {
    let deltas: Vec<Vec<i64>> = shared_edges(a.vertices(), b.vertices()).into_iter().map(|(_, d)| d).collect();
    accumulate(kernel, &deltas)
}

/// Same as [`weighted_overlap`] for plain vertex lists.
pub fn weighted_overlap_vertices<K: EdgeKernel + ?Sized>(a: &[Vec<i64>], b: &[Vec<i64>], kernel: &K) -> OverlapValue {
    let deltas: Vec<Vec<i64>> = shared_edges(a.iter().map(Vec::as_slice), b.iter().map(Vec::as_slice))
        .into_iter()
        .map(|(_, d)| d)
        .collect();
    accumulate(kernel, &deltas)
}

/// `ln ov(γ_0^n, φ_0^n)` for every `n` in `horizons` (ascending).
fn prefix_overlaps<K: EdgeKernel + ?Sized>(
    a: &PathSample,
    b: &PathSample,
    kernel: &K,
    horizons: &[usize],
) -> Result<Vec<f64>, ()> {
    let mut shared = shared_edges(a.vertices(), b.vertices());
    shared.sort_by_key(|(n, _)| *n);
    let mut out = Vec::with_capacity(horizons.len());
    let mut acc = 0.0;
    let mut i = 0;
    for &h in horizons {
        while i < shared.len() && shared[i].0 <= h {
            let p = kernel.p(&shared[i].1);
            if p <= 0.0 {
                return Err(());
            }
            acc -= p.ln();
            i += 1;
        }
        out.push(acc);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct OverlapPoint {
    pub n: usize,
    pub estimate: EstimateWithCI,
    /// Largest estimate over horizons `≤ n`.
    pub running_max: f64,
    /// `1 / running_max`.
    pub implied_lower_bound: f64,
}

/// `E[ov(γ_0^n, φ_0^n)]` for each `n` in `horizons`, each pair sampled once
/// at the largest horizon and evaluated on prefixes.
pub fn overlap_curve(
    measure: &PathMeasure,
    horizons: &[usize],
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<OverlapPoint>, OverlapError> {
    if trials < 2 {
        return Err(OverlapError::TooFewTrials(2));
    }
    let mut hs = horizons.to_vec();
    hs.sort_unstable();
    hs.dedup();
    let top = *hs.last().unwrap_or(&0);
    let kernel = measure.kernel();
    let rows = run_trials(trials, workers, seed, |_, s| {
        let g = measure.sample(top, derive_seed(s, 0));
        let f = measure.sample(top, derive_seed(s, 1));
        prefix_overlaps(&g, &f, kernel, &hs)
    });
    let mut columns = vec![Vec::with_capacity(trials as usize); hs.len()];
    for (t, r) in rows.into_iter().enumerate() {
        let r = r.map_err(|_| OverlapError::InfiniteOverlap { trial: t as u64 })?;
        for (c, v) in columns.iter_mut().zip(r) {
            c.push(v.exp());
        }
    }
    let mut running = 1.0f64;
    Ok(hs
        .iter()
        .zip(columns)
        .map(|(&n, c)| {
            let estimate = EstimateWithCI::mean(&c, seed);
            running = running.max(estimate.estimate);
            OverlapPoint { n, estimate, running_max: running, implied_lower_bound: 1.0 / running }
        })
        .collect())
}

/// `E[ov(γ_0^n, φ_0^n)]` under `μ × μ`.
pub fn estimate_expected_overlap(
    measure: &PathMeasure,
    n: usize,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<OverlapPoint, OverlapError> {
    Ok(overlap_curve(measure, &[n], trials, seed, workers)?.remove(0))
}

/// `1 / E[ov]`, the second-moment lower bound on `P(|K_0| = ∞)`.
pub fn percolation_lower_bound(expected_overlap: f64) -> Result<f64, OverlapError> {
    if expected_overlap.is_nan() || expected_overlap < 1.0 {
        return Err(OverlapError::BelowOne(expected_overlap));
    }
    Ok(1.0 / expected_overlap)
}

/// A finitely supported path measure on a finite edge set.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceInstance {
    pub probabilities: Vec<BigRational>,
    /// Each path is a set of edge indices with its weight `μ(γ)`.
    pub paths: Vec<(Vec<usize>, BigRational)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaleyZygmundReport {
    pub p_reach: BigRational,
    pub e_z: BigRational,
    pub e_z2: BigRational,
    pub e_ov: BigRational,
    pub chain_holds: bool,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl BruteForceInstance {
    pub fn new(probabilities: Vec<BigRational>, paths: Vec<(Vec<usize>, BigRational)>) -> Result<Self, OverlapError> {
        let m = probabilities.len();
        if m > BRUTE_FORCE_EDGE_CAP {
            return Err(OverlapError::TooManyEdges { edges: m, cap: BRUTE_FORCE_EDGE_CAP });
        }
        if probabilities.iter().any(|p| *p <= BigRational::zero() || *p > BigRational::one()) {
            return Err(OverlapError::InvalidInstance("probabilities must lie in (0, 1]".into()));
        }
        let mut total = BigRational::zero();
        for (edges, w) in &paths {
            if edges.iter().any(|&e| e >= m) {
                return Err(OverlapError::InvalidInstance("edge index out of range".into()));
            }
            if *w < BigRational::zero() {
                return Err(OverlapError::InvalidInstance("negative weight".into()));
            }
            total += w;
        }
        if total != BigRational::one() {
            return Err(OverlapError::InvalidInstance("weights must sum to 1".into()));
        }
        let paths = paths
            .into_iter()
            .map(|(mut e, w)| {
                e.sort_unstable();
                e.dedup();
                (e, w)
            })
            .collect();
        Ok(BruteForceInstance { probabilities, paths })
    }

    /// Random instance with probabilities `k/100`, `k ∈ 10..=90`.
    pub fn random(rng: &mut SimRng, max_edges: usize, max_paths: usize) -> Self {
        let m = rng.random_range(1..=max_edges);
        let probabilities = (0..m).map(|_| rat(rng.random_range(10..=90), 100)).collect();
        let k = rng.random_range(1..=max_paths);
        let raw: Vec<i64> = (0..k).map(|_| rng.random_range(1..=10)).collect();
        let total: i64 = raw.iter().sum();
        let paths = raw
            .iter()
            .map(|&w| {
                let len = rng.random_range(1..=m);
                let edges = (0..len).map(|_| rng.random_range(0..m)).collect();
                (edges, rat(w, total))
            })
            .collect();
        BruteForceInstance::new(probabilities, paths).expect("generated instance is valid")
    }

    fn open_probability(&self, edges: &[usize]) -> BigRational {
        edges.iter().fold(BigRational::one(), |acc, &e| acc * &self.probabilities[e])
    }

    /// `ov(γ, φ)` over shared edge indices.
    pub fn overlap(&self, a: &[usize], b: &[usize]) -> BigRational {
        let shared: Vec<usize> = a.iter().copied().filter(|e| b.contains(e)).collect();
        self.open_probability(&shared).recip()
    }
}

/// Enumerates all `2^m` edge configurations and checks `E[Z] = 1`,
/// `E[Z²] = E_{μ×μ}[ov]` and `P(Z > 0) ≥ 1/E[ov]` exactly.
pub fn brute_force_paley_zygmund(inst: &BruteForceInstance) -> Result<PaleyZygmundReport, OverlapError> {
    let m = inst.probabilities.len();
    if m > BRUTE_FORCE_EDGE_CAP {
        return Err(OverlapError::TooManyEdges { edges: m, cap: BRUTE_FORCE_EDGE_CAP });
    }
    let masks: Vec<u32> = inst.paths.iter().map(|(e, _)| e.iter().fold(0u32, |acc, &i| acc | (1 << i))).collect();
    let coeffs: Vec<BigRational> = inst.paths.iter().map(|(e, w)| w / inst.open_probability(e)).collect();
    let one = BigRational::one();
    let (mut p_reach, mut e_z, mut e_z2) = (BigRational::zero(), BigRational::zero(), BigRational::zero());
    for config in 0u32..(1u32 << m) {
        let mut weight = BigRational::one();
        for (i, p) in inst.probabilities.iter().enumerate() {
            weight *= if config >> i & 1 == 1 { p.clone() } else { &one - p };
        }
        if weight.is_zero() {
            continue;
        }
        let mut z = BigRational::zero();
        for (mask, c) in masks.iter().zip(&coeffs) {
            if config & mask == *mask {
                z += c;
            }
        }
        if z.is_zero() {
            continue;
        }
        p_reach += &weight;
        e_z2 += &weight * &z * &z;
        e_z += weight * z;
    }
    let mut e_ov = BigRational::zero();
    for (a, wa) in &inst.paths {
        for (b, wb) in &inst.paths {
            e_ov += wa * wb * inst.overlap(a, b);
        }
    }
    let chain_holds = e_z == one && e_z2 == e_ov && &p_reach * &e_ov >= one;
    Ok(PaleyZygmundReport { p_reach, e_z, e_z2, e_ov, chain_holds })
}

/// `|E_n|` for the range-`K` graph on `Z²`: unordered pairs at `ℓ∞`
/// distance in `1..=K` with both ends in `3nK < ‖x‖∞ ≤ 3(n+1)K`.
pub fn cutset_size(n: u64, k: u64) -> u128 {
    let inner = 3 * n * k;
    let outer = 3 * (n + 1) * k;
    // |B_a ∩ (B_b − δ)| for centred boxes of radii a, b.
    let meet = |a: u64, b: u64, delta: &[i64]| -> u128 {
        delta
            .iter()
            .map(|&t| {
                let lo = (-(a as i64)).max(-(b as i64) - t);
                let hi = (a as i64).min(b as i64 - t);
                (hi - lo + 1).max(0) as u128
            })
            .product()
    };
    lattice::half_cube(2, k)
        .map(|d| {
            // Inclusion–exclusion over the annulus B_outer ∖ B_inner.
            meet(outer, outer, &d) + meet(inner, inner, &d) - meet(inner, outer, &d) - meet(outer, inner, &d)
        })
        .sum()
}

fn in_annulus(x: &[i64], n: u64, k: u64) -> bool {
    let r = lattice::linf(x);
    3 * n * k < r && r <= 3 * (n + 1) * k
}

/// Directed planar walk with steps `p_x / Σ_{x_1 > 0} p` over the kernel's
/// range; used as the path measure for the cutset check.
#[derive(Debug, Clone)]
pub struct PlanarWalk {
    pub kernel: Kernel,
    pub range: u64,
    step: StepDistribution,
}

impl PlanarWalk {
    pub fn new(kernel: &Kernel) -> Result<Self, OverlapError> {
        if kernel.dimension() != 2 {
            return Err(OverlapError::NotPlanar(kernel.dimension()));
        }
        let range = kernel.support_radius().ok_or(PathError::UnboundedSupport)?;
        let set = StepSet::new(2, vec![(vec![0], Constraint::Positive)])?;
        let step = StepDistribution::new(kernel, set, None)?;
        Ok(PlanarWalk { kernel: kernel.clone(), range, step })
    }

    pub fn sample(&self, steps: usize, seed: u64) -> PathSample {
        let mut rng = rng_from_seed(seed);
        let mut p = PathSample::start(MeasureTag::M1, 2, seed, steps);
        for _ in 0..steps {
            p.push_step(&self.step.sample(&mut rng), true);
        }
        p
    }
}

#[derive(Debug, Clone)]
pub struct CutsetRow {
    pub n: u64,
    pub size: u128,
    /// `Σ_{e ∈ E_n} b̂_e`, the mean number of `E_n` edges a path uses.
    pub crossing: EstimateWithCI,
    /// `Σ_{e ∈ E_n} b̂_e²`.
    pub sum_b_squared: f64,
    /// `Σ_{m ≤ n} 1/|E_m|`.
    pub harmonic_partial: f64,
}

#[derive(Debug, Clone)]
pub struct CutsetReport {
    pub rows: Vec<CutsetRow>,
    /// `Ê|γ ∩ φ|` over independent pairs up to the horizon.
    pub mean_shared_edges: EstimateWithCI,
    /// `q^{-Ê|γ∩φ|}`, the Jensen lower bound on `E[q^{-|γ∩φ|}]`.
    pub jensen_bound: f64,
}

/// Crossing statistics of the annular cutsets `E_1..E_{n_max}` for paths
/// from `sampler`, which must produce planar paths with steps of `ℓ∞`
/// length at most `range` long enough to cross them.
pub fn cutset_chain_check<F>(
    sampler: F,
    range: u64,
    n_max: u64,
    q: f64,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<CutsetReport, OverlapError>
where
    F: Fn(u64) -> PathSample + Sync,
{
    if trials < 2 {
        return Err(OverlapError::TooFewTrials(2));
    }
    let per_trial = run_trials(trials, workers, seed, |_, s| {
        let g = sampler(derive_seed(s, 0));
        let f = sampler(derive_seed(s, 1));
        let mut used: Vec<HashSet<Edge>> = vec![HashSet::new(); n_max as usize];
        for k in 0..g.len() {
            let (a, b) = (g.vertex(k), g.vertex(k + 1));
            for n in 1..=n_max {
                if in_annulus(a, n, range) && in_annulus(b, n, range) {
                    used[n as usize - 1].insert(undirected(a, b));
                }
            }
        }
        let shared = shared_edges(g.vertices(), f.vertices()).len();
        (used, shared)
    });
    let mut rows = Vec::with_capacity(n_max as usize);
    let mut harmonic = 0.0;
    for n in 1..=n_max {
        let idx = n as usize - 1;
        let mut freq: HashMap<&Edge, u64> = HashMap::new();
        let counts: Vec<f64> = per_trial
            .iter()
            .map(|(u, _)| {
                for e in &u[idx] {
                    *freq.entry(e).or_insert(0) += 1;
                }
                u[idx].len() as f64
            })
            .collect();
        let size = cutset_size(n, range);
        harmonic += 1.0 / size as f64;
        let t = trials as f64;
        rows.push(CutsetRow {
            n,
            size,
            crossing: EstimateWithCI::mean(&counts, seed),
            sum_b_squared: freq.values().map(|&c| (c as f64 / t).powi(2)).sum(),
            harmonic_partial: harmonic,
        });
    }
    let shared: Vec<f64> = per_trial.iter().map(|(_, s)| *s as f64).collect();
    let mean_shared_edges = EstimateWithCI::mean(&shared, seed);
    Ok(CutsetReport { jensen_bound: q.powf(-mean_shared_edges.estimate), rows, mean_shared_edges })
}

/// Cutset check for the directed planar walk of `kernel`.
pub fn planar_cutset_check(
    kernel: &Kernel,
    n_max: u64,
    q: f64,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<CutsetReport, OverlapError> {
    let walk = PlanarWalk::new(kernel)?;
    let steps = (3 * (n_max + 1) * walk.range + 1) as usize;
    cutset_chain_check(|s| walk.sample(steps, s), walk.range, n_max, q, trials, seed, workers)
}
