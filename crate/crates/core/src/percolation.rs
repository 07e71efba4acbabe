//! Long-range percolation on finite boxes.
//!
//! Configurations are sampled one displacement class at a time: for each
//! `δ` in the positive half-space with `p_δ > 0`, the open translates of `δ`
//! are found by geometric skipping. Each class draws from its own stream,
//! seeded by hashing the configuration seed with `δ`. Two kernels that agree
//! on a class therefore open exactly the same edges of that class, which
//! makes truncations of one base kernel monotonically coupled for free.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use thiserror::Error;

use crate::kernel::{EdgeKernel, TruncatedKernel};
use crate::lattice::{self, CubeIter};
use crate::rng::{derive_seed, derive_seed_path, rng_from_seed};
use crate::stats::EstimateWithCI;
use crate::trials::run_trials;
use crate::unionfind::UnionFind;
use crate::Norm;

pub const DEFAULT_VERTEX_CAP: u64 = 1_000_000;
pub const EXACT_EDGE_CAP: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PercolationError {
    #[error("region has {vertices} vertices, cap is {cap}")]
    RegionTooLarge { vertices: u128, cap: u64 },
    #[error("kernel dimension {kernel} does not match region dimension {region}")]
    DimensionMismatch { kernel: usize, region: usize },
    #[error("vertex {0:?} outside the region")]
    OutsideRegion(Vec<i64>),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("the set S must contain the origin")]
    OriginNotInSet,
    #[error("exact mode needs at most {cap} edges inside S, found {found}")]
    TooManyEdges { found: usize, cap: usize },
    #[error("need at least one trial")]
    NoTrials,
    #[error("edge dump line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// The box `{-L..L}^d` with a boundary shell of the given width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoxRegion {
    pub dim: usize,
    pub half_side: u64,
    pub shell_width: u64,
}

impl BoxRegion {
    pub fn new(dim: usize, half_side: u64, shell_width: u64) -> Result<Self, PercolationError> {
        if dim == 0 || half_side == 0 || shell_width == 0 || shell_width > half_side {
            return Err(PercolationError::InvalidRegion(format!(
                "need d >= 1 and 1 <= shell width <= L, got d={dim}, L={half_side}, width={shell_width}"
            )));
        }
        Ok(BoxRegion { dim, half_side, shell_width })
    }

    pub fn side(&self) -> u64 {
        2 * self.half_side + 1
    }

    pub fn vertex_count_u128(&self) -> u128 {
        (self.side() as u128).saturating_pow(self.dim as u32)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count_u128() as usize
    }

    fn check_cap(&self, cap: u64) -> Result<(), PercolationError> {
        let v = self.vertex_count_u128();
        if v > cap as u128 {
            return Err(PercolationError::RegionTooLarge { vertices: v, cap });
        }
        Ok(())
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.dim && lattice::linf(x) <= self.half_side
    }

    /// Mixed-radix index; lexicographic order of coordinates equals index
    /// order.
    pub fn index(&self, x: &[i64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let (l, s) = (self.half_side as i64, self.side() as usize);
        Some(x.iter().fold(0usize, |acc, &c| acc * s + (c + l) as usize))
    }

    pub fn coords(&self, mut i: usize) -> Vec<i64> {
        let (l, s) = (self.half_side as i64, self.side() as usize);
        let mut x = vec![0i64; self.dim];
        for c in x.iter_mut().rev() {
            *c = (i % s) as i64 - l;
            i /= s;
        }
        x
    }

    pub fn origin(&self) -> usize {
        (self.vertex_count() - 1) / 2
    }

    pub fn in_shell(&self, x: &[i64]) -> bool {
        lattice::linf(x) > self.half_side - self.shell_width
    }

    pub fn index_in_shell(&self, i: usize) -> bool {
        self.in_shell(&self.coords(i))
    }
}

/// A sparse set of open edges, stored as sorted vertex-index pairs `a < b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub region: BoxRegion,
    pub edges: Vec<(u32, u32)>,
    pub seed: u64,
}

impl Configuration {
    pub fn empty(region: BoxRegion, seed: u64) -> Self {
        Configuration { region, edges: Vec::new(), seed }
    }

    /// Builds a configuration from coordinate pairs, deduplicating.
    pub fn from_edges(
        region: BoxRegion,
        edges: &[(Vec<i64>, Vec<i64>)],
        seed: u64,
    ) -> Result<Self, PercolationError> {
        let mut out = Vec::with_capacity(edges.len());
        for (x, y) in edges {
            let a = region.index(x).ok_or_else(|| PercolationError::OutsideRegion(x.clone()))?;
            let b = region.index(y).ok_or_else(|| PercolationError::OutsideRegion(y.clone()))?;
            if a != b {
                out.push((a.min(b) as u32, a.max(b) as u32));
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(Configuration { region, edges: out, seed })
    }

    /// Keeps the edges whose displacement satisfies `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&[i64]) -> bool) -> Configuration {
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|&(a, b)| {
                let (x, y) = (self.region.coords(a as usize), self.region.coords(b as usize));
                let d: Vec<i64> = y.iter().zip(&x).map(|(p, q)| p - q).collect();
                keep(&d)
            })
            .collect();
        Configuration { region: self.region, edges, seed: self.seed }
    }

    pub fn clusters(&self) -> Clusters {
        let mut uf = UnionFind::new(self.region.vertex_count());
        for &(a, b) in &self.edges {
            uf.union(a as usize, b as usize);
        }
        Clusters { region: self.region, uf }
    }

    /// Text dump: one edge per line, `x1 … xd y1 … yd`, sorted.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for &(a, b) in &self.edges {
            let (x, y) = (self.region.coords(a as usize), self.region.coords(b as usize));
            let parts: Vec<String> = x.iter().chain(&y).map(|c| c.to_string()).collect();
            let _ = writeln!(s, "{}", parts.join(" "));
        }
        s
    }

    /// Origin cluster as a sorted list of vertex indices (BFS).
    pub fn origin_cluster(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let o = self.region.origin();
        let mut seen = HashSet::from([o]);
        let mut q = VecDeque::from([o]);
        while let Some(v) = q.pop_front() {
            if let Some(ns) = adj.get(&v) {
                for &w in ns {
                    if seen.insert(w) {
                        q.push_back(w);
                    }
                }
            }
        }
        let mut out: Vec<usize> = seen.into_iter().collect();
        out.sort_unstable();
        out
    }

    fn adjacency(&self) -> HashMap<usize, Vec<usize>> {
        let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
        for &(a, b) in &self.edges {
            adj.entry(a as usize).or_default().push(b as usize);
            adj.entry(b as usize).or_default().push(a as usize);
        }
        adj
    }
}

/// An edge as its two endpoint coordinates.
pub type EdgeCoords = (Vec<i64>, Vec<i64>);

/// Parses a text dump produced by [`Configuration::to_text`] back into
/// coordinate pairs. Blank lines and `#` comments are skipped.
pub fn parse_edge_dump(text: &str, dim: usize) -> Result<Vec<EdgeCoords>, PercolationError> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums = line
            .split_whitespace()
            .map(|t| t.parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| PercolationError::Parse { line: ln + 1, msg: e.to_string() })?;
        if nums.len() != 2 * dim {
            return Err(PercolationError::Parse {
                line: ln + 1,
                msg: format!("expected {} integers, found {}", 2 * dim, nums.len()),
            });
        }
        out.push((nums[..dim].to_vec(), nums[dim..].to_vec()));
    }
    Ok(out)
}

/// Cluster structure of a configuration.
#[derive(Debug, Clone)]
pub struct Clusters {
    region: BoxRegion,
    uf: UnionFind,
}

impl Clusters {
    fn idx(&self, x: &[i64]) -> Result<usize, PercolationError> {
        self.region.index(x).ok_or_else(|| PercolationError::OutsideRegion(x.to_vec()))
    }

    pub fn cluster_size(&mut self, x: &[i64]) -> Result<usize, PercolationError> {
        let i = self.idx(x)?;
        Ok(self.uf.set_size(i))
    }

    pub fn same_cluster(&mut self, x: &[i64], y: &[i64]) -> Result<bool, PercolationError> {
        let (i, j) = (self.idx(x)?, self.idx(y)?);
        Ok(self.uf.same(i, j))
    }

    pub fn same_index(&mut self, i: usize, j: usize) -> bool {
        self.uf.same(i, j)
    }

    /// Representative of the cluster containing vertex index `i`.
    pub fn root(&mut self, i: usize) -> usize {
        self.uf.find(i)
    }

    /// Whether the origin's cluster meets the boundary shell.
    pub fn origin_reaches_shell(&mut self) -> bool {
        let o = self.region.origin();
        let r = self.uf.find(o);
        if self.region.in_shell(&self.region.coords(o)) {
            return true;
        }
        if self.uf.set_size(o) == 1 {
            return false;
        }
        (0..self.region.vertex_count())
            .any(|v| self.uf.find(v) == r && self.region.index_in_shell(v))
    }
}

/// Options for configuration sampling.
#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    pub vertex_cap: u64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions { vertex_cap: DEFAULT_VERTEX_CAP }
    }
}

/// Positive-half displacements that can join two vertices of the region,
/// restricted to the kernel's support, with their probabilities.
pub fn displacement_classes<K: EdgeKernel + ?Sized>(kernel: &K, region: &BoxRegion) -> Vec<(Vec<i64>, f64)> {
    let reach = 2 * region.half_side;
    let r = kernel.support_radius().map_or(reach, |s| s.min(reach));
    lattice::half_cube(region.dim, r)
        .filter_map(|d| {
            let p = kernel.p(&d);
            (p > 0.0).then_some((d, p))
        })
        .collect()
}

pub fn sample_configuration<K: EdgeKernel + ?Sized>(
    kernel: &K,
    region: &BoxRegion,
    seed: u64,
) -> Result<Configuration, PercolationError> {
    sample_configuration_with(kernel, region, seed, SampleOptions::default())
}

pub fn sample_configuration_with<K: EdgeKernel + ?Sized>(
    kernel: &K,
    region: &BoxRegion,
    seed: u64,
    opts: SampleOptions,
) -> Result<Configuration, PercolationError> {
    check_inputs(kernel, region, opts)?;
    let classes = displacement_classes(kernel, region);
    Ok(sample_classes(&classes, region, seed))
}

fn check_inputs<K: EdgeKernel + ?Sized>(
    kernel: &K,
    region: &BoxRegion,
    opts: SampleOptions,
) -> Result<(), PercolationError> {
    if kernel.dimension() != region.dim {
        return Err(PercolationError::DimensionMismatch {
            kernel: kernel.dimension(),
            region: region.dim,
        });
    }
    region.check_cap(opts.vertex_cap)
}

/// Stream seed of displacement class `δ`.
fn class_seed(seed: u64, delta: &[i64]) -> u64 {
    let path: Vec<u64> = delta.iter().map(|&c| c as u64).collect();
    derive_seed_path(derive_seed(seed, 0x5eed_c1a5), &path)
}

fn sample_classes(classes: &[(Vec<i64>, f64)], region: &BoxRegion, seed: u64) -> Configuration {
    let d = region.dim;
    let l = region.half_side as i64;
    let side = region.side() as i64;
    let mut strides = vec![1i64; d];
    for i in (0..d.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * side;
    }
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut lo = vec![0i64; d];
    let mut widths = vec![0i64; d];
    for (delta, p) in classes {
        let mut count: u64 = 1;
        for i in 0..d {
            // base points a with a, a + δ both in [-L, L]
            lo[i] = (-l).max(-l - delta[i]);
            widths[i] = side - delta[i].abs();
            count *= widths[i] as u64;
        }
        if count == 0 {
            continue;
        }
        let offset: i64 = delta.iter().zip(&strides).map(|(a, b)| a * b).sum();
        let mut rng = rng_from_seed(class_seed(seed, delta));
        let geo = Geometric::new(*p).expect("probability in (0, 1)");
        let mut t: u64 = 0;
        loop {
            t = t.saturating_add(geo.sample(&mut rng));
            if t >= count {
                break;
            }
            let mut rem = t;
            let mut a: i64 = 0;
            for i in (0..d).rev() {
                let w = widths[i] as u64;
                let digit = (rem % w) as i64;
                rem /= w;
                a += (lo[i] + l + digit) * strides[i];
            }
            let b = a + offset;
            edges.push((a.min(b) as u32, a.max(b) as u32));
            t += 1;
        }
    }
    edges.sort_unstable();
    Configuration { region: *region, edges, seed }
}

pub type ReachEstimate = EstimateWithCI;

/// Fraction of trials in which the origin's cluster touches the shell.
pub fn estimate_reach<K: EdgeKernel + ?Sized>(
    kernel: &K,
    region: &BoxRegion,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<ReachEstimate, PercolationError> {
    if trials == 0 {
        return Err(PercolationError::NoTrials);
    }
    check_inputs(kernel, region, SampleOptions::default())?;
    let classes = displacement_classes(kernel, region);
    let hits = run_trials(trials, workers, seed, |_, s| {
        sample_classes(&classes, region, s).clusters().origin_reaches_shell()
    });
    let successes = hits.iter().filter(|&&h| h).count() as u64;
    Ok(EstimateWithCI::proportion(successes, trials, seed))
}

/// Coupled truncation curve.
#[derive(Debug, Clone)]
pub struct TruncationCurve {
    pub radii: Vec<u64>,
    pub estimates: Vec<EstimateWithCI>,
    /// Trials in which the origin cluster at a smaller radius was not a
    /// subset of the cluster at the next radius.
    pub containment_violations: u64,
    pub trials: u64,
}

impl TruncationCurve {
    /// Whether consecutive estimates are nondecreasing up to CI overlap.
    pub fn monotone_within_ci(&self) -> bool {
        self.estimates
            .windows(2)
            .all(|w| w[1].estimate >= w[0].estimate || w[1].overlaps(&w[0]))
    }
}

/// Per-trial outcome of [`coupled_truncations`].
#[derive(Debug, Clone, PartialEq, Eq)]
struct CoupledTrial {
    reached: Vec<bool>,
    nested: bool,
}

/// Reach probabilities of `base` truncated at each radius. Each radius is
/// sampled separately from the same trial seed, so nesting of the origin's
/// clusters across radii is a genuine check of the class-seeded coupling.
pub fn coupled_truncations(
    base: &crate::Kernel,
    radii: &[u64],
    norm: Norm,
    region: &BoxRegion,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<TruncationCurve, PercolationError> {
    if trials == 0 {
        return Err(PercolationError::NoTrials);
    }
    let mut radii = radii.to_vec();
    radii.sort_unstable();
    radii.dedup();
    if radii.is_empty() {
        return Err(PercolationError::InvalidRegion("no truncation radii".into()));
    }
    let kernels: Vec<TruncatedKernel> = radii
        .iter()
        .map(|&r| TruncatedKernel::new(base.clone(), r, norm))
        .collect();
    check_inputs(&kernels[0], region, SampleOptions::default())?;
    let classes: Vec<_> = kernels.iter().map(|k| displacement_classes(k, region)).collect();
    let results = run_trials(trials, workers, seed, |_, s| {
        let mut reached = Vec::with_capacity(radii.len());
        let mut prev: Option<Vec<bool>> = None;
        let mut nested = true;
        for cls in &classes {
            let mut clusters = sample_classes(cls, region, s).clusters();
            let o = region.origin();
            let root = clusters.uf.find(o);
            let member: Vec<bool> = (0..region.vertex_count())
                .map(|v| clusters.uf.find(v) == root)
                .collect();
            reached.push(
                member
                    .iter()
                    .enumerate()
                    .any(|(v, &m)| m && region.index_in_shell(v)),
            );
            if let Some(p) = &prev {
                nested &= p.iter().zip(&member).all(|(&a, &b)| !a || b);
            }
            prev = Some(member);
        }
        CoupledTrial { reached, nested }
    });
    let estimates = (0..radii.len())
        .map(|j| {
            let s = results.iter().filter(|t| t.reached[j]).count() as u64;
            EstimateWithCI::proportion(s, trials, seed)
        })
        .collect();
    Ok(TruncationCurve {
        radii,
        estimates,
        containment_violations: results.iter().filter(|t| !t.nested).count() as u64,
        trials,
    })
}

/// How `φ(S)` evaluates connection probabilities inside `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiMode {
    Exact,
    MonteCarlo { trials: u64 },
}

/// Precomputed pieces of `φ(S)` for one kernel and one set.
#[derive(Debug, Clone)]
pub struct PhiInstance {
    /// Index of the origin in `points`.
    origin: usize,
    points: usize,
    /// Potentially open edges inside `S`.
    edges: Vec<(u32, u32, f64)>,
    /// `Σ_{y ∉ S, ‖y - x‖∞ ≤ radius} p_{y-x}` for each `x ∈ S`.
    out: Vec<f64>,
}

impl PhiInstance {
    pub fn new<K: EdgeKernel + ?Sized>(
        kernel: &K,
        set: &[Vec<i64>],
        radius: u64,
    ) -> Result<Self, PercolationError> {
        let d = kernel.dimension();
        let mut index: HashMap<&[i64], usize> = HashMap::with_capacity(set.len());
        for x in set {
            if x.len() != d {
                return Err(PercolationError::DimensionMismatch { kernel: d, region: x.len() });
            }
            let n = index.len();
            index.entry(x.as_slice()).or_insert(n);
        }
        let points: Vec<&[i64]> = {
            let mut v = vec![&[][..]; index.len()];
            for (k, &i) in &index {
                v[i] = k;
            }
            v
        };
        let zero = vec![0i64; d];
        let origin = *index.get(zero.as_slice()).ok_or(PercolationError::OriginNotInSet)?;
        let r = kernel.support_radius().map_or(radius, |s| s.min(radius));
        let support: Vec<(Vec<i64>, f64)> = CubeIter::new(d, r)
            .filter(|x| x.iter().any(|&c| c != 0))
            .filter_map(|x| {
                let p = kernel.p(&x);
                (p > 0.0).then_some((x, p))
            })
            .collect();
        let mut edges = Vec::new();
        let mut out = vec![0.0; points.len()];
        let mut y = vec![0i64; d];
        for (i, x) in points.iter().enumerate() {
            for (delta, p) in &support {
                for k in 0..d {
                    y[k] = x[k] + delta[k];
                }
                match index.get(y.as_slice()) {
                    Some(&j) => {
                        if lattice::is_positive_half(delta) {
                            edges.push((i as u32, j as u32, *p));
                        }
                    }
                    None => out[i] += p,
                }
            }
        }
        Ok(PhiInstance { origin, points: points.len(), edges, out })
    }

    pub fn inner_edges(&self) -> usize {
        self.edges.len()
    }

    /// `Σ_{x ∈ C} out(x)` for the origin's component under the open edges.
    fn component_weight(&self, open: impl Fn(usize) -> bool) -> f64 {
        let mut uf = UnionFind::new(self.points);
        for (k, &(a, b, _)) in self.edges.iter().enumerate() {
            if open(k) {
                uf.union(a as usize, b as usize);
            }
        }
        let r = uf.find(self.origin);
        (0..self.points)
            .filter(|&v| uf.find(v) == r)
            .map(|v| self.out[v])
            .sum()
    }

    /// Exact value by enumerating all configurations of the inner edges.
    pub fn exact(&self) -> Result<f64, PercolationError> {
        let m = self.edges.len();
        if m > EXACT_EDGE_CAP {
            return Err(PercolationError::TooManyEdges { found: m, cap: EXACT_EDGE_CAP });
        }
        let mut total = 0.0;
        for mask in 0u64..(1u64 << m) {
            let w: f64 = self
                .edges
                .iter()
                .enumerate()
                .map(|(k, e)| if mask >> k & 1 == 1 { e.2 } else { 1.0 - e.2 })
                .product();
            if w == 0.0 {
                continue;
            }
            total += w * self.component_weight(|k| mask >> k & 1 == 1);
        }
        Ok(total)
    }

    /// Monte Carlo estimate; each trial samples the inner edges afresh.
    pub fn monte_carlo(&self, trials: u64, seed: u64, workers: usize) -> Result<EstimateWithCI, PercolationError> {
        if trials == 0 {
            return Err(PercolationError::NoTrials);
        }
        let samples = run_trials(trials, workers, seed, |_, s| {
            let mut rng = rng_from_seed(s);
            let open: Vec<bool> = self.edges.iter().map(|e| rng.random::<f64>() < e.2).collect();
            self.component_weight(|k| open[k])
        });
        Ok(EstimateWithCI::mean(&samples, seed))
    }
}

/// `φ(S) = Σ_{x∈S} Σ_{y∉S} P(0 ↔ x inside S) p_{y-x}`, with the outer sum
/// cut at `‖y - x‖∞ ≤ radius`.
pub fn phi_functional<K: EdgeKernel + ?Sized>(
    kernel: &K,
    set: &[Vec<i64>],
    radius: u64,
    mode: PhiMode,
    seed: u64,
) -> Result<EstimateWithCI, PercolationError> {
    let inst = PhiInstance::new(kernel, set, radius)?;
    match mode {
        PhiMode::Exact => Ok(EstimateWithCI::exact(inst.exact()?, seed)),
        PhiMode::MonteCarlo { trials } => inst.monte_carlo(trials, seed, 1),
    }
}

/// The segment `{-K..K}·e_1` in `Z^d`.
pub fn axis_segment(d: usize, k: u64) -> Vec<Vec<i64>> {
    (-(k as i64)..=k as i64)
        .map(|t| {
            let mut x = vec![0; d];
            x[0] = t;
            x
        })
        .collect()
}
