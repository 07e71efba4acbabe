//! The ternary spin-tree walk.
//!
//! Every vertex of the rooted ternary tree carries a spin. The root has spin
//! `+1`; the first two children of a vertex copy its spin and the third child
//! gets a fresh fair sign. Reading the level-`N` spins in lexicographic order
//! gives increments `σ_1 … σ_{3^N}` of a walk `S`, and `S_{3^N} = Y_N`, the
//! level sum.
//!
//! Leaf `i` (zero-based) inherits its spin from the deepest third child on
//! its ancestral path, i.e. from the lowest-order ternary digit of `i` equal
//! to 2. If that digit sits at position `j`, the vertex is identified by
//! `(j, i / 3^j)`, a key that does not depend on `N`. The first `3^N` leaves
//! of level `N + 1` are the first subtree of the root, so all levels are
//! prefixes of a single infinite stream.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use thiserror::Error;

use crate::rng::{derive_seed, hashed_bit, rng_from_seed};
use crate::stats::EstimateWithCI;
use crate::trials::run_trials;

pub const SAMPLE_LEVEL_CAP: u32 = 13;
pub const EXACT_LEVEL_CAP: u32 = 8;
/// `sup_x P(Y_N = x) ≤ C_BOUND · 2^{-N}`.
pub const C_BOUND: u64 = 32;
pub const PROFILE_COEFFICIENT: f64 = 100.0;

/// `log 2 / log 3`.
pub fn profile_exponent() -> f64 {
    2f64.ln() / 3f64.ln()
}

/// `100 k^{-log 2 / log 3}`.
pub fn profile_bound(k: u64) -> f64 {
    PROFILE_COEFFICIENT * (k as f64).powf(-profile_exponent())
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("level {level} exceeds the cap {cap}")]
    LevelTooLarge { level: u32, cap: u32 },
    #[error("horizon n + k = {0} exceeds 3^13")]
    HorizonTooLarge(u64),
    #[error("step sizes must be positive and finite, got {0}")]
    NonPositiveStep(f64),
    #[error("history length {history} leaves no room in a multiset of size {size}")]
    HistoryTooLong { history: usize, size: usize },
    #[error("need at least one trial and one history")]
    NoTrials,
}

pub fn pow3(n: u32) -> u64 {
    3u64.pow(n)
}

/// Tree vertex `(j, prefix)` whose fresh sign leaf `i` copies, or `None`
/// when the leaf copies the root.
#[inline]
pub fn leaf_key(i: u64) -> Option<(u32, u64)> {
    let mut x = i;
    let mut j = 0;
    while x > 0 {
        if x % 3 == 2 {
            return Some((j, x));
        }
        x /= 3;
        j += 1;
    }
    None
}

#[inline]
fn key_spin(seed: u64, key: (u32, u64)) -> i8 {
    if hashed_bit(seed, key.0 as u64, key.1) {
        1
    } else {
        -1
    }
}

/// Spin of leaf `i` in the stream with the given seed.
#[inline]
pub fn leaf_spin(seed: u64, i: u64) -> i8 {
    leaf_key(i).map_or(1, |k| key_spin(seed, k))
}

/// Spin of the vertex `height` levels above the leaves with index `i` at
/// its own depth.
pub fn vertex_spin(seed: u64, height: u32, i: u64) -> i8 {
    leaf_key(i).map_or(1, |(j, x)| key_spin(seed, (j + height, x)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TernarySpinLevel {
    pub level: u32,
    pub spins: Vec<i8>,
    pub seed: u64,
}

impl TernarySpinLevel {
    pub fn sum(&self) -> i64 {
        self.spins.iter().map(|&s| s as i64).sum()
    }
}

/// Spins of level `N` in lexicographic order.
pub fn sample_level(level: u32, seed: u64) -> Result<TernarySpinLevel, TreeError> {
    if level > SAMPLE_LEVEL_CAP {
        return Err(TreeError::LevelTooLarge { level, cap: SAMPLE_LEVEL_CAP });
    }
    // top-down: each level is the previous one with every spin tripled and
    // the third copy replaced by a fresh sign
    let mut spins = vec![1i8];
    for depth in 1..=level {
        let mut next = Vec::with_capacity(spins.len() * 3);
        for (p, &s) in spins.iter().enumerate() {
            let third = 3 * p as u64 + 2;
            next.push(s);
            next.push(s);
            // height above the leaves and index within its depth
            next.push(key_spin(seed, (level - depth, third)));
        }
        spins = next;
    }
    Ok(TernarySpinLevel { level, spins, seed })
}

/// Increment stream `σ_1, σ_2, …` with running sum.
#[derive(Debug, Clone)]
pub struct WalkStream {
    seed: u64,
    index: u64,
    position: i64,
}

impl WalkStream {
    pub fn new(seed: u64) -> Self {
        WalkStream { seed, index: 0, position: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of increments produced so far.
    pub fn steps(&self) -> u64 {
        self.index
    }

    /// `S_m` with `m = steps()`.
    pub fn position(&self) -> i64 {
        self.position
    }

    pub fn next_increment(&mut self) -> i8 {
        let s = leaf_spin(self.seed, self.index);
        self.index += 1;
        self.position += s as i64;
        s
    }

    /// Advances `m` steps and returns the new position.
    pub fn advance(&mut self, m: u64) -> i64 {
        for _ in 0..m {
            self.next_increment();
        }
        self.position
    }
}

impl Iterator for WalkStream {
    type Item = i8;

    fn next(&mut self) -> Option<i8> {
        Some(self.next_increment())
    }
}

/// Law of `Y_N` as counts over `2^bits`, `bits = (3^N - 1)/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSumDistribution {
    pub level: u32,
    pub bits: u64,
    pub table: BTreeMap<i64, BigUint>,
}

fn big_to_f64_scaled(c: &BigUint, bits: u64) -> f64 {
    if c.is_zero() {
        return 0.0;
    }
    let shift = c.bits().saturating_sub(60);
    let top = (c >> shift).to_f64().unwrap_or(0.0);
    top * ((shift as f64) - bits as f64).exp2()
}

impl LevelSumDistribution {
    pub fn mass(&self, x: i64) -> f64 {
        self.table.get(&x).map_or(0.0, |c| big_to_f64_scaled(c, self.bits))
    }

    pub fn total_is_one(&self) -> bool {
        let total: BigUint = self.table.values().sum();
        total == BigUint::from(1u8) << self.bits
    }

    pub fn max_count(&self) -> BigUint {
        self.table.values().max().cloned().unwrap_or_default()
    }

    pub fn sup_mass(&self) -> f64 {
        big_to_f64_scaled(&self.max_count(), self.bits)
    }

    /// `sup_x P(Y_N = x) ≤ C · 2^{-N}`, decided exactly.
    pub fn within_c_bound(&self, c: u64) -> bool {
        (self.max_count() << self.level) <= (BigUint::from(c) << self.bits)
    }

    pub fn rows(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.table.keys().map(move |&x| (x, self.mass(x)))
    }
}

fn convolve(a: &BTreeMap<i64, BigUint>, b: &BTreeMap<i64, BigUint>) -> BTreeMap<i64, BigUint> {
    let mut out: BTreeMap<i64, BigUint> = BTreeMap::new();
    for (x, cx) in a {
        for (y, cy) in b {
            *out.entry(x + y).or_default() += cx * cy;
        }
    }
    out
}

/// Exact law of `Y_N` from the subtree recursion
/// `D_m(s) = D_{m-1}(s) ⋆ D_{m-1}(s) ⋆ ½(D_{m-1}(+) + D_{m-1}(-))`.
pub fn exact_levelsum(level: u32) -> Result<LevelSumDistribution, TreeError> {
    if level > EXACT_LEVEL_CAP {
        return Err(TreeError::LevelTooLarge { level, cap: EXACT_LEVEL_CAP });
    }
    let mut plus: BTreeMap<i64, BigUint> = BTreeMap::from([(1, BigUint::from(1u8))]);
    let mut bits = 0u64;
    for _ in 0..level {
        let mut mixed = plus.clone();
        for (x, c) in &plus {
            *mixed.entry(-x).or_default() += c;
        }
        let pair = convolve(&plus, &plus);
        plus = convolve(&pair, &mixed);
        bits = 3 * bits + 1;
    }
    Ok(LevelSumDistribution { level, bits, table: plus })
}

/// Revealed tree bits and the walk value after a history of length `n`.
#[derive(Debug, Clone)]
struct History {
    pinned: HashMap<(u32, u64), i8>,
    position: i64,
}

fn reveal(seed: u64, n: u64) -> History {
    let mut pinned = HashMap::new();
    let mut position = 0;
    for i in 0..n {
        let s = match leaf_key(i) {
            Some(k) => *pinned.entry(k).or_insert_with(|| key_spin(seed, k)),
            None => 1,
        };
        position += s as i64;
    }
    History { pinned, position }
}

/// Spin of leaf `i` under fresh bits `seed` except where pinned.
#[inline]
fn conditional_spin(h: &History, seed: u64, i: u64) -> i8 {
    match leaf_key(i) {
        Some(k) => h.pinned.get(&k).copied().unwrap_or_else(|| key_spin(seed, k)),
        None => 1,
    }
}

/// Trial layout for conditional point-mass estimates.
#[derive(Debug, Clone, Copy)]
pub struct PredictabilityPlan {
    pub histories: u64,
    pub continuations: u64,
    pub workers: usize,
}

/// Largest empirical conditional point mass of `S_{n+k}` given `S_0..S_n`,
/// maximized over sampled histories. The supremum over all histories can
/// only be larger, so this is a lower estimate of `pre_k`.
pub fn estimate_predictability(
    k: u64,
    history: u64,
    plan: PredictabilityPlan,
    seed: u64,
) -> Result<EstimateWithCI, TreeError> {
    if plan.histories == 0 || plan.continuations == 0 {
        return Err(TreeError::NoTrials);
    }
    if history + k > pow3(SAMPLE_LEVEL_CAP) {
        return Err(TreeError::HorizonTooLarge(history + k));
    }
    let per_history = run_trials(plan.histories, plan.workers, seed, |_, hs| {
        let h = reveal(derive_seed(hs, 0), history);
        let mut counts: HashMap<i64, u64> = HashMap::new();
        for t in 0..plan.continuations {
            let cs = derive_seed(hs, t + 1);
            let mut s = h.position;
            for i in history..history + k {
                s += conditional_spin(&h, cs, i) as i64;
            }
            *counts.entry(s).or_insert(0) += 1;
        }
        counts.values().copied().max().unwrap_or(0)
    });
    let best = per_history.into_iter().max().unwrap_or(0);
    Ok(EstimateWithCI::proportion(best, plan.continuations, seed))
}

/// Walk with exchangeable step sizes: `S̃_m = Σ_{i≤m} σ_i X_i` where `X` is
/// a uniformly random permutation of the step multiset, independent of the
/// sign stream.
#[derive(Debug, Clone)]
pub struct GeneralStepWalk {
    steps: Vec<f64>,
    signs: WalkStream,
    position: f64,
    index: usize,
}

impl GeneralStepWalk {
    pub fn new(steps: &[f64], walk_seed: u64, perm_seed: u64) -> Result<Self, TreeError> {
        if let Some(&bad) = steps.iter().find(|&&a| !(a > 0.0 && a.is_finite())) {
            return Err(TreeError::NonPositiveStep(bad));
        }
        let mut steps = steps.to_vec();
        steps.shuffle(&mut rng_from_seed(perm_seed));
        Ok(GeneralStepWalk { steps, signs: WalkStream::new(walk_seed), position: 0.0, index: 0 })
    }

    /// Next position, or `None` once the multiset is exhausted.
    pub fn next_position(&mut self) -> Option<f64> {
        let x = *self.steps.get(self.index)?;
        self.index += 1;
        self.position += self.signs.next_increment() as f64 * x;
        Some(self.position)
    }

    pub fn position(&self) -> f64 {
        self.position
    }
}

/// Point masses of real sums are taken on a grid of this resolution.
const QUANTUM: f64 = 1e-9;

fn quantize(x: f64) -> i64 {
    (x / QUANTUM).round() as i64
}

/// Largest empirical point mass of `S̃_{N+k}` given `S̃_0..S̃_N`. A history
/// reveals `X_1..X_N` and `σ_1..σ_N`; continuations reshuffle the remaining
/// steps and resample the unrevealed tree bits.
pub fn general_step_point_mass(
    steps: &[f64],
    history: usize,
    plan: PredictabilityPlan,
    seed: u64,
) -> Result<EstimateWithCI, TreeError> {
    if let Some(&bad) = steps.iter().find(|&&a| !(a > 0.0 && a.is_finite())) {
        return Err(TreeError::NonPositiveStep(bad));
    }
    if history >= steps.len() {
        return Err(TreeError::HistoryTooLong { history, size: steps.len() });
    }
    if plan.histories == 0 || plan.continuations == 0 {
        return Err(TreeError::NoTrials);
    }
    let per_history = run_trials(plan.histories, plan.workers, seed, |_, hs| {
        let walk_seed = derive_seed(hs, 0);
        let mut order = steps.to_vec();
        order.shuffle(&mut rng_from_seed(derive_seed(hs, 1)));
        let h = reveal(walk_seed, history as u64);
        let base: f64 = (0..history)
            .map(|i| leaf_spin(walk_seed, i as u64) as f64 * order[i])
            .sum();
        let mut rest = order[history..].to_vec();
        let mut counts: HashMap<i64, u64> = HashMap::new();
        for t in 0..plan.continuations {
            let cs = derive_seed(hs, 2 * t + 2);
            rest.shuffle(&mut rng_from_seed(derive_seed(hs, 2 * t + 3)));
            let mut s = base;
            for (j, &x) in rest.iter().enumerate() {
                s += conditional_spin(&h, cs, (history + j) as u64) as f64 * x;
            }
            *counts.entry(quantize(s)).or_insert(0) += 1;
        }
        counts.values().copied().max().unwrap_or(0)
    });
    let best = per_history.into_iter().max().unwrap_or(0);
    Ok(EstimateWithCI::proportion(best, plan.continuations, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(n: u64, bits: u64) -> f64 {
        n as f64 / (1u64 << bits) as f64
    }

    #[test]
    fn level_zero_and_one() {
        assert_eq!(sample_level(0, 1).unwrap().spins, vec![1]);
        for seed in 0..20 {
            let l = sample_level(1, seed).unwrap();
            assert_eq!(&l.spins[..2], &[1, 1]);
        }
        let thirds: Vec<i8> = (0..200).map(|s| sample_level(1, s).unwrap().spins[2]).collect();
        assert!(thirds.contains(&1) && thirds.contains(&-1));
        assert!(sample_level(14, 0).is_err());
    }

    #[test]
    fn levels_match_stream_and_copy_parents() {
        for seed in 0..10 {
            let top = sample_level(6, seed).unwrap();
            let stream: Vec<i8> = WalkStream::new(seed).take(top.spins.len()).collect();
            assert_eq!(top.spins, stream);
            for n in 1..=6 {
                let lvl = sample_level(n, seed).unwrap();
                assert_eq!(&lvl.spins[..], &top.spins[..lvl.spins.len()]);
                for j in 0..pow3(n - 1) {
                    let p = vertex_spin(seed, 1, j);
                    assert_eq!(lvl.spins[3 * j as usize], p);
                    assert_eq!(lvl.spins[3 * j as usize + 1], p);
                }
            }
        }
    }

    #[test]
    fn exact_small_levels() {
        let d0 = exact_levelsum(0).unwrap();
        assert_eq!(d0.rows().collect::<Vec<_>>(), vec![(1, 1.0)]);
        let d1 = exact_levelsum(1).unwrap();
        assert_eq!(d1.rows().collect::<Vec<_>>(), vec![(1, 0.5), (3, 0.5)]);
        let d2 = exact_levelsum(2).unwrap();
        assert_eq!(d2.bits, 4);
        assert_eq!(
            d2.rows().collect::<Vec<_>>(),
            vec![
                (-1, frac(1, 4)),
                (1, frac(3, 4)),
                (3, frac(4, 4)),
                (5, frac(4, 4)),
                (7, frac(3, 4)),
                (9, frac(1, 4)),
            ]
        );
        for n in 0..=4 {
            let d = exact_levelsum(n).unwrap();
            assert!(d.total_is_one());
            assert!(d.within_c_bound(C_BOUND));
            assert!(d.table.keys().all(|&x| (x - pow3(n) as i64) % 2 == 0));
        }
        assert!(exact_levelsum(9).is_err());
    }

    #[test]
    fn exact_level_matches_enumeration() {
        // all 2^13 bit assignments of the level-3 tree
        let exact = exact_levelsum(3).unwrap();
        let keys: Vec<(u32, u64)> = {
            let mut v: Vec<_> = (0..27).filter_map(leaf_key).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        assert_eq!(keys.len(), 13);
        let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
        for mask in 0u32..(1 << 13) {
            let sum: i64 = (0..27u64)
                .map(|i| match leaf_key(i) {
                    Some(k) => {
                        let b = keys.binary_search(&k).unwrap();
                        if mask >> b & 1 == 1 { 1 } else { -1 }
                    }
                    None => 1,
                })
                .sum();
            *counts.entry(sum).or_insert(0) += 1;
        }
        let got: BTreeMap<i64, u64> = exact
            .table
            .iter()
            .map(|(&x, c)| (x, c.to_u64().unwrap()))
            .collect();
        assert_eq!(got, counts);
    }

    #[test]
    fn predictability_small_cases() {
        let plan = PredictabilityPlan { histories: 4, continuations: 4000, workers: 1 };
        let e = estimate_predictability(1, 5, plan, 3).unwrap();
        assert!(e.estimate <= 1.0);
        // n = 0, k = 9: the law of Y_2, sup 1/4
        let e = estimate_predictability(9, 0, plan, 3).unwrap();
        assert!((e.estimate - 0.25).abs() < 5.0 * e.std_error + 1e-9, "{e}");
        // after leaf 2 is revealed, leaf 3 copies the root: fully predictable
        let e = estimate_predictability(2, 3, plan, 8).unwrap();
        assert_eq!(e.estimate, 1.0);
    }

    #[test]
    fn unit_steps_follow_the_stream() {
        let mut g = GeneralStepWalk::new(&[1.0; 50], 17, 99).unwrap();
        let mut w = WalkStream::new(17);
        for _ in 0..50 {
            let a = g.next_position().unwrap();
            w.next_increment();
            assert_eq!(a, w.position() as f64);
        }
        assert_eq!(g.next_position(), None);
        assert!(GeneralStepWalk::new(&[1.0, 0.0], 1, 1).is_err());
    }

    #[test]
    fn general_steps_first_pair_is_deterministic() {
        // σ_1 = σ_2 = +1 always, so S̃_2 = 3 whatever the order
        let plan = PredictabilityPlan { histories: 3, continuations: 500, workers: 1 };
        let e = general_step_point_mass(&[1.0, 2.0], 0, plan, 5).unwrap();
        assert_eq!(e.estimate, 1.0);
        // k = 1 after two revealed steps: one fresh sign, mass ½ each side
        let e = general_step_point_mass(&[1.0, 2.0, 5.0], 2, plan, 5).unwrap();
        assert!((e.estimate - 0.5).abs() < 0.1, "{e}");
        assert!(general_step_point_mass(&[1.0, -2.0], 0, plan, 5).is_err());
    }

    #[test]
    fn unit_steps_reduce_to_level_sum() {
        let plan = PredictabilityPlan { histories: 1, continuations: 20_000, workers: 1 };
        let e = general_step_point_mass(&[1.0; 27], 0, plan, 2).unwrap();
        let sup = exact_levelsum(3).unwrap().sup_mass();
        assert!((e.estimate - sup).abs() < 5.0 * e.std_error, "{e} vs {sup}");
    }
}
