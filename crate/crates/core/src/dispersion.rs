//! Exact laws of `Σ a_k Y_k` for independent fair signs `Y_k`, and the
//! cosine moments `I_n = (1/π) ∫_{-π/2}^{π/2} cos^n t dt`.
//!
//! Masses are kept as integer pattern counts over `2^n`, so equality cases
//! of the bounds are decided exactly.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_bigint::BigUint;
use thiserror::Error;

/// Largest `n` for which sign-pattern enumeration is allowed.
pub const ENUMERATION_CAP: usize = 24;
/// Largest `Σ a_k` for the convolution table.
pub const DP_SUM_CAP: u128 = 1_000_000;
/// Counts are `u128`, so at most this many coefficients.
pub const COUNT_BITS_CAP: usize = 126;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DispersionError {
    #[error("size limits exceeded: n = {n}, sum = {sum}")]
    TooLarge { n: usize, sum: u128 },
    #[error("coefficient vector has no positive entry")]
    AllZero,
}

/// A probability `count / 2^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dyadic {
    pub count: u128,
    pub exponent: u32,
}

impl Dyadic {
    pub fn to_f64(self) -> f64 {
        self.count as f64 * (-(self.exponent as f64)).exp2()
    }

    /// `self ≥ num / den`, exactly.
    pub fn at_least(self, num: u64, den: u64) -> bool {
        BigUint::from(self.count) * den >= (BigUint::from(1u8) << self.exponent) * num
    }
}

/// Law of `Σ a_k Y_k` as counts over `2^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedSumDistribution {
    pub n: usize,
    /// Sorted support with strictly positive counts.
    pub support: Vec<i64>,
    pub counts: Vec<u128>,
}

impl SignedSumDistribution {
    pub fn mass(&self, x: i64) -> Dyadic {
        let count = self
            .support
            .binary_search(&x)
            .map_or(0, |i| self.counts[i]);
        Dyadic { count, exponent: self.n as u32 }
    }

    pub fn total(&self) -> u128 {
        self.counts.iter().sum()
    }

    pub fn is_symmetric(&self) -> bool {
        self.support
            .iter()
            .zip(&self.counts)
            .all(|(&x, &c)| self.mass(-x).count == c)
    }

    pub fn max_count(&self) -> u128 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    fn count_where(&self, f: impl Fn(i64) -> bool) -> u128 {
        self.support
            .iter()
            .zip(&self.counts)
            .filter(|(&x, _)| f(x))
            .map(|(_, &c)| c)
            .sum()
    }

    /// `(value, numerator, denominator exponent)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (i64, u128, u32)> + '_ {
        self.support
            .iter()
            .zip(&self.counts)
            .map(move |(&x, &c)| (x, c, self.n as u32))
    }
}

fn sum_of(a: &[u64]) -> u128 {
    a.iter().map(|&x| x as u128).sum()
}

/// Exact law by brute-force enumeration of all `2^n` sign patterns.
pub fn enumerate_distribution(a: &[u64]) -> Result<SignedSumDistribution, DispersionError> {
    let n = a.len();
    let sum = sum_of(a);
    if n > ENUMERATION_CAP || sum > i64::MAX as u128 {
        return Err(DispersionError::TooLarge { n, sum });
    }
    let mut table: BTreeMap<i64, u128> = BTreeMap::new();
    for mask in 0u64..(1u64 << n) {
        let s: i64 = a
            .iter()
            .enumerate()
            .map(|(k, &c)| if mask >> k & 1 == 1 { c as i64 } else { -(c as i64) })
            .sum();
        *table.entry(s).or_insert(0) += 1;
    }
    Ok(SignedSumDistribution {
        n,
        support: table.keys().copied().collect(),
        counts: table.values().copied().collect(),
    })
}

/// Exact law by iterated convolution over a dense table indexed by the sum.
pub fn convolve_distribution(a: &[u64]) -> Result<SignedSumDistribution, DispersionError> {
    let n = a.len();
    let sum = sum_of(a);
    if sum > DP_SUM_CAP || n > COUNT_BITS_CAP {
        return Err(DispersionError::TooLarge { n, sum });
    }
    let s = sum as usize;
    // index i represents the value i - s
    let mut cur = vec![0u128; 2 * s + 1];
    cur[s] = 1;
    let mut reach = 0usize;
    for &c in a {
        let c = c as usize;
        let mut next = vec![0u128; 2 * s + 1];
        for i in (s - reach)..=(s + reach) {
            let v = cur[i];
            if v != 0 {
                next[i - c] += v;
                next[i + c] += v;
            }
        }
        reach += c;
        cur = next;
    }
    let mut support = Vec::new();
    let mut counts = Vec::new();
    for (i, &c) in cur.iter().enumerate() {
        if c != 0 {
            support.push(i as i64 - s as i64);
            counts.push(c);
        }
    }
    Ok(SignedSumDistribution { n, support, counts })
}

/// Exact law of `Σ a_k Y_k`: convolution when the sum is small enough,
/// otherwise enumeration.
pub fn exact_distribution(a: &[u64]) -> Result<SignedSumDistribution, DispersionError> {
    if sum_of(a) <= DP_SUM_CAP && a.len() <= COUNT_BITS_CAP {
        convolve_distribution(a)
    } else {
        enumerate_distribution(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMassCheck {
    pub mass: Dyadic,
    /// Number of nonzero coefficients.
    pub n: usize,
    /// `1 / √n`.
    pub bound: f64,
    /// `mass ≤ 1/√n`, decided exactly as `count² n ≤ 4^n`.
    pub holds: bool,
}

/// `sup_x P(Σ a_k Y_k = x)` after dropping zero coefficients.
pub fn max_point_mass(a: &[u64]) -> Result<PointMassCheck, DispersionError> {
    let pos: Vec<u64> = a.iter().copied().filter(|&c| c > 0).collect();
    if pos.is_empty() {
        return Err(DispersionError::AllZero);
    }
    let dist = exact_distribution(&pos)?;
    let n = pos.len();
    let count = dist.max_count();
    let lhs = BigUint::from(count).pow(2) * n;
    let rhs = BigUint::from(1u8) << (2 * n);
    Ok(PointMassCheck {
        mass: Dyadic { count, exponent: n as u32 },
        n,
        bound: 1.0 / (n as f64).sqrt(),
        holds: lhs <= rhs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBounds {
    pub p_pos: Dyadic,
    pub p_nonzero: Dyadic,
    pub p_nonneg: Dyadic,
}

impl TailBounds {
    /// `p_pos ≥ ¼`, `p_nonzero ≥ ½`, `p_nonneg ≥ ½`, exactly.
    pub fn holds(&self) -> bool {
        self.p_pos.at_least(1, 4) && self.p_nonzero.at_least(1, 2) && self.p_nonneg.at_least(1, 2)
    }
}

/// Exact `P(Σ > 0)`, `P(Σ ≠ 0)`, `P(Σ ≥ 0)`; zero coefficients are kept.
pub fn tail_bounds(a: &[u64]) -> Result<TailBounds, DispersionError> {
    if a.iter().all(|&c| c == 0) {
        return Err(DispersionError::AllZero);
    }
    let dist = exact_distribution(a)?;
    let e = dist.n as u32;
    Ok(TailBounds {
        p_pos: Dyadic { count: dist.count_where(|x| x > 0), exponent: e },
        p_nonzero: Dyadic { count: dist.count_where(|x| x != 0), exponent: e },
        p_nonneg: Dyadic { count: dist.count_where(|x| x >= 0), exponent: e },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineMoment {
    pub n: u64,
    /// Value from the recursion `I_n = (n-1)/n I_{n-2}`.
    pub value: f64,
    /// `2^{-n} C(n, n/2)` for even `n`.
    pub closed_form: Option<f64>,
}

impl CosineMoment {
    /// `I_n ≤ 1/√n` (n ≥ 1).
    pub fn within_sqrt_bound(&self) -> bool {
        self.n == 0 || self.value <= 1.0 / (self.n as f64).sqrt()
    }

    /// `I_n ≤ 0.87/√n` for even `n ≥ 2`; `None` otherwise.
    pub fn within_even_bound(&self) -> Option<bool> {
        (self.n >= 2 && self.n.is_multiple_of(2)).then(|| self.value <= 0.87 / (self.n as f64).sqrt())
    }
}

pub fn cosine_moment(n: u64) -> CosineMoment {
    let mut value = if n.is_multiple_of(2) { 1.0 } else { 2.0 / PI };
    let mut m = if n.is_multiple_of(2) { 2 } else { 3 };
    while m <= n {
        value *= (m - 1) as f64 / m as f64;
        m += 2;
    }
    let closed_form = n.is_multiple_of(2).then(|| central_binomial_over_power(n));
    CosineMoment { n, value, closed_form }
}

/// `2^{-n} C(n, n/2)` for even `n`, via exact integers when they fit in
/// `f64` range and the product form otherwise.
fn central_binomial_over_power(n: u64) -> f64 {
    if n <= 1000 {
        let mut c = BigUint::from(1u8);
        for j in 0..n / 2 {
            c = c * (n - j) / (j + 1);
        }
        let bits = c.bits();
        let shift = bits.saturating_sub(60);
        let top = (&c >> shift).to_u64_digits().first().copied().unwrap_or(0) as f64;
        top * ((shift as f64) - n as f64).exp2()
    } else {
        (1..=n / 2).map(|j| (2 * j - 1) as f64 / (2 * j) as f64).product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(d: &SignedSumDistribution) -> Vec<(i64, u128)> {
        d.support.iter().copied().zip(d.counts.iter().copied()).collect()
    }

    #[test]
    fn small_distributions() {
        let d = exact_distribution(&[1]).unwrap();
        assert_eq!(table(&d), vec![(-1, 1), (1, 1)]);
        let d = exact_distribution(&[1, 2, 3]).unwrap();
        assert_eq!(
            table(&d),
            vec![(-6, 1), (-4, 1), (-2, 1), (0, 2), (2, 1), (4, 1), (6, 1)]
        );
        let d = exact_distribution(&[1, 1]).unwrap();
        assert_eq!(table(&d), vec![(-2, 1), (0, 2), (2, 1)]);
        assert_eq!(d.total(), 4);
    }

    #[test]
    fn point_mass_examples() {
        let r = max_point_mass(&[1, 1]).unwrap();
        assert_eq!(r.mass.to_f64(), 0.5);
        assert!(r.holds);
        let r = max_point_mass(&[1, 2, 3]).unwrap();
        assert_eq!(r.mass.to_f64(), 0.25);
        assert!(r.holds);
        let r = max_point_mass(&[1]).unwrap();
        assert_eq!((r.mass.to_f64(), r.bound), (0.5, 1.0));
        // zeros are dropped
        assert_eq!(max_point_mass(&[0, 1, 0, 1]).unwrap().n, 2);
        assert_eq!(max_point_mass(&[0, 0]), Err(DispersionError::AllZero));
    }

    #[test]
    fn tail_examples() {
        let t = tail_bounds(&[1, 1]).unwrap();
        assert_eq!(
            (t.p_pos.to_f64(), t.p_nonzero.to_f64(), t.p_nonneg.to_f64()),
            (0.25, 0.5, 0.75)
        );
        assert!(t.holds());
        let t = tail_bounds(&[1, 0, 0]).unwrap();
        assert_eq!(
            (t.p_pos.to_f64(), t.p_nonzero.to_f64(), t.p_nonneg.to_f64()),
            (0.5, 1.0, 0.5)
        );
        let t = tail_bounds(&[1, 2, 3]).unwrap();
        assert_eq!(
            (t.p_pos.to_f64(), t.p_nonzero.to_f64(), t.p_nonneg.to_f64()),
            (0.375, 0.75, 0.625)
        );
        assert_eq!(tail_bounds(&[0, 0, 0]), Err(DispersionError::AllZero));
    }

    #[test]
    fn size_limits() {
        let big = vec![1u64; 30];
        assert!(enumerate_distribution(&big).is_err());
        assert!(exact_distribution(&big).is_ok());
        assert!(exact_distribution(&[u64::MAX / 4, 1]).is_ok());
        let huge = vec![1u64 << 40; 25];
        assert!(matches!(exact_distribution(&huge), Err(DispersionError::TooLarge { .. })));
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_moment(0).value, 1.0);
        assert_eq!(cosine_moment(2).value, 0.5);
        assert_eq!(cosine_moment(6).value, 0.3125);
        assert!((cosine_moment(1).value - 2.0 / PI).abs() < 1e-15);
        for n in (0..=200).step_by(2) {
            let m = cosine_moment(n);
            assert!((m.value - m.closed_form.unwrap()).abs() < 1e-12, "n={n}");
        }
        assert!((central_binomial_over_power(2000) - cosine_moment(2000).value).abs() < 1e-12);
    }

    fn simpson(n: i32, steps: usize) -> f64 {
        let (a, b) = (-PI / 2.0, PI / 2.0);
        let h = (b - a) / steps as f64;
        let f = |t: f64| t.cos().powi(n);
        let mut s = f(a) + f(b);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0 / PI
    }

    #[test]
    fn quadrature_agrees_with_recursion() {
        for n in 0..=30 {
            let q = simpson(n, 20_000);
            assert!((q - cosine_moment(n as u64).value).abs() < 1e-9, "n={n}");
        }
    }

    proptest! {
        #[test]
        fn enumeration_equals_convolution(a in prop::collection::vec(0u64..20, 0..=16)) {
            prop_assert_eq!(enumerate_distribution(&a).unwrap(), convolve_distribution(&a).unwrap());
        }

        #[test]
        fn distribution_is_symmetric(a in prop::collection::vec(0u64..1000, 0..=40)) {
            let d = exact_distribution(&a).unwrap();
            prop_assert!(d.is_symmetric());
            prop_assert_eq!(d.total(), 1u128 << a.len());
        }

        #[test]
        fn bounds_hold(a in prop::collection::vec(1u64..50, 1..=20)) {
            prop_assert!(max_point_mass(&a).unwrap().holds);
            prop_assert!(tail_bounds(&a).unwrap().holds());
        }
    }
}
