//! Connection-probability kernels.
//!
//! A kernel assigns to every nonzero displacement `x ∈ Z^d` the probability
//! `p_x ∈ [0, 1)` that an edge `{a, a + x}` is open. Kernels are immutable
//! once built and can be shared freely between worker threads.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::lattice::{self, CubeIter};
use crate::potts::FkMapping;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("kernel queried at the zero displacement")]
    ZeroDisplacement,
    #[error("displacement has dimension {got}, kernel has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("probability {0} outside [0, 1)")]
    InvalidProbability(f64),
    #[error("invalid kernel parameter: {0}")]
    InvalidParameter(String),
    #[error("declared symmetry violated: {0}")]
    SymmetryViolation(String),
    #[error("operation requires a mirror-symmetric kernel")]
    NotMirrorSymmetric,
    #[error("operation requires finite support or an l-infinity radial profile")]
    UnboundedSupport,
}

/// Norm used for truncation radii and inverse-power decay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Norm {
    #[default]
    Linf,
    L2,
    L1,
}

impl Norm {
    pub fn eval(self, x: &[i64]) -> f64 {
        match self {
            Norm::Linf => lattice::linf(x) as f64,
            Norm::L2 => lattice::l2(x),
            Norm::L1 => lattice::l1(x) as f64,
        }
    }

    /// Whether `‖x‖ ≤ r`, compared exactly for the integer norms.
    pub fn within(self, x: &[i64], r: u64) -> bool {
        match self {
            Norm::Linf => lattice::linf(x) <= r,
            Norm::L1 => lattice::l1(x) <= r,
            Norm::L2 => {
                let s: u128 = x.iter().map(|&c| (c.unsigned_abs() as u128).pow(2)).sum();
                s <= (r as u128) * (r as u128)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Norm::Linf => "linf",
            Norm::L2 => "l2",
            Norm::L1 => "l1",
        }
    }

    pub fn parse(s: &str) -> Option<Norm> {
        match s {
            "linf" => Some(Norm::Linf),
            "l2" => Some(Norm::L2),
            "l1" => Some(Norm::L1),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryClass {
    /// Invariant under flipping the sign of any coordinate.
    MirrorSymmetric,
    /// Invariant under every signed permutation matrix.
    SignedPermutationInvariant,
    None,
}

impl SymmetryClass {
    pub fn is_mirror(self) -> bool {
        matches!(
            self,
            SymmetryClass::MirrorSymmetric | SymmetryClass::SignedPermutationInvariant
        )
    }

    pub fn is_isotropic(self) -> bool {
        self == SymmetryClass::SignedPermutationInvariant
    }
}

/// Anything that assigns edge probabilities to displacements.
pub trait EdgeKernel: Send + Sync {
    fn dimension(&self) -> usize;

    /// `p_x` without argument validation; `x` must be nonzero and of the
    /// kernel's dimension.
    fn p(&self, x: &[i64]) -> f64;

    /// Smallest `r` with `p_x = 0` whenever `‖x‖∞ > r`, if one exists.
    fn support_radius(&self) -> Option<u64>;

    /// `Some(p)` when `p_x` depends only on `‖x‖∞` and equals `p` on the
    /// shell `‖x‖∞ = n`.
    fn linf_profile(&self, n: u64) -> Option<f64>;

    fn symmetry(&self) -> SymmetryClass;

    fn prob_at(&self, x: &[i64]) -> Result<f64, KernelError> {
        if x.len() != self.dimension() {
            return Err(KernelError::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        if x.iter().all(|&c| c == 0) {
            return Err(KernelError::ZeroDisplacement);
        }
        Ok(self.p(x))
    }

    fn is_radial(&self) -> bool {
        self.linf_profile(1).is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    /// `p_x = min(cap, c ‖x‖^{-exponent})`.
    InversePower {
        c: f64,
        exponent: f64,
        cap: f64,
        norm: Norm,
    },
    /// `δ` on the cube `0 < ‖x‖∞ ≤ radius`.
    FlatBox { delta: f64, radius: u64 },
    /// `½` on `k e_1` for `0 < |k| ≤ n`, `ε` on `±e_i` for `i ≥ 2`.
    Counterexample { n: u64, eps: f64 },
    /// Explicit finite map; zero off the listed support.
    Table(BTreeMap<Vec<i64>, f64>),
    /// Layers `‖x‖∞ = n > threshold` scaled by `1 / max(1, layer sum)`.
    LayerNormalized {
        base: Box<Kernel>,
        threshold: u64,
        /// Explicit scale for `n = threshold + 1 ..`; empty when the base is
        /// radial and scales are computed in closed form.
        scales: Vec<f64>,
    },
    /// Potts potential pushed through the Fortuin–Kasteleyn map.
    FkMapped(FkMapping),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    dim: usize,
    family: KernelFamily,
    symmetry: SymmetryClass,
}

fn check_prob(p: f64) -> Result<f64, KernelError> {
    if (0.0..1.0).contains(&p) {
        Ok(p)
    } else {
        Err(KernelError::InvalidProbability(p))
    }
}

fn check_dim(d: usize) -> Result<(), KernelError> {
    if d == 0 {
        Err(KernelError::InvalidParameter("dimension must be positive".into()))
    } else {
        Ok(())
    }
}

impl Kernel {
    pub fn inverse_power(
        d: usize,
        c: f64,
        exponent: f64,
        cap: f64,
        norm: Norm,
    ) -> Result<Kernel, KernelError> {
        check_dim(d)?;
        check_prob(cap)?;
        if !(c >= 0.0 && c.is_finite()) || !exponent.is_finite() {
            return Err(KernelError::InvalidParameter(format!(
                "inverse-power needs finite c >= 0 and finite exponent, got c={c}, exponent={exponent}"
            )));
        }
        Ok(Kernel {
            dim: d,
            family: KernelFamily::InversePower { c, exponent, cap, norm },
            symmetry: SymmetryClass::SignedPermutationInvariant,
        })
    }

    pub fn flat_box(d: usize, delta: f64, radius: u64) -> Result<Kernel, KernelError> {
        check_dim(d)?;
        check_prob(delta)?;
        Ok(Kernel {
            dim: d,
            family: KernelFamily::FlatBox { delta, radius },
            symmetry: SymmetryClass::SignedPermutationInvariant,
        })
    }

    pub fn counterexample(d: usize, n: u64, eps: f64) -> Result<Kernel, KernelError> {
        check_dim(d)?;
        check_prob(eps)?;
        if n == 0 {
            return Err(KernelError::InvalidParameter("counterexample needs N >= 1".into()));
        }
        Ok(Kernel {
            dim: d,
            family: KernelFamily::Counterexample { n, eps },
            symmetry: SymmetryClass::MirrorSymmetric,
        })
    }

    /// Explicit kernel. The declared symmetry is verified on the finite
    /// support, so a table that claims a class it does not have is rejected.
    pub fn table(
        d: usize,
        entries: BTreeMap<Vec<i64>, f64>,
        symmetry: SymmetryClass,
    ) -> Result<Kernel, KernelError> {
        check_dim(d)?;
        for (x, &p) in &entries {
            if x.len() != d {
                return Err(KernelError::DimensionMismatch { expected: d, got: x.len() });
            }
            if x.iter().all(|&c| c == 0) {
                return Err(KernelError::ZeroDisplacement);
            }
            check_prob(p)?;
        }
        let lookup = |y: &[i64]| entries.get(y).copied().unwrap_or(0.0);
        if symmetry.is_mirror() {
            for (x, &p) in &entries {
                for mask in 0u32..(1 << d) {
                    let y: Vec<i64> = x
                        .iter()
                        .enumerate()
                        .map(|(i, &c)| if mask >> i & 1 == 1 { -c } else { c })
                        .collect();
                    if lookup(&y) != p {
                        return Err(KernelError::SymmetryViolation(format!(
                            "p{x:?} = {p} but p{y:?} = {}",
                            lookup(&y)
                        )));
                    }
                }
            }
        }
        if symmetry.is_isotropic() {
            for (x, &p) in &entries {
                let mut y = x.clone();
                for i in 0..d {
                    for j in (i + 1)..d {
                        y.swap(i, j);
                        if lookup(&y) != p {
                            return Err(KernelError::SymmetryViolation(format!(
                                "p{x:?} = {p} but p{y:?} = {}",
                                lookup(&y)
                            )));
                        }
                        y.swap(i, j);
                    }
                }
            }
        }
        Ok(Kernel {
            dim: d,
            family: KernelFamily::Table(entries),
            symmetry,
        })
    }

    /// `p_x = 0` everywhere.
    pub fn zero(d: usize) -> Result<Kernel, KernelError> {
        Kernel::table(d, BTreeMap::new(), SymmetryClass::SignedPermutationInvariant)
    }

    /// `p` on the `2d` unit displacements.
    pub fn nearest_neighbour(d: usize, p: f64) -> Result<Kernel, KernelError> {
        let mut t = BTreeMap::new();
        for i in 0..d {
            for s in [-1, 1] {
                let mut e = vec![0; d];
                e[i] = s;
                t.insert(e, p);
            }
        }
        Kernel::table(d, t, SymmetryClass::SignedPermutationInvariant)
    }

    pub(crate) fn from_fk(mapping: FkMapping) -> Kernel {
        Kernel {
            dim: mapping.dimension(),
            symmetry: mapping.symmetry(),
            family: KernelFamily::FkMapped(mapping),
        }
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    /// Sum of `p_x` over `0 < ‖x‖∞ ≤ radius`.
    pub fn expected_degree(&self, radius: u64) -> f64 {
        expected_degree(self, radius)
    }

    /// Sum over the layer `{‖x‖∞ = n, |x_1| = n}`.
    pub fn layer_sum(&self, n: u64) -> Result<f64, KernelError> {
        layer_sum(self, n)
    }

    /// Scales every layer `‖x‖∞ = n > threshold` by `1 / max(1, layer sum)`
    /// so that the `|x_1| = n` part of each such layer carries mass at most 1.
    pub fn layer_normalize(&self, threshold: u64) -> Result<Kernel, KernelError> {
        if !self.symmetry.is_mirror() {
            return Err(KernelError::NotMirrorSymmetric);
        }
        let scales = if self.is_radial() {
            Vec::new()
        } else {
            let r = self.support_radius().ok_or(KernelError::UnboundedSupport)?;
            ((threshold + 1)..=r)
                .map(|n| layer_sum(self, n).map(|s| 1.0 / s.max(1.0)))
                .collect::<Result<Vec<_>, _>>()?
        };
        Ok(Kernel {
            dim: self.dim,
            family: KernelFamily::LayerNormalized {
                base: Box::new(self.clone()),
                threshold,
                scales,
            },
            symmetry: self.symmetry,
        })
    }
}

/// `1 / max(1, 2 (2n+1)^{d-1} p(n))` for a radial profile value `p(n)`.
fn radial_layer_scale(d: usize, n: u64, pn: f64) -> f64 {
    let face = 2.0 * ((2 * n + 1) as f64).powi(d as i32 - 1);
    1.0 / (face * pn).max(1.0)
}

impl EdgeKernel for Kernel {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn p(&self, x: &[i64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.family {
            KernelFamily::InversePower { c, exponent, cap, norm } => {
                let r = norm.eval(x);
                (c * r.powf(-exponent)).min(*cap)
            }
            KernelFamily::FlatBox { delta, radius } => {
                if lattice::linf(x) <= *radius {
                    *delta
                } else {
                    0.0
                }
            }
            KernelFamily::Counterexample { n, eps } => {
                let tail_zero = x[1..].iter().all(|&c| c == 0);
                if tail_zero {
                    let k = x[0].unsigned_abs();
                    if k >= 1 && k <= *n {
                        0.5
                    } else {
                        0.0
                    }
                } else if x[0] == 0 && lattice::l1(&x[1..]) == 1 {
                    *eps
                } else {
                    0.0
                }
            }
            KernelFamily::Table(t) => t.get(x).copied().unwrap_or(0.0),
            KernelFamily::LayerNormalized { base, threshold, scales } => {
                let n = lattice::linf(x);
                let p = base.p(x);
                if n <= *threshold {
                    return p;
                }
                if scales.is_empty() {
                    match base.linf_profile(n) {
                        Some(pn) => p * radial_layer_scale(self.dim, n, pn),
                        None => p,
                    }
                } else {
                    let i = (n - threshold - 1) as usize;
                    scales.get(i).map_or(p, |s| p * s)
                }
            }
            KernelFamily::FkMapped(m) => m.prob(x),
        }
    }

    fn support_radius(&self) -> Option<u64> {
        match &self.family {
            KernelFamily::InversePower { c, .. } => (*c == 0.0).then_some(0),
            KernelFamily::FlatBox { delta, radius } => Some(if *delta == 0.0 { 0 } else { *radius }),
            KernelFamily::Counterexample { n, eps } => {
                Some(if *eps > 0.0 && self.dim > 1 { (*n).max(1) } else { *n })
            }
            KernelFamily::Table(t) => Some(
                t.iter()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(x, _)| lattice::linf(x))
                    .max()
                    .unwrap_or(0),
            ),
            KernelFamily::LayerNormalized { base, .. } => base.support_radius(),
            KernelFamily::FkMapped(m) => m.support_radius(),
        }
    }

    fn linf_profile(&self, n: u64) -> Option<f64> {
        if n == 0 {
            return None;
        }
        match &self.family {
            KernelFamily::InversePower { c, exponent, cap, norm: Norm::Linf } => {
                Some((c * (n as f64).powf(-exponent)).min(*cap))
            }
            KernelFamily::FlatBox { delta, radius } => Some(if n <= *radius { *delta } else { 0.0 }),
            KernelFamily::LayerNormalized { base, threshold, scales } if scales.is_empty() => {
                let pn = base.linf_profile(n)?;
                Some(if n <= *threshold { pn } else { pn * radial_layer_scale(self.dim, n, pn) })
            }
            KernelFamily::FkMapped(m) => m.linf_profile(n),
            _ => None,
        }
    }

    fn symmetry(&self) -> SymmetryClass {
        self.symmetry
    }
}

/// A kernel with every displacement longer than `radius` removed.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedKernel {
    pub base: Kernel,
    pub radius: u64,
    pub norm: Norm,
}

impl TruncatedKernel {
    pub fn new(base: Kernel, radius: u64, norm: Norm) -> Self {
        TruncatedKernel { base, radius, norm }
    }
}

impl EdgeKernel for TruncatedKernel {
    fn dimension(&self) -> usize {
        self.base.dim
    }

    fn p(&self, x: &[i64]) -> f64 {
        if self.norm.within(x, self.radius) {
            self.base.p(x)
        } else {
            0.0
        }
    }

    fn support_radius(&self) -> Option<u64> {
        // every norm here dominates the l-infinity norm
        Some(self.base.support_radius().map_or(self.radius, |r| r.min(self.radius)))
    }

    fn linf_profile(&self, n: u64) -> Option<f64> {
        if self.norm != Norm::Linf {
            return None;
        }
        let p = self.base.linf_profile(n)?;
        Some(if n <= self.radius { p } else { 0.0 })
    }

    fn symmetry(&self) -> SymmetryClass {
        self.base.symmetry
    }
}

/// Number of sites on the shell `‖x‖∞ = n` in `Z^d`.
pub fn shell_size(d: usize, n: u64) -> u128 {
    if n == 0 {
        return 1;
    }
    let a = (2 * n + 1) as u128;
    let b = (2 * n - 1) as u128;
    a.pow(d as u32) - b.pow(d as u32)
}

/// `Σ_{0 < ‖x‖∞ ≤ radius} p_x`.
pub fn expected_degree<K: EdgeKernel + ?Sized>(kernel: &K, radius: u64) -> f64 {
    let d = kernel.dimension();
    if kernel.is_radial() {
        let top = kernel.support_radius().map_or(radius, |r| r.min(radius));
        return (1..=top)
            .map(|n| kernel.linf_profile(n).unwrap_or(0.0) * shell_size(d, n) as f64)
            .sum();
    }
    let r = kernel.support_radius().map_or(radius, |s| s.min(radius));
    CubeIter::new(d, r)
        .filter(|x| x.iter().any(|&c| c != 0))
        .map(|x| kernel.p(&x))
        .sum()
}

/// `Σ_{‖x‖∞ = n, |x_1| = n} p_x`.
pub fn layer_sum<K: EdgeKernel + ?Sized>(kernel: &K, n: u64) -> Result<f64, KernelError> {
    let d = kernel.dimension();
    if n == 0 {
        return Ok(0.0);
    }
    if let Some(pn) = kernel.linf_profile(n) {
        return Ok(pn * 2.0 * ((2 * n + 1) as f64).powi(d as i32 - 1));
    }
    if kernel.support_radius().is_some_and(|r| n > r) {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for tail in CubeIter::new(d - 1, n) {
        for s in [-1i64, 1] {
            let mut x = Vec::with_capacity(d);
            x.push(s * n as i64);
            x.extend_from_slice(&tail);
            total += kernel.p(&x);
        }
    }
    Ok(total)
}

/// Result of comparing the maximum of `N` independent `p/N`-thinned copies
/// of an edge with the original edge probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitDomination {
    /// `1 - (1 - p/N)^N`.
    pub lhs: f64,
    /// `p`.
    pub rhs: f64,
    pub holds: bool,
}

pub fn verify_split_domination(p: f64, copies: u64) -> Result<SplitDomination, KernelError> {
    check_prob(p)?;
    if copies == 0 {
        return Err(KernelError::InvalidParameter("need at least one copy".into()));
    }
    // 1 - (1-q)^N = q Σ_{j<N} (1-q)^j with q = p/N; written as p (S/N) so that
    // rounding can never push the left side above p.
    let q = p / copies as f64;
    let mut term = 1.0;
    let mut s = 0.0;
    for _ in 0..copies {
        s += term;
        term *= 1.0 - q;
    }
    let lhs = p * (s / copies as f64);
    Ok(SplitDomination { lhs, rhs: p, holds: lhs <= p })
}
