//! Ferromagnetic potentials and the Fortuin–Kasteleyn map to percolation.
//!
//! A `q`-state Potts model with coupling `βφ` dominates the random-cluster
//! measure whose edge `{0, x}` is open with probability
//! `p_x = (1 - e^{-2βφ(x)}) / (1 + (q-1) e^{-2βφ(x)})`. This module builds
//! those kernels and evaluates the resulting magnetization bounds. No Gibbs
//! sampling is done here.

use std::collections::BTreeMap;
use std::f64::consts::LN_10;

use thiserror::Error;

use crate::kernel::{Kernel, KernelError, Norm, SymmetryClass};
use crate::lattice::{self, CubeIter};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PottsError {
    #[error("invalid Potts parameters: {0}")]
    InvalidParams(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("magnetization bound needs d >= 3, got {0}")]
    DimensionTooSmall(usize),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialFamily {
    /// `c ‖x‖^{-exponent}`.
    InversePower { c: f64, exponent: f64, norm: Norm },
    /// `value` on `0 < ‖x‖∞ ≤ radius`.
    FlatBox { value: f64, radius: u64 },
    Table(BTreeMap<Vec<i64>, f64>),
    Truncated { base: Box<Potential>, radius: u64, norm: Norm },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    dim: usize,
    family: PotentialFamily,
    symmetry: SymmetryClass,
}

fn check_value(v: f64) -> Result<(), PottsError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(PottsError::InvalidPotential(format!("value {v} is not a finite nonnegative number")))
    }
}

impl Potential {
    pub fn inverse_power(d: usize, c: f64, exponent: f64, norm: Norm) -> Result<Self, PottsError> {
        check_value(c)?;
        if d == 0 || !exponent.is_finite() {
            return Err(PottsError::InvalidPotential("need d >= 1 and a finite exponent".into()));
        }
        Ok(Potential {
            dim: d,
            family: PotentialFamily::InversePower { c, exponent, norm },
            symmetry: SymmetryClass::SignedPermutationInvariant,
        })
    }

    pub fn flat_box(d: usize, value: f64, radius: u64) -> Result<Self, PottsError> {
        check_value(value)?;
        if d == 0 {
            return Err(PottsError::InvalidPotential("need d >= 1".into()));
        }
        Ok(Potential {
            dim: d,
            family: PotentialFamily::FlatBox { value, radius },
            symmetry: SymmetryClass::SignedPermutationInvariant,
        })
    }

    /// Explicit potential; the declared symmetry is checked through the
    /// equivalent table kernel.
    pub fn table(
        d: usize,
        entries: BTreeMap<Vec<i64>, f64>,
        symmetry: SymmetryClass,
    ) -> Result<Self, PottsError> {
        for &v in entries.values() {
            check_value(v)?;
        }
        // reuse the kernel validator on a rescaled copy
        let top = entries.values().cloned().fold(0.0, f64::max);
        let scaled = entries
            .iter()
            .map(|(k, &v)| (k.clone(), if top > 0.0 { 0.5 * v / top } else { 0.0 }))
            .collect();
        Kernel::table(d, scaled, symmetry)?;
        Ok(Potential { dim: d, family: PotentialFamily::Table(entries), symmetry })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn symmetry(&self) -> SymmetryClass {
        self.symmetry
    }

    pub fn family(&self) -> &PotentialFamily {
        &self.family
    }

    /// `φ(x)` for nonzero `x` of the right dimension.
    pub fn value(&self, x: &[i64]) -> f64 {
        match &self.family {
            PotentialFamily::InversePower { c, exponent, norm } => c * norm.eval(x).powf(-exponent),
            PotentialFamily::FlatBox { value, radius } => {
                if lattice::linf(x) <= *radius {
                    *value
                } else {
                    0.0
                }
            }
            PotentialFamily::Table(t) => t.get(x).copied().unwrap_or(0.0),
            PotentialFamily::Truncated { base, radius, norm } => {
                if norm.within(x, *radius) {
                    base.value(x)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn value_at(&self, x: &[i64]) -> Result<f64, KernelError> {
        if x.len() != self.dim {
            return Err(KernelError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if x.iter().all(|&c| c == 0) {
            return Err(KernelError::ZeroDisplacement);
        }
        Ok(self.value(x))
    }

    pub fn support_radius(&self) -> Option<u64> {
        match &self.family {
            PotentialFamily::InversePower { c, .. } => (*c == 0.0).then_some(0),
            PotentialFamily::FlatBox { value, radius } => Some(if *value == 0.0 { 0 } else { *radius }),
            PotentialFamily::Table(t) => Some(
                t.iter()
                    .filter(|(_, &v)| v > 0.0)
                    .map(|(x, _)| lattice::linf(x))
                    .max()
                    .unwrap_or(0),
            ),
            PotentialFamily::Truncated { base, radius, .. } => {
                Some(base.support_radius().map_or(*radius, |r| r.min(*radius)))
            }
        }
    }

    /// Value on the shell `‖x‖∞ = n` when `φ` depends only on `‖x‖∞`.
    pub fn linf_profile(&self, n: u64) -> Option<f64> {
        if n == 0 {
            return None;
        }
        match &self.family {
            PotentialFamily::InversePower { c, exponent, norm: Norm::Linf } => {
                Some(c * (n as f64).powf(-exponent))
            }
            PotentialFamily::FlatBox { value, radius } => Some(if n <= *radius { *value } else { 0.0 }),
            PotentialFamily::Truncated { base, radius, norm: Norm::Linf } => {
                let v = base.linf_profile(n)?;
                Some(if n <= *radius { v } else { 0.0 })
            }
            _ => None,
        }
    }
}

/// `φ_N(x) = φ(x) 1{‖x‖ ≤ N}`.
pub fn truncate_potential(potential: &Potential, radius: u64, norm: Norm) -> Potential {
    Potential {
        dim: potential.dim,
        symmetry: potential.symmetry,
        family: PotentialFamily::Truncated { base: Box::new(potential.clone()), radius, norm },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PottsParams {
    pub q: u32,
    pub beta: f64,
    pub boundary_spin: u32,
}

impl PottsParams {
    pub fn new(q: u32, beta: f64, boundary_spin: u32) -> Result<Self, PottsError> {
        if q < 2 {
            return Err(PottsError::InvalidParams(format!("q must be at least 2, got {q}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(PottsError::InvalidParams(format!("beta must be positive, got {beta}")));
        }
        if boundary_spin == 0 || boundary_spin > q {
            return Err(PottsError::InvalidParams(format!(
                "boundary spin must lie in 1..={q}, got {boundary_spin}"
            )));
        }
        Ok(PottsParams { q, beta, boundary_spin })
    }
}

/// Largest double below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// `(1 - e^{-2t}) / (1 + (q-1) e^{-2t})` with `t = βφ`, kept strictly below 1.
pub fn fk_probability(beta_phi: f64, q: u32) -> f64 {
    if beta_phi <= 0.0 {
        return 0.0;
    }
    let e = (-2.0 * beta_phi).exp();
    let p = -(-2.0 * beta_phi).exp_m1() / (1.0 + (q as f64 - 1.0) * e);
    p.min(BELOW_ONE)
}

/// Potential pushed through [`fk_probability`].
#[derive(Debug, Clone, PartialEq)]
pub struct FkMapping {
    pub potential: Potential,
    pub beta: f64,
    pub q: u32,
}

impl FkMapping {
    pub fn dimension(&self) -> usize {
        self.potential.dim
    }

    pub fn symmetry(&self) -> SymmetryClass {
        self.potential.symmetry
    }

    pub fn prob(&self, x: &[i64]) -> f64 {
        fk_probability(self.beta * self.potential.value(x), self.q)
    }

    pub fn support_radius(&self) -> Option<u64> {
        self.potential.support_radius()
    }

    pub fn linf_profile(&self, n: u64) -> Option<f64> {
        self.potential
            .linf_profile(n)
            .map(|v| fk_probability(self.beta * v, self.q))
    }
}

pub fn map_to_percolation(potential: &Potential, params: &PottsParams) -> Kernel {
    Kernel::from_fk(FkMapping { potential: potential.clone(), beta: params.beta, q: params.q })
}

/// `1/q + (q-1)/q · θ`.
pub fn magnetization_lower_bound(theta: f64, q: u32) -> Result<f64, PottsError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(PottsError::InvalidProbability(theta));
    }
    if q < 2 {
        return Err(PottsError::InvalidParams(format!("q must be at least 2, got {q}")));
    }
    let q = q as f64;
    Ok(1.0 / q + (q - 1.0) / q * theta)
}

/// `log10 T(d)`: 400 for `d = 3`, 26 for `d ≥ 4`.
pub fn log10_threshold(d: usize) -> Result<f64, PottsError> {
    match d {
        0..=2 => Err(PottsError::DimensionTooSmall(d)),
        3 => Ok(400.0),
        _ => Ok(26.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnetizationBound {
    pub q: u32,
    pub beta: f64,
    pub radius: u64,
    /// `Σ_{0<‖x‖∞≤R} (βφ(x) ∧ 1)`; the full sum can only be larger, so the
    /// bound computed from it is conservative.
    pub sum: f64,
    /// `1 - exp(1 - Σ/(2qT(d)))` clamped at 0.
    pub bound: f64,
    pub vacuous: bool,
}

/// Evaluates `1 - exp(1 - S/(2qT(d)))` from `ln S`, returning the clamped
/// bound and whether the raw value was `≤ 0`. Values within rounding of the
/// boundary `S = 2qT(d)` count as vacuous.
pub fn bound_from_log_sum(ln_sum: f64, q: u32, d: usize) -> Result<(f64, bool), PottsError> {
    let log10_t = log10_threshold(d)?;
    let ln_ratio = ln_sum - (2.0 * q as f64).ln() - log10_t * LN_10;
    let exponent = 1.0 - ln_ratio.exp();
    let raw = -exponent.exp_m1();
    Ok(if raw <= 1e-12 { (0.0, true) } else { (raw, false) })
}

pub fn magnetization_bound(
    potential: &Potential,
    beta: f64,
    q: u32,
    radius: u64,
) -> Result<MagnetizationBound, PottsError> {
    let d = potential.dim;
    log10_threshold(d)?;
    let params = PottsParams::new(q, beta, 1)?;
    let capped = |v: f64| (params.beta * v).min(1.0);
    let sum: f64 = if potential.linf_profile(1).is_some() {
        (1..=radius)
            .map(|n| capped(potential.linf_profile(n).unwrap_or(0.0)) * crate::kernel::shell_size(d, n) as f64)
            .sum()
    } else {
        let r = potential.support_radius().map_or(radius, |s| s.min(radius));
        CubeIter::new(d, r)
            .filter(|x| x.iter().any(|&c| c != 0))
            .map(|x| capped(potential.value(&x)))
            .sum()
    };
    let (bound, vacuous) = bound_from_log_sum(sum.ln(), q, d)?;
    Ok(MagnetizationBound { q, beta, radius, sum, bound, vacuous })
}
