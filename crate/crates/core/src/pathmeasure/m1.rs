//! The 3-periodic construction: a long step with first coordinate at least
//! `3Q`, then `u^±` picked by one unpredictable walk, then `v^±` picked by an
//! independent one.

use super::step::{Constraint, StepDistribution, StepSet};
use super::{MeasureTag, PathError, PathSample};
use crate::kernel::{EdgeKernel, Kernel};
use crate::lattice::{self, CubeIter};
use crate::rng::{derive_seed, derive_seed_path, rng_from_seed};
use crate::treepaths::WalkStream;

/// Required upper bound on `ε` in strict mode.
pub const STRICT_EPS: f64 = 1e-10;
pub const HITTING_COEFFICIENT: f64 = 25004.0;

#[derive(Debug, Clone)]
pub struct M1Config {
    /// The layer-normalized kernel the steps are drawn from.
    pub kernel: Kernel,
    pub u_plus: Vec<i64>,
    pub u_minus: Vec<i64>,
    pub v_plus: Vec<i64>,
    pub v_minus: Vec<i64>,
    pub eta: f64,
    pub q: u64,
    pub m: u64,
    /// `1 / Σ_{A_M} p_y`.
    pub eps: f64,
    pub psi: StepDistribution,
    pub strict: bool,
}

impl M1Config {
    pub fn dim(&self) -> usize {
        self.u_plus.len()
    }

    /// `25004 ε^{0.05}`.
    pub fn hitting_bound(&self) -> f64 {
        HITTING_COEFFICIENT * self.eps.powf(0.05)
    }

    pub fn eps_condition(&self) -> bool {
        self.eps <= STRICT_EPS
    }

    /// `25004 ε^{0.05} / η² ≤ 1/4`.
    pub fn overlap_condition(&self) -> bool {
        self.hitting_bound() / (self.eta * self.eta) <= 0.25
    }

    pub fn strict_conditions_hold(&self) -> bool {
        self.eps_condition() && self.overlap_condition()
    }
}

fn flip_tail(x: &[i64]) -> Vec<i64> {
    x.iter().enumerate().map(|(i, &c)| if i == 0 { c } else { -c }).collect()
}

/// Smallest admissible `M`.
pub fn minimal_m(q: u64) -> u64 {
    3 * q + 1
}

/// Picks `u, v` with `u_1, v_1 ≥ 0` and independent tails: the smallest
/// `‖·‖∞` tier containing an admissible pair, the pair maximizing `η`
/// within it, ties broken by `ℓ1` norm, fewest negative entries, then
/// lexicographically largest.
pub fn choose_m1_vectors<K: EdgeKernel + ?Sized>(
    kernel: &K,
    max_q: u64,
) -> Option<(Vec<i64>, Vec<i64>)> {
    let d = kernel.dimension();
    if d < 3 {
        return None;
    }
    for q in 1..=max_q {
        let mut cands: Vec<(Vec<i64>, f64)> = CubeIter::new(d, q)
            .filter(|x| x[0] >= 0 && x[1..].iter().any(|&c| c != 0))
            .map(|x| {
                let p = kernel.p(&x);
                (x, p)
            })
            .filter(|(_, p)| *p > 0.0)
            .collect();
        cands.sort_by(|(a, _), (b, _)| {
            let key = |x: &Vec<i64>| (lattice::l1(x), x.iter().filter(|&&c| c < 0).count());
            key(a).cmp(&key(b)).then_with(|| b.cmp(a))
        });
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..cands.len() {
            for j in (i + 1)..cands.len() {
                if !lattice::linearly_independent(&cands[i].0[1..], &cands[j].0[1..]) {
                    continue;
                }
                let eta = cands[i].1.min(cands[j].1);
                if best.is_none_or(|(b, _, _)| eta > b) {
                    best = Some((eta, i, j));
                }
            }
        }
        if let Some((_, i, j)) = best {
            return Some((cands[i].0.clone(), cands[j].0.clone()));
        }
    }
    None
}

/// Validates `u, v, M`, layer-normalizes the kernel above `Q` and builds
/// `ψ_M` on `A_M = {‖x‖∞ ≤ M, x_1 ≥ 3Q}`.
pub fn build_m1(kernel: &Kernel, u: &[i64], v: &[i64], m: u64, strict: bool) -> Result<M1Config, PathError> {
    let d = kernel.dimension();
    for w in [u, v] {
        if w.len() != d {
            return Err(PathError::DimensionMismatch { expected: d, got: w.len() });
        }
    }
    if d < 2 {
        return Err(PathError::InvalidConfig("dimension must be at least 2".into()));
    }
    if u[0] < 0 || v[0] < 0 {
        return Err(PathError::InvalidConfig("u_1 and v_1 must be nonnegative".into()));
    }
    if !lattice::linearly_independent(&u[1..], &v[1..]) {
        return Err(PathError::DependentTails);
    }
    let q = lattice::linf(u).max(lattice::linf(v));
    if m <= 3 * q {
        return Err(PathError::RadiusTooSmall { m, three_q: 3 * q });
    }
    let normalized = kernel.layer_normalize(q)?;
    let eta = normalized.p(u).min(normalized.p(v));
    if eta <= 0.0 {
        return Err(PathError::ZeroEta);
    }
    let set = StepSet::new(d, vec![(vec![0], Constraint::AtLeast(3 * q as i64))])?;
    let psi = StepDistribution::new(&normalized, set, Some(m))?;
    let config = M1Config {
        kernel: normalized,
        u_minus: flip_tail(u),
        v_minus: flip_tail(v),
        u_plus: u.to_vec(),
        v_plus: v.to_vec(),
        eta,
        q,
        m,
        eps: 1.0 / psi.total_mass,
        psi,
        strict,
    };
    if strict {
        if !config.eps_condition() {
            return Err(PathError::StrictCondition(format!(
                "sum over A_M is {:.3e}, below 1e10",
                config.psi.total_mass
            )));
        }
        if !config.overlap_condition() {
            return Err(PathError::StrictCondition(format!(
                "25004 eps^0.05 / eta^2 = {:.3e} exceeds 1/4",
                config.hitting_bound() / (eta * eta)
            )));
        }
    }
    Ok(config)
}

/// `ζ_0..ζ_{3n}` from the unconditioned construction.
pub fn sample_m1(config: &M1Config, n: usize, seed: u64) -> PathSample {
    sample_m1_from(config, n, seed, 0)
}

/// `(ζ_{3N+k} − ζ_{3N})_{k ≤ 3n}` for `N = offset`: the path restarted after
/// `offset` full periods of the same realization.
pub fn sample_m1_from(config: &M1Config, n: usize, seed: u64, offset: u64) -> PathSample {
    let d = config.dim();
    let mut path = PathSample::start(MeasureTag::M1, d, seed, 3 * n);
    let mut s = WalkStream::new(derive_seed(seed, 1));
    let mut s2 = WalkStream::new(derive_seed(seed, 2));
    s.advance(offset);
    s2.advance(offset);
    for j in 0..n as u64 {
        let mut rng = rng_from_seed(derive_seed_path(seed, &[0, offset + j]));
        let x = config.psi.sample(&mut rng);
        path.push_step(&x, true);
        let u = if s.next_increment() > 0 { &config.u_plus } else { &config.u_minus };
        path.push_step(u, false);
        let v = if s2.next_increment() > 0 { &config.v_plus } else { &config.v_minus };
        path.push_step(v, false);
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Norm;

    fn flat() -> Kernel {
        Kernel::flat_box(3, 0.3, 6).unwrap()
    }

    #[test]
    fn builds_flat_box_example() {
        let c = build_m1(&flat(), &[0, 1, 0], &[0, 0, 1], minimal_m(1), false).unwrap();
        assert_eq!(c.eta, 0.3);
        assert_eq!(c.q, 1);
        assert_eq!(c.m, 4);
        assert_eq!(c.u_minus, vec![0, -1, 0]);
        let four = [&c.u_plus, &c.u_minus, &c.v_plus, &c.v_minus];
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert_ne!(four[i], four[j]);
            }
        }
        // Layers n = 3, 4 carry |x_1| = n mass 0.3 * 2 * (2n+1)^2 before
        // normalization; A_4 keeps 49 points of layer 3 and 113 of layer 4.
        let expect = 49.0 * 0.3 / 29.4 + 113.0 * 0.3 / 48.6;
        assert!((1.0 / c.eps - expect).abs() < 1e-9);
        assert!(!c.strict_conditions_hold());
        assert_eq!(
            choose_m1_vectors(&flat(), 3),
            Some((vec![0, 1, 0], vec![0, 0, 1]))
        );
    }

    #[test]
    fn rejections() {
        let k = flat();
        assert!(matches!(build_m1(&k, &[0, 1, 0], &[0, 2, 0], 10, false), Err(PathError::DependentTails)));
        assert!(matches!(build_m1(&k, &[0, 1, 0], &[0, 0, 1], 3, false), Err(PathError::RadiusTooSmall { .. })));
        assert!(matches!(build_m1(&k, &[-1, 1, 0], &[0, 0, 1], 5, false), Err(PathError::InvalidConfig(_))));
        let short = Kernel::flat_box(3, 0.3, 1).unwrap();
        assert!(matches!(build_m1(&short, &[0, 1, 0], &[0, 0, 1], 5, false), Err(PathError::EmptyStepSet)));
        let big = Kernel::flat_box(3, 0.5, 10).unwrap();
        assert!(matches!(build_m1(&big, &[0, 1, 0], &[0, 0, 1], 10, true), Err(PathError::StrictCondition(_))));
        let nn = Kernel::nearest_neighbour(3, 0.4).unwrap();
        assert!(matches!(build_m1(&nn, &[1, 1, 0], &[0, 0, 1], 5, false), Err(PathError::ZeroEta)));
    }

    #[test]
    fn period_structure_and_self_avoidance() {
        let c = build_m1(&flat(), &[0, 1, 0], &[0, 0, 1], 6, false).unwrap();
        assert_eq!(sample_m1(&c, 0, 3).len(), 0);
        for seed in 0..10_000u64 {
            let p = sample_m1(&c, 10, seed);
            assert_eq!(p.len(), 30);
            assert!(p.is_self_avoiding());
            assert!(p.is_monotone(&[1, 0, 0]));
            for k in 0..30 {
                let inc = p.increment(k);
                match k % 3 {
                    0 => assert!(inc[0] >= 3 && lattice::linf(&inc) <= 6),
                    1 => assert!(inc == c.u_plus || inc == c.u_minus),
                    _ => assert!(inc == c.v_plus || inc == c.v_minus),
                }
            }
        }
    }

    #[test]
    fn restart_matches_tail_of_longer_path() {
        let c = build_m1(&flat(), &[0, 1, 0], &[0, 0, 1], 6, false).unwrap();
        let long = sample_m1(&c, 8, 42);
        let tail = sample_m1_from(&c, 5, 42, 3);
        for k in 0..=15 {
            let expect: Vec<i64> =
                long.vertex(9 + k).iter().zip(long.vertex(9)).map(|(a, b)| a - b).collect();
            assert_eq!(tail.vertex(k), expect.as_slice());
        }
    }

    #[test]
    fn inverse_power_kernel_uses_radial_sampler() {
        let k = Kernel::inverse_power(3, 1.0, 3.0, 0.9, Norm::Linf).unwrap();
        let (u, v) = choose_m1_vectors(&k, 2).unwrap();
        let c = build_m1(&k, &u, &v, 5000, false).unwrap();
        let p = sample_m1(&c, 20, 1);
        assert!(p.is_self_avoiding() && p.is_monotone(&[1, 0, 0]));
        assert!(c.eps < 1.0);
    }
}
