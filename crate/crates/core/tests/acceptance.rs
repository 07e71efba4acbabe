//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::collections::{HashMap, VecDeque};
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use lrtrunc::dispersion::{cosine_moment, max_point_mass, tail_bounds};
use lrtrunc::kernel::EdgeKernel;
use lrtrunc::lattice;
use lrtrunc::overlap::{self, BruteForceInstance};
use lrtrunc::pathmeasure::{self, PathMeasure};
use lrtrunc::percolation::{self, BoxRegion, Configuration};
use lrtrunc::potts::{self, fk_probability};
use lrtrunc::rng::{derive_seed, rng_from_seed};
use lrtrunc::treepaths::{self, WalkStream};
use lrtrunc::{Kernel, Norm};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

const MASTER: u64 = 0xACCE_0001;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg.into()) }
}

/// Brute-force sign enumeration: (max point count, #>0, #≠0, #≥0).
fn sign_counts(a: &[u64]) -> (u64, u64, u64, u64) {
    let n = a.len();
    let mut counts: HashMap<i64, u64> = HashMap::new();
    for mask in 0u32..(1 << n) {
        let s: i64 = a.iter().enumerate().map(|(i, &c)| if mask >> i & 1 == 1 { c as i64 } else { -(c as i64) }).sum();
        *counts.entry(s).or_default() += 1;
    }
    let max = *counts.values().max().unwrap();
    let sum_where = |f: fn(i64) -> bool| counts.iter().filter(|(x, _)| f(**x)).map(|(_, c)| c).sum::<u64>();
    (max, sum_where(|x| x > 0), sum_where(|x| x != 0), sum_where(|x| x >= 0))
}

fn criterion_1() -> Outcome {
    let mut checked = 0u64;
    let mut cache: HashMap<Vec<u64>, bool> = HashMap::new();
    for n in 1..=10usize {
        let mut a = vec![1u64; n];
        loop {
            let mut key = a.clone();
            key.sort_unstable();
            let ok = *cache.entry(key.clone()).or_insert_with(|| {
                let pm = max_point_mass(&key).unwrap();
                let tb = tail_bounds(&key).unwrap();
                let (max, pos, nz, nn) = sign_counts(&key);
                // Library masses are count / 2^exponent; compare against count / 2^n.
                let same = |c: u128, e: u32, brute: u64| c << n == (brute as u128) << e;
                let oracle_ok = same(pm.mass.count, pm.mass.exponent, max)
                    && same(tb.p_pos.count, tb.p_pos.exponent, pos)
                    && same(tb.p_nonzero.count, tb.p_nonzero.exponent, nz)
                    && same(tb.p_nonneg.count, tb.p_nonneg.exponent, nn);
                // max/2^n ≤ 1/√n  ⇔  max²·n ≤ 4^n
                let bound_ok = (max as u128).pow(2) * n as u128 <= 1u128 << (2 * n);
                let tails_ok = 4 * pos >= 1 << n && 2 * nz >= 1 << n && 2 * nn >= 1 << n;
                oracle_ok && bound_ok && tails_ok && pm.holds && tb.holds()
            });
            if !ok {
                return Err(format!("vector {a:?} fails"));
            }
            checked += 1;
            let mut i = 0;
            while i < n && a[i] == 4 {
                a[i] = 1;
                i += 1;
            }
            if i == n {
                break;
            }
            a[i] += 1;
        }
    }
    Ok(format!("{checked} vectors, {} distinct multisets, exact", cache.len()))
}

fn central_binomial(n: u64) -> f64 {
    let mut c: u128 = 1;
    for i in 0..n / 2 {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c as f64 / 2f64.powi(n as i32)
}

/// `(1/π) ∫_{-π/2}^{π/2} cos^n θ dθ` by composite Simpson.
fn quadrature(n: u64) -> f64 {
    let m = 200_000usize;
    let (a, b) = (-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
    let h = (b - a) / m as f64;
    let f = |t: f64| t.cos().max(0.0).powi(n as i32);
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0 / std::f64::consts::PI
}

fn criterion_2() -> Outcome {
    let mut worst_closed = 0f64;
    let mut worst_quad = 0f64;
    for n in 0..=30u64 {
        let c = cosine_moment(n);
        if n % 2 == 0 {
            let err = (c.value - central_binomial(n)).abs();
            worst_closed = worst_closed.max(err);
            check(err <= 1e-12, format!("n={n}: closed form off by {err:e}"))?;
            check((c.closed_form.unwrap() - central_binomial(n)).abs() <= 1e-12, format!("n={n}: closed_form field"))?;
        }
        let err = (c.value - quadrature(n)).abs();
        worst_quad = worst_quad.max(err);
        check(err <= 1e-9, format!("n={n}: quadrature off by {err:e}"))?;
    }
    for n in 1..=1000u64 {
        check(cosine_moment(n).within_sqrt_bound(), format!("I_{n} > 1/sqrt(n)"))?;
    }
    Ok(format!("closed form err {worst_closed:.1e}, quadrature err {worst_quad:.1e}, sqrt bound to n=1000"))
}

/// Level sums of the ternary tree by enumerating every fair bit.
fn brute_levelsum(level: u32) -> HashMap<i64, u64> {
    fn spins(level: u32, bits: &mut impl Iterator<Item = bool>) -> Vec<i64> {
        let mut cur = vec![1i64];
        for _ in 0..level {
            let mut next = Vec::with_capacity(cur.len() * 3);
            for &s in &cur {
                let fair = if bits.next().unwrap() { 1 } else { -1 };
                next.extend([s, s, fair]);
            }
            cur = next;
        }
        cur
    }
    let nbits = (3u64.pow(level) - 1) / 2;
    let mut out = HashMap::new();
    for mask in 0u64..(1 << nbits) {
        let mut it = (0..nbits).map(|i| mask >> i & 1 == 1);
        *out.entry(spins(level, &mut it).iter().sum()).or_default() += 1;
    }
    out
}

fn criterion_3() -> Outcome {
    for n in 0..=8u32 {
        let d = treepaths::exact_levelsum(n).map_err(|e| e.to_string())?;
        check(d.total_is_one(), format!("N={n}: masses do not sum to 1"))?;
        check(d.within_c_bound(32), format!("N={n}: sup {} > 32·2^-N", d.sup_mass()))?;
        check(d.sup_mass() <= 32.0 * 2f64.powi(-(n as i32)), format!("N={n}: sup mass"))?;
        if n <= 3 {
            let brute = brute_levelsum(n);
            let total: u64 = brute.values().sum();
            for (x, p) in d.rows() {
                let c = brute.get(&x).copied().unwrap_or(0);
                check(p == c as f64 / total as f64, format!("N={n}: mass at {x} differs from enumeration"))?;
            }
            check(brute.len() == d.rows().count(), format!("N={n}: support differs"))?;
        }
    }
    let t1: Vec<(i64, f64)> = treepaths::exact_levelsum(1).unwrap().rows().collect();
    check(t1 == vec![(1, 0.5), (3, 0.5)], format!("N=1 table {t1:?}"))?;
    let t2: Vec<(i64, f64)> = treepaths::exact_levelsum(2).unwrap().rows().collect();
    let want = vec![(-1, 1.0 / 16.0), (1, 3.0 / 16.0), (3, 0.25), (5, 0.25), (7, 3.0 / 16.0), (9, 1.0 / 16.0)];
    check(t2 == want, format!("N=2 table {t2:?}"))?;
    Ok("N <= 8 exact; N <= 3 matches bit enumeration".into())
}

fn criterion_4() -> Outcome {
    let trials = 100_000u64;
    let mut worst = 0f64;
    for n in 0..=5u32 {
        let exact = treepaths::exact_levelsum(n).unwrap();
        let steps = treepaths::pow3(n);
        let mut counts: HashMap<i64, u64> = HashMap::new();
        for i in 0..trials {
            *counts.entry(WalkStream::new(derive_seed(MASTER ^ 4, i)).advance(steps)).or_default() += 1;
        }
        for (x, p) in exact.rows() {
            let got = counts.remove(&x).unwrap_or(0) as f64;
            let sd = (trials as f64 * p * (1.0 - p)).sqrt();
            let z = if sd > 0.0 { (got - trials as f64 * p).abs() / sd } else { 0.0 };
            worst = worst.max(z);
            check(z <= 5.0, format!("N={n}, x={x}: z = {z:.2}"))?;
        }
        check(counts.is_empty(), format!("N={n}: walk left the exact support"))?;
    }
    Ok(format!("max |z| = {worst:.2} over N <= 5, 1e5 streams"))
}

fn criterion_5() -> Outcome {
    let mut rng = rng_from_seed(derive_seed(MASTER, 5));
    for i in 0..100 {
        let inst = BruteForceInstance::random(&mut rng, 12, 4);
        let r = overlap::brute_force_paley_zygmund(&inst).map_err(|e| e.to_string())?;
        let mut e_ov = BigRational::zero();
        for (a, wa) in &inst.paths {
            for (b, wb) in &inst.paths {
                let mut prod = BigRational::one();
                for e in a.iter().filter(|e| b.contains(e)) {
                    prod *= inst.probabilities[*e].recip();
                }
                e_ov += wa * wb * prod;
            }
        }
        check(r.e_z == BigRational::one(), format!("instance {i}: E[Z] = {}", r.e_z))?;
        check(r.e_z2 == e_ov, format!("instance {i}: E[Z^2] != pairwise overlap"))?;
        check(&r.p_reach * &e_ov >= BigRational::one(), format!("instance {i}: P(Z>0) < 1/E[ov]"))?;
        check(r.chain_holds, format!("instance {i}: chain flag"))?;
    }
    Ok("100 instances, exact rationals".into())
}

fn bfs_labels(cfg: &Configuration) -> Vec<usize> {
    let n = cfg.region.vertex_count();
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in &cfg.edges {
        adj[a as usize].push(b as usize);
        adj[b as usize].push(a as usize);
    }
    let mut label = vec![usize::MAX; n];
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = s;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &w in &adj[v] {
                if label[w] == usize::MAX {
                    label[w] = s;
                    q.push_back(w);
                }
            }
        }
    }
    label
}

fn criterion_6() -> Outcome {
    let mut rng = rng_from_seed(derive_seed(MASTER, 6));
    for i in 0..100u64 {
        let d = rng.random_range(1..=3usize);
        let max_l = match d {
            1 => 200,
            2 => 10,
            _ => 3,
        };
        let l = rng.random_range(1..=max_l);
        let region = BoxRegion::new(d, l, 1).unwrap();
        assert!(region.vertex_count() <= 500);
        let kernel = if rng.random_bool(0.5) {
            Kernel::flat_box(d, rng.random_range(0.02..0.4), rng.random_range(1..=3)).unwrap()
        } else {
            Kernel::inverse_power(d, rng.random_range(0.2..2.0), rng.random_range(1.5..4.0), 0.9, Norm::Linf).unwrap()
        };
        let cfg = percolation::sample_configuration(&kernel, &region, derive_seed(MASTER, 600 + i)).unwrap();
        let labels = bfs_labels(&cfg);
        let mut clusters = cfg.clusters();
        let mut fwd: HashMap<usize, usize> = HashMap::new();
        let mut back: HashMap<usize, usize> = HashMap::new();
        for (v, &lab) in labels.iter().enumerate() {
            let root = clusters.root(v);
            check(*fwd.entry(root).or_insert(lab) == lab, format!("config {i}: union-find merges BFS components"))?;
            check(*back.entry(lab).or_insert(root) == root, format!("config {i}: union-find splits a BFS component"))?;
        }
    }

    // Open-edge counts per displacement class against Binomial(pairs·T, p).
    let region = BoxRegion::new(2, 8, 1).unwrap();
    let kernel = Kernel::inverse_power(2, 0.5, 2.5, 0.9, Norm::Linf).unwrap();
    let classes = percolation::displacement_classes(&kernel, &region);
    let t = 2000u64;
    let mut counts: HashMap<Vec<i64>, u64> = HashMap::new();
    for s in 0..t {
        let cfg = percolation::sample_configuration(&kernel, &region, derive_seed(MASTER ^ 6, s)).unwrap();
        for &(a, b) in &cfg.edges {
            let (x, y) = (region.coords(a as usize), region.coords(b as usize));
            let mut delta: Vec<i64> = y.iter().zip(&x).map(|(p, q)| p - q).collect();
            if !lattice::is_positive_half(&delta) {
                delta.iter_mut().for_each(|c| *c = -*c);
            }
            *counts.entry(delta).or_default() += 1;
        }
    }
    let side = region.side() as i64;
    let mut worst = 0f64;
    for (delta, p) in &classes {
        let pairs: i64 = delta.iter().map(|c| side - c.abs()).product();
        let n = (pairs as u64 * t) as f64;
        let got = counts.remove(delta).unwrap_or(0) as f64;
        let z = (got - n * p).abs() / (n * p * (1.0 - p)).sqrt();
        worst = worst.max(z);
        check(z <= 6.0, format!("displacement {delta:?}: z = {z:.2}"))?;
    }
    check(counts.is_empty(), "edges outside the kernel support")?;

    // Reruns under fixed seeds and varying worker counts.
    let big = BoxRegion::new(2, 12, 2).unwrap();
    let k = Kernel::flat_box(2, 0.15, 2).unwrap();
    let a = percolation::sample_configuration(&k, &big, 77).unwrap();
    let b = percolation::sample_configuration(&k, &big, 77).unwrap();
    check(a == b && a.to_text() == b.to_text(), "configuration rerun differs")?;
    let r1 = percolation::estimate_reach(&k, &big, 300, 5, 1).unwrap();
    let r4 = percolation::estimate_reach(&k, &big, 300, 5, 4).unwrap();
    check(r1 == r4, "reach estimate depends on worker count")?;
    Ok(format!("100 configs match BFS; {} classes, max |z| = {worst:.2}; reruns identical", classes.len()))
}

fn criterion_7() -> Outcome {
    let kernel = Kernel::inverse_power(3, 1.0, 3.0, 0.9, Norm::Linf).unwrap();
    let region = BoxRegion::new(3, 16, 1).unwrap();
    let curve = percolation::coupled_truncations(&kernel, &[1, 2, 4, 8], Norm::Linf, &region, 1000, derive_seed(MASTER, 7), 4)
        .map_err(|e| e.to_string())?;
    let thetas: Vec<String> = curve.estimates.iter().map(|e| format!("{:.3}", e.estimate)).collect();
    check(curve.containment_violations == 0, format!("{} containment violations", curve.containment_violations))?;
    check(curve.monotone_within_ci(), format!("theta not monotone: {thetas:?}"))?;
    Ok(format!("0 violations in 1000 trials; theta(1,2,4,8) = {}", thetas.join(", ")))
}

fn path_invariants(measure: &PathMeasure, steps: usize, name: &str) -> Result<(), String> {
    let dir = measure.monotone_direction();
    for seed in 0..10_000u64 {
        let p = measure.sample(steps, derive_seed(MASTER ^ 8, seed));
        check(p.len() == steps, format!("{name}: path length {}", p.len()))?;
        check(p.is_self_avoiding(), format!("{name}: seed {seed} not self-avoiding"))?;
        check(p.is_monotone(&dir), format!("{name}: seed {seed} not monotone"))?;
        check((0..steps).any(|k| p.is_strict_step(k)), format!("{name}: no designated strict steps"))?;
    }
    Ok(())
}

fn criterion_8() -> Outcome {
    let flat3 = Kernel::flat_box(3, 0.3, 6).unwrap();
    let m1 = PathMeasure::M1 {
        config: pathmeasure::build_m1(&flat3, &[0, 1, 0], &[0, 0, 1], 6, false).map_err(|e| e.to_string())?,
        offset: 0,
    };
    path_invariants(&m1, 42, "M1")?;

    let flat4 = Kernel::flat_box(4, 0.1, 2).unwrap();
    let m2 = pathmeasure::build_m2(&flat4, None).map_err(|e| e.to_string())?;
    for phase in [0u8, 3] {
        path_invariants(&PathMeasure::M2 { config: m2.clone(), phase }, 48, "M2")?;
    }
    let mut worst: f64 = 1.0;
    for r in m2.mass_ratios() {
        worst = worst.min(r);
        check(r >= 1.0 / 28.0, format!("M2 flat-box ratio {r}"))?;
    }
    let ip4 = Kernel::inverse_power(4, 1.0, 4.5, 0.5, Norm::Linf).unwrap();
    for r in pathmeasure::build_m2(&ip4, Some(200)).map_err(|e| e.to_string())?.mass_ratios() {
        worst = worst.min(r);
        check(r >= 1.0 / 28.0, format!("M2 inverse-power ratio {r}"))?;
    }

    let m3 = pathmeasure::build_m3(&Kernel::flat_box(3, 0.1, 3).unwrap(), None).map_err(|e| e.to_string())?;
    for r in m3.mass_ratios() {
        worst = worst.min(r * 28.0 / 12.0);
        check(r >= 1.0 / 12.0, format!("M3 flat-box ratio {r}"))?;
    }
    let ip3 = Kernel::inverse_power(3, 1.0, 3.5, 0.5, Norm::Linf).unwrap();
    for r in pathmeasure::build_m3(&ip3, Some(300)).map_err(|e| e.to_string())?.mass_ratios() {
        check(r >= 1.0 / 12.0, format!("M3 inverse-power ratio {r}"))?;
    }
    path_invariants(&PathMeasure::M3(m3), 40, "M3")?;
    Ok("3 families x 1e4 paths self-avoiding and monotone; mass ratios above 1/28 (d=4) and 1/12 (d=3)".into())
}

fn criterion_9() -> Outcome {
    // Every M2 path has w_4-coordinate at least (number of ψ_4 steps), and
    // steps have ℓ∞ norm at most 2. With half side 6 and shell width 2 each
    // path enters the shell while still inside the box, well before step 96,
    // so {Z_96 > 0} is contained in the reach event and
    // 1/E[ov_96] ≤ P(Z_96 > 0) ≤ θ.
    let (half, shell, radius) = (6u64, 2u64, 2u64);
    let kernel = Kernel::flat_box(4, 0.1, radius).unwrap();
    let measure = PathMeasure::M2 { config: pathmeasure::build_m2(&kernel, None).map_err(|e| e.to_string())?, phase: 0 };
    for seed in 0..1000 {
        let p = measure.sample(96, seed);
        let first = p.vertices().position(|v| lattice::linf(v) > half - shell);
        check(first.is_some(), format!("path {seed} never reaches the shell"))?;
        check(p.vertices().take(first.unwrap() + 1).all(|v| lattice::linf(v) <= half), "path leaves the box first")?;
    }
    let ov = overlap::estimate_expected_overlap(&measure, 96, 20_000, derive_seed(MASTER, 9), 4).map_err(|e| e.to_string())?;
    let lower = overlap::percolation_lower_bound(ov.estimate.estimate).map_err(|e| e.to_string())?;
    let region = BoxRegion::new(4, half, shell).unwrap();
    let theta = percolation::estimate_reach(&kernel, &region, 400, derive_seed(MASTER, 90), 4).map_err(|e| e.to_string())?;
    check(
        lower <= theta.ci_high,
        format!("1/E[ov] = {lower:.4} exceeds theta = {:.4} (+CI {:.4})", theta.estimate, theta.ci_high),
    )?;
    Ok(format!(
        "E[ov_96] = {:.4}, 1/E[ov] = {lower:.4} <= theta = {:.4} [{:.4}, {:.4}]",
        ov.estimate.estimate, theta.estimate, theta.ci_low, theta.ci_high
    ))
}

/// `φ_ε(S) = A + 4ε·B` for `S = {-K..K}·e_1`: the inner edges lie on the
/// axis and do not depend on ε, so one set of samples serves every ε.
fn counterexample_phi(k: u64, eps: f64, trials: u64) -> Result<lrtrunc::EstimateWithCI, String> {
    let kernel = Kernel::counterexample(3, 5, eps).map_err(|e| e.to_string())?;
    let set = percolation::axis_segment(3, k);
    let inst = percolation::PhiInstance::new(&kernel, &set, kernel.support_radius().unwrap())
        .map_err(|e| e.to_string())?;
    inst.monte_carlo(trials, derive_seed(MASTER ^ 10, k), 4).map_err(|e| e.to_string())
}

fn criterion_10() -> Outcome {
    let ks = [2u64, 8, 32, 128, 512, 2048, 8192, 32768];
    let mut small = Vec::new();
    let mut large = Vec::new();
    for &k in &ks {
        let trials = if k >= 8192 { 100 } else { 400 };
        small.push((k, counterexample_phi(k, 1e-4, trials)?));
        large.push((k, counterexample_phi(k, 0.1, trials)?));
    }
    let fmt = |v: &[(u64, lrtrunc::EstimateWithCI)]| {
        v.iter().map(|(k, e)| format!("K={k}: {:.3}", e.estimate)).collect::<Vec<_>>().join(", ")
    };
    let below = small.iter().find(|(_, e)| e.ci_high < 1.0);
    let above = large.iter().all(|(_, e)| e.ci_low > 1.0);
    check(
        below.is_some() && above,
        format!("no K with phi < 1 at eps = 1e-4 ({}); eps = 0.1: {}", fmt(&small), fmt(&large)),
    )?;
    Ok(format!("phi < 1 at K = {} for eps = 1e-4; all above 1 at eps = 0.1", below.unwrap().0))
}

fn criterion_11() -> Outcome {
    for q in 2..=5 {
        check(fk_probability(0.0, q) == 0.0, "phi = 0 must map to p = 0")?;
    }
    let t = 3f64.ln() / 2.0;
    check((fk_probability(t, 2) - 0.5).abs() < 1e-15, format!("q=2, e^-2t = 1/3 gives {}", fk_probability(t, 2)))?;
    for i in 0..100 {
        let bp = 0.05 * (i + 1) as f64;
        for q in 2..=11u32 {
            let p = fk_probability(bp, q);
            check(p >= bp.min(1.0) / (2.0 * q as f64), format!("p < (bphi ^ 1)/2q at bphi={bp}, q={q}"))?;
            check(fk_probability(bp + 0.05, q) >= p, format!("not increasing in bphi at {bp}, q={q}"))?;
            check(fk_probability(bp, q + 1) <= p, format!("not decreasing in q at {bp}, q={q}"))?;
        }
    }
    let target = 1.0 - (-1f64).exp();
    for (d, log10_t) in [(3usize, 400.0), (4, 26.0), (7, 26.0)] {
        for q in [2u32, 3, 10] {
            let ln_sum = (4.0 * q as f64).ln() + log10_t * std::f64::consts::LN_10;
            let (bound, vacuous) = potts::bound_from_log_sum(ln_sum, q, d).map_err(|e| e.to_string())?;
            check(!vacuous && (bound - target).abs() < 1e-9, format!("d={d}, q={q}: bound {bound}"))?;
        }
    }
    Ok("mapping spot checks, 100x10 grid, bound = 1 - 1/e at 4qT(d)".into())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("dispersion exhaustive", criterion_1),
        ("cosine moments", criterion_2),
        ("tree oracle", criterion_3),
        ("walk consistency", criterion_4),
        ("second-moment oracle", criterion_5),
        ("clusters and sampling", criterion_6),
        ("coupled truncation", criterion_7),
        ("path-measure invariants", criterion_8),
        ("chain consistency", criterion_9),
        ("counterexample scan", criterion_10),
        ("potts bridge", criterion_11),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                println!("criterion {:>2} FAIL {name} ({secs:.1}s): {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
