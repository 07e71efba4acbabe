//! Runs an [`ExperimentConfig`] and collects its [`ResultTable`].

use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, MeasureKind, MeasureParams, Params, PhiModeSpec};
use crate::dispersion::{self, cosine_moment, DispersionError};
use crate::kernel::{EdgeKernel, Kernel, KernelError};
use crate::overlap::{self, OverlapError};
use crate::pathmeasure::{self, PathError, PathMeasure};
use crate::percolation::{self, BoxRegion, PercolationError};
use crate::potts::{self, PottsError};
use crate::report::{Cell, Provenance, ReportError, ResultTable};
use crate::rng::derive_seed;
use crate::stats::EstimateWithCI;
use crate::treepaths::{self, TreeError};

/// Largest coefficient-vector count the dispersion suite enumerates.
pub const DISPERSION_VECTOR_CAP: u64 = 20_000_000;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Report(#[from] ReportError),
}

impl RunError {
    /// 2 for configuration problems, 3 for resource limits.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Resource(_) => 3,
            RunError::Report(ReportError::Io(_)) => 3,
            _ => 2,
        }
    }
}

impl From<KernelError> for RunError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::UnboundedSupport => RunError::Resource(e.to_string()),
            _ => RunError::Invalid(e.to_string()),
        }
    }
}

impl From<PercolationError> for RunError {
    fn from(e: PercolationError) -> Self {
        match e {
            PercolationError::RegionTooLarge { .. } | PercolationError::TooManyEdges { .. } => {
                RunError::Resource(e.to_string())
            }
            _ => RunError::Invalid(e.to_string()),
        }
    }
}

impl From<PathError> for RunError {
    fn from(e: PathError) -> Self {
        match e {
            PathError::TooLarge(_) | PathError::Overflow | PathError::UnboundedSupport => RunError::Resource(e.to_string()),
            _ => RunError::Invalid(e.to_string()),
        }
    }
}

impl From<OverlapError> for RunError {
    fn from(e: OverlapError) -> Self {
        match e {
            OverlapError::Path(p) => p.into(),
            OverlapError::TooManyEdges { .. } => RunError::Resource(e.to_string()),
            _ => RunError::Invalid(e.to_string()),
        }
    }
}

impl From<DispersionError> for RunError {
    fn from(e: DispersionError) -> Self {
        match e {
            DispersionError::TooLarge { .. } => RunError::Resource(e.to_string()),
            _ => RunError::Invalid(e.to_string()),
        }
    }
}

impl From<TreeError> for RunError {
    fn from(e: TreeError) -> Self {
        match e {
            TreeError::LevelTooLarge { .. } | TreeError::HorizonTooLarge { .. } => RunError::Resource(e.to_string()),
            _ => RunError::Invalid(e.to_string()),
        }
    }
}

impl From<PottsError> for RunError {
    fn from(e: PottsError) -> Self {
        RunError::Invalid(e.to_string())
    }
}

fn ci_cells(e: &EstimateWithCI) -> [Cell; 3] {
    [e.estimate.into(), e.ci_low.into(), e.ci_high.into()]
}

/// Builds the sampler described by `params` for `kernel`.
pub fn build_measure(kernel: &Kernel, params: &MeasureParams) -> Result<PathMeasure, RunError> {
    Ok(match params.measure {
        MeasureKind::M1 => {
            let (u, v) = match (&params.u, &params.v) {
                (Some(u), Some(v)) => (u.clone(), v.clone()),
                _ => pathmeasure::choose_m1_vectors(kernel, 4)
                    .ok_or_else(|| RunError::Invalid("no admissible u, v with norm at most 4".into()))?,
            };
            let q = crate::lattice::linf(&u).max(crate::lattice::linf(&v));
            let m = params
                .radius
                .or(kernel.support_radius())
                .ok_or(PathError::UnboundedSupport)?
                .max(pathmeasure::minimal_m(q));
            PathMeasure::M1 { config: pathmeasure::build_m1(kernel, &u, &v, m, false)?, offset: 0 }
        }
        MeasureKind::M2 => PathMeasure::M2 { config: pathmeasure::build_m2(kernel, params.radius)?, phase: params.phase },
        MeasureKind::M3 => PathMeasure::M3(pathmeasure::build_m3(kernel, params.radius)?),
    })
}

/// Runs the experiment; deterministic for a fixed config.
pub fn run(config: &ExperimentConfig) -> Result<ResultTable, RunError> {
    config.validate()?;
    let prov = Provenance::new(config.digest(), config.seed);
    let seed = config.seed;
    let workers = config.workers.max(1);
    let kernel = config.kernel.as_ref().map(|k| k.build()).transpose()?;
    match &config.params {
        Params::TruncationCurve { half_side, shell_width, radii, trials, norm } => {
            let kernel = kernel.expect("validated");
            let region = BoxRegion::new(kernel.dimension(), *half_side, *shell_width)?;
            let curve = percolation::coupled_truncations(&kernel, radii, *norm, &region, *trials, seed, workers)?;
            let mut t = ResultTable::new(
                ["N", "theta", "ci_low", "ci_high", "trials", "containment_violations"],
                prov,
            );
            for (r, e) in curve.radii.iter().zip(&curve.estimates) {
                let [a, b, c] = ci_cells(e);
                t.push(vec![(*r).into(), a, b, c, curve.trials.into(), curve.containment_violations.into()])?;
            }
            Ok(t)
        }
        Params::DispersionSuite { max_n, max_coefficient, cosine_max_n } => {
            dispersion_suite(*max_n, *max_coefficient, *cosine_max_n, prov)
        }
        Params::TreeSuite { max_level, walk_level, walk_trials } => {
            tree_suite(*max_level, *walk_level, *walk_trials, seed, workers, prov)
        }
        Params::OverlapCurve { measure, horizons, trials } => {
            let m = build_measure(&kernel.expect("validated"), measure)?;
            let curve = overlap::overlap_curve(&m, horizons, *trials, seed, workers)?;
            let mut t = ResultTable::new(
                ["n", "expected_overlap", "ci_low", "ci_high", "running_max", "implied_lower_bound"],
                prov,
            );
            for p in curve {
                let [a, b, c] = ci_cells(&p.estimate);
                t.push(vec![p.n.into(), a, b, c, p.running_max.into(), p.implied_lower_bound.into()])?;
            }
            Ok(t)
        }
        Params::IntersectionProbe { measure, offset, horizon_k, horizon_n, trials } => {
            let m = build_measure(&kernel.expect("validated"), measure)?;
            let e = pathmeasure::estimate_intersection(&m, &m, offset, (*horizon_k, *horizon_n), *trials, seed, workers)?;
            let mut t = ResultTable::new(
                ["measure", "K", "N", "estimate", "ci_low", "ci_high", "bound", "vacuous", "preconditions_met"],
                prov,
            );
            let [a, b, c] = ci_cells(&e.estimate);
            t.push(vec![
                m.tag().to_string().into(),
                (*horizon_k).into(),
                (*horizon_n).into(),
                a,
                b,
                c,
                e.bound.into(),
                e.vacuous.into(),
                e.preconditions_met.into(),
            ])?;
            Ok(t)
        }
        Params::PottsReport { q, beta, radii } => {
            let pot = config.potential.as_ref().expect("validated").build()?;
            let mut t = ResultTable::new(["q", "beta", "R", "sum", "bound", "vacuous"], prov);
            for &qq in q {
                for &b in beta {
                    for &r in radii {
                        let rep = potts::magnetization_bound(&pot, b, qq, r)?;
                        t.push(vec![qq.into(), b.into(), r.into(), rep.sum.into(), rep.bound.into(), rep.vacuous.into()])?;
                    }
                }
            }
            Ok(t)
        }
        Params::CounterexampleScan { dimension, n, eps, k_values, mode, trials } => {
            let mut t = ResultTable::new(["eps", "K", "phi", "ci_low", "ci_high", "below_one"], prov);
            for &e in eps {
                let k = Kernel::counterexample(*dimension, *n, e)?;
                let radius = k.support_radius().unwrap_or(*n);
                for &kk in k_values {
                    let set = percolation::axis_segment(*dimension, kk);
                    let inst = percolation::PhiInstance::new(&k, &set, radius)?;
                    let est = match mode {
                        PhiModeSpec::Exact => EstimateWithCI::exact(inst.exact()?, seed),
                        // Common random numbers across eps: the trial seeds
                        // depend on K only.
                        PhiModeSpec::MonteCarlo => inst.monte_carlo(*trials, derive_seed(seed, kk), workers)?,
                    };
                    let [a, b, c] = ci_cells(&est);
                    t.push(vec![e.into(), kk.into(), a, b, c, (est.estimate < 1.0).into()])?;
                }
            }
            Ok(t)
        }
    }
}

fn dispersion_suite(max_n: usize, m: u64, cosine_max_n: u64, prov: Provenance) -> Result<ResultTable, RunError> {
    let mut t = ResultTable::new(
        [
            "n",
            "vectors",
            "max_point_mass",
            "point_mass_bound",
            "point_mass_holds",
            "tail_bounds_hold",
            "cosine_moment",
            "cosine_bound_holds",
        ],
        prov,
    );
    if m.checked_pow(max_n as u32).is_none_or(|c| c > DISPERSION_VECTOR_CAP) {
        return Err(RunError::Resource(format!("{m}^{max_n} coefficient vectors exceed {DISPERSION_VECTOR_CAP}")));
    }
    let rows = (max_n as u64).max(cosine_max_n);
    for n in 1..=rows {
        let mut cells: Vec<Cell> = vec![n.into()];
        if n as usize <= max_n {
            let count = m.pow(n as u32);
            let (mut worst, mut point_ok, mut tail_ok) = (0.0f64, true, true);
            let mut a = vec![1u64; n as usize];
            for _ in 0..count {
                let pm = dispersion::max_point_mass(&a)?;
                worst = worst.max(pm.mass.to_f64());
                point_ok &= pm.holds;
                tail_ok &= dispersion::tail_bounds(&a)?.holds();
                // Odometer over {1..m}^n.
                for c in a.iter_mut() {
                    if *c < m {
                        *c += 1;
                        break;
                    }
                    *c = 1;
                }
            }
            cells.extend([count.into(), worst.into(), (1.0 / (n as f64).sqrt()).into(), point_ok.into(), tail_ok.into()]);
        } else {
            cells.extend(std::iter::repeat_n(Cell::Text(String::new()), 5));
        }
        if n <= cosine_max_n {
            let c = cosine_moment(n);
            cells.extend([c.value.into(), c.within_sqrt_bound().into()]);
        } else {
            cells.extend([Cell::Text(String::new()), Cell::Text(String::new())]);
        }
        t.push(cells)?;
    }
    Ok(t)
}

fn tree_suite(
    max_level: u32,
    walk_level: u32,
    walk_trials: u64,
    seed: u64,
    workers: usize,
    prov: Provenance,
) -> Result<ResultTable, RunError> {
    let mut t = ResultTable::new(
        ["N", "support", "sup_mass", "c_bound", "within_c_bound", "total_is_one", "walk_trials", "walk_max_z"],
        prov,
    );
    for n in 0..=max_level {
        let exact = treepaths::exact_levelsum(n)?;
        let bound = treepaths::C_BOUND as f64 * 2f64.powi(-(n as i32));
        let mut row: Vec<Cell> = vec![
            n.into(),
            exact.table.len().into(),
            exact.sup_mass().into(),
            bound.into(),
            exact.within_c_bound(treepaths::C_BOUND).into(),
            exact.total_is_one().into(),
        ];
        if n <= walk_level {
            let steps = treepaths::pow3(n);
            let ends = crate::trials::run_trials(walk_trials, workers, seed, |_, s| {
                treepaths::WalkStream::new(s).advance(steps)
            });
            let mut counts = std::collections::HashMap::new();
            for e in ends {
                *counts.entry(e).or_insert(0u64) += 1;
            }
            let tr = walk_trials as f64;
            let z = exact
                .rows()
                .map(|(x, p)| {
                    let got = *counts.get(&x).unwrap_or(&0) as f64;
                    let sd = (tr * p * (1.0 - p)).sqrt();
                    if sd > 0.0 { (got - tr * p).abs() / sd } else { 0.0 }
                })
                .fold(0.0, f64::max);
            row.extend([walk_trials.into(), z.into()]);
        } else {
            row.extend([Cell::Text(String::new()), Cell::Text(String::new())]);
        }
        t.push(row)?;
    }
    Ok(t)
}
