//! Experiment configuration files.
//!
//! ```ini
//! [experiment]
//! kind = truncation-curve
//! seed = 7
//! workers = 4
//!
//! [kernel]
//! family = inverse-power
//! dimension = 3
//! c = 1
//! exponent = 3
//! cap = 0.9
//!
//! [params]
//! half_side = 16
//! radii = 1, 2, 4, 8
//! trials = 1e3
//! ```
//!
//! Unknown sections or keys, repeated keys and malformed values are
//! rejected. Integers may be written in scientific notation when exact.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use ini::Ini;
use thiserror::Error;

use crate::kernel::{Kernel, KernelError, Norm};
use crate::potts::{Potential, PottsError};

pub const DEFAULT_SEED: u64 = 0x1D_2024;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("syntax error at line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("repeated section [{0}]")]
    RepeatedSection(String),
    #[error("missing section [{0}]")]
    MissingSection(String),
    #[error("unknown key `{key}` in [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("repeated key `{key}` in [{section}]")]
    RepeatedKey { section: String, key: String },
    #[error("missing key `{key}` in [{section}]")]
    MissingKey { section: String, key: String },
    #[error("invalid value `{value}` for `{key}`: {msg}")]
    InvalidValue { key: String, value: String, msg: String },
    #[error("invalid kernel: {0}")]
    Kernel(String),
}

impl From<KernelError> for ConfigError {
    fn from(e: KernelError) -> Self {
        ConfigError::Kernel(e.to_string())
    }
}

impl From<PottsError> for ConfigError {
    fn from(e: PottsError) -> Self {
        ConfigError::Kernel(e.to_string())
    }
}

fn invalid(key: &str, value: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue { key: key.into(), value: value.into(), msg: msg.into() }
}

pub fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.trim().parse().map_err(|_| invalid(key, v, "not a number"))?;
    if !x.is_finite() {
        return Err(invalid(key, v, "not finite"));
    }
    Ok(x)
}

pub fn parse_u64(key: &str, v: &str) -> Result<u64, ConfigError> {
    let t = v.trim();
    if let Ok(n) = t.parse::<u64>() {
        return Ok(n);
    }
    let x = parse_f64(key, t)?;
    if x < 0.0 || x.fract() != 0.0 || x >= u64::MAX as f64 {
        return Err(invalid(key, v, "not a nonnegative integer"));
    }
    Ok(x as u64)
}

pub fn parse_i64(key: &str, v: &str) -> Result<i64, ConfigError> {
    let t = v.trim();
    if let Ok(n) = t.parse::<i64>() {
        return Ok(n);
    }
    let x = parse_f64(key, t)?;
    if x.fract() != 0.0 || x.abs() >= i64::MAX as f64 {
        return Err(invalid(key, v, "not an integer"));
    }
    Ok(x as i64)
}

pub fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(invalid(key, v, "expected true or false")),
    }
}

fn parse_list<T>(key: &str, v: &str, f: impl Fn(&str, &str) -> Result<T, ConfigError>) -> Result<Vec<T>, ConfigError> {
    if v.trim().is_empty() {
        return Err(invalid(key, v, "empty list"));
    }
    v.split(',').map(|s| f(key, s)).collect()
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn usize_of(key: &str, v: &str) -> Result<usize, ConfigError> {
    usize::try_from(parse_u64(key, v)?).map_err(|_| invalid(key, v, "too large"))
}

fn u32_of(key: &str, v: &str) -> Result<u32, ConfigError> {
    u32::try_from(parse_u64(key, v)?).map_err(|_| invalid(key, v, "too large"))
}

/// Key/value pairs of one section, consumed as they are read so leftovers
/// can be reported as unknown.
#[derive(Debug, Clone)]
pub struct Section {
    name: String,
    entries: BTreeMap<String, String>,
}

impl Section {
    pub fn new(name: &str) -> Self {
        Section { name: name.into(), entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, key: &str, value: impl fmt::Display) -> Result<(), ConfigError> {
        if self.entries.insert(key.into(), value.to_string()).is_some() {
            return Err(ConfigError::RepeatedKey { section: self.name.clone(), key: key.into() });
        }
        Ok(())
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<String, ConfigError> {
        self.take(key).ok_or_else(|| ConfigError::MissingKey { section: self.name.clone(), key: key.into() })
    }

    fn opt<T>(&mut self, key: &str, f: impl Fn(&str, &str) -> Result<T, ConfigError>) -> Result<Option<T>, ConfigError> {
        self.take(key).map(|v| f(key, &v)).transpose()
    }

    fn req<T>(&mut self, key: &str, f: impl Fn(&str, &str) -> Result<T, ConfigError>) -> Result<T, ConfigError> {
        let v = self.require(key)?;
        f(key, &v)
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_keys().next() {
            Some(key) => Err(ConfigError::UnknownKey { section: self.name, key }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    TruncationCurve,
    DispersionSuite,
    TreeSuite,
    OverlapCurve,
    IntersectionProbe,
    PottsReport,
    CounterexampleScan,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::TruncationCurve,
        ExperimentKind::DispersionSuite,
        ExperimentKind::TreeSuite,
        ExperimentKind::OverlapCurve,
        ExperimentKind::IntersectionProbe,
        ExperimentKind::PottsReport,
        ExperimentKind::CounterexampleScan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TruncationCurve => "truncation-curve",
            ExperimentKind::DispersionSuite => "dispersion-suite",
            ExperimentKind::TreeSuite => "tree-suite",
            ExperimentKind::OverlapCurve => "overlap-curve",
            ExperimentKind::IntersectionProbe => "intersection-probe",
            ExperimentKind::PottsReport => "potts-report",
            ExperimentKind::CounterexampleScan => "counterexample-scan",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s.trim())
    }
}

/// Kernel description; also accepted in the one-line form
/// `family(key=value, ...)`.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    InversePower { dim: usize, c: f64, exponent: f64, cap: f64, norm: Norm },
    FlatBox { dim: usize, delta: f64, radius: u64 },
    Counterexample { dim: usize, n: u64, eps: f64 },
    NearestNeighbour { dim: usize, p: f64 },
    Zero { dim: usize },
}

impl KernelSpec {
    pub fn dim(&self) -> usize {
        match *self {
            KernelSpec::InversePower { dim, .. }
            | KernelSpec::FlatBox { dim, .. }
            | KernelSpec::Counterexample { dim, .. }
            | KernelSpec::NearestNeighbour { dim, .. }
            | KernelSpec::Zero { dim } => dim,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            KernelSpec::InversePower { .. } => "inverse-power",
            KernelSpec::FlatBox { .. } => "flat-box",
            KernelSpec::Counterexample { .. } => "counterexample",
            KernelSpec::NearestNeighbour { .. } => "nearest-neighbour",
            KernelSpec::Zero { .. } => "zero",
        }
    }

    pub fn build(&self) -> Result<Kernel, KernelError> {
        match *self {
            KernelSpec::InversePower { dim, c, exponent, cap, norm } => Kernel::inverse_power(dim, c, exponent, cap, norm),
            KernelSpec::FlatBox { dim, delta, radius } => Kernel::flat_box(dim, delta, radius),
            KernelSpec::Counterexample { dim, n, eps } => Kernel::counterexample(dim, n, eps),
            KernelSpec::NearestNeighbour { dim, p } => Kernel::nearest_neighbour(dim, p),
            KernelSpec::Zero { dim } => Kernel::zero(dim),
        }
    }

    fn from_section(s: &mut Section) -> Result<Self, ConfigError> {
        let family = s.require("family")?;
        let dim = s.req("dimension", usize_of)?;
        let spec = match family.trim() {
            "inverse-power" => KernelSpec::InversePower {
                dim,
                c: s.req("c", parse_f64)?,
                exponent: s.req("exponent", parse_f64)?,
                cap: s.req("cap", parse_f64)?,
                norm: s.opt("norm", parse_norm)?.unwrap_or_default(),
            },
            "flat-box" => KernelSpec::FlatBox { dim, delta: s.req("delta", parse_f64)?, radius: s.req("radius", parse_u64)? },
            "counterexample" => KernelSpec::Counterexample { dim, n: s.req("n", parse_u64)?, eps: s.req("eps", parse_f64)? },
            "nearest-neighbour" => KernelSpec::NearestNeighbour { dim, p: s.req("p", parse_f64)? },
            "zero" => KernelSpec::Zero { dim },
            other => return Err(invalid("family", other, "unknown kernel family")),
        };
        spec.build()?;
        Ok(spec)
    }

    fn to_section(&self) -> Section {
        let mut s = Section::new("kernel");
        let mut put = |k: &str, v: String| s.entries.insert(k.into(), v);
        put("family", self.family().into());
        put("dimension", self.dim().to_string());
        match *self {
            KernelSpec::InversePower { c, exponent, cap, norm, .. } => {
                put("c", c.to_string());
                put("exponent", exponent.to_string());
                put("cap", cap.to_string());
                put("norm", norm.name().into());
            }
            KernelSpec::FlatBox { delta, radius, .. } => {
                put("delta", delta.to_string());
                put("radius", radius.to_string());
            }
            KernelSpec::Counterexample { n, eps, .. } => {
                put("n", n.to_string());
                put("eps", eps.to_string());
            }
            KernelSpec::NearestNeighbour { p, .. } => {
                put("p", p.to_string());
            }
            KernelSpec::Zero { .. } => {}
        }
        s
    }

    /// Parses `family(key=value, ...)`; `dimension` may be abbreviated `d`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let t = text.trim();
        let (family, rest) = t.split_once('(').ok_or_else(|| invalid("kernel", t, "expected family(...)"))?;
        let body = rest.strip_suffix(')').ok_or_else(|| invalid("kernel", t, "missing closing parenthesis"))?;
        let mut s = Section::new("kernel");
        s.insert("family", family.trim())?;
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| invalid("kernel", part, "expected key=value"))?;
            let k = match k.trim() {
                "d" => "dimension",
                other => other,
            };
            s.insert(k, v.trim())?;
        }
        let spec = KernelSpec::from_section(&mut s)?;
        s.finish()?;
        Ok(spec)
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.to_section();
        let body: Vec<String> = s
            .entries
            .iter()
            .filter(|(k, _)| k.as_str() != "family")
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        write!(f, "{}({})", self.family(), body.join(", "))
    }
}

fn parse_norm(key: &str, v: &str) -> Result<Norm, ConfigError> {
    Norm::parse(v.trim()).ok_or_else(|| invalid(key, v, "expected linf, l2 or l1"))
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    InversePower { dim: usize, c: f64, exponent: f64, norm: Norm },
    FlatBox { dim: usize, value: f64, radius: u64 },
}

impl PotentialSpec {
    pub fn dim(&self) -> usize {
        match *self {
            PotentialSpec::InversePower { dim, .. } | PotentialSpec::FlatBox { dim, .. } => dim,
        }
    }

    pub fn build(&self) -> Result<Potential, PottsError> {
        match *self {
            PotentialSpec::InversePower { dim, c, exponent, norm } => Potential::inverse_power(dim, c, exponent, norm),
            PotentialSpec::FlatBox { dim, value, radius } => Potential::flat_box(dim, value, radius),
        }
    }

    fn from_section(s: &mut Section) -> Result<Self, ConfigError> {
        let family = s.require("family")?;
        let dim = s.req("dimension", usize_of)?;
        let spec = match family.trim() {
            "inverse-power" => PotentialSpec::InversePower {
                dim,
                c: s.req("c", parse_f64)?,
                exponent: s.req("exponent", parse_f64)?,
                norm: s.opt("norm", parse_norm)?.unwrap_or_default(),
            },
            "flat-box" => PotentialSpec::FlatBox { dim, value: s.req("value", parse_f64)?, radius: s.req("radius", parse_u64)? },
            other => return Err(invalid("family", other, "unknown potential family")),
        };
        spec.build()?;
        Ok(spec)
    }

    fn to_section(&self) -> Section {
        let mut s = Section::new("potential");
        let e = &mut s.entries;
        match *self {
            PotentialSpec::InversePower { dim, c, exponent, norm } => {
                e.insert("family".into(), "inverse-power".into());
                e.insert("dimension".into(), dim.to_string());
                e.insert("c".into(), c.to_string());
                e.insert("exponent".into(), exponent.to_string());
                e.insert("norm".into(), norm.name().into());
            }
            PotentialSpec::FlatBox { dim, value, radius } => {
                e.insert("family".into(), "flat-box".into());
                e.insert("dimension".into(), dim.to_string());
                e.insert("value".into(), value.to_string());
                e.insert("radius".into(), radius.to_string());
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    M1,
    M2,
    M3,
}

impl MeasureKind {
    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::M1 => "m1",
            MeasureKind::M2 => "m2",
            MeasureKind::M3 => "m3",
        }
    }
}

fn parse_measure(key: &str, v: &str) -> Result<MeasureKind, ConfigError> {
    match v.trim() {
        "m1" => Ok(MeasureKind::M1),
        "m2" => Ok(MeasureKind::M2),
        "m3" => Ok(MeasureKind::M3),
        _ => Err(invalid(key, v, "expected m1, m2 or m3")),
    }
}

/// Which path measure to build and how.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureParams {
    pub measure: MeasureKind,
    /// Truncation radius for the step laws (`M` for the first family).
    pub radius: Option<u64>,
    pub phase: u8,
    pub u: Option<Vec<i64>>,
    pub v: Option<Vec<i64>>,
}

impl MeasureParams {
    fn read(s: &mut Section) -> Result<Self, ConfigError> {
        let phase = s.opt("phase", parse_u64)?.unwrap_or(0);
        if phase >= 6 {
            return Err(invalid("phase", &phase.to_string(), "must be below 6"));
        }
        let p = MeasureParams {
            measure: s.req("measure", parse_measure)?,
            radius: s.opt("radius", parse_u64)?,
            phase: phase as u8,
            u: s.opt("u", |k, v| parse_list(k, v, parse_i64))?,
            v: s.opt("v", |k, v| parse_list(k, v, parse_i64))?,
        };
        if p.u.is_some() != p.v.is_some() {
            return Err(invalid("u", "", "u and v must be given together"));
        }
        Ok(p)
    }

    fn write(&self, s: &mut Section) {
        let e = &mut s.entries;
        e.insert("measure".into(), self.measure.name().into());
        if let Some(r) = self.radius {
            e.insert("radius".into(), r.to_string());
        }
        e.insert("phase".into(), self.phase.to_string());
        if let (Some(u), Some(v)) = (&self.u, &self.v) {
            e.insert("u".into(), join(u));
            e.insert("v".into(), join(v));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiModeSpec {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    TruncationCurve { half_side: u64, shell_width: u64, radii: Vec<u64>, trials: u64, norm: Norm },
    DispersionSuite { max_n: usize, max_coefficient: u64, cosine_max_n: u64 },
    TreeSuite { max_level: u32, walk_level: u32, walk_trials: u64 },
    OverlapCurve { measure: MeasureParams, horizons: Vec<usize>, trials: u64 },
    IntersectionProbe { measure: MeasureParams, offset: Vec<i64>, horizon_k: usize, horizon_n: usize, trials: u64 },
    PottsReport { q: Vec<u32>, beta: Vec<f64>, radii: Vec<u64> },
    CounterexampleScan { dimension: usize, n: u64, eps: Vec<f64>, k_values: Vec<u64>, mode: PhiModeSpec, trials: u64 },
}

impl Params {
    fn read(kind: ExperimentKind, s: &mut Section) -> Result<Self, ConfigError> {
        let list_u64 = |k: &str, v: &str| parse_list(k, v, parse_u64);
        Ok(match kind {
            ExperimentKind::TruncationCurve => Params::TruncationCurve {
                half_side: s.req("half_side", parse_u64)?,
                shell_width: s.opt("shell_width", parse_u64)?.unwrap_or(1),
                radii: s.req("radii", list_u64)?,
                trials: s.req("trials", parse_u64)?,
                norm: s.opt("norm", parse_norm)?.unwrap_or_default(),
            },
            ExperimentKind::DispersionSuite => Params::DispersionSuite {
                max_n: s.req("max_n", usize_of)?,
                max_coefficient: s.req("max_coefficient", parse_u64)?,
                cosine_max_n: s.opt("cosine_max_n", parse_u64)?.unwrap_or(30),
            },
            ExperimentKind::TreeSuite => Params::TreeSuite {
                max_level: s.req("max_level", u32_of)?,
                walk_level: s.opt("walk_level", u32_of)?.unwrap_or(3),
                walk_trials: s.opt("walk_trials", parse_u64)?.unwrap_or(10_000),
            },
            ExperimentKind::OverlapCurve => Params::OverlapCurve {
                measure: MeasureParams::read(s)?,
                horizons: s.req("horizons", |k, v| parse_list(k, v, usize_of))?,
                trials: s.req("trials", parse_u64)?,
            },
            ExperimentKind::IntersectionProbe => Params::IntersectionProbe {
                measure: MeasureParams::read(s)?,
                offset: s.req("offset", |k, v| parse_list(k, v, parse_i64))?,
                horizon_k: s.req("horizon_k", usize_of)?,
                horizon_n: s.req("horizon_n", usize_of)?,
                trials: s.req("trials", parse_u64)?,
            },
            ExperimentKind::PottsReport => Params::PottsReport {
                q: s.req("q", |k, v| parse_list(k, v, u32_of))?,
                beta: s.req("beta", |k, v| parse_list(k, v, parse_f64))?,
                radii: s.req("radii", list_u64)?,
            },
            ExperimentKind::CounterexampleScan => Params::CounterexampleScan {
                dimension: s.req("dimension", usize_of)?,
                n: s.req("n", parse_u64)?,
                eps: s.req("eps", |k, v| parse_list(k, v, parse_f64))?,
                k_values: s.req("k_values", list_u64)?,
                mode: match s.opt("mode", |_, v| Ok(v.trim().to_string()))?.as_deref() {
                    None | Some("exact") => PhiModeSpec::Exact,
                    Some("monte-carlo") => PhiModeSpec::MonteCarlo,
                    Some(other) => return Err(invalid("mode", other, "expected exact or monte-carlo")),
                },
                trials: s.opt("trials", parse_u64)?.unwrap_or(10_000),
            },
        })
    }

    fn to_section(&self) -> Section {
        let mut s = Section::new("params");
        match self {
            Params::TruncationCurve { half_side, shell_width, radii, trials, norm } => {
                let e = &mut s.entries;
                e.insert("half_side".into(), half_side.to_string());
                e.insert("shell_width".into(), shell_width.to_string());
                e.insert("radii".into(), join(radii));
                e.insert("trials".into(), trials.to_string());
                e.insert("norm".into(), norm.name().into());
            }
            Params::DispersionSuite { max_n, max_coefficient, cosine_max_n } => {
                let e = &mut s.entries;
                e.insert("max_n".into(), max_n.to_string());
                e.insert("max_coefficient".into(), max_coefficient.to_string());
                e.insert("cosine_max_n".into(), cosine_max_n.to_string());
            }
            Params::TreeSuite { max_level, walk_level, walk_trials } => {
                let e = &mut s.entries;
                e.insert("max_level".into(), max_level.to_string());
                e.insert("walk_level".into(), walk_level.to_string());
                e.insert("walk_trials".into(), walk_trials.to_string());
            }
            Params::OverlapCurve { measure, horizons, trials } => {
                measure.write(&mut s);
                s.entries.insert("horizons".into(), join(horizons));
                s.entries.insert("trials".into(), trials.to_string());
            }
            Params::IntersectionProbe { measure, offset, horizon_k, horizon_n, trials } => {
                measure.write(&mut s);
                let e = &mut s.entries;
                e.insert("offset".into(), join(offset));
                e.insert("horizon_k".into(), horizon_k.to_string());
                e.insert("horizon_n".into(), horizon_n.to_string());
                e.insert("trials".into(), trials.to_string());
            }
            Params::PottsReport { q, beta, radii } => {
                let e = &mut s.entries;
                e.insert("q".into(), join(q));
                e.insert("beta".into(), join(beta));
                e.insert("radii".into(), join(radii));
            }
            Params::CounterexampleScan { dimension, n, eps, k_values, mode, trials } => {
                let e = &mut s.entries;
                e.insert("dimension".into(), dimension.to_string());
                e.insert("n".into(), n.to_string());
                e.insert("eps".into(), join(eps));
                e.insert("k_values".into(), join(k_values));
                let m = match mode {
                    PhiModeSpec::Exact => "exact",
                    PhiModeSpec::MonteCarlo => "monte-carlo",
                };
                e.insert("mode".into(), m.into());
                e.insert("trials".into(), trials.to_string());
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub workers: usize,
    pub output: Option<String>,
    pub kernel: Option<KernelSpec>,
    pub potential: Option<PotentialSpec>,
    pub params: Params,
}

const SECTIONS: [&str; 4] = ["experiment", "kernel", "potential", "params"];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_str_noescape(text)
            .map_err(|e| ConfigError::Syntax { line: e.line + 1, msg: e.msg.to_string() })?;
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        for (name, props) in ini.iter() {
            let name = match name {
                None if props.is_empty() => continue,
                None => {
                    let key = props.iter().next().map(|(k, _)| k.to_string()).unwrap_or_default();
                    return Err(ConfigError::UnknownKey { section: String::new(), key });
                }
                Some(n) => n.trim().to_string(),
            };
            if !SECTIONS.contains(&name.as_str()) {
                return Err(ConfigError::UnknownSection(name));
            }
            if sections.contains_key(&name) {
                return Err(ConfigError::RepeatedSection(name));
            }
            let mut sec = Section::new(&name);
            for (k, v) in props.iter() {
                sec.insert(k.trim(), v.trim())?;
            }
            sections.insert(name, sec);
        }
        let mut exp = sections.remove("experiment").ok_or_else(|| ConfigError::MissingSection("experiment".into()))?;
        let kind_s = exp.require("kind")?;
        let kind = ExperimentKind::parse(&kind_s).ok_or_else(|| invalid("kind", &kind_s, "unknown experiment kind"))?;
        let seed = exp.opt("seed", parse_u64)?.unwrap_or(DEFAULT_SEED);
        let workers = exp.opt("workers", usize_of)?.unwrap_or(1);
        let output = exp.take("output");
        exp.finish()?;

        let kernel = match sections.remove("kernel") {
            Some(mut s) => {
                let k = KernelSpec::from_section(&mut s)?;
                s.finish()?;
                Some(k)
            }
            None => None,
        };
        let potential = match sections.remove("potential") {
            Some(mut s) => {
                let p = PotentialSpec::from_section(&mut s)?;
                s.finish()?;
                Some(p)
            }
            None => None,
        };
        let mut ps = sections.remove("params").unwrap_or_else(|| Section::new("params"));
        let params = Params::read(kind, &mut ps)?;
        ps.finish()?;

        let cfg = ExperimentConfig { kind, seed, workers, output, kernel, potential, params };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cross-section checks run before any computation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        use ExperimentKind as K;
        let needs_kernel = matches!(self.kind, K::TruncationCurve | K::OverlapCurve | K::IntersectionProbe);
        if needs_kernel && self.kernel.is_none() {
            return Err(ConfigError::MissingSection("kernel".into()));
        }
        if !needs_kernel && self.kernel.is_some() {
            return Err(ConfigError::UnknownSection("kernel".into()));
        }
        let needs_potential = self.kind == K::PottsReport;
        if needs_potential != self.potential.is_some() {
            return Err(if needs_potential {
                ConfigError::MissingSection("potential".into())
            } else {
                ConfigError::UnknownSection("potential".into())
            });
        }
        let positive = |key: &str, v: u64| {
            if v == 0 {
                Err(invalid(key, "0", "must be positive"))
            } else {
                Ok(())
            }
        };
        match &self.params {
            Params::TruncationCurve { radii, trials, half_side, .. } => {
                positive("trials", *trials)?;
                positive("half_side", *half_side)?;
                if radii.is_empty() {
                    return Err(invalid("radii", "", "empty list"));
                }
            }
            Params::DispersionSuite { max_n, max_coefficient, .. } => {
                positive("max_n", *max_n as u64)?;
                positive("max_coefficient", *max_coefficient)?;
            }
            Params::TreeSuite { walk_trials, .. } => positive("walk_trials", *walk_trials)?,
            Params::OverlapCurve { trials, .. } => {
                if *trials < 2 {
                    return Err(invalid("trials", &trials.to_string(), "need at least 2"));
                }
            }
            Params::IntersectionProbe { trials, offset, .. } => {
                positive("trials", *trials)?;
                let d = self.kernel.as_ref().map(KernelSpec::dim).unwrap_or(0);
                if offset.len() != d {
                    return Err(invalid("offset", &join(offset), format!("expected {d} coordinates")));
                }
            }
            Params::PottsReport { q, beta, .. } => {
                if q.iter().any(|&q| q < 2) {
                    return Err(invalid("q", &join(q), "q must be at least 2"));
                }
                if beta.iter().any(|&b| b <= 0.0) {
                    return Err(invalid("beta", &join(beta), "beta must be positive"));
                }
            }
            Params::CounterexampleScan { eps, mode, trials, dimension, n, .. } => {
                for &e in eps {
                    Kernel::counterexample(*dimension, *n, e)?;
                }
                if *mode == PhiModeSpec::MonteCarlo {
                    positive("trials", *trials)?;
                }
            }
        }
        Ok(())
    }

    /// Canonical text; `parse(to_ini_string(c)) == c`.
    pub fn to_ini_string(&self) -> String {
        let mut exp = Section::new("experiment");
        exp.entries.insert("kind".into(), self.kind.name().into());
        exp.entries.insert("seed".into(), self.seed.to_string());
        exp.entries.insert("workers".into(), self.workers.to_string());
        if let Some(o) = &self.output {
            exp.entries.insert("output".into(), o.clone());
        }
        let mut sections = vec![exp];
        sections.extend(self.kernel.as_ref().map(KernelSpec::to_section));
        sections.extend(self.potential.as_ref().map(PotentialSpec::to_section));
        sections.push(self.params.to_section());
        let mut out = String::new();
        for (i, s) in sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "[{}]", s.name);
            for (k, v) in &s.entries {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }

    /// Stable digest of the canonical text, for provenance headers.
    pub fn digest(&self) -> String {
        crate::report::sha256_hex(self.to_ini_string().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TRUNC: &str = "\
[experiment]
kind = truncation-curve
seed = 7
workers = 4

[kernel]
family = inverse-power
dimension = 3
c = 1
exponent = 3
cap = 0.9

[params]
half_side = 16
radii = 1, 2, 4, 8
trials = 1e3
";

    #[test]
    fn parses_example() {
        let c = ExperimentConfig::parse(TRUNC).unwrap();
        assert_eq!(c.kind, ExperimentKind::TruncationCurve);
        assert_eq!(c.seed, 7);
        assert_eq!(
            c.params,
            Params::TruncationCurve { half_side: 16, shell_width: 1, radii: vec![1, 2, 4, 8], trials: 1000, norm: Norm::Linf }
        );
        assert_eq!(ExperimentConfig::parse(&c.to_ini_string()).unwrap(), c);
    }

    #[test]
    fn strictness() {
        let extra = TRUNC.replace("trials = 1e3", "trials = 1e3\nbogus = 1");
        assert!(matches!(ExperimentConfig::parse(&extra), Err(ConfigError::UnknownKey { .. })));
        let dup = TRUNC.replace("trials = 1e3", "trials = 1e3\ntrials = 4");
        assert!(matches!(ExperimentConfig::parse(&dup), Err(ConfigError::RepeatedKey { .. })));
        let sect = format!("{TRUNC}\n[extra]\nx = 1\n");
        assert!(matches!(ExperimentConfig::parse(&sect), Err(ConfigError::UnknownSection(_))));
        let frac = TRUNC.replace("trials = 1e3", "trials = 2.5");
        assert!(matches!(ExperimentConfig::parse(&frac), Err(ConfigError::InvalidValue { .. })));
        let missing = TRUNC.replace("half_side = 16\n", "");
        assert!(matches!(ExperimentConfig::parse(&missing), Err(ConfigError::MissingKey { .. })));
        let bad_kernel = TRUNC.replace("cap = 0.9", "cap = 1.5");
        assert!(matches!(ExperimentConfig::parse(&bad_kernel), Err(ConfigError::Kernel(_))));
        let top = format!("stray = 1\n{TRUNC}");
        assert!(ExperimentConfig::parse(&top).is_err());
        assert!(ExperimentConfig::parse("[experiment\nkind = x").is_err());
        assert_eq!(parse_bool("b", "true"), Ok(true));
        assert!(parse_bool("b", "yes").is_err());
    }

    #[test]
    fn kernel_one_liner() {
        let k = KernelSpec::parse("flat-box(d=3, delta=0.3, radius=4)").unwrap();
        assert_eq!(k, KernelSpec::FlatBox { dim: 3, delta: 0.3, radius: 4 });
        assert_eq!(KernelSpec::parse(&k.to_string()).unwrap(), k);
        assert!(KernelSpec::parse("flat-box(d=3, delta=0.3)").is_err());
        assert!(KernelSpec::parse("flat-box(d=3, delta=0.3, radius=4, q=1)").is_err());
        assert!(KernelSpec::parse("warp(d=3)").is_err());
        assert!(KernelSpec::parse("zero(d=2").is_err());
        assert_eq!(KernelSpec::parse("zero(d=2)").unwrap(), KernelSpec::Zero { dim: 2 });
    }

    fn arb_kernel() -> impl Strategy<Value = KernelSpec> {
        prop_oneof![
            (1usize..5, 0.1f64..4.0, 0.5f64..6.0, 0.01f64..0.99).prop_map(|(dim, c, exponent, cap)| {
                KernelSpec::InversePower { dim, c, exponent, cap, norm: Norm::L2 }
            }),
            (1usize..5, 0.0f64..0.99, 1u64..9).prop_map(|(dim, delta, radius)| KernelSpec::FlatBox { dim, delta, radius }),
            (1usize..5).prop_map(|dim| KernelSpec::Zero { dim }),
        ]
    }

    proptest! {
        #[test]
        fn round_trip(kernel in arb_kernel(), seed in any::<u64>(), workers in 1usize..16,
                      radii in prop::collection::vec(1u64..100, 1..5), trials in 1u64..1_000_000) {
            let c = ExperimentConfig {
                kind: ExperimentKind::TruncationCurve,
                seed,
                workers,
                output: Some("out/curve.csv".into()),
                kernel: Some(kernel),
                potential: None,
                params: Params::TruncationCurve { half_side: 5, shell_width: 1, radii, trials, norm: Norm::L1 },
            };
            let text = c.to_ini_string();
            let back = ExperimentConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.to_ini_string(), text);
        }

        #[test]
        fn potts_round_trip(q in prop::collection::vec(2u32..10, 1..4), beta in prop::collection::vec(1e-6f64..1e3, 1..4)) {
            let c = ExperimentConfig {
                kind: ExperimentKind::PottsReport,
                seed: 1,
                workers: 1,
                output: None,
                kernel: None,
                potential: Some(PotentialSpec::InversePower { dim: 3, c: 1.0, exponent: 2.5, norm: Norm::Linf }),
                params: Params::PottsReport { q, beta, radii: vec![10, 100] },
            };
            prop_assert_eq!(ExperimentConfig::parse(&c.to_ini_string()).unwrap(), c);
        }

        #[test]
        fn parser_never_panics(text in "\\PC{0,200}") {
            let _ = ExperimentConfig::parse(&text);
            let _ = KernelSpec::parse(&text);
        }
    }
}
