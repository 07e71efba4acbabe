use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lrtrunc::config::{ConfigError, ExperimentConfig, ExperimentKind, KernelSpec};
use lrtrunc::experiment::{self, RunError};
use lrtrunc::report::{emit_plotdata, write_atomic};

#[derive(Parser)]
#[command(name = "lrtrunc", version, about = "Seeded experiments on truncated long-range percolation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coupled truncation curve of the crossing probability.
    Simulate(Common),
    /// Exhaustive dispersion checks and cosine moments.
    Dispersion(Common),
    /// Exact level-sum tables for the ternary tree walk.
    Tree(Common),
    /// Intersection probe for the path measures.
    Pathmeasure(Common),
    /// Expected overlap curve.
    Overlap(Common),
    /// Potts bound report.
    Potts(Common),
    /// Scan of the counterexample kernel.
    Counterexample(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// CSV destination; stdout when absent and the config names none.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces the `[kernel]` section, e.g. `flat-box(d=3, delta=0.1, radius=4)`.
    #[arg(long)]
    kernel: Option<String>,
    /// Also writes whitespace-separated plot data keyed on the first column.
    #[arg(long)]
    plot: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (ExperimentKind, Common) {
        match self {
            Command::Simulate(c) => (ExperimentKind::TruncationCurve, c),
            Command::Dispersion(c) => (ExperimentKind::DispersionSuite, c),
            Command::Tree(c) => (ExperimentKind::TreeSuite, c),
            Command::Pathmeasure(c) => (ExperimentKind::IntersectionProbe, c),
            Command::Overlap(c) => (ExperimentKind::OverlapCurve, c),
            Command::Potts(c) => (ExperimentKind::PottsReport, c),
            Command::Counterexample(c) => (ExperimentKind::CounterexampleScan, c),
        }
    }
}

fn load(kind: ExperimentKind, args: &Common) -> Result<ExperimentConfig, RunError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| RunError::Invalid(format!("{}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if cfg.kind != kind {
        return Err(RunError::Invalid(format!(
            "config describes a {} experiment, not {}",
            cfg.kind.name(),
            kind.name()
        )));
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(ConfigError::InvalidValue { key: "workers".into(), value: "0".into(), msg: "must be positive".into() }.into());
        }
        cfg.workers = w;
    }
    if let Some(k) = &args.kernel {
        cfg.kernel = Some(KernelSpec::parse(k)?);
    }
    if let Some(o) = &args.out {
        cfg.output = Some(o.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(kind: ExperimentKind, args: &Common) -> Result<(), RunError> {
    let cfg = load(kind, args)?;
    let table = experiment::run(&cfg)?;
    let csv = table.to_csv()?;
    match &cfg.output {
        Some(path) => write_atomic(Path::new(path), csv.as_bytes())?,
        None => print!("{csv}"),
    }
    if let Some(plot) = &args.plot {
        let ys: Vec<&str> = table.columns[1..].iter().map(String::as_str).collect();
        let data = emit_plotdata(&table, &table.columns[0], &ys)?;
        write_atomic(plot, data.as_bytes())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let (kind, args) = Cli::parse().command.split();
    match execute(kind, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lrtrunc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
