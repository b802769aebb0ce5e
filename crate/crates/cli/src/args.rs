use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spbo::acquisition::AcqKind;
use spbo::netlist::{DesignFormat, LoadOptions, OutlineSpec, PadPolicy};
use spbo::sa_engine::Schedule;
use spbo::Outline;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "spbo", version, about = "Fixed-outline macro placement with batch BO and SA")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run BO or SA experiments and append a summary row per configuration.
    Run(RunArgs),
    /// Pack a sequence pair and optionally render it to SVG.
    Pack(PackArgs),
    /// Evaluate the wirelength of a sequence pair.
    Evaluate(EvaluateArgs),
    /// Aggregate run records into summary and trace tables.
    Report(ReportArgs),
    /// Write a random benchmark-like design.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Native,
    Bookshelf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Bo,
    Sa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AcqArg {
    Ei,
    Ucb,
}

impl From<AcqArg> for AcqKind {
    fn from(a: AcqArg) -> Self {
        match a {
            AcqArg::Ei => AcqKind::Ei,
            AcqArg::Ucb => AcqKind::Ucb,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Linear,
    Exponential,
    Stepdown,
}

impl From<ScheduleArg> for Schedule {
    fn from(s: ScheduleArg) -> Self {
        match s {
            ScheduleArg::Linear => Schedule::Linear,
            ScheduleArg::Exponential => Schedule::Exponential,
            ScheduleArg::Stepdown => Schedule::Stepdown,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long, value_enum, default_value = "native")]
    pub format: FormatArg,
    /// Outline as WIDTHxHEIGHT.
    #[arg(long, conflicts_with = "whitespace")]
    pub outline: Option<String>,
    /// Square outline with this whitespace fraction over the macro area.
    #[arg(long)]
    pub whitespace: Option<f64>,
    /// Move pads that lie outside the outline onto its boundary.
    #[arg(long)]
    pub project_pads: bool,
}

impl DesignArgs {
    pub fn format(&self) -> DesignFormat {
        match self.format {
            FormatArg::Native => DesignFormat::Native,
            FormatArg::Bookshelf => DesignFormat::Bookshelf,
        }
    }

    pub fn load_options(&self) -> CliResult<LoadOptions> {
        let outline = match (&self.outline, self.whitespace) {
            (Some(s), _) => OutlineSpec::Explicit(parse_outline(s)?),
            (None, Some(g)) if g >= 0.0 && g.is_finite() => OutlineSpec::Whitespace(g),
            (None, Some(g)) => return Err(CliError::usage(format!("whitespace {g} must be >= 0"))),
            (None, None) => OutlineSpec::FromFile,
        };
        let pads = if self.project_pads {
            PadPolicy::Project
        } else {
            PadPolicy::Reject
        };
        Ok(LoadOptions { outline, pads })
    }
}

pub fn parse_outline(s: &str) -> CliResult<Outline> {
    let bad = || CliError::usage(format!("outline `{s}` is not WIDTHxHEIGHT"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: f64 = w.trim().parse().map_err(|_| bad())?;
    let h: f64 = h.trim().parse().map_err(|_| bad())?;
    if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
        return Err(bad());
    }
    Ok(Outline::new(w, h))
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long, value_enum)]
    pub algo: AlgoArg,
    /// Objective evaluations per run.
    #[arg(long, default_value_t = 520)]
    pub budget: usize,
    #[arg(long, default_value_t = 10)]
    pub batch_size: usize,
    /// Initial design size (BO).
    #[arg(long, default_value_t = 20)]
    pub n_init: usize,
    #[arg(long, value_enum, default_value = "ei")]
    pub acq: AcqArg,
    #[arg(long, default_value_t = 4.0)]
    pub ucb_beta: f64,
    /// Quality-weight temperature in units of the pool's acquisition spread.
    #[arg(long, default_value_t = 1.0)]
    pub rho_scale: f64,
    /// Optimizer iterations per surrogate fit.
    #[arg(long, default_value_t = 100)]
    pub fit_iters: usize,
    /// Annealing schedules (SA); several values run every combination with --t0.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "exponential")]
    pub schedule: Vec<ScheduleArg>,
    /// Initial temperatures (SA).
    #[arg(long, value_delimiter = ',', default_value = "10000")]
    pub t0: Vec<f64>,
    /// Last temperature of the exponential schedule.
    #[arg(long, default_value_t = 1.0)]
    pub t_final: f64,
    /// Seed of the first repeat; repeat k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Runs executed at the same time.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Record wall-clock times (records then differ between reruns).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PackArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Sequence pair as "pi / pi'" (macro ids); identity when omitted.
    #[arg(long, conflicts_with = "seed")]
    pub sp: Option<String>,
    /// Pack a random feasible sequence pair drawn with this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long)]
    pub sp: String,
    /// Write the placement as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write the placement as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Run record files.
    #[arg(required = true)]
    pub records: Vec<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub macros: Option<usize>,
    #[arg(long)]
    pub nets: Option<usize>,
    #[arg(long)]
    pub pads: Option<usize>,
    #[arg(long)]
    pub whitespace: Option<f64>,
}
