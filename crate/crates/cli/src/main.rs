//! `mmc`: mixture matrix completion from the command line.
//!
//! Every subcommand accepts `--config FILE` with `key = value` lines named
//! after its long flags; flags given on the command line win.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "mmc", version, about = "Mixture matrix completion toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic mixture with ground truth and perturbed bases.
    Gen(GenArgs),
    /// Check a sampling mask for identifiability.
    CheckPattern(CheckPatternArgs),
    /// Complete a single partially observed low-rank matrix.
    Complete(CompleteArgs),
    /// Recover K low-rank matrices from an observed mixture.
    Run(RunArgs),
    /// Success-rate grid over sampling rate and initialization distance.
    Phase(PhaseArgs),
    /// Monte-Carlo check of the sampling-rate bound.
    Theorem2(Theorem2Args),
    /// Rank-1 example with two different explanations of one mixture.
    Example1(Example1Args),
    /// Mix two PGM images entry-wise and optionally separate them again.
    MixImages(MixImagesArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Draw each column from a single component.
    #[arg(long)]
    pub hrmc: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct CheckPatternArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long)]
    pub r: usize,
    #[arg(long, default_value = "flow")]
    pub method: String,
    /// Search for a column partition whose groups all pass.
    #[arg(long)]
    pub search: bool,
    #[arg(long, default_value_t = 32)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct CompleteArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub r: usize,
    #[arg(long, default_value = "alt-min")]
    pub method: String,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub r: usize,
    /// Directory holding `init_1.mtx.txt` … `init_K.mtx.txt` (d×r bases).
    #[arg(long, conflicts_with = "init")]
    pub init_dir: Option<PathBuf>,
    /// `random`: Gaussian orthonormal bases drawn from `--seed`.
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long)]
    pub cap: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub restarts: usize,
    #[arg(long, default_value_t = 100)]
    pub max_outer_iters: usize,
    #[arg(long, default_value = "alt-min")]
    pub method: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct PhaseArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `desk` (5×5 grid, 20 trials) or `full` (10×11 grid, 100 trials).
    #[arg(long, default_value = "desk")]
    pub preset: String,
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub delta: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub d: usize,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub r: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = mmc_core::harness::PRESET_RESTARTS)]
    pub restarts: usize,
    #[arg(long, default_value_t = mmc_core::harness::PRESET_MAX_OUTER_ITERS)]
    pub max_outer_iters: usize,
    #[arg(long, default_value_t = mmc_core::harness::PRESET_LRMC_MAX_ITERS)]
    pub lrmc_max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Add per-trial wall time to the trial log.
    #[arg(long)]
    pub timings: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct Theorem2Args {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub d: usize,
    #[arg(long, default_value_t = 3)]
    pub r: usize,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the campaign summary as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct Example1Args {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MixImagesArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Separate the mixture with AMMC started from the true subspaces.
    #[arg(long)]
    pub recover: bool,
    #[arg(long, default_value_t = 10)]
    pub r: usize,
    #[arg(long, default_value_t = 0)]
    pub restarts: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Appends `--key value` for every config entry whose flag is absent.
fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let pos = args.iter().position(|a| a == "--config");
    let path = match pos {
        Some(i) => args.get(i + 1).context("--config needs a file")?.clone(),
        None => match args.iter().find_map(|a| a.to_str()?.strip_prefix("--config=").map(OsString::from)) {
            Some(p) => p,
            None => return Ok(args),
        },
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.to_string_lossy()))?;
    let cfg = mmc_core::harness::parse_config(&text)?;
    let mut out = args.clone();
    for (key, value) in cfg {
        let flag = format!("--{}", key.replace('_', "-"));
        let given = args.iter().any(|a| {
            a.to_str()
                .is_some_and(|s| s == flag || s.starts_with(&format!("{flag}=")))
        });
        if given {
            continue;
        }
        match value.as_str() {
            "true" => out.push(flag.into()),
            "false" => {}
            _ => {
                out.push(flag.into());
                out.push(value.split(',').map(str::trim).collect::<Vec<_>>().join(",").into());
            }
        }
    }
    Ok(out)
}

fn main() -> Result<()> {
    let args = merge_config(std::env::args_os().collect())?;
    let cli = Cli::parse_from(args);
    match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::CheckPattern(a) => commands::check_pattern(&a),
        Command::Complete(a) => commands::complete(&a),
        Command::Run(a) => commands::run(&a),
        Command::Phase(a) => commands::phase(&a),
        Command::Theorem2(a) => commands::theorem2(&a),
        Command::Example1(a) => commands::example1(&a),
        Command::MixImages(a) => commands::mix_images(&a),
    }
}
