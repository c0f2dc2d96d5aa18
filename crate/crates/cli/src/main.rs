use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use epps::estimator::{EstimatorOptions, Normalization};
use epps::experiment::{self, parse_dts, ExperimentConfig, Mode, Window};
use epps::synth::{GarchParams, Innovation, NohParams};
use epps::Error;

#[derive(Parser)]
#[command(
    name = "epps",
    version,
    about = "Asynchrony-compensated correlation on tick data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the return interval and write curve, overlap and manifest files.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    SimulateNoh,
    SimulateGarch,
    FromFile,
}

#[derive(Clone, Copy, ValueEnum)]
enum InnovationArg {
    Gaussian,
    HeavyTailed,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration. Flags other than --out are ignored.
    #[arg(long, conflicts_with = "manifest")]
    config: Option<PathBuf>,
    /// Re-run the experiment recorded in a manifest.json.
    #[arg(long)]
    manifest: Option<PathBuf>,

    #[arg(long, value_enum, required_unless_present_any = ["config", "manifest"])]
    mode: Option<ModeArg>,
    /// Interval list, e.g. `300,600` or `60..1800` or `60..1800*12`.
    #[arg(long, required_unless_present_any = ["config", "manifest"])]
    dts: Option<String>,
    /// Spacing of return start times. Defaults to each interval.
    #[arg(long)]
    grid_step: Option<i64>,
    /// Intervals to write overlap histograms for. Defaults to --dts.
    #[arg(long)]
    overlap_dts: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Correlation of the underlying returns.
    #[arg(long, default_value_t = 0.4)]
    c: f64,
    /// Number of underlying steps.
    #[arg(long, default_value_t = 720_000)]
    steps: usize,
    /// Underlying step in seconds.
    #[arg(long, default_value_t = 1)]
    underlying_step: i64,
    #[arg(long, value_enum, default_value = "gaussian")]
    innovation: InnovationArg,
    /// Mean waiting time between trades of the first instrument, seconds.
    #[arg(long, default_value_t = 15.0)]
    mu1: f64,
    #[arg(long, default_value_t = 25.0)]
    mu2: f64,
    #[arg(long, default_value_t = 2.4e-4)]
    alpha0: f64,
    #[arg(long, default_value_t = 0.15)]
    alpha1: f64,
    #[arg(long, default_value_t = 0.84)]
    beta1: f64,
    /// Write the simulated ticks to ticks.csv.
    #[arg(long)]
    save_ticks: bool,

    /// Tick CSV with header `symbol,time,price`.
    #[arg(long)]
    ticks: Option<PathBuf>,
    /// Two symbols from the tick file, comma separated.
    #[arg(long, value_delimiter = ',')]
    symbols: Option<Vec<String>>,
    /// Evaluation windows `start:end`, comma separated.
    #[arg(long, value_delimiter = ',')]
    sessions: Option<Vec<String>>,

    /// Cap on the per-sample compensation weight.
    #[arg(long)]
    weight_cap: Option<f64>,
    /// Normalize the filtered estimator over all samples instead of the
    /// surviving subset.
    #[arg(long)]
    full_normalization: bool,
}

fn parse_window(s: &str) -> anyhow::Result<Window> {
    let (a, b) = s
        .split_once(':')
        .with_context(|| format!("session `{s}`: expected start:end"))?;
    Ok(Window {
        t_start: a.trim().parse().with_context(|| format!("session `{s}`"))?,
        t_end: b.trim().parse().with_context(|| format!("session `{s}`"))?,
    })
}

fn build_config(args: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    if let Some(path) = &args.manifest {
        let mut c = experiment::config_from_manifest(path)?;
        c.output_dir = args.out.clone();
        return Ok(c);
    }
    if let Some(path) = &args.config {
        let mut c = ExperimentConfig::load(path)?;
        c.output_dir = args.out.clone();
        return Ok(c);
    }
    let mode = match args.mode.expect("required by clap") {
        ModeArg::SimulateNoh => Mode::SimulateNoh,
        ModeArg::SimulateGarch => Mode::SimulateGarch,
        ModeArg::FromFile => Mode::FromFile,
    };
    let simulate = mode != Mode::FromFile;
    let symbols = match args.symbols.as_deref() {
        None => None,
        Some([a, b]) => Some([a.clone(), b.clone()]),
        Some(_) => bail!("--symbols takes exactly two names"),
    };
    let sessions = args
        .sessions
        .as_ref()
        .map(|v| {
            v.iter()
                .map(|s| parse_window(s))
                .collect::<anyhow::Result<Vec<_>>>()
        })
        .transpose()?;
    Ok(ExperimentConfig {
        mode,
        seed: args.seed,
        noh: simulate.then_some(NohParams {
            c: args.c,
            n_steps: args.steps,
            innovation: match args.innovation {
                InnovationArg::Gaussian => Innovation::Gaussian,
                InnovationArg::HeavyTailed => Innovation::HeavyTailed,
            },
        }),
        garch: (mode == Mode::SimulateGarch).then_some(GarchParams {
            alpha0: args.alpha0,
            alpha1: args.alpha1,
            beta1: args.beta1,
            sigma0: None,
        }),
        mu: simulate.then_some([args.mu1, args.mu2]),
        underlying_step: args.underlying_step,
        ticks: args.ticks.clone(),
        symbols,
        sessions,
        dts: parse_dts(args.dts.as_deref().expect("required by clap"))?,
        grid_step: args.grid_step,
        overlap_dts: args.overlap_dts.as_deref().map(parse_dts).transpose()?,
        estimator: EstimatorOptions {
            weight_cap: args.weight_cap,
            filtered_normalization: if args.full_normalization {
                Normalization::Full
            } else {
                Normalization::Subset
            },
        },
        save_ticks: args.save_ticks,
        output_dir: args.out.clone(),
    })
}

const USAGE: u8 = 1;
const TOTAL_FAILURE: u8 = 2;

fn run(args: &RunArgs) -> ExitCode {
    let config = match build_config(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(USAGE);
        }
    };
    match experiment::run(&config) {
        Ok(report) if report.total_failure() => {
            eprintln!("error: every estimate failed; see warnings above");
            ExitCode::from(TOTAL_FAILURE)
        }
        Ok(report) => {
            println!(
                "wrote {} files to {}",
                report.manifest.files.len() + 1,
                config.output_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Degenerate(_)
                | Error::TooFewSamples(_)
                | Error::NoOverlappingSamples
                | Error::FilterExhausted(_) => ExitCode::from(TOTAL_FAILURE),
                _ => ExitCode::from(USAGE),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run(args) => run(&args),
    }
}
