// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use blink::error::{BlinkError, Result};
use blink::fixture::{gen_fixture, FixtureParams};
use blink::report::PhaseStatus;
use blink::{Overrides, Phase, Pipeline, PipelineConfig, RunOptions};
use blink_core::model::SelectionMode;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Builds run-time power monitors from a VCD and a shunt-resistor capture.
#[derive(Parser)]
#[command(name = "blink", version)]
struct Cli {
    /// More log output; repeat for debug messages.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count per-window toggle activity of the candidate signals.
    ExtractActivity(RunArgs),
    /// Turn scope captures into per-window power.
    IngestPower(RunArgs),
    /// Select and fit the power model.
    Identify(RunArgs),
    /// Quantize the model and write the monitor RTL.
    EmitMonitor(RunArgs),
    /// Run every phase in order.
    All(RunArgs),
    /// Write a synthetic run directory with a known power model.
    GenFixture(FixtureArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Greedy,
    Exhaustive,
}

#[derive(Args)]
struct RunArgs {
    /// Pipeline configuration file.
    #[arg(short, long, default_value = "blink.toml")]
    config: PathBuf,
    /// Output directory; overrides BLINK_OUTPUT_ROOT and the file.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Run even when inputs and configuration are unchanged.
    #[arg(long)]
    force: bool,
    /// Largest number of model terms.
    #[arg(long)]
    budget: Option<usize>,
    /// Seed of the train/test split.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Window length in microseconds.
    #[arg(long)]
    resolution_us: Option<f64>,
    /// Delay between the trigger edge and the first window, in microseconds.
    #[arg(long)]
    settle_us: Option<f64>,
}

#[derive(Args)]
struct FixtureArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Directory to create.
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long)]
    signals: Option<usize>,
    #[arg(long)]
    windows: Option<usize>,
    /// Number of terms in the ground-truth model.
    #[arg(long)]
    support: Option<usize>,
    /// Noise standard deviation as a fraction of peak window power.
    #[arg(long)]
    noise: Option<f64>,
}

fn run(phases: &[Phase], a: RunArgs) -> Result<()> {
    let ov = Overrides {
        output_dir: a.output,
        budget: a.budget,
        seed: a.seed,
        mode: a.mode.map(|m| match m {
            Mode::Greedy => SelectionMode::Greedy,
            Mode::Exhaustive => SelectionMode::Exhaustive,
        }),
        resolution_us: a.resolution_us,
        settle_us: a.settle_us,
    };
    let cfg = PipelineConfig::load(&a.config, &ov)?;
    let pipeline = Pipeline::new(cfg);
    let summary = pipeline.run(phases, RunOptions { force: a.force })?;
    for o in &summary.outcomes {
        match o.status {
            PhaseStatus::Ran => println!("{}: ran in {:.3} s", o.phase.name(), o.seconds),
            PhaseStatus::UpToDate => println!("{}: up-to-date", o.phase.name()),
        }
    }
    if summary.report_written {
        println!("report: {}", summary.report_path.display());
    }
    Ok(())
}

fn fixture(a: FixtureArgs) -> Result<()> {
    let mut p = FixtureParams::default();
    if let Some(n) = a.signals {
        p.design.n_signals = n;
    }
    if let Some(n) = a.windows {
        p.vcd.n_windows = n;
    }
    if let Some(k) = a.support {
        p.design.support_size = k;
    }
    if let Some(s) = a.noise {
        p.scope.noise_sigma = s;
    }
    let f = gen_fixture(a.seed, &p, &a.out)?;
    println!("fixture: {}", f.dir.display());
    println!("run with: blink all -c {}", f.config.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::ExtractActivity(a) => run(&[Phase::ExtractActivity], a),
        Command::IngestPower(a) => run(&[Phase::IngestPower], a),
        Command::Identify(a) => run(&[Phase::Identify], a),
        Command::EmitMonitor(a) => run(&[Phase::EmitMonitor], a),
        Command::All(a) => run(&Phase::ALL, a),
        Command::GenFixture(a) => fixture(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(e),
    }
}

fn report_error(e: BlinkError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
