use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use klplate::config::{Experiment, ExperimentConfig};
use klplate::experiments::execute;
use klplate::output::OutputDir;
use klplate::stepper::Scheme;
use klplate::PlateError;

#[derive(Parser)]
#[command(name = "klplate", version, about = "Finite-difference Kirchhoff-Love plate solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-dependent run: probe CSV, VTK snapshots, diagnostics
    Run(Common),
    /// Manufactured-solution convergence study
    Mms(Common),
    /// Lowest eigenmodes, mode CSV and nodal lines
    Eigs(Common),
    /// Time step, worst-case eigenvalue and damping regime
    Dt(Common),
    /// Run and take the power spectrum of the first probe
    Spectrum(Common),
    /// Locate a natural frequency and drive at it
    Resonance(Common),
    /// Drive near a natural frequency and measure the beat
    Beat(Common),
    /// Drive a localized force at a mode's frequency
    Chladni(Common),
    /// Forced supported plate against the modal series
    Forced(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory [default: out/<experiment>]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Stability factor C_sf
    #[arg(long)]
    csf: Option<f64>,
    /// Grid family member G_N
    #[arg(long)]
    grid: Option<usize>,
    /// Print nothing on success
    #[arg(long)]
    quiet: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Pc22,
    Nb2,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Pc22 => Scheme::Pc22,
            SchemeArg::Nb2 => Scheme::Nb2,
        }
    }
}

fn split(c: Command) -> (Experiment, Common) {
    match c {
        Command::Run(a) => (Experiment::Run, a),
        Command::Mms(a) => (Experiment::Mms, a),
        Command::Eigs(a) => (Experiment::Eigs, a),
        Command::Dt(a) => (Experiment::Dt, a),
        Command::Spectrum(a) => (Experiment::Spectrum, a),
        Command::Resonance(a) => (Experiment::Resonance, a),
        Command::Beat(a) => (Experiment::Beat, a),
        Command::Chladni(a) => (Experiment::Chladni, a),
        Command::Forced(a) => (Experiment::Forced, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = split(cli.command);
    match run(experiment, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("klplate: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(experiment: Experiment, args: &Common) -> Result<(), PlateError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    // the subcommand names the experiment; a config may serve several
    cfg.experiment = experiment;
    cfg.apply_overrides(args.scheme.map(Scheme::from), args.csf, args.grid)?;
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("out").join(experiment.name()));
    let out = OutputDir::create(&dir, &cfg)?;
    let report = execute(&cfg, &out)?;
    if !args.quiet {
        println!("{report}");
        println!("output: {}", dir.display());
    }
    Ok(())
}
