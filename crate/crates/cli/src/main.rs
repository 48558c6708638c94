use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use metastable_cli::{
    emit_plot, parse_sigmas, read_rows, run_with_workers, CliError, Experiment, ExperimentConfig,
    Format, Overrides, PlotKind, EXIT_CONFIG, WORKERS_ENV,
};

#[derive(Parser)]
#[command(
    name = "metastable",
    version,
    about = "Metastability experiments for random-walk Metropolis on a two-mode mixture"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conductance by quadrature and Monte Carlo across sigma.
    ConductanceSweep(RunArgs),
    /// Spectral gap and threshold conductance of the grid chain across sigma.
    GapSweep(RunArgs),
    /// First passage times from the left mode into the right half-line.
    HittingTimes(RunArgs),
    /// Audit every assumption clause for a partition.
    VerifyAssumptions(RunArgs),
    /// Check Cheeger's inequality on the grid chain.
    CheegerAudit(RunArgs),
    /// Draw an SVG from a results CSV.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma separated, e.g. 0.5,0.4,0.3
    #[arg(long)]
    sigmas: Option<String>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    /// Split the partition at this point (verify-assumptions).
    #[arg(long, allow_hyphen_values = true)]
    cut: Option<f64>,
    /// Repeat the gap on a grid twice as fine (gap-sweep).
    #[arg(long)]
    refine: bool,
    /// Write each grid transition matrix as text.
    #[arg(long)]
    dump_matrix: bool,
    /// Fill the wall_time_ms column.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// Results CSV.
    input: PathBuf,
    #[arg(long, default_value = "plot.svg")]
    out: PathBuf,
    /// linear or log
    #[arg(long, default_value = "linear")]
    kind: String,
    /// Only plot these quantities (repeatable).
    #[arg(long = "quantity")]
    quantities: Vec<String>,
}

fn workers() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "{WORKERS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

fn configure(experiment: Experiment, args: RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let overrides = Overrides {
        experiment: Some(experiment),
        seed: args.seed,
        sigmas: args.sigmas.as_deref().map(parse_sigmas).transpose()?,
        replicas: args.replicas,
        grid_n: args.grid_n,
        output_dir: args.out,
        format: args
            .format
            .as_deref()
            .map(str::parse::<Format>)
            .transpose()?,
        cut: args.cut,
        refine: args.refine,
        dump_matrix: args.dump_matrix,
        timing: args.timing,
    };
    config.apply(overrides);
    Ok(config)
}

fn plot(args: PlotArgs) -> Result<(), CliError> {
    let kind: PlotKind = args.kind.parse()?;
    let rows = read_rows(&args.input)?;
    let svg = emit_plot(&rows, kind, &args.quantities);
    std::fs::write(&args.out, svg).map_err(|e| CliError::io(&args.out, e))?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::ConductanceSweep(a) => (Experiment::ConductanceSweep, a),
        Command::GapSweep(a) => (Experiment::GapSweep, a),
        Command::HittingTimes(a) => (Experiment::HittingTimes, a),
        Command::VerifyAssumptions(a) => (Experiment::VerifyAssumptions, a),
        Command::CheegerAudit(a) => (Experiment::CheegerAudit, a),
        Command::Plot(a) => {
            return match plot(a) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_CONFIG as u8)
                }
            };
        }
    };
    let result = configure(experiment, args).and_then(|c| run_with_workers(&c, workers()?));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
