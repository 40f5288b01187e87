use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emission_dynamics::panel::Field;
use emission_dynamics::synth::{generate_panel, write_long_csv, GeneratorSpec};
use emission_dynamics_cli::config::{parse_period, ConfigFile, Overrides, PeriodSpec, RunConfig};
use emission_dynamics_cli::output::write_atomic;
use emission_dynamics_cli::pipeline::run;

/// Exit status when some estimation failed or did not converge.
const EXIT_ESTIMATION: u8 = 1;
/// Exit status for configuration, input and I/O errors.
const EXIT_FATAL: u8 = 2;

#[derive(Parser)]
#[command(name = "emission-dynamics", version, about = "Growth-rate statistics of regional emissions and GDP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit distributions, scaling and convergence models; write the report bundle.
    Run(RunArgs),
    /// Write a synthetic panel as emissions.csv and gdp.csv.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input_emissions: Option<PathBuf>,
    #[arg(long)]
    input_gdp: Option<PathBuf>,
    /// Single long file with region_id,year,emissions,gdp columns.
    #[arg(long)]
    input_combined: Option<PathBuf>,
    /// Comma-separated canonical period names or name=START-END.
    #[arg(long, value_delimiter = ',')]
    periods: Option<Vec<String>>,
    #[arg(long)]
    window_length: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    /// Bootstrap replicates per period.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 242)]
    regions: usize,
    #[arg(long, default_value_t = 33)]
    years: usize,
    #[arg(long, default_value_t = -0.004, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.266, allow_negative_numbers = true)]
    phi: f64,
    #[arg(long, default_value_t = -0.085, allow_negative_numbers = true)]
    beta: f64,
}

fn run_command(args: RunArgs) -> ExitCode {
    let file = match &args.config {
        Some(path) => match ConfigFile::load(path) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_FATAL);
            }
        },
        None => ConfigFile::default(),
    };
    let periods = match args
        .periods
        .map(|ps| ps.iter().map(|p| parse_period(p)).collect::<Result<Vec<PeriodSpec>, _>>())
        .transpose()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FATAL);
        }
    };
    let overrides = Overrides {
        input_emissions: args.input_emissions,
        input_gdp: args.input_gdp,
        input_combined: args.input_combined,
        periods,
        window_length: args.window_length,
        bins: args.bins,
        bootstrap: args.bootstrap,
        seed: args.seed,
        out: args.out,
    };
    let config = match RunConfig::resolve(file, overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FATAL);
        }
    };
    match run(&config) {
        Ok(summary) if summary.succeeded() => {
            println!("wrote {} files to {}", summary.files.len(), config.out.display());
            ExitCode::SUCCESS
        }
        Ok(summary) => {
            for f in &summary.failures {
                eprintln!("failed: {}: {}", f.stage, f.message);
            }
            eprintln!(
                "{} estimation(s) failed; see {}",
                summary.failures.len(),
                config.out.join("error_manifest.json").display()
            );
            ExitCode::from(EXIT_ESTIMATION)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FATAL)
        }
    }
}

fn synth_command(args: SynthArgs) -> ExitCode {
    let spec = GeneratorSpec {
        n_regions: args.regions,
        n_years: args.years,
        ..GeneratorSpec::regional(args.alpha, args.phi, args.beta, args.seed)
    };
    let result = generate_panel(&spec).map_err(|e| e.to_string()).and_then(|panel| {
        std::fs::create_dir_all(&args.out).map_err(|e| e.to_string())?;
        for (field, name) in [(Field::Emissions, "emissions.csv"), (Field::Gdp, "gdp.csv")] {
            let mut buf = Vec::new();
            write_long_csv(&panel.observations, field, &mut buf).map_err(|e| e.to_string())?;
            write_atomic(&args.out, name, &buf).map_err(|e| e.to_string())?;
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FATAL)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run_command(args),
        Command::Synth(args) => synth_command(args),
    }
}
