use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use memkernel::experiment::{
    output_dir, run_identify, run_simulate, run_sweep, ExperimentConfig, IdentifyOptions, Stage, SweepAxis,
    MEASUREMENTS_FILE,
};
use memkernel::Error;

#[derive(Parser)]
#[command(
    name = "memkernel",
    version,
    about = "Simulate and identify relaxation kernels of heat conduction with memory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the forward model and write measurement traces.
    Simulate { config: PathBuf },
    /// Recover the kernels from measurement traces.
    Identify {
        config: PathBuf,
        /// Defaults to measurements.csv in the configured output directory.
        #[arg(long)]
        measurements: Option<PathBuf>,
        #[arg(long, default_value = "both", value_parser = ["beta", "a", "both"])]
        stage: String,
        /// Stage 1 from the insulated-end traces.
        #[arg(long)]
        variant: bool,
    },
    /// Simulate and identify along one parameter axis.
    Sweep {
        config: PathBuf,
        #[arg(long, value_parser = ["noise", "dt", "modes"])]
        axis: String,
        /// Comma-separated values; defaults depend on the axis.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Option<Vec<f64>>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::PipelineOrder(_) => 3,
        Error::Convention { .. }
        | Error::SingularStep(_)
        | Error::IllPosedReduction(_)
        | Error::Unstable(_)
        | Error::StepRestriction { .. } => 4,
        _ => 2,
    }
}

fn base_dir(config: &Path) -> PathBuf {
    config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

fn run(cli: Cli) -> memkernel::Result<()> {
    match cli.command {
        Command::Simulate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = run_simulate(&cfg, &base_dir(&config))?;
            println!("{}", dir.display());
        }
        Command::Identify {
            config,
            measurements,
            stage,
            variant,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let base = base_dir(&config);
            let measurements = measurements.unwrap_or_else(|| output_dir(&cfg, &base).join(MEASUREMENTS_FILE));
            let opts = IdentifyOptions {
                stage: stage.parse::<Stage>()?,
                variant: variant || cfg.basis_kind == memkernel::spectral::BasisKind::DirichletNeumann,
            };
            let out = run_identify(&cfg, &base, &measurements, opts)?;
            let r = &out.report;
            for (name, s) in [("beta", &r.beta), ("variant_beta", &r.variant_beta), ("a", &r.a)] {
                if let Some(s) = s {
                    match s.error {
                        Some(e) => println!("{name}: alpha={} rel_l2={} max={}", s.alpha, e.rel_l2, e.max_error),
                        None => println!("{name}: alpha={}", s.alpha),
                    }
                }
            }
        }
        Command::Sweep { config, axis, values } => {
            let cfg = ExperimentConfig::load(&config)?;
            let axis: SweepAxis = axis.parse()?;
            let values = values.unwrap_or_else(|| axis.default_values(&cfg));
            let (path, _) = run_sweep(&cfg, &base_dir(&config), axis, &values)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MEMKERNEL_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("memkernel: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
