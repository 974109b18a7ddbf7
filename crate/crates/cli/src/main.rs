use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use colorqubit::commands::{self, Context, DesignOptions, DispersionOptions, GateInput, GateOptions, SchmidtTarget};
use colorqubit::sweep::SweepPlan;
use colorqubit::Error;

/// Design and simulation of an integrated color-qubit gate: a heralded
/// SFWM single-photon source feeding a DFG frequency-conversion waveguide.
#[derive(Debug, Parser)]
#[command(name = "colorqubit", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Device configuration (TOML); the embedded design point when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Effective-index table replacing the built-in dispersion solver.
    #[arg(long, global = true, value_name = "PATH")]
    dispersion: Option<PathBuf>,
    /// Directory for reports, data files and the run manifest.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Geometry search, spectra, Schmidt modes and fidelity at the design point.
    Design {
        /// Print the effective configuration and exit.
        #[arg(long)]
        show_config: bool,
        /// Skip the objective-function and contour data.
        #[arg(long)]
        no_figures: bool,
    },
    /// Evaluate a sweep plan.
    Sweep {
        /// Sweep plan (TOML).
        plan: PathBuf,
        /// Also write a grey-scale PGM raster of the first output.
        #[arg(long)]
        heatmap: bool,
    },
    /// Apply the gate to an input state.
    Gate {
        /// `fundamental` (the heralded signal mode) or a `domega_THz re im` file.
        #[arg(long, default_value = "fundamental", value_name = "SPEC")]
        input: String,
        /// Rotation-axis phase in rad.
        #[arg(long, allow_negative_numbers = true)]
        nu: Option<f64>,
        /// Pump powers in mW.
        #[arg(long, num_args = 2, value_names = ["P1", "P2"])]
        powers: Option<Vec<f64>>,
    },
    /// Effective and group indices of both waveguides.
    Dispersion {
        #[arg(long, default_value_t = DispersionOptions::default().lambda_min_um)]
        lambda_min_um: f64,
        #[arg(long, default_value_t = DispersionOptions::default().lambda_max_um)]
        lambda_max_um: f64,
        #[arg(long, default_value_t = DispersionOptions::default().points)]
        points: usize,
    },
    /// Schmidt decomposition of the joint spectrum and/or mapping function.
    Schmidt {
        #[arg(long, value_enum, default_value_t = Which::Both)]
        which: Which,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Which {
    Jsa,
    Mf,
    Both,
}

fn run(cli: Cli) -> Result<(), Error> {
    let g = &cli.global;
    rayon::ThreadPoolBuilder::new()
        .num_threads(g.threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let ctx = Context::load(g.config.as_deref(), g.dispersion.as_deref(), &g.out)?;
    let report = match cli.command {
        Command::Design {
            show_config,
            no_figures,
        } => {
            if show_config {
                print!("{}", ctx.config.to_toml_string());
                return Ok(());
            }
            commands::design(&ctx, DesignOptions { figures: !no_figures })?.0
        }
        Command::Sweep { plan, heatmap } => {
            let plan = SweepPlan::load(&plan)?;
            commands::sweep(&ctx, &plan, heatmap)?.0
        }
        Command::Gate { input, nu, powers } => {
            let opts = GateOptions {
                nu,
                powers_mw: powers.map(|p| (p[0], p[1])),
            };
            commands::gate(&ctx, &GateInput::parse(&input), &opts)?.0
        }
        Command::Dispersion {
            lambda_min_um,
            lambda_max_um,
            points,
        } => commands::dispersion(
            &ctx,
            DispersionOptions {
                lambda_min_um,
                lambda_max_um,
                points,
            },
        )?,
        Command::Schmidt { which } => {
            let target = match which {
                Which::Jsa => SchmidtTarget::Jsa,
                Which::Mf => SchmidtTarget::Mf,
                Which::Both => SchmidtTarget::Both,
            };
            commands::schmidt(&ctx, target)?
        }
    };
    print!("{}", report.to_text());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 3 })
        }
    }
}
