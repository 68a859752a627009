//! `kdtli`: visibility curves, power scans, fits, alignment checks and
//! oracle verification from a run configuration.
//!
//! Exit status: 0 success, 1 invalid input or failed checks, 2 numerical
//! non-convergence.

mod commands;
mod config;
mod dataset;
mod output;

use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use kdtli::coefficients::Motion;

#[derive(Debug, Parser)]
#[command(name = "kdtli", version, about = "Near-field interferometry with optical phase gratings")]
struct Cli {
    /// Also write tabular output as whitespace-separated columns to this file.
    #[arg(long, global = true, value_name = "PATH")]
    emit_gnuplot_style: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Quantum,
    Classical,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monochromatic visibility against the Talbot parameter.
    VisibilityCurve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        xi_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        xi_max: f64,
        #[arg(long)]
        points: usize,
        /// Add the classical column.
        #[arg(long)]
        classical: bool,
        #[arg(long)]
        phi0: Option<f64>,
        #[arg(long)]
        n0: Option<f64>,
        /// Laser power (W) used to derive phi0 and n0 from the config.
        #[arg(long)]
        power: Option<f64>,
        /// Velocity (m/s) for the derivation; defaults to the beam mean.
        #[arg(long)]
        velocity: Option<f64>,
    },
    /// Velocity-averaged visibilities against laser power.
    PowerScan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        p_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        p_max: f64,
        #[arg(long)]
        points: usize,
    },
    /// Noisy synthetic power scan from the config's molecule.
    Synthesize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        p_min: f64,
        #[arg(long)]
        p_max: f64,
        #[arg(long)]
        points: usize,
        /// Relative noise of each visibility.
        #[arg(long, default_value_t = 0.02)]
        noise: f64,
        /// Overrides [numerics] seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit polarizability and absorption cross section to a power scan.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = Model::Quantum)]
        model: Model,
        /// Re-fit at the power and waist calibration corners.
        #[arg(long)]
        systematics: bool,
        /// Write the model curve here instead of after the results.
        #[arg(long)]
        curve_out: Option<PathBuf>,
    },
    /// Evaluate the alignment tolerances for the [alignment] section.
    AlignmentCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare closed forms against the brute-force oracles.
    OracleVerify {
        /// Reduced grids.
        #[arg(long)]
        fast: bool,
    },
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let gnuplot = cli.emit_gnuplot_style.as_deref();
    let code = match cli.command {
        Command::VisibilityCurve { config, xi_min, xi_max, points, classical, phi0, n0, power, velocity } => {
            let args = commands::CurveArgs {
                config: &config,
                xi: commands::linspace(xi_min, xi_max, points)?,
                classical,
                phi0,
                n0,
                power,
                velocity,
            };
            commands::visibility_curve(args, &mut out, gnuplot)?
        }
        Command::PowerScan { config, p_min, p_max, points } => {
            commands::power_scan(&config, commands::linspace(p_min, p_max, points)?, &mut out, gnuplot)?
        }
        Command::Synthesize { config, p_min, p_max, points, noise, seed } => {
            commands::synthesize(&config, commands::linspace(p_min, p_max, points)?, noise, seed, &mut out)?
        }
        Command::Fit { config, data, model, systematics, curve_out } => {
            let motion = match model {
                Model::Quantum => Motion::Quantum,
                Model::Classical => Motion::Classical,
            };
            let args = commands::FitArgs { config: &config, data: &data, motion, systematics, curve_out };
            commands::fit(args, &mut out, gnuplot)?
        }
        Command::AlignmentCheck { config } => commands::alignment_check(&config, &mut out)?,
        Command::OracleVerify { fast } => commands::oracle_verify(fast, &mut out)?,
    };
    out.flush()?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap would exit with 2, which is reserved for non-convergence.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let numeric = err.chain().any(|e| e.downcast_ref::<kdtli::Error>().is_some_and(kdtli::Error::is_numeric));
            ExitCode::from(if numeric { commands::NOT_CONVERGED } else { 1 })
        }
    }
}
