//! Command-line surface: ingest system definitions, dispatch analyses,
//! and emit reports, term lists, CSV data, and static SVG plots.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sinkflow::error::Error;
use sinkflow::system::{system_from_json, SinkSystem};

/// Asymptotic expansions and verification for flows near a nonlinear
/// sink.
#[derive(Parser)]
#[command(name = "sinkflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Output directory for report.txt and artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Relative tolerance of the trajectory integrator.
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
    /// Absolute tolerance of the trajectory integrator.
    #[arg(long, default_value_t = 1e-13)]
    atol: f64,
    /// Emit SVG plots alongside the reports.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct InputOpt {
    /// System definition file: {"A": [[...]], "b": [[{"coeff", "exps"}]]}.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum, eigenvalue-spacing classification, and resonance report.
    Classify {
        #[command(flatten)]
        input: InputOpt,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Construct the iterates D_1..D_m with guaranteed orders.
    Iterates {
        #[command(flatten)]
        input: InputOpt,
        /// Number of iterates to construct.
        #[arg(long, default_value_t = 6)]
        m_max: u32,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Approximate the near-identity transformation and spot-check it.
    Psi {
        #[command(flatten)]
        input: InputOpt,
        /// Number of approximations to construct.
        #[arg(long, default_value_t = 6)]
        m_max: u32,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Expand one component in the other as the trajectory enters the
    /// origin.
    Relate {
        #[command(flatten)]
        input: InputOpt,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Michaelis-Menten report: spectrum, sigma table, expansion
    /// template, rate-law comparison.
    Mm {
        /// Dimensionless parameter ε = e0/K_m.
        #[arg(long, conflicts_with_all = ["k1", "km1", "k2", "e0"])]
        eps: Option<f64>,
        /// Dimensionless parameter η = k2/(k-1+k2).
        #[arg(long, conflicts_with_all = ["k1", "km1", "k2", "e0"])]
        eta: Option<f64>,
        /// Dimensional rate constant k1.
        #[arg(long, requires_all = ["km1", "k2", "e0"])]
        k1: Option<f64>,
        /// Dimensional rate constant k-1.
        #[arg(long)]
        km1: Option<f64>,
        /// Dimensional rate constant k2.
        #[arg(long)]
        k2: Option<f64>,
        /// Total enzyme concentration e0.
        #[arg(long)]
        e0: Option<f64>,
        /// Length of the sigma table.
        #[arg(long, default_value_t = 8)]
        sigma_n: u32,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the full oracle suite with a pass/fail table.
    Validate {
        /// Seed for the randomized sweeps.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn load_system(path: &PathBuf) -> Result<SinkSystem, Error> {
    let text = std::fs::read_to_string(path)?;
    system_from_json(&text)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::UnsupportedSpectrum(_)
        | Error::UnsupportedShape(_)
        | Error::NonDiagonalizable(_)
        | Error::NotASink(_)
        | Error::Regime(_) => 2,
        Error::InternalConsistency(_) | Error::Fit(_) => 3,
        _ => 1,
    }
}

fn run() -> Result<bool, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Classify { input, common } => {
            let sys = load_system(&input.input)?;
            let mut out = commands::Output::new(&common.out)?;
            commands::classify(&sys, &mut out)?;
            print!("{}", out.finish()?);
            Ok(true)
        }
        Command::Iterates { input, m_max, common } => {
            let sys = load_system(&input.input)?;
            let mut out = commands::Output::new(&common.out)?;
            commands::iterates(&sys, m_max, &mut out)?;
            print!("{}", out.finish()?);
            Ok(true)
        }
        Command::Psi { input, m_max, common } => {
            let sys = load_system(&input.input)?;
            let mut out = commands::Output::new(&common.out)?;
            commands::psi(&sys, m_max, common.rtol, common.atol, &mut out)?;
            print!("{}", out.finish()?);
            Ok(true)
        }
        Command::Relate { input, common } => {
            let sys = load_system(&input.input)?;
            let mut out = commands::Output::new(&common.out)?;
            commands::relate(&sys, common.rtol, common.atol, common.svg, &mut out)?;
            print!("{}", out.finish()?);
            Ok(true)
        }
        Command::Mm { eps, eta, k1, km1, k2, e0, sigma_n, common } => {
            let (eps, eta, dimensional) = match (eps, eta, k1, km1, k2, e0) {
                (Some(eps), Some(eta), ..) => (eps, eta, None),
                (None, None, Some(k1), Some(km1), Some(k2), Some(e0)) => {
                    let nd = sinkflow::mm::nondimensionalize(k1, km1, k2, e0)?;
                    (nd.params.eps, nd.params.eta, Some((k1, km1, k2, e0)))
                }
                _ => {
                    return Err(Error::Input(
                        "provide either --eps and --eta, or all of --k1 --km1 --k2 --e0".into(),
                    ))
                }
            };
            let mut out = commands::Output::new(&common.out)?;
            commands::mm_report(
                eps,
                eta,
                dimensional,
                sigma_n,
                common.rtol,
                common.atol,
                common.svg,
                &mut out,
            )?;
            print!("{}", out.finish()?);
            Ok(true)
        }
        Command::Validate { seed, common } => {
            let mut out = commands::Output::new(&common.out)?;
            let ok = commands::validate_cmd(seed, &mut out)?;
            print!("{}", out.finish()?);
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        // Validation failures carry a per-check detail file.
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
