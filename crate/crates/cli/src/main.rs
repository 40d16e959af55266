use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use landau_core::gamma2::FamilyKind;
use landau_lab::commands::{self, Gamma2Args, T0Args};
use landau_lab::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "landau-lab", version, about = "Landau–Maxwell velocity-space experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver with diagnostics and write a CSV time series.
    Simulate {
        /// TOML run configuration.
        config: PathBuf,
        /// Overrides `[output] path`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Thermalization-time bounds and related constants.
    T0 {
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 3.0)]
        ell: f64,
        /// Bound on the moment of order ell.
        #[arg(long, default_value_t = 3.1915)]
        mbar: f64,
        /// Largest initial directional temperature.
        #[arg(long, default_value_t = 2.9)]
        tmax: f64,
        /// Curvature constant (default d + 3 − 1/(d−1)).
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Scan a family of antipodally symmetric densities on the sphere.
    Gamma2 {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, value_enum)]
        family: Option<FamilyArg>,
        /// Explicit members, `;`-separated lists of `,`-separated parameters.
        #[arg(long)]
        members: Option<String>,
        #[arg(long, default_value_t = 3.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 13)]
        steps: usize,
        /// Circle points (d = 2) or colatitude rings (d = 3).
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Evaluate the two-particle identities on a configured initial condition.
    LiftedVerify {
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Cos2theta,
    EvenHarmonics,
    Quadric,
    QuadraticForm,
}

impl From<FamilyArg> for FamilyKind {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Cos2theta => FamilyKind::Cos2Theta,
            FamilyArg::EvenHarmonics => FamilyKind::EvenHarmonics,
            FamilyArg::Quadric => FamilyKind::Quadric,
            FamilyArg::QuadraticForm => FamilyKind::QuadraticForm,
        }
    }
}

fn parse_members(text: &str) -> Result<Vec<Vec<f64>>, CliError> {
    text.split(';')
        .filter(|m| !m.trim().is_empty())
        .map(|m| {
            m.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| CliError::Config(format!("member `{m}`: {e}"))))
                .collect()
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Simulate { config, output } => {
            let cfg = RunConfig::load(&config)?;
            commands::cmd_simulate(&cfg, output.as_deref()).map(|_| ())
        }
        Command::T0 { d, ell, mbar, tmax, lambda } => {
            commands::cmd_t0(&T0Args { d, ell, mbar, tmax, lambda }, &mut stdout)
        }
        Command::Gamma2 { d, family, members, amplitude, steps, resolution } => {
            let members = members.as_deref().map(parse_members).transpose()?.unwrap_or_default();
            let args = Gamma2Args { d, family: family.map(Into::into), members, amplitude, steps, resolution };
            commands::cmd_gamma2(&args, &mut stdout).map(|_| ())
        }
        Command::LiftedVerify { config } => {
            let cfg = RunConfig::load(&config)?;
            commands::cmd_lifted_verify(&cfg, &mut stdout).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("landau-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
