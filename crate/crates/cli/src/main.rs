// SPDX-License-Identifier: Apache-2.0

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spinboson::sweep::ExportFormat;
use spinboson::tcl::RateMode;

use config::RunConfig;

const UNITS: &str =
    "All frequencies, temperatures and rates are in units of the qubit splitting ω0 \
                     (ħ = k_B = 1); times are in units of 1/ω0.";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
    #[error("{0}")]
    Partial(String),
}

impl CliError {
    pub fn from_core(e: spinboson::Error) -> Self {
        match e {
            spinboson::Error::InvalidParameter(m) => CliError::Usage(m),
            other => CliError::Failure(other.to_string()),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Failure(_) => "numerical",
            CliError::Partial(_) => "partial",
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
            CliError::Partial(_) => 3,
        }
    }
}

impl From<spinboson::Error> for CliError {
    fn from(e: spinboson::Error) -> Self {
        CliError::from_core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("io: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Failure(format!("json: {e}"))
    }
}

#[derive(Parser)]
#[command(
    name = "spinboson",
    version,
    about = "TCL2 spin-boson Bloch dynamics and trace-distance non-Markovianity",
    long_about = format!("TCL2 spin-boson Bloch dynamics and trace-distance non-Markovianity.\n\n{UNITS}"),
    after_help = UNITS
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the dissipation kernel D(s) and noise kernel D1(s).
    #[command(after_help = UNITS)]
    Kernels {
        #[command(flatten)]
        common: Common,
        /// Largest time lag s [1/ω0]; defaults to 20/Ω.
        #[arg(long, allow_negative_numbers = true)]
        s_max: Option<f64>,
        /// Number of lags, evenly spaced on (0, s_max].
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Tabulate the TCL2 coefficients a_yx(t), a_zz(t), b_z(t) [ω0]; the last
    /// row (t = inf) holds the stationary values.
    #[command(after_help = UNITS)]
    Coeffs {
        #[command(flatten)]
        common: Common,
        /// Final time [1/ω0].
        #[arg(long, default_value_t = 50.0, allow_negative_numbers = true)]
        t_max: f64,
        /// Time step of the table [1/ω0].
        #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
        dt: f64,
    },
    /// Propagate a pair of Bloch vectors and their trace distance.
    #[command(after_help = UNITS)]
    Trajectory {
        #[command(flatten)]
        common: Common,
        /// Initial pair, e.g. +x,-x or 0.5:0:0,0:0:-1.
        #[arg(long, default_value = "+x,-x")]
        pair: String,
        /// Final time [1/ω0].
        #[arg(long, default_value_t = 150.0, allow_negative_numbers = true)]
        t_end: f64,
    },
    /// Estimate the non-Markovianity measure at one (Ω, T).
    #[command(after_help = UNITS)]
    Measure {
        #[command(flatten)]
        common: Common,
        /// Random state pairs on top of the four seed pairs.
        #[arg(long)]
        pairs: Option<usize>,
        /// Fixed horizon [1/ω0]; by default the ±x pair relaxation time.
        #[arg(long, allow_negative_numbers = true)]
        t_end: Option<f64>,
    },
    /// Sweep the measure over an (Ω, T) grid with checkpoint/resume.
    #[command(after_help = UNITS)]
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Cutoff axis [ω0]: lo:hi:n (linear below 2, logarithmic above) or a
        /// comma-separated list.
        #[arg(long)]
        omega_c_grid: Option<String>,
        /// Temperature axis [ω0], same forms as --omega-c-grid.
        #[arg(long)]
        temperature_grid: Option<String>,
        /// Random state pairs per cell on top of the four seed pairs.
        #[arg(long)]
        pairs: Option<usize>,
        /// Checkpoint file (JSON); resumed when it exists.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Also write the per-temperature minimum locus and resonance curve (CSV).
        #[arg(long)]
        locus: Option<PathBuf>,
        /// Stop after this many newly computed cells (staged runs; exits 3).
        #[arg(long)]
        stop_after: Option<usize>,
    },
    /// Tabulate the resonance cutoff Ω_res(T) [ω0].
    #[command(after_help = UNITS)]
    Resonance {
        #[command(flatten)]
        common: Common,
        /// Lowest temperature [ω0].
        #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
        t_min: f64,
        /// Highest temperature [ω0].
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        t_max: f64,
        /// Number of evenly spaced temperatures.
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Bath cutoff frequency Ω [ω0].
    #[arg(long, allow_negative_numbers = true)]
    omega_c: Option<f64>,
    /// Bath temperature T [ω0].
    #[arg(long, allow_negative_numbers = true)]
    temperature: Option<f64>,
    /// System-bath coupling γ [ω0].
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Coefficients driving the Bloch equations.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<RateMode>,
    /// Random seed (base seed for sweeps).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for measure and sweep.
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_parser = parse_format)]
    format: Option<ExportFormat>,
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ODE absolute and relative tolerance (dimensionless).
    #[arg(long)]
    tolerance: Option<f64>,
}

fn parse_mode(s: &str) -> Result<RateMode, String> {
    s.parse().map_err(|e: spinboson::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<ExportFormat, String> {
    s.parse().map_err(|e: spinboson::Error| e.to_string())
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() { cfg.$field = v; })*
            };
        }
        take!(omega_c, temperature, gamma, mode, seed, workers);
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if let Some(format) = self.format {
            cfg.format = Some(format);
        }
        if let Some(tol) = self.tolerance {
            cfg.integrator = cfg.integrator.with_tolerance(tol);
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Kernels {
            common,
            s_max,
            points,
        } => {
            let cfg = common.resolve()?;
            commands::kernels(&cfg, s_max, points)
        }
        Command::Coeffs { common, t_max, dt } => {
            let cfg = common.resolve()?;
            commands::coeffs(&cfg, t_max, dt)
        }
        Command::Trajectory {
            common,
            pair,
            t_end,
        } => {
            let cfg = common.resolve()?;
            commands::trajectory(&cfg, &pair, t_end)
        }
        Command::Measure {
            common,
            pairs,
            t_end,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(n) = pairs {
                cfg.pairs = n;
            }
            commands::measure(&cfg, t_end)
        }
        Command::Sweep {
            common,
            omega_c_grid,
            temperature_grid,
            pairs,
            checkpoint,
            locus,
            stop_after,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(g) = omega_c_grid {
                cfg.omega_c_grid = g;
            }
            if let Some(g) = temperature_grid {
                cfg.temperature_grid = g;
            }
            if let Some(n) = pairs {
                cfg.pairs = n;
            }
            commands::sweep(&cfg, checkpoint.as_deref(), locus.as_deref(), stop_after)
        }
        Command::Resonance {
            common,
            t_min,
            t_max,
            points,
        } => {
            let cfg = common.resolve()?;
            commands::resonance(&cfg, t_min, t_max, points)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[usage]: {}", line.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), e.to_string().replace('\n', " "));
            ExitCode::from(e.code())
        }
    }
}
