//! Command-line front end: scenario files in, CSV files out.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use error::CliError;
pub use scenario::Scenario;

use commands::Overrides;
use scenario::{ModelName, XValue};

#[derive(Debug, Parser)]
#[command(name = "pss", version, about = "PSS1A/AVR transient response scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rotor angle, speed and bus frequency after the coupling step.
    Simulate(Common),
    /// Closed-form small-step response: coefficients, traces, spectra.
    Linear(Common),
    /// Modal decomposition and closed-form response of the integrated input.
    Nonlinear(Common),
    /// Response to the pulse-shaped envelope input.
    Envelope(Common),
    /// Frequency response of stabilizer, regulator and cascade.
    Bode(BodeArgs),
    /// Compare closed forms with the time-domain simulation.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Comma-separated stage names (v_in, v1, v2, v3, v_pss, v_r, v_out).
    #[arg(long, value_delimiter = ',')]
    stages: Option<Vec<String>>,
    /// Comma-separated coupling models (cage, kuramoto).
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Comma-separated inertia ratios; `inf` for an infinite grid.
    #[arg(long, value_delimiter = ',')]
    x_values: Option<Vec<String>>,
}

#[derive(Debug, Args)]
struct BodeArgs {
    /// Uses the default stabilizer constants when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    /// Overrides every check's default tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
}

fn parse_models(names: &[String]) -> Result<Vec<ModelName>, CliError> {
    names
        .iter()
        .map(|n| match n.trim() {
            "cage" => Ok(ModelName::Cage),
            "kuramoto" => Ok(ModelName::Kuramoto),
            other => Err(CliError::config(format!(
                "--models: expected cage or kuramoto, got `{other}`"
            ))),
        })
        .collect()
}

impl Common {
    fn load(&self, tolerance: Option<f64>) -> Result<(Scenario, Overrides), CliError> {
        let scenario = Scenario::from_path(&self.scenario)?;
        let overrides = Overrides {
            stages: self.stages.clone(),
            models: self.models.as_deref().map(parse_models).transpose()?,
            x_values: self
                .x_values
                .as_deref()
                .map(|xs| xs.iter().map(|x| XValue::parse(x)).collect())
                .transpose()?,
            tolerance,
        };
        Ok((scenario, overrides))
    }

    fn run(
        &self,
        tolerance: Option<f64>,
        f: fn(&Scenario, &Overrides, &Path) -> Result<Vec<PathBuf>, CliError>,
    ) -> Result<Vec<PathBuf>, CliError> {
        let (s, o) = self.load(tolerance)?;
        f(&s, &o, &self.out_dir)
    }
}

fn dispatch(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    match &cli.command {
        Command::Simulate(c) => c.run(None, commands::simulate),
        Command::Linear(c) => c.run(None, commands::linear),
        Command::Nonlinear(c) => c.run(None, commands::nonlinear),
        Command::Envelope(c) => c.run(None, commands::envelope),
        Command::Validate(v) => v.common.run(v.tolerance, commands::validate),
        Command::Bode(b) => {
            let s = match &b.scenario {
                Some(p) => Scenario::from_path(p)?,
                None => Scenario::from_json("{}")?,
            };
            commands::bode_files(&s, &b.out_dir)
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 for configuration errors, 2 for
/// numerical failures.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
