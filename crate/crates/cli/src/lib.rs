//! Command-line front end: configuration, subcommands producing CSV and
//! JSON output, and the acceptance report.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod output;

use clap::{Parser, Subcommand};

use crate::commands::CliError;
use crate::config::RunConfig;
use crate::output::CommandOutput;

#[derive(Debug, Parser)]
#[command(name = "focustwist", version, about = "Period lattices, twist and frequency maps near focus-focus values")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    /// `champagne` or `pendulum`.
    #[arg(long, global = true)]
    pub system: Option<String>,
    /// System parameter or any other configuration key, `key=value`.
    #[arg(long = "param", global = true, value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Momentum-chart window radii `j_min,j_max`.
    #[arg(long, global = true, value_name = "J_MIN,J_MAX")]
    pub window: Option<String>,
    /// Grid resolution `radii,sectors`.
    #[arg(long, global = true, value_name = "RADII,SECTORS")]
    pub res: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Tolerance override `name=value` (quad, ode_rtol, ode_atol, cross).
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    pub tols: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Focus-focus constants and the predicted twistless slope.
    Constants,
    /// Branch-consistent rotation numbers on an annulus.
    Grid,
    /// Level curve of the rotation number and its log-spiral pitch.
    Spiral,
    /// Monodromy index around the focus-focus value.
    Monodromy,
    /// Twistless tori across energies.
    Twistless,
    /// Frequency-map determinant along a ray.
    Kolmogorov,
    /// Quadrature against flow on seeded random tori.
    Crosscheck,
    /// Every acceptance criterion for the configured system.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Grid => "grid",
            Command::Spiral => "spiral",
            Command::Monodromy => "monodromy",
            Command::Twistless => "twistless",
            Command::Kolmogorov => "kolmogorov",
            Command::Crosscheck => "crosscheck",
            Command::Report => "report",
        }
    }
}

fn key_value(s: &str) -> Result<(&str, &str), CliError> {
    s.split_once('=').ok_or_else(|| {
        CliError::Config(config::ConfigError::InvalidValue { key: s.into(), value: String::new(), reason: "expected KEY=VALUE".into() })
    })
}

impl Cli {
    /// File first, then flags; validated and with the window filled in.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if let Some(s) = &self.system {
            cfg.set("system", s)?;
        }
        for p in &self.params {
            let (k, v) = key_value(p)?;
            if k.trim().starts_with("tol.") {
                return Err(CliError::Config(config::ConfigError::UnknownKey(format!("{k} (use --tol)"))));
            }
            cfg.set(k, v)?;
        }
        if let Some(w) = &self.window {
            cfg.set_window(w)?;
        }
        if let Some(r) = &self.res {
            cfg.set_resolution(r)?;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        for t in &self.tols {
            let (k, v) = key_value(t)?;
            cfg.set(&format!("tol.{}", k.trim()), v)?;
        }
        Ok(cfg.resolve()?)
    }
}

/// Runs a command; `report` fails with an acceptance error unless every
/// criterion passes, after its output has been produced.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    match command {
        Command::Constants => commands::constants(cfg),
        Command::Grid => commands::grid(cfg),
        Command::Spiral => commands::spiral(cfg),
        Command::Monodromy => commands::monodromy(cfg),
        Command::Twistless => commands::twistless(cfg),
        Command::Kolmogorov => commands::kolmogorov(cfg),
        Command::Crosscheck => commands::crosscheck(cfg),
        Command::Report => {
            let reports = acceptance::run_all(cfg)?;
            Ok(CommandOutput { files: vec![], summary: acceptance::summary(cfg, &reports) })
        }
    }
}
