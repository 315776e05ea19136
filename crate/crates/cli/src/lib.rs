//! Command-line front end for the `vortexlab` library.
//!
//! Every experiment reads one JSON configuration, writes CSV and JSON
//! artifacts into an output directory and records a `manifest.json` with
//! hashes of the configuration and of every file written.

pub mod commands;
pub mod config;
pub mod manifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::run;

#[derive(Debug, Parser)]
#[command(name = "vortexlab", version, about = "Point-vortex statistical mechanics on compact surfaces")]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "VORTEXLAB_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Parse the configuration and build the geometry, then stop.
    #[arg(long, global = true)]
    pub validate_only: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Build the geometry and report its normalization constants.
    GeometryCheck,
    /// Solve the mean-field equation at one β.
    Meanfield,
    /// Continue in β and build the `e(β)`, `F(β)` and `S(e)` curves.
    ThermoCurve,
    /// Markov chain sampling of the vortex ensembles.
    Sample {
        #[command(subcommand)]
        ensemble: Ensemble,
    },
    /// Density of states by Wang–Landau.
    WangLandau,
    /// `N⁻¹ log Z` by thermodynamic integration.
    ThermoIntegrate,
    /// Time evolution.
    Dynamics {
        #[command(subcommand)]
        flow: Flow,
    },
    /// H⁻¹ distance between two Euler runs started close together.
    Stability,
    /// Polystability and `R` of a weighted Riemann sphere.
    Logfano {
        /// Comma-separated weights in (0, 1).
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<f64>,
    },
    /// Print the JSON schema of the configuration file.
    Schema,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Ensemble {
    /// Canonical ensemble at the configured β.
    Gibbs {
        /// Number of independent chains, seeded `seed, seed + 1, …`.
        #[arg(long, default_value_t = 1)]
        seeds: usize,
    },
    /// Microcanonical energy shell.
    Shell {
        #[arg(long, default_value_t = 1)]
        seeds: usize,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum Flow {
    /// Point-vortex flow.
    Vortex,
    /// Continuum Euler equation.
    Euler,
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::GeometryCheck => "geometry-check".into(),
            Command::Meanfield => "meanfield".into(),
            Command::ThermoCurve => "thermo-curve".into(),
            Command::Sample { ensemble: Ensemble::Gibbs { .. } } => "sample gibbs".into(),
            Command::Sample { ensemble: Ensemble::Shell { .. } } => "sample shell".into(),
            Command::WangLandau => "wang-landau".into(),
            Command::ThermoIntegrate => "thermo-integrate".into(),
            Command::Dynamics { flow: Flow::Vortex } => "dynamics vortex".into(),
            Command::Dynamics { flow: Flow::Euler } => "dynamics euler".into(),
            Command::Stability => "stability".into(),
            Command::Logfano { .. } => "logfano".into(),
            Command::Schema => "schema".into(),
        }
    }
}
