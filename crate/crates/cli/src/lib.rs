//! Command-line driver: configuration, experiment runs, and result export.
//!
//! Every flag of `run` can also be set through an environment variable with
//! the `DYNGT_` prefix (for example `DYNGT_TRAJECTORIES=50`). Flags win over
//! the environment, which wins over the config file, which wins over the
//! preset.

pub mod commands;
pub mod config;
pub mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "dyngt", version, about = "Dynamic group testing experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment and write one CSV per strategy plus a manifest.
    Run(RunArgs),
    /// Run the property suites and print one pass/fail line each.
    Verify(VerifyArgs),
    /// Print bound values for a prior vector file.
    Bounds(BoundsArgs),
    /// Print a random test design in sparse text form.
    Design(DesignArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Flat JSON config; keys override the preset.
    #[arg(long, env = "DYNGT_CONFIG")]
    pub config: Option<PathBuf>,
    /// fig1, fig4a, fig4b, fig6a, fig6b or fig7.
    #[arg(long, env = "DYNGT_PRESET")]
    pub preset: Option<String>,
    /// Strategies to run (comma separated): no_testing, complete, cca, rnd_max, rnd_mean.
    #[arg(long, env = "DYNGT_STRATEGY", value_delimiter = ',')]
    pub strategy: Vec<String>,
    #[arg(long, env = "DYNGT_TRAJECTORIES")]
    pub trajectories: Option<usize>,
    #[arg(long, env = "DYNGT_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "DYNGT_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, env = "DYNGT_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, env = "DYNGT_HORIZON")]
    pub horizon: Option<u32>,
}

impl RunArgs {
    pub fn overrides(&self) -> config::Overrides {
        config::Overrides {
            strategies: self.strategy.clone(),
            trajectories: self.trajectories,
            seed: self.seed,
            out: self.out.clone(),
            threads: self.threads,
            horizon: self.horizon,
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Random static instances for the exhaustive suites.
    #[arg(long, default_value_t = 200)]
    pub instances: usize,
    /// Trajectories for the prior-shape suite.
    #[arg(long, default_value_t = 100)]
    pub trajectories: usize,
    #[arg(long, default_value_t = 50)]
    pub horizon: u32,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Probabilities separated by whitespace or commas.
    #[arg(long)]
    pub priors: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub delta: f64,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Use base-2 logarithms in the budgets.
    #[arg(long)]
    pub binary_log: bool,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub priors: PathBuf,
    #[arg(long)]
    pub strategy: String,
    #[arg(long)]
    pub tests: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Give every item the same CCA inclusion probability.
    #[arg(long)]
    pub uniform_cca: bool,
}
