//! Command-line driver: argument parsing, run configuration, manifests and
//! the `embed`, `irefined`, `stack`, `evaluate` and `diagnose` commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{run_command, CommandKind};
pub use config::{Override, RunConfig};
pub use error::{CliError, CliResult};
pub use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(
    name = "irefined",
    version,
    about = "Feature-to-image embedding, ensembles and evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-projection REFINED images.
    Embed(RunArgs),
    /// Integrated REFINED: one image set from the fused distances of several projections.
    Irefined(RunArgs),
    /// One REFINED image set and regressor per projection, blended by least squares.
    Stack(RunArgs),
    /// Scores, bootstrap summaries, robustness and gap statistics for prediction CSVs.
    Evaluate(RunArgs),
    /// Kendall tau and KL divergence between distance matrices.
    Diagnose(RunArgs),
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Command::Embed(_) => CommandKind::Embed,
            Command::Irefined(_) => CommandKind::Irefined,
            Command::Stack(_) => CommandKind::Stack,
            Command::Evaluate(_) => CommandKind::Evaluate,
            Command::Diagnose(_) => CommandKind::Diagnose,
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Embed(a)
            | Command::Irefined(a)
            | Command::Stack(a)
            | Command::Evaluate(a)
            | Command::Diagnose(a) => a,
        }
    }
}

/// Options shared by every command. Flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub response_column: Option<String>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Split seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Projection, repeatable: mds, isomap:K, lle:K, le:K[:median|binary|SIGMA].
    #[arg(long = "projection")]
    pub projections: Vec<String>,
    /// arithmetic or geometric.
    #[arg(long)]
    pub fusion: Option<String>,
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// ambient or projection.
    #[arg(long)]
    pub distance_source: Option<String>,
    /// Fuse the distance matrices at their original scales.
    #[arg(long)]
    pub no_rescale: bool,
    /// png or csv.
    #[arg(long)]
    pub image_format: Option<String>,
    /// Ridge strength of the reference regressor (enables it for embed/irefined).
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub image_stacking: bool,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub bootstrap_seed: Option<u64>,
    /// Prediction CSV for evaluate, repeatable.
    #[arg(long = "predictions")]
    pub predictions: Vec<PathBuf>,
    /// Response CSV for evaluate.
    #[arg(long)]
    pub responses: Option<PathBuf>,
    /// Distance-matrix CSV for diagnose, repeatable.
    #[arg(long = "distances")]
    pub distances: Vec<PathBuf>,
    /// Any config field as dotted.path=JSON, repeatable; applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl RunArgs {
    pub fn overrides(&self) -> CliResult<Vec<Override>> {
        let path = |p: &PathBuf| p.to_string_lossy().into_owned();
        let mut o = Vec::new();
        if let Some(v) = &self.input {
            o.push(Override::new("input", path(v)));
        }
        if let Some(v) = &self.response_column {
            o.push(Override::new("response_column", v.as_str()));
        }
        if let Some(v) = &self.output_dir {
            o.push(Override::new("output_dir", path(v)));
        }
        if let Some(v) = self.seed {
            o.push(Override::new("split.seed", v));
        }
        if !self.projections.is_empty() {
            let specs = self
                .projections
                .iter()
                .map(|s| config::parse_projection(s))
                .collect::<CliResult<Vec<_>>>()?;
            o.push(Override::new(
                "projections",
                serde_json::to_value(specs).expect("specs serialize"),
            ));
        }
        if let Some(v) = &self.fusion {
            o.push(Override::new("fusion", v.as_str()));
        }
        if let Some(v) = self.grid_size {
            o.push(Override::new("pipeline.grid_size", v));
        }
        if let Some(v) = &self.distance_source {
            o.push(Override::new("pipeline.distance_source", v.as_str()));
        }
        if self.no_rescale {
            o.push(Override::new("pipeline.rescale", false));
        }
        if let Some(v) = &self.image_format {
            o.push(Override::new("image_format", v.as_str()));
        }
        if let Some(v) = self.lambda {
            o.push(Override::new("regressor.lambda", v));
        }
        if self.image_stacking {
            o.push(Override::new("image_stacking", true));
        }
        if let Some(v) = self.replicates {
            o.push(Override::new("bootstrap.replicates", v));
        }
        if let Some(v) = self.bootstrap_seed {
            o.push(Override::new("bootstrap.seed", v));
        }
        if !self.predictions.is_empty() {
            o.push(Override::new(
                "evaluate.predictions",
                self.predictions.iter().map(path).collect::<Vec<_>>(),
            ));
        }
        if let Some(v) = &self.responses {
            o.push(Override::new("evaluate.responses", path(v)));
        }
        if !self.distances.is_empty() {
            o.push(Override::new(
                "diagnose.distances",
                self.distances.iter().map(path).collect::<Vec<_>>(),
            ));
        }
        for s in &self.set {
            o.push(Override::parse(s)?);
        }
        Ok(o)
    }

    pub fn resolve(&self) -> CliResult<RunConfig> {
        RunConfig::load(self.config.as_deref(), &self.overrides()?)
    }
}

/// Resolves the configuration and runs the command.
pub fn execute(cli: &Cli) -> CliResult<RunManifest> {
    let cfg = cli.command.args().resolve()?;
    run_command(cli.command.kind(), &cfg)
}
