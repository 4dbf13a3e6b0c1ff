//! Command-line interface definition.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "stdp-lab",
    version,
    about = "Stochastic spiking-plasticity experiment runner"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct CommonOpts {
    /// JSON config file; a run manifest is also accepted
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master seed; overrides the config file and STDP_LAB_SEED
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,

    /// Output directory for CSV, SVG, and manifest files
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,

    /// Worker threads (default: available parallelism)
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,

    /// Also render SVG plots
    #[arg(long)]
    pub plots: bool,
}

/// Scale overrides for the sampled experiments.
#[derive(Debug, Clone, Args)]
pub struct ScaleOpts {
    /// Use the reduced quick-run preset (100 sequences x 100 trains)
    #[arg(long)]
    pub reduced: bool,

    /// Number of rate-sequence pairs
    #[arg(long, value_name = "N")]
    pub sequences: Option<usize>,

    /// Number of spike trains sampled per sequence
    #[arg(long, value_name = "N")]
    pub trains: Option<usize>,

    /// Sequence length in time steps
    #[arg(long, value_name = "N")]
    pub seq_len: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measure the spike-timing curves of the gated rule and the
    /// nearest-neighbor rule
    StdpCurve {
        #[command(flatten)]
        common: CommonOpts,
        #[command(flatten)]
        scale: ScaleOpts,
    },

    /// Bin the gated-rule updates and compare the nearest-neighbor rule
    /// against them
    Agreement {
        #[command(flatten)]
        common: CommonOpts,
        #[command(flatten)]
        scale: ScaleOpts,
    },

    /// Paired closed-loop measurement of the mean squared postsynaptic
    /// slope with and without plasticity
    RateDynamics {
        #[command(flatten)]
        common: CommonOpts,
        #[command(flatten)]
        scale: ScaleOpts,
    },

    /// Dump one realization: presynaptic spikes, postsynaptic activity,
    /// and the evolving weight
    Trace {
        #[command(flatten)]
        common: CommonOpts,
        /// Which realization to dump
        #[arg(long, value_name = "K", default_value_t = 0)]
        index: u64,
    },

    /// Check the analytic weight sensitivity against central finite
    /// differences on a random instance
    Gradcheck {
        #[command(flatten)]
        common: CommonOpts,
        /// Central-difference step
        #[arg(long, value_name = "H", default_value_t = 1e-4)]
        fd_step: f64,
    },

    /// Relax the postsynaptic state down an objective gradient and check
    /// the rule against finite-difference gradient steps
    SgdEquiv {
        #[command(flatten)]
        common: CommonOpts,
        /// Relaxation steps
        #[arg(long, value_name = "N", default_value_t = 50)]
        steps: usize,
        /// Relaxation step size
        #[arg(long, value_name = "EPS", default_value_t = 0.01)]
        eps: f64,
    },

    /// Run the built-in verification checks and exit nonzero on failure
    Verify {
        #[command(flatten)]
        common: CommonOpts,
        /// Run at the full default scale instead of the reduced preset
        #[arg(long)]
        full: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::StdpCurve { .. } => "stdp-curve",
            Command::Agreement { .. } => "agreement",
            Command::RateDynamics { .. } => "rate-dynamics",
            Command::Trace { .. } => "trace",
            Command::Gradcheck { .. } => "gradcheck",
            Command::SgdEquiv { .. } => "sgd-equiv",
            Command::Verify { .. } => "verify",
        }
    }

    pub fn common(&self) -> &CommonOpts {
        match self {
            Command::StdpCurve { common, .. }
            | Command::Agreement { common, .. }
            | Command::RateDynamics { common, .. }
            | Command::Trace { common, .. }
            | Command::Gradcheck { common, .. }
            | Command::SgdEquiv { common, .. }
            | Command::Verify { common, .. } => common,
        }
    }
}
