//! Command-line front end: scenario documents, commands and output writers.

pub mod commands;
pub mod document;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use commands::{run, Axis, Command, Overrides, Report};
pub use document::{parse_scenario, ScenarioDocument};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "syncstab", version, about = "Transient synchronization stability of a VSG-SG system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// Scenario document (TOML).
    pub scenario: PathBuf,
    /// VSG inertia H_v (s); damping is scaled to keep D_v/H_v.
    #[arg(long)]
    pub hv: Option<f64>,
    /// Fault-on virtual reactance X_i (pu).
    #[arg(long)]
    pub xi: Option<f64>,
    /// Fault-on grid voltage E_gf (pu).
    #[arg(long = "fault-voltage")]
    pub fault_voltage: Option<f64>,
    /// Integration step (s).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Output directory for CSV files and summary.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Per-stage relative swing models as JSON.
    Reduce(Common),
    /// Stability index and equilibria per stage.
    Index {
        #[command(flatten)]
        common: Common,
        /// Use per-stage models from a `reduce` output instead of reducing.
        #[arg(long)]
        reduced: Option<PathBuf>,
    },
    /// First-swing equal-area classification of the fault-on stage.
    Eac(Common),
    /// Time-domain simulation.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Integrate the four-state machine model instead of the reduced one.
        #[arg(long)]
        full: bool,
    },
    /// Attraction-region boundary and grid classification.
    Region(Common),
    /// Inertia, damping and virtual-impedance design.
    Design {
        #[command(flatten)]
        common: Common,
        /// Exit with code 4 if the designed system loses synchronism.
        #[arg(long)]
        verify: bool,
    },
    /// Parameter sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
    },
}

impl Sub {
    pub fn split(self) -> (Common, Command) {
        match self {
            Sub::Reduce(c) => (c, Command::Reduce),
            Sub::Index { common, reduced } => (common, Command::Index { reduced }),
            Sub::Eac(c) => (c, Command::Eac),
            Sub::Simulate { common, full } => (common, Command::Simulate { full }),
            Sub::Region(c) => (c, Command::Region),
            Sub::Design { common, verify } => (common, Command::Design { verify }),
            Sub::Sweep { common, axis, values } => (common, Command::Sweep { axis, values }),
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioDocument, CliError> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

/// Runs a parsed invocation, prints the summary and writes any output files.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    let (common, command) = cli.command.split();
    let doc = load_scenario(&common.scenario)?;
    let doc = Overrides {
        hv: common.hv,
        xi: common.xi,
        fault_voltage: common.fault_voltage,
        dt: common.dt,
    }
    .apply(doc)?;
    let report = run(&command, &doc)?;
    let summary = serde_json::to_string_pretty(&report.summary)?;
    println!("{summary}");
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &report.files {
            std::fs::write(dir.join(name), contents)?;
        }
        std::fs::write(dir.join("summary.json"), format!("{summary}\n"))?;
    }
    match report.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
