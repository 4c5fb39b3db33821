//! Command-line front end. Every command reads a JSON run config and an
//! explicit seed, so identical invocations write identical artifacts.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/model error, 3 a scripted
//! detection assertion did not hold.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use flowsentry_core::error::Result;

use commands::Mode;
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "flowsentry",
    version,
    about = "SCADA payload intrusion detection with ledger-audited flow rules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Run configuration (JSON).
    #[arg(long, env = "FLOWSENTRY_CONFIG", value_name = "PATH")]
    config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long, env = "FLOWSENTRY_SEED", value_name = "N")]
    seed: Option<u64>,
    /// Output directory; defaults to the config's out_dir, then "out".
    #[arg(long, env = "FLOWSENTRY_OUT", value_name = "DIR")]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn load(&self) -> Result<(RunConfig, PathBuf)> {
        let mut config = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        let out = self
            .out
            .clone()
            .or_else(|| config.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok((config, out))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split and normalize the configured dataset.
    Prepare {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Train the convolutional detector.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, env = "FLOWSENTRY_MODE", default_value = "binary")]
        mode: Mode,
    },
    /// Score a saved model on the held-out test split.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Saved model file from `train`.
        #[arg(long, env = "FLOWSENTRY_MODEL", value_name = "PATH")]
        model: PathBuf,
    },
    /// Train the detector and both baselines, emit the accuracy table.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Replay a scenario script against the simulated network.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Bundled scenario name or script path; overrides the config.
        #[arg(long, env = "FLOWSENTRY_SCENARIO", value_name = "NAME|PATH")]
        scenario: Option<String>,
    },
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Prepare { common } => {
            let (config, out) = common.load()?;
            commands::cmd_prepare(&config, &out)?;
            Ok(0)
        }
        Command::Train { common, mode } => {
            let (config, out) = common.load()?;
            commands::cmd_train(&config, mode, &out)?;
            Ok(0)
        }
        Command::Eval { common, model } => {
            let (config, out) = common.load()?;
            commands::cmd_eval(&config, &model, &out)?;
            Ok(0)
        }
        Command::Compare { common } => {
            let (config, out) = common.load()?;
            commands::cmd_compare(&config, &out)?;
            Ok(0)
        }
        Command::Simulate { common, scenario } => {
            let (config, out) = common.load()?;
            let scenario = scenario
                .or_else(|| config.scenario.clone())
                .ok_or_else(|| flowsentry_core::Error::data(
                    "no scenario given: pass --scenario or set it in the config",
                ))?;
            commands::cmd_simulate(&config, &scenario, &out)
        }
    }
}

/// Parses arguments, runs the command, and maps the outcome to an exit
/// code: clap's help/version paths exit 0, other parse problems are usage
/// errors (1), and command failures are data errors (2).
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
