use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "edgemarket",
    version,
    about = "Seeded experiments for edge-intelligence market mechanisms",
    long_about = None
)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory; defaults to `output.dir` from the configuration.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also write an SVG chart per comparison table.
    #[arg(long, global = true)]
    svg: bool,
    #[command(subcommand)]
    mechanism: Mechanism,
}

#[derive(Debug, Subcommand)]
enum Mechanism {
    /// Replicator dynamics of sensing providers.
    Evo {
        #[command(subcommand)]
        cmd: EvoCmd,
    },
    /// Double Dutch Auction for VR rendering.
    Dda {
        #[command(subcommand)]
        cmd: DdaCmd,
    },
    /// Stochastic reservation of edge resources.
    Sip {
        #[command(subcommand)]
        cmd: SipCmd,
    },
}

#[derive(Debug, Subcommand)]
enum EvoCmd {
    /// Integrate to equilibrium and export the trajectory.
    Run,
    /// Re-solve the equilibrium over a reward grid.
    Sweep,
}

#[derive(Debug, Subcommand)]
enum DdaCmd {
    /// Run every controller on the configured instances.
    Run,
    /// Compare controllers across the bitrate grid.
    Compare,
    /// Train the learned controllers and export their tables.
    Train,
}

#[derive(Debug, Subcommand)]
enum SipCmd {
    /// Solve the stochastic program per instance.
    Solve,
    /// Compare the stochastic program with the two baselines.
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    EvoRun,
    EvoSweep,
    DdaRun,
    DdaCompare,
    DdaTrain,
    SipSolve,
    SipCompare,
}

impl Command {
    pub fn mechanism(self) -> &'static str {
        match self {
            Command::EvoRun | Command::EvoSweep => "evo",
            Command::DdaRun | Command::DdaCompare | Command::DdaTrain => "dda",
            Command::SipSolve | Command::SipCompare => "sip",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Command::EvoRun => "evo run",
            Command::EvoSweep => "evo sweep",
            Command::DdaRun => "dda run",
            Command::DdaCompare => "dda compare",
            Command::DdaTrain => "dda train",
            Command::SipSolve => "sip solve",
            Command::SipCompare => "sip compare",
        }
    }
}

/// Everything needed to run one experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub command: Command,
    pub config: PathBuf,
    /// Replaces the configuration's seed when set.
    pub seed: Option<u64>,
    /// Replaces the configuration's output directory when set.
    pub out: Option<PathBuf>,
    pub svg: bool,
}

impl ExperimentSpec {
    pub fn mechanism(&self) -> &'static str {
        self.command.mechanism()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Parsed {
    Run(ExperimentSpec),
    /// Help or version text; print it and exit successfully.
    Info(String),
}

/// Parses arguments (without the program name).
pub fn parse_cli<I, T>(args: I) -> Result<Parsed, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("edgemarket")).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(Parsed::Info(e.to_string())),
                _ => Err(CliError::Usage(e.render().to_string())),
            }
        }
    };
    let command = match cli.mechanism {
        Mechanism::Evo { cmd: EvoCmd::Run } => Command::EvoRun,
        Mechanism::Evo { cmd: EvoCmd::Sweep } => Command::EvoSweep,
        Mechanism::Dda { cmd: DdaCmd::Run } => Command::DdaRun,
        Mechanism::Dda { cmd: DdaCmd::Compare } => Command::DdaCompare,
        Mechanism::Dda { cmd: DdaCmd::Train } => Command::DdaTrain,
        Mechanism::Sip { cmd: SipCmd::Solve } => Command::SipSolve,
        Mechanism::Sip { cmd: SipCmd::Compare } => Command::SipCompare,
    };
    let config = cli
        .config
        .ok_or_else(|| CliError::Usage(format!("`{}` needs --config <PATH>", command.name())))?;
    Ok(Parsed::Run(ExperimentSpec {
        command,
        config,
        seed: cli.seed,
        out: cli.out,
        svg: cli.svg,
    }))
}
