//! `gifkit`: check protocols, derive their games and query meanings.
//!
//! Exit codes: 0 success or positive verdict, 1 negative verdict, 2 usage
//! or input error.

mod commands;
mod interactive;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use gifkit_core::product::DEFAULT_MAX_STATES;

#[derive(Parser, Debug)]
#[command(name = "gifkit", version, about = "Consistency checking and decision games for I/O automata protocols")]
pub struct Cli {
    /// Cap on the number of reachable configurations explored.
    #[arg(long, global = true, env = "GIFKIT_MAX_STATES", default_value_t = DEFAULT_MAX_STATES)]
    pub max_states: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum)]
pub enum View {
    Protocol,
    Gif,
    Gdf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide well-formedness, interruptibility, acceptance and consistency.
    Check {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Replay decisions through the game and print the run.
    Simulate(SimulateArgs),
    /// List the derived decisions and the transition function.
    Derive {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Build the decision form of the game.
    Gdf {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Query the meaning of decisions, characters and step pairs.
    Meaning(MeaningArgs),
    /// Decide whether a decision sequence yields an accepted run.
    Fulfill {
        file: PathBuf,
        /// Comma-separated decisions taken first.
        #[arg(long, value_delimiter = ',', default_value = "")]
        seq: Vec<String>,
        /// Comma-separated decisions repeated forever after `--seq`.
        #[arg(long, value_delimiter = ',')]
        cycle: Option<Vec<String>>,
        /// Start configuration, e.g. "(C=away, Z=away)"; defaults to the initial one.
        #[arg(long)]
        from: Option<String>,
    },
    /// Print the protocol in canonical form.
    Fmt {
        file: PathBuf,
        /// Exit with 1 instead of printing when the file is not canonical.
        #[arg(long)]
        check: bool,
    },
    /// Render the protocol, its game or its decision form as a DOT graph.
    Dot {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "protocol")]
        view: View,
    },
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub file: PathBuf,
    /// Comma-separated decisions to replay.
    #[arg(long, value_delimiter = ',', default_value = "", conflicts_with = "interactive")]
    pub decisions: Vec<String>,
    /// Comma-separated decisions repeated forever after `--decisions`.
    #[arg(long, value_delimiter = ',', conflicts_with = "interactive")]
    pub cycle: Option<Vec<String>>,
    /// Choose decisions step by step on stdin.
    #[arg(long)]
    pub interactive: bool,
    /// Write every answer given to this file (interactive mode).
    #[arg(long, requires = "interactive")]
    pub record: Option<PathBuf>,
    /// Read choices from this file instead of stdin (interactive mode).
    #[arg(long, requires = "interactive")]
    pub replay: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("query").required(true).args(["decision", "character", "compose"])))]
pub struct MeaningArgs {
    pub file: PathBuf,
    /// Abstract meaning of a decision.
    #[arg(long)]
    pub decision: Option<String>,
    /// Compare with the meaning of this decision.
    #[arg(long, requires = "decision")]
    pub versus: Option<String>,
    /// Meaning of an input character such as `C.arrived`.
    #[arg(long = "char", requires = "at")]
    pub character: Option<String>,
    /// Configuration at which `--char` is received.
    #[arg(long)]
    pub at: Option<String>,
    /// Compare with this character...
    #[arg(long, requires_all = ["character", "versus_at"])]
    pub versus_char: Option<String>,
    /// ...received at this configuration.
    #[arg(long)]
    pub versus_at: Option<String>,
    /// Two steps CFG INPUT DECISION CFG INPUT DECISION (`eps` for none).
    #[arg(long, num_args = 6, value_names = ["CFG1", "INPUT1", "DECISION1", "CFG2", "INPUT2", "DECISION2"])]
    pub compose: Option<Vec<String>>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
