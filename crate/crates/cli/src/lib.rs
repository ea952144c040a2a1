//! `freechoice` command-line front end.
//!
//! Every subcommand reads one scenario file, calls a single library
//! operation and writes a CSV table. Exit codes: 0 on success, 1 for invalid
//! input or flags, 2 when the computation itself reports a numerical
//! diagnostic. Messages go to standard error.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use freechoice_core::scenario::Payload;
use freechoice_core::table::Metadata;
use freechoice_core::{Error, Result, Scenario};

mod commands;

pub const TOOL_VERSION: &str = concat!("freechoice ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(
    name = "freechoice",
    version,
    about = "Bounded rational decision solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Io {
    /// Scenario file (JSON).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Output CSV; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Seed recorded in the output and used by sampling; overrides the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Equilibrium posterior and certainty equivalent of a lottery.
    SolveLottery {
        #[command(flatten)]
        io: Io,
    },
    /// Certainty equivalent and posterior over an inclusive grid of β.
    SweepBeta {
        #[command(flatten)]
        io: Io,
        /// `start:stop:count`, an inclusive linear grid.
        #[arg(long, allow_hyphen_values = true)]
        betas: BetaGrid,
    },
    /// Expected maximum of M+1 draws minus M times the sampling cost.
    Satisfice {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        cost: f64,
        /// Largest number of extra draws M to scan.
        #[arg(long)]
        mmax: usize,
    },
    /// Distance between the Gibbs approximation and the law of the maximum.
    GibbsVsMax {
        #[command(flatten)]
        io: Io,
        /// Largest α; distances are reported for α = 1..=mmax.
        #[arg(long, default_value_t = 60)]
        mmax: u32,
    },
    /// Backward recursion on a decision tree.
    SolveTree {
        #[command(flatten)]
        io: Io,
    },
    /// Finite-horizon MDP under one of the limit controllers.
    SolveMdp {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum)]
        mode: Mode,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// KL control (needs `beta`, one action per state).
    Kl,
    /// Risk-neutral expected reward.
    Bellman,
    /// Exponential-utility control (needs `beta_obs`).
    Risk,
    /// Worst case over transition supports.
    Robust,
    /// Tree solution at the scenario's `beta_action` and `beta_obs`.
    Bounded,
}

/// Inclusive linear grid `start:stop:count`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl FromStr for BetaGrid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, count] = parts[..] else {
            return Err(format!("expected start:stop:count, got `{s}`"));
        };
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{x}` is not a finite number"))
        };
        let count = count
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&c| c >= 1)
            .ok_or_else(|| format!("count `{count}` must be a positive integer"))?;
        Ok(Self {
            start: num(start)?,
            stop: num(stop)?,
            count,
        })
    }
}

/// Runs the tool on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn execute(command: Command) -> Result<()> {
    let (io, scenario, table) = match command {
        Command::SolveLottery { io } => {
            let (scenario, lottery) = load(&io, |p| match p {
                Payload::Lottery(l) => Some(l.build()),
                _ => None,
            })?;
            let table = commands::solve_lottery(&lottery?)?;
            (io, scenario, table)
        }
        Command::SweepBeta { io, betas } => {
            let (scenario, lottery) = load(&io, |p| match p {
                Payload::Lottery(l) => Some(l.build()),
                _ => None,
            })?;
            let table = commands::sweep_beta(&lottery?, &betas)?;
            (io, scenario, table)
        }
        Command::Satisfice { io, cost, mmax } => {
            let (scenario, sat) = load(&io, |p| match p {
                Payload::Satisfice(s) => Some(s.clone()),
                _ => None,
            })?;
            let seed = io.seed.or(scenario.seed);
            let table = commands::satisfice(&sat.source()?, cost, mmax, seed)?;
            (io, scenario, table)
        }
        Command::GibbsVsMax { io, mmax } => {
            let (scenario, sat) = load(&io, |p| match p {
                Payload::Satisfice(s) => Some(s.clone()),
                _ => None,
            })?;
            let table =
                commands::gibbs_vs_max(&sat.prior_distribution()?, sat.source()?.pmf(), mmax)?;
            (io, scenario, table)
        }
        Command::SolveTree { io } => {
            let (scenario, tree) = load(&io, |p| match p {
                Payload::Tree(t) => Some(t.build()),
                _ => None,
            })?;
            let table = commands::solve_tree(&tree?)?;
            (io, scenario, table)
        }
        Command::SolveMdp { io, mode } => {
            let (scenario, mdp) = load(&io, |p| match p {
                Payload::Mdp(m) => Some(m.clone()),
                _ => None,
            })?;
            let table = commands::solve_mdp(&mdp, mode)?;
            (io, scenario, table)
        }
    };
    let mut table = table;
    table.metadata = Metadata {
        tool_version: TOOL_VERSION.into(),
        seed: io.seed.or(scenario.seed),
        scenario_hash: scenario.content_hash(),
    };
    match &io.out {
        Some(path) => table.write(path),
        None => {
            std::io::stdout().write_all(table.to_csv().as_bytes())?;
            Ok(())
        }
    }
}

/// Loads the scenario and extracts the payload the command expects.
fn load<T>(io: &Io, pick: impl Fn(&Payload) -> Option<T>) -> Result<(Scenario, T)> {
    let scenario = Scenario::load(&io.input)?;
    match pick(&scenario.payload) {
        Some(x) => Ok((scenario, x)),
        None => Err(Error::Parameter(format!(
            "scenario `{}` has kind `{}`, which this command does not accept",
            io.input.display(),
            scenario.payload.kind()
        ))),
    }
}
