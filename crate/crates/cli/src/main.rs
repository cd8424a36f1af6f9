//! `qhv`: quasi probability tables for joint measurements, local signed
//! models for correlation scenarios, and Bell violation reports, each with
//! their defining identities checked numerically.
//!
//! Exit codes: 0 all checks passed, 1 a check failed or a numerical
//! invariant broke, 2 malformed input.

mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use output::Format;

#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent user input; exits with code 2.
    Input(String),
    /// A computation failed or an invariant broke mid run; exits with 1.
    Run(String),
}

impl From<qhv_core::CoreError> for CliError {
    fn from(e: qhv_core::CoreError) -> Self {
        CliError::Run(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Run(msg) => write!(f, "run error: {msg}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qhv",
    version,
    about = "Quasi probability models for joint quantum measurements",
    long_about = "Builds context-invariant quasi probability tables for joint von Neumann \
measurements, local signed models for two-setting correlation scenarios, and Bell \
violation reports, verifying every representation identity and norm bound along the way.\n\n\
Structured inputs accept a named factory (e.g. singlet, ghz:3, pauli:z, chsh_optimal), \
inline JSON, or @FILE with JSON. Matrix entries are numbers, [re, im] pairs, or \
{\"re\": .., \"im\": ..} objects."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Report format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the report to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Joint quasi probability table of observables on one state
    Measure {
        /// State: singlet | phi_plus | ghz:N | maximally_mixed:D |
        /// random_density:D:SEED | random_pure:D:SEED | JSON | @FILE
        #[arg(long)]
        state: String,
        /// Observable (repeat once per measurement): pauli:x|y|z |
        /// bloch:AX,AY,AZ | angle:PHI | identity:D | random:D:SEED |
        /// embed:SITE:NSITES:INNER | JSON | @FILE
        #[arg(long = "obs", required = true)]
        observables: Vec<String>,
        /// Outcome tuples (JSON, e.g. [[1,-1]]) whose total measure to report
        #[arg(long)]
        event: Option<String>,
        /// Skip the relabeling invariance check (it dominates runtime on
        /// larger grids)
        #[arg(long)]
        skip_invariance: bool,
        /// Grid cell cap; overrides the QHV_MAX_CELLS environment variable
        #[arg(long)]
        max_cells: Option<usize>,
    },
    /// Local signed model for an N site, two settings per site scenario
    Scenario {
        /// State of the full N site system (see `measure --help` for forms)
        #[arg(long)]
        state: String,
        /// Settings: chsh_optimal | mk_optimal:N | JSON array of per site
        /// observable pairs | @FILE
        #[arg(long)]
        settings: String,
        /// Site whose outcomes come from the sign-conditional distributions
        #[arg(long, default_value_t = 0)]
        pivot: usize,
        /// Rebuild the model for every pivot choice and check each one
        #[arg(long)]
        all_pivots: bool,
        /// Grid cell cap; overrides the QHV_MAX_CELLS environment variable
        #[arg(long)]
        max_cells: Option<usize>,
    },
    /// Bell functional value against the classical and dimensional bounds
    Bell {
        /// Functional: chsh | mk:N | JSON {n_sites, classical_bound, terms}
        #[arg(long)]
        functional: String,
        /// State of the full N site system
        #[arg(long)]
        state: String,
        /// Measurement settings (as in `scenario`); omit with --optimize
        #[arg(long)]
        settings: Option<String>,
        /// Search for optimal settings by alternating maximization
        #[arg(long)]
        optimize: bool,
        /// Local dimension, required by --optimize when --settings is absent
        #[arg(long)]
        d: Option<usize>,
        /// Seed for the optimizer restarts
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 500)]
        sweeps: usize,
    },
    /// The violation bound min(d^((N-1)/2), 3^(N-1))
    Bound {
        /// Local dimension
        #[arg(long)]
        d: usize,
        /// Number of sites
        #[arg(long)]
        n: usize,
    },
    /// Born probabilities of a state in a rotated basis
    Tomogram {
        #[arg(long)]
        state: String,
        /// Unitary: identity:D | random:D:SEED | JSON | @FILE
        #[arg(long)]
        unitary: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    let out = cli.out.clone();
    let result = match cli.command {
        Command::Measure {
            state,
            observables,
            event,
            skip_invariance,
            max_cells,
        } => commands::measure(&state, &observables, event.as_deref(), skip_invariance, max_cells)
            .and_then(|r| output::emit(&r, format, out.as_deref())),
        Command::Scenario {
            state,
            settings,
            pivot,
            all_pivots,
            max_cells,
        } => commands::scenario(&state, &settings, pivot, all_pivots, max_cells)
            .and_then(|r| output::emit(&r, format, out.as_deref())),
        Command::Bell {
            functional,
            state,
            settings,
            optimize,
            d,
            seed,
            restarts,
            sweeps,
        } => commands::bell(
            &functional,
            &state,
            settings.as_deref(),
            optimize,
            d,
            seed,
            restarts,
            sweeps,
        )
        .and_then(|r| output::emit(&r, format, out.as_deref())),
        Command::Bound { d, n } => {
            commands::bound(d, n).and_then(|r| output::emit(&r, format, out.as_deref()))
        }
        Command::Tomogram { state, unitary } => commands::tomogram(&state, &unitary)
            .and_then(|r| output::emit(&r, format, out.as_deref())),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e @ CliError::Input(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e @ CliError::Run(_)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
