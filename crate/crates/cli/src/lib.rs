//! Command-line front end for the `contact-bo` library.
//!
//! Every subcommand evaluates on a grid (or a set of levels) and writes one
//! table. CSV goes out with a single header line, and the summary and
//! findings go to stderr; JSON carries `{config, rows, summary, findings}`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::config::{Format, Overrides, RunConfig};
use crate::error::{CliError, Status};
use crate::output::{columns_help, Column, Document};

#[derive(Debug, Parser)]
#[command(
    name = "contact-bo",
    version,
    about = "Adiabatic two-center contact binding: binding curve, effective potential, spectrum, corrections"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Cmd {
    /// Tabulate w(u) and its derivatives on the u grid
    Binding,
    /// Tabulate the effective-potential terms and fit their 1/u^2 coefficients
    Effpot,
    /// Heavy-particle levels by quantization and by shooting
    Spectrum,
    /// Sampled radial eigenfunctions
    Radial,
    /// First-order corrections to the ground-state energy
    Corrections,
    /// Run the invariant suite; exit 4 if any invariant fails
    Verify,
}

impl Cmd {
    pub fn name(self) -> &'static str {
        match self {
            Cmd::Binding => "binding",
            Cmd::Effpot => "effpot",
            Cmd::Spectrum => "spectrum",
            Cmd::Radial => "radial",
            Cmd::Corrections => "corrections",
            Cmd::Verify => "verify",
        }
    }

    pub fn columns(self) -> &'static [Column] {
        use commands::*;
        match self {
            Cmd::Binding => &BINDING_COLUMNS,
            Cmd::Effpot => &EFFPOT_COLUMNS,
            Cmd::Spectrum => &SPECTRUM_COLUMNS,
            Cmd::Radial => &RADIAL_COLUMNS,
            Cmd::Corrections => &CORRECTIONS_COLUMNS,
            Cmd::Verify => &VERIFY_COLUMNS,
        }
    }

    pub const ALL: [Cmd; 6] = [Cmd::Binding, Cmd::Effpot, Cmd::Spectrum, Cmd::Radial, Cmd::Corrections, Cmd::Verify];
}

#[derive(Debug, Clone, Default, Args)]
pub struct Opts {
    /// Flat TOML file with any of the keys below; flags take precedence
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Smallest u (units of zeta0)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub umin: Option<f64>,
    /// Largest u
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub umax: Option<f64>,
    /// Number of grid points
    #[arg(long, global = true)]
    pub ucount: Option<usize>,
    /// Log spacing (default); pass --ulog=false for even spacing
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub ulog: Option<bool>,
    /// paper (5/12), extracted (fitted from the effective potential), or a value
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta2: Option<String>,
    /// M/m in reduced units (hbar = epsilon = 2 m* = 1)
    #[arg(long, global = true)]
    pub mass_ratio: Option<f64>,
    /// Light mass; with --heavy-mass, --hbar and --epsilon selects dimensional units
    #[arg(long = "light-mass", global = true)]
    pub m: Option<f64>,
    /// Heavy mass
    #[arg(long = "heavy-mass", global = true)]
    pub big_m: Option<f64>,
    #[arg(long, global = true)]
    pub hbar: Option<f64>,
    /// Square root of the one-center binding energy
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file (default stdout)
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Root-solve tolerance, in [1e-14, 1e-6]
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Number of levels for spectrum and radial (1..=10)
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    /// Samples per segment for radial
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Multiplies every verify threshold
    #[arg(long, global = true)]
    pub tol_scale: Option<f64>,
}

impl From<&Opts> for Overrides {
    fn from(o: &Opts) -> Self {
        Overrides {
            config: o.config.clone(),
            mass_ratio: o.mass_ratio,
            m: o.m,
            big_m: o.big_m,
            hbar: o.hbar,
            epsilon: o.epsilon,
            umin: o.umin,
            umax: o.umax,
            ucount: o.ucount,
            ulog: o.ulog,
            beta2: o.beta2.clone(),
            tol: o.tol,
            levels: o.levels,
            points: o.points,
            tol_scale: o.tol_scale,
            format: o.format,
            out: o.out.clone(),
        }
    }
}

/// The clap command with each subcommand's CSV columns in its help.
pub fn command() -> clap::Command {
    let mut cmd = Cli::command().after_help(
        "Exit codes: 0 success, 1 usage or config error, 2 solver failure, 3 fit instability, 4 invariant failure.",
    );
    for c in Cmd::ALL {
        cmd = cmd.mut_subcommand(c.name(), |s| s.after_help(columns_help(c.columns())));
    }
    cmd
}

pub fn execute(cmd: Cmd, cfg: &RunConfig) -> Result<(Document, Status), CliError> {
    match cmd {
        Cmd::Binding => commands::binding(cfg),
        Cmd::Effpot => commands::effpot(cfg),
        Cmd::Spectrum => commands::spectrum(cfg),
        Cmd::Radial => commands::radial(cfg),
        Cmd::Corrections => commands::corrections(cfg),
        Cmd::Verify => verify::verify(cfg),
    }
}

fn emit(doc: &Document, cfg: &RunConfig) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            doc.write_to(cfg.format, &mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            doc.write_to(cfg.format, &mut lock)?;
            lock.flush()?;
        }
    }
    if cfg.format == Format::Csv {
        eprint!("{}", doc.side_channel());
    }
    Ok(())
}

/// Parses `args`, runs, and returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Status::Usage.code() } else { 0 };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return Status::Usage.code();
        }
    };
    let cfg = match RunConfig::resolve(&Overrides::from(&cli.opts)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}\n\nRun 'contact-bo {} --help' for usage.", cli.command.name());
            return Status::Usage.code();
        }
    };
    let outcome = execute(cli.command, &cfg).and_then(|(doc, status)| {
        emit(&doc, &cfg)?;
        Ok(status)
    });
    match outcome {
        Ok(status) => {
            if status != Status::Ok {
                eprintln!("contact-bo {}: finished with status {}", cli.command.name(), status.code());
            }
            status.code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            Status::Usage.code()
        }
    }
}
