//! Command-line front end: argument parsing, configuration layering, dispatch and export.
//!
//! Every subcommand takes the same flags and `key=value` tokens. Settings come from three
//! layers: a `--config` file of `key=value` lines, positional tokens, and flags, with later
//! layers winning. The merged configuration is validated in full before any computation.

pub mod commands;
pub mod config;
pub mod table;

use crate::error::Error;
use clap::{Args, Parser, Subcommand};
use commands::{columns_help, execute};
use config::{CommandKind, Format, Layers, RunConfig};
use std::ffi::OsString;
use std::path::PathBuf;
use table::{export, Failure};

#[derive(Debug, Parser)]
#[command(name = "hallband", version, about = "Band functions, quasi-modes and bulk/edge states of the half-plane Landau Hamiltonian")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Dispersion curve lambda_n(k) and band velocity over a k-range.
    #[command(after_help = columns_help(CommandKind::Bands))]
    Bands(Options),
    /// Boundary-slope band velocity against a central difference.
    #[command(after_help = columns_help(CommandKind::Derivative))]
    Derivative(Options),
    /// Threshold momentum k_n(delta) with lambda_n(k) = E_n + delta.
    #[command(after_help = columns_help(CommandKind::Kdelta))]
    Kdelta(Options),
    /// Quasi-mode energy, residual and Kato-Temple enclosure.
    #[command(after_help = columns_help(CommandKind::Quasimode))]
    Quasimode(Options),
    /// Consolidated accuracy report for one band (JSON by default).
    #[command(after_help = columns_help(CommandKind::Verify))]
    Verify(Options),
    /// Norm, current and current bound of bulk states.
    #[command(after_help = columns_help(CommandKind::Bulk))]
    Bulk(Options),
    /// Velocity bounds c- and c+ on an energy interval away from E_n.
    #[command(after_help = columns_help(CommandKind::Edge))]
    Edge(Options),
    /// Mass of bulk states in strips near the edge.
    #[command(after_help = columns_help(CommandKind::Localize))]
    Localize(Options),
    /// Real-space samples of a bulk state.
    #[command(after_help = columns_help(CommandKind::Synthesize))]
    Synthesize(Options),
}

impl CliCommand {
    fn split(&self) -> (CommandKind, &Options) {
        match self {
            CliCommand::Bands(o) => (CommandKind::Bands, o),
            CliCommand::Derivative(o) => (CommandKind::Derivative, o),
            CliCommand::Kdelta(o) => (CommandKind::Kdelta, o),
            CliCommand::Quasimode(o) => (CommandKind::Quasimode, o),
            CliCommand::Verify(o) => (CommandKind::Verify, o),
            CliCommand::Bulk(o) => (CommandKind::Bulk, o),
            CliCommand::Edge(o) => (CommandKind::Edge, o),
            CliCommand::Localize(o) => (CommandKind::Localize, o),
            CliCommand::Synthesize(o) => (CommandKind::Synthesize, o),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Band index (1-based).
    #[arg(long)]
    pub n: Option<String>,
    /// Quasi-momenta as lo:hi:step (inclusive) or a single value.
    #[arg(long = "k-range", allow_hyphen_values = true)]
    pub k_range: Option<String>,
    /// Comma-separated energy offsets above E_n.
    #[arg(long = "delta-list")]
    pub delta_list: Option<String>,
    /// Energy interval lo,hi.
    #[arg(long, allow_hyphen_values = true)]
    pub interval: Option<String>,
    /// Comma-separated strip parameters in (0, 1).
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Fourier profile: indicator:from,to | gaussian:offset,width | power:p (offsets from k_n(delta)).
    #[arg(long)]
    pub profile: Option<String>,
    /// Magnetic field strength.
    #[arg(long)]
    pub b: Option<String>,
    /// Constant in the current bound (default 2n-1).
    #[arg(long)]
    pub mu: Option<String>,
    /// Constant in the strip-mass bound.
    #[arg(long)]
    pub c: Option<String>,
    /// Synthesis grid across the edge, lo:hi:step.
    #[arg(long = "x-range")]
    pub x_range: Option<String>,
    /// Synthesis grid along the edge, lo:hi:step.
    #[arg(long = "y-range", allow_hyphen_values = true)]
    pub y_range: Option<String>,
    /// Maximal ODE and grid step.
    #[arg(long)]
    pub step: Option<String>,
    /// Domain length beyond k.
    #[arg(long)]
    pub margin: Option<String>,
    /// Eigenvalue root tolerance.
    #[arg(long)]
    pub tol: Option<String>,
    /// Check every shooting solve against finite differences (true|false).
    #[arg(long)]
    pub crosscheck: Option<String>,
    /// Output format: csv | json.
    #[arg(long)]
    pub format: Option<String>,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<String>,
    /// File of key=value lines merged under flags and tokens.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Settings as key=value (keys as the long flags, e.g. n=1 k=0:4:0.5).
    #[arg(value_name = "KEY=VALUE")]
    pub settings: Vec<String>,
}

impl Options {
    fn layers(&self) -> (Layers, Option<Error>) {
        let mut l = Layers::default();
        let mut first_error = None;
        if let Some(path) = &self.config {
            if let Err(e) = l.load_file(path) {
                first_error.get_or_insert(e);
            }
        }
        for token in &self.settings {
            if let Err(e) = l.add_token(token) {
                first_error.get_or_insert(e);
            }
        }
        let flags = [
            ("n", &self.n),
            ("k", &self.k_range),
            ("delta", &self.delta_list),
            ("interval", &self.interval),
            ("epsilon", &self.epsilon),
            ("profile", &self.profile),
            ("b", &self.b),
            ("mu", &self.mu),
            ("c", &self.c),
            ("x", &self.x_range),
            ("y", &self.y_range),
            ("step", &self.step),
            ("margin", &self.margin),
            ("tol", &self.tol),
            ("crosscheck", &self.crosscheck),
            ("format", &self.format),
            ("out", &self.out),
        ];
        for (key, value) in flags {
            l.add_flag(key, value.as_ref());
        }
        (l, first_error)
    }
}

/// Parses, validates, computes and exports; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (kind, options) = cli.command.split();
    let (layers, layer_error) = options.layers();
    let result = match layer_error {
        Some(e) => Err(e),
        None => RunConfig::from_layers(kind, &layers),
    }
    .and_then(|cfg| execute(&cfg).and_then(|table| export(&table, &cfg)));
    match result {
        Ok(()) => 0,
        Err(err) => {
            report_failure(kind, layers.format_hint(kind), &err);
            err.exit_code()
        }
    }
}

fn report_failure(kind: CommandKind, format: Format, err: &Error) {
    eprintln!("hallband {kind}: error [{}]: {err}", err.reason());
    if format == Format::Json {
        if let Ok(text) = serde_json::to_string_pretty(&Failure::new(kind.name(), err)) {
            println!("{text}");
        }
    }
}
