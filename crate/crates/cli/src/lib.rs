//! `soliton`: construct, evolve and verify reflectionless N-soliton
//! potentials from the command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration or
//! validation error, 3 numeric or I/O failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{FamilyArg, MethodArg};
use config::{Format, Kind, ScenarioConfig};
pub use error::CliError;

/// Environment variable naming the output directory when neither `--out`
/// nor the config sets one.
pub const OUT_DIR_ENV: &str = "SOLITON_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "soliton", version, about = "Reflectionless N-soliton potentials and their hierarchies")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Command,
}

/// Scenario options; each overrides the matching config entry.
#[derive(Debug, Args)]
pub struct Common {
    /// TOML scenario file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory for field files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Multiply every verification tolerance by this factor.
    #[arg(long, global = true)]
    pub tolerance_scale: Option<f64>,

    /// Comma-separated times.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub times: Option<Vec<f64>>,

    /// Symmetric grid `L,n`: n points on [-L, L].
    #[arg(long, global = true, value_parser = parse_grid)]
    pub grid: Option<(f64, usize)>,

    /// Comma-separated decay rates, strictly increasing.
    #[arg(long, global = true, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,

    #[arg(long, global = true, value_enum)]
    pub kind: Option<Kind>,

    /// Hierarchy member driving the evolution.
    #[arg(long, global = true)]
    pub m: Option<usize>,

    /// Comma-separated rates for `--kind custom`.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub alphas: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write x, U, psi_1..psi_N, W and xi at one time (default t = 0).
    Construct,
    /// Write one frame file per time plus manifest.json.
    Evolve,
    /// Print the sumrule table for j = 0..J.
    Sumrules {
        #[arg(short = 'J', long, default_value_t = 2)]
        max_index: usize,
    },
    /// Write hierarchy functions of index 0..J.
    Hierarchy {
        #[arg(long, value_enum, default_value = "lax")]
        family: FamilyArg,
        #[arg(short = 'J', long, default_value_t = 2)]
        max_index: usize,
        #[arg(long, value_enum, default_value = "spectral")]
        method: MethodArg,
        /// Weights for the weighted family (default all 1).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        betas: Option<Vec<f64>>,
    },
    /// Print speeds, phase shifts and per-soliton decomposition errors.
    Asymptotics,
    /// Run the full check catalogue; exit 1 if any check fails.
    Verify,
}

fn parse_grid(s: &str) -> Result<(f64, usize), String> {
    let (l, n) = s.split_once(',').ok_or("expected L,n")?;
    let l: f64 = l.trim().parse().map_err(|e| format!("half width: {e}"))?;
    let n: usize = n.trim().parse().map_err(|e| format!("point count: {e}"))?;
    Ok((l, n))
}

impl Common {
    fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(v) = &self.gammas {
            cfg.gammas = Some(v.clone());
        }
        if let Some(v) = self.kind {
            cfg.kind = Some(v);
        }
        if let Some(v) = self.m {
            cfg.m = Some(v);
        }
        if let Some(v) = &self.alphas {
            cfg.alphas = Some(v.clone());
        }
        if let Some(v) = &self.times {
            cfg.times = Some(v.clone());
        }
        if let Some((l, n)) = self.grid {
            cfg.grid.x_min = Some(-l);
            cfg.grid.x_max = Some(l);
            cfg.grid.n_points = Some(n);
        }
        if let Some(v) = &self.out {
            cfg.output.dir = Some(v.clone());
        }
        if let Some(v) = self.format {
            cfg.output.format = Some(v);
        }
        if let Some(v) = self.tolerance_scale {
            cfg.verify.tolerance_scale = Some(v);
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = match &cli.common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    let times_given = cli.common.times.is_some() || cfg.times.is_some();
    cli.common.apply(&mut cfg);
    if cfg.output.dir.is_none() {
        cfg.output.dir = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    }
    let res = cfg.resolve()?;
    match &cli.command {
        Command::Construct => commands::construct(&res, out),
        Command::Evolve => commands::evolve_frames(&res, out),
        Command::Sumrules { max_index } => commands::sumrules(&res, *max_index, out),
        Command::Hierarchy { family, max_index, method, betas } => {
            commands::hierarchy(&res, *family, *max_index, *method, betas.as_deref(), out)
        }
        Command::Asymptotics => {
            let times = if times_given { res.times.clone() } else { commands::default_asymptotic_times(&res)? };
            commands::asymptotics(&res, &times, out)
        }
        Command::Verify => commands::run_verify(&res, out, err),
    }
}

/// Parse `args` (program name first), run the command and return the exit
/// code. Tables go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return e.exit_code();
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
