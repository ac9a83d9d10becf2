//! Command-line front end for `ctmc-trunc-core`.
//!
//! Every run takes an optional JSON config, applies flag overrides on top,
//! writes `effective_config.json` plus its outputs into the output directory
//! and prints one summary line. Exit codes: 0 success, 2 config error,
//! 3 numeric failure, 4 inconclusive result under `--strict`.

// `!(x <= tol)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod network;
pub mod parallel;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

pub use error::{CliError, Result};

use crate::commands::Context;
use crate::config::{set_path, set_value, ExperimentConfig, PresetConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "ctmc-trunc",
    version,
    about = "Finite-window analysis of countable Markov chains"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON experiment config; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Preset name (see list-presets).
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Preset parameter `key=value`; dotted keys reach nested fields.
    #[arg(long = "param", global = true, value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Network edge list `src dst rate`; implies the edge_list preset.
    #[arg(long, global = true, conflicts_with = "preset")]
    pub edges: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    pub format: Option<String>,
    /// Exit with code 4 on inconclusive results.
    #[arg(long, global = true)]
    pub strict: bool,
    #[arg(long, global = true, env = "CTMC_TRUNC_THREADS")]
    pub threads: Option<usize>,
    /// Generic override `section.key=value`.
    #[arg(long = "set", global = true, value_name = "PATH=VALUE")]
    pub sets: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a point mass on a window.
    Evolve {
        #[arg(long)]
        window: Option<String>,
        /// Comma-separated times.
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
        #[arg(long)]
        tol: Option<f64>,
        /// subnetwork, sharp or condense.
        #[arg(long)]
        scheme: Option<String>,
        /// Outer window of the condense scheme.
        #[arg(long)]
        horizon: Option<String>,
        #[arg(long)]
        initial: Option<String>,
    },
    /// Stationary vector of a window.
    Stationary {
        #[arg(long)]
        window: Option<String>,
        /// kernel, detailed-balance or in-tree.
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        residual_tol: Option<f64>,
    },
    /// Nested-window sweep and four-limit verdict.
    Sweep {
        /// balls, shifted_balls or prefixes.
        #[arg(long)]
        sequence: Option<String>,
        #[arg(long)]
        n_min: Option<u64>,
        #[arg(long)]
        n_max: Option<u64>,
        #[arg(long)]
        step: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        t_grid: Option<Vec<f64>>,
        /// A label or `geometric:<ratio>`.
        #[arg(long)]
        initial: Option<String>,
        /// Run the leak probe with this threshold.
        #[arg(long)]
        leak_threshold: Option<f64>,
        #[arg(long)]
        leak_n: Option<u64>,
        #[arg(long)]
        leak_horizon: Option<f64>,
    },
    /// Monte Carlo on the full network.
    Simulate {
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        start: Option<String>,
        /// return, absorption or occupation.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        event_log: bool,
    },
    /// Kolmogorov cycle test and detailed-balance candidate.
    CheckDb {
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        root: Option<String>,
    },
    /// Eigenvalues of a window generator.
    Spectrum {
        #[arg(long)]
        window: Option<String>,
    },
    /// Print preset names and default parameters.
    ListPresets,
}

fn json_of<T: serde::Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

fn set_opt<T: serde::Serialize>(root: &mut Value, path: &str, v: Option<T>) -> Result<()> {
    match v {
        Some(v) => set_value(root, path, json_of(v)),
        None => Ok(()),
    }
}

fn split_assignment(s: &str) -> Result<(&str, &str)> {
    s.split_once('=')
        .ok_or_else(|| CliError::Config(format!("expected KEY=VALUE, got `{s}`")))
}

/// Writes the preset's default parameters into `v` where absent, so that
/// dotted edits like `lambda.q=0.5` land inside a complete object.
fn fill_preset_defaults(v: &mut Value) -> Result<()> {
    let name = match v.pointer("/preset/name") {
        Some(Value::String(n)) => n.clone(),
        Some(_) => return Ok(()),
        None => PresetConfig::default().name().to_string(),
    };
    let Ok(defaults) = PresetConfig::default_for(&name) else {
        return Ok(());
    };
    let Value::Object(defaults) = json_of(defaults) else {
        unreachable!("presets serialize to objects")
    };
    for (k, d) in defaults {
        let path = format!("preset.{k}");
        if v.pointer(&format!("/preset/{k}")).is_none() {
            set_value(v, &path, d)?;
        }
    }
    Ok(())
}

/// The config file with every flag applied, before deserialization.
pub fn merged_config(cli: &Cli) -> Result<Value> {
    let g = &cli.global;
    let mut v = match &g.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => Value::Object(Default::default()),
    };
    if !v.is_object() {
        return Err(CliError::Config("config must be a JSON object".into()));
    }
    if let Some(name) = &g.preset {
        let current = v.pointer("/preset/name").and_then(Value::as_str);
        if current != Some(name.as_str()) {
            set_value(&mut v, "preset", serde_json::json!({ "name": name }))?;
        }
    }
    if let Some(path) = &g.edges {
        set_value(
            &mut v,
            "preset",
            serde_json::json!({ "name": "edge_list", "path": path }),
        )?;
    }
    if !g.params.is_empty() {
        fill_preset_defaults(&mut v)?;
    }
    for p in &g.params {
        let (k, val) = split_assignment(p)?;
        set_path(&mut v, &format!("preset.{k}"), val)?;
    }
    set_opt(&mut v, "output_dir", g.output_dir.as_ref())?;
    set_opt(&mut v, "format", g.format.as_ref())?;
    if g.strict {
        set_value(&mut v, "strict", Value::Bool(true))?;
    }
    match &cli.command {
        Command::Evolve {
            window,
            times,
            tol,
            scheme,
            horizon,
            initial,
        } => {
            set_opt(&mut v, "evolve.window", window.as_ref())?;
            set_opt(&mut v, "evolve.times", times.as_ref())?;
            set_opt(&mut v, "evolve.tol", *tol)?;
            set_opt(&mut v, "evolve.scheme", scheme.as_ref())?;
            set_opt(&mut v, "evolve.horizon", horizon.as_ref())?;
            set_opt(&mut v, "evolve.initial", initial.as_ref())?;
        }
        Command::Stationary {
            window,
            method,
            residual_tol,
        } => {
            set_opt(&mut v, "stationary.window", window.as_ref())?;
            set_opt(&mut v, "stationary.method", method.as_ref())?;
            set_opt(&mut v, "stationary.residual_tol", *residual_tol)?;
        }
        Command::Sweep {
            sequence,
            n_min,
            n_max,
            step,
            t_grid,
            initial,
            leak_threshold,
            leak_n,
            leak_horizon,
        } => {
            set_opt(&mut v, "sweep.sequence", sequence.as_ref())?;
            set_opt(&mut v, "sweep.n_min", *n_min)?;
            set_opt(&mut v, "sweep.n_max", *n_max)?;
            set_opt(&mut v, "sweep.step", *step)?;
            set_opt(&mut v, "sweep.t_grid", t_grid.as_ref())?;
            set_opt(&mut v, "sweep.initial", initial.as_ref())?;
            if leak_threshold.is_some() || leak_n.is_some() || leak_horizon.is_some() {
                if v.pointer("/sweep/leak").is_none_or(Value::is_null) {
                    set_value(&mut v, "sweep.leak", Value::Object(Default::default()))?;
                }
                set_opt(&mut v, "sweep.leak.threshold", *leak_threshold)?;
                set_opt(&mut v, "sweep.leak.n", *leak_n)?;
                set_opt(&mut v, "sweep.leak.horizon", *leak_horizon)?;
            }
        }
        Command::Simulate {
            n,
            horizon,
            seed,
            start,
            mode,
            event_log,
        } => {
            set_opt(&mut v, "simulate.n", *n)?;
            set_opt(&mut v, "simulate.horizon", *horizon)?;
            set_opt(&mut v, "simulate.seed", *seed)?;
            set_opt(&mut v, "simulate.start", start.as_ref())?;
            set_opt(&mut v, "simulate.mode", mode.as_ref())?;
            if *event_log {
                set_value(&mut v, "simulate.event_log", Value::Bool(true))?;
            }
        }
        Command::CheckDb { window, root } => {
            set_opt(&mut v, "check_db.window", window.as_ref())?;
            set_opt(&mut v, "check_db.root", root.as_ref())?;
        }
        Command::Spectrum { window } => set_opt(&mut v, "spectrum.window", window.as_ref())?,
        Command::ListPresets => {}
    }
    for s in &g.sets {
        let (k, val) = split_assignment(s)?;
        set_path(&mut v, k, val)?;
    }
    Ok(v)
}

/// Builds the context for a parsed command line.
pub fn context(cli: &Cli) -> Result<Context> {
    let mut cfg = ExperimentConfig::from_value(merged_config(cli)?)?;
    let base = commands::config_base(cli.global.config.as_deref());
    if let PresetConfig::EdgeList { path } = &mut cfg.preset {
        // Flag paths are relative to the working directory, config paths to the file.
        let from_flag = cli.global.edges.is_some();
        let joined = if path.is_absolute() || from_flag {
            path.clone()
        } else {
            base.join(&*path)
        };
        *path = std::fs::canonicalize(&joined)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", joined.display())))?;
    }
    let net = cfg.preset.build(Path::new("."))?;
    cfg.resolve(&net)?;
    let threads = parallel::thread_count(cli.global.threads, cfg.threads)?;
    Ok(Context {
        pool: parallel::pool(threads)?,
        cfg,
        net,
    })
}

/// Runs one command and returns its summary line.
pub fn execute(cli: &Cli) -> Result<String> {
    if let Command::ListPresets = cli.command {
        return commands::list_presets();
    }
    let ctx = context(cli)?;
    ctx.prepare_output()?;
    match cli.command {
        Command::Evolve { .. } => commands::evolve_cmd(&ctx),
        Command::Stationary { .. } => commands::stationary_cmd(&ctx),
        Command::Sweep { .. } => commands::sweep_cmd(&ctx),
        Command::Simulate { .. } => commands::simulate_cmd(&ctx),
        Command::CheckDb { .. } => commands::check_db_cmd(&ctx),
        Command::Spectrum { .. } => commands::spectrum_cmd(&ctx),
        Command::ListPresets => unreachable!("handled above"),
    }
}

/// Parses `args`, runs, prints the summary or the error and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code().into()
        }
    }
}
