//! Experiment runner for `graphon-turing`: TOML configuration, seeded execution
//! over a worker pool, and CSV/JSON artifacts with fixed layouts.
//!
//! Output layout under the output root:
//!
//! ```text
//! <command>/metadata.json          resolved config, task list and status
//! <command>/prediction.json        graphon reference spectrum (spectrum, bipartite)
//! <command>/concentration.csv      N,seed,norm,ratio (concentration)
//! <command>/<task>/metadata.json   config, task, seeds, controls, diagnostics
//! <command>/<task>/eigenvalues.csv N,index,eigenvalue,normalized
//! <command>/<task>/branch.csv      step,epsilon,amplitude,supnorm,stable
//! <command>/<task>/profile.csv     j,x,u
//! <command>/<task>/events.json     folds, branch points, fit, terminations
//! <command>/<task>/prediction.json theory for this graph
//! <command>/<task>/alignment.json  matched indices, |a_j|, residuals, bound
//! ```
//!
//! Task directories are named `N<size>-deterministic`, `N<size>-seed<seed>` or
//! `N<size>` for concentration ensembles.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{execute, Command, Report};
pub use config::ExperimentConfig;
pub use error::CliError;

/// Environment variable holding the default output root.
pub const OUT_ENV: &str = "GRAPHON_TURING_OUT";

/// Output root: the `--out` flag, then `output.dir` from the config, then
/// [`OUT_ENV`], then `./out`.
pub fn output_root(flag: Option<&Path>, cfg: &ExperimentConfig, env: Option<OsString>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.clone())
        .or_else(|| env.filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Reads the config at `path`, or the built-in one for `cmd`, and applies a seed override.
pub fn load_config(path: Option<&Path>, cmd: Command, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
        None => config::canned(cmd.name()).expect("every command has a canned config").to_string(),
    };
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    if let Some(s) = seed {
        cfg.seeds.base = s;
    }
    Ok(cfg)
}


#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub mod book_cli {}
