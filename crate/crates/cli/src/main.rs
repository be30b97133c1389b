use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use graphon_turing_cli::{execute, load_config, output_root, CliError, Command, OUT_ENV};

/// Graphon spectra and Turing bifurcations on random graphs.
///
/// Exit status: 0 on success, 2 for configuration errors, 3 for numerical failures
/// (details in the task's metadata.json), 1 for I/O errors.
#[derive(Debug, Parser)]
#[command(name = "graphon-turing", version)]
struct Cli {
    /// TOML experiment configuration; defaults to the built-in one for the command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed, overriding `seeds.base`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root, overriding `output.dir` and the GRAPHON_TURING_OUT variable.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the task pool.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Sub {
    /// Eigenvalues of deterministic and random graphs over a size sweep.
    Spectrum,
    /// Bifurcating branch from a chosen eigenvalue, with fit and prediction.
    Bifurcate,
    /// Branch at a 2:1 resonance.
    Resonance,
    /// Spectrum and step eigenvector of bipartite graphs.
    Bipartite,
    /// Operator-norm concentration of random Laplacians.
    Concentration,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Spectrum => Command::Spectrum,
            Sub::Bifurcate => Command::Bifurcate,
            Sub::Resonance => Command::Resonance,
            Sub::Bipartite => Command::Bipartite,
            Sub::Concentration => Command::Concentration,
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cmd = Command::from(cli.command);
    let cfg = load_config(cli.config.as_deref(), cmd, cli.seed)?;
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let root = output_root(cli.out.as_deref(), &cfg, std::env::var_os(OUT_ENV));
    let report = execute(cmd, &cfg, &root, cli.jobs.map(|j| j as usize))?;
    println!(
        "{}: {} tasks written to {}",
        cmd.name(),
        report.tasks.len(),
        root.join(cmd.name()).display()
    );
    for t in report.tasks.iter().filter(|t| !t.diagnostics.is_empty()) {
        println!("  {}: {}", t.dir, t.diagnostics.join("; "));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
