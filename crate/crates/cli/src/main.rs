//! `freesurf`: run named scenarios of the free-surface solvers and report
//! on them.
//!
//! Exit status: 0 when every verdict passes, 1 when a verdict fails or the
//! run aborts, 2 for unusable input.

mod config;
mod error;
mod output;
mod report;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;
use error::CliError;

#[derive(Parser)]
#[command(name = "freesurf", version, about = "Scenario runner for the free-surface flow solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run { config: PathBuf },
    /// Print the summary of a completed run directory.
    Report { dir: PathBuf },
    /// Resolve a config, print it with every default filled in, and check
    /// the exponent configuration.
    Validate { config: PathBuf },
}

fn env(key: &str) -> Option<String> {
    std::env::var(key).ok()
}

fn load(path: &PathBuf) -> Result<Config, CliError> {
    let mut cfg = Config::load(path)?;
    cfg.apply_env(env)?;
    Ok(cfg)
}

fn admissibility_failures(cfg: &Config) -> Vec<&'static str> {
    if cfg.scenario.needs_admissible_exponents() {
        cfg.admissibility().failures()
    } else {
        vec![]
    }
}

fn run(path: &PathBuf) -> Result<bool, CliError> {
    let cfg = load(path)?;
    let failures = admissibility_failures(&cfg);
    if !failures.is_empty() {
        return Err(CliError::Usage(format!("exponent configuration is not admissible: {}", failures.join(", "))));
    }
    if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global()
            .map_err(|e| CliError::Run(format!("worker pool: {e}")))?;
    }
    let outcome = scenarios::run(&cfg)?;
    let summary = output::write_run(&cfg, &outcome)?;
    print!("{summary}");
    println!("\noutput written to {}", cfg.output_dir.display());
    Ok(outcome.passed())
}

fn validate(path: &PathBuf) -> Result<bool, CliError> {
    let cfg = load(path)?;
    print!("{}", cfg.to_toml());
    let report = cfg.admissibility();
    println!();
    for c in &report.checks {
        println!("# {} {}: margin {:.4e}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.margin);
    }
    let required = cfg.scenario.needs_admissible_exponents();
    println!(
        "# exponent configuration {}{}",
        if report.valid() { "admissible" } else { "not admissible" },
        if required { "" } else { " (not required by this scenario)" }
    );
    Ok(report.valid() || !required)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => run(config),
        Command::Report { dir } => report::emit_report(dir).map(|s| {
            print!("{s}");
            true
        }),
        Command::Validate { config } => validate(config),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("freesurf: {e}");
            e.exit_code()
        }
    }
}
