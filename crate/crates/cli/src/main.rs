use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use hybrid_koopman_cli::{config_schema, load, preset_catalog, run_scenario, write_outputs, CliError, Scenario};

/// Exit status: 0 all enabled checks pass, 1 a check failed,
/// 2 invalid configuration or usage, 3 I/O or numerical failure.
#[derive(Parser)]
#[command(name = "hkoop", version, about = "Hybrid quantum-classical Koopman scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write timeseries.csv, checks.json and config.resolved.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `all`, `none` or a comma-separated list of suites; overrides the config.
        #[arg(long)]
        checks: Option<String>,
        #[arg(long)]
        quiet: bool,
    },
    /// Print the Hamiltonian presets as JSON.
    Presets,
    /// Print the JSON Schema of scenario configs.
    Schema,
}

fn run(config: PathBuf, out: PathBuf, checks: Option<String>, quiet: bool) -> Result<bool, CliError> {
    let mut cfg = load(&config)?;
    if let Some(spec) = checks {
        cfg.override_checks(&spec)?;
    }
    let scenario = Scenario::build(&cfg)?;
    if !quiet {
        eprintln!("hkoop: {} grid points x d = {}, lift {}", scenario.grid.n_points(), cfg.quantum_dim, cfg.lift);
    }
    let output = run_scenario(&scenario, |k, n| {
        if !quiet && k < n {
            eprintln!("hkoop: sample {}/{n}", k + 1);
        }
    })?;
    write_outputs(&out, &cfg, &output)?;
    if !quiet {
        for c in &output.checks.checks {
            let status = match (c.enabled, c.passed) {
                (false, _) => "SKIP",
                (true, true) => "PASS",
                (true, false) => "FAIL",
            };
            println!("{status} {:<14} {:e} (tolerance {:e})", c.name, c.value, c.tolerance);
        }
    }
    Ok(output.checks.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Presets => {
            println!("{}", serde_json::to_string_pretty(&preset_catalog()).expect("serializable"));
            ExitCode::SUCCESS
        }
        Command::Schema => {
            println!("{}", serde_json::to_string_pretty(&config_schema()).expect("serializable"));
            ExitCode::SUCCESS
        }
        Command::Run { config, out, checks, quiet } => match run(config, out, checks, quiet) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => {
                let details = match &e {
                    CliError::Config(errs) => json!(errs.0),
                    other => json!([{ "message": other.to_string() }]),
                };
                eprintln!("{}", json!({ "error": e.code(), "details": details }));
                if !quiet {
                    eprintln!("hkoop: {e}");
                }
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
