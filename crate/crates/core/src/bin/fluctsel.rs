use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fluctsel::cli_io::{
    emit_bundle, parse_config, parse_override, run_experiment, Experiment, RunError,
    EXIT_NUMERICAL, EXIT_VALIDATION,
};

/// Run a selection-mutation experiment under periodic fluctuations.
#[derive(Debug, Parser)]
#[command(name = "fluctsel", version)]
struct Args {
    /// One of: sigma0-convergence, periodic-orbit, floquet-sweep,
    /// epsilon-limit, moments, example1, example2, fitness-compare
    experiment: String,

    /// TOML (or JSON) run configuration
    #[arg(long)]
    config: PathBuf,

    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Replace a configuration value, e.g. `solver.eps=0.025`
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn fail(code: i32, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("fluctsel: {msg}");
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    };
    let experiment: Experiment = match args.experiment.parse() {
        Ok(e) => e,
        Err(msg) => return fail(EXIT_VALIDATION, msg),
    };
    let mut overrides = Vec::new();
    for spec in &args.overrides {
        match parse_override(spec) {
            Ok(o) => overrides.push(o),
            Err(e) => return fail(EXIT_VALIDATION, format!("--override {spec}: {e}")),
        }
    }
    let cfg = match parse_config(&args.config, &overrides) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_VALIDATION, e),
    };
    let bundle = match run_experiment(experiment, &cfg) {
        Ok(b) => b,
        Err(e @ RunError::Validation(_)) => return fail(EXIT_VALIDATION, e),
        Err(e @ RunError::Numerical(_)) => return fail(EXIT_NUMERICAL, e),
    };
    match emit_bundle(&bundle, &args.out) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_VALIDATION, e),
    }
}
