use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use krein_spectra::config::{parse_config, Mode};
use krein_spectra::runner::{run, RunError};

/// Spectra, counting curves, and counting-bound certification for
/// higher-order Krein-von Neumann Laplacians on finite-volume sets.
///
/// Exit codes: 0 success, 1 configuration error, 2 numerical failure,
/// 3 invariant violation (a breached counting bound is the headline alarm).
#[derive(Parser)]
#[command(name = "krein-spectra", version)]
struct Args {
    /// Run mode: spectrum | count | bound-table | verify | oracle
    mode: String,
    /// Path to the flat key-value config file
    #[arg(long)]
    config: PathBuf,
    /// Emit the JSON report on stdout instead of CSV
    #[arg(long)]
    json: bool,
    /// Write the CSV to this path (overrides the config `out` key)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the randomized property checks (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let Some(mode) = Mode::parse(&args.mode) else {
        eprintln!(
            "error: unknown mode {:?} (expected spectrum | count | bound-table | verify | oracle)",
            args.mode
        );
        return ExitCode::from(1);
    };

    let text = match fs::read_to_string(&args.config) {
        Ok(text) => text,
        Err(err) => {
            eprintln!("error: cannot read {}: {err}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(1);
        }
    };
    // The positional mode takes precedence over the config key.
    cfg.mode = Some(mode);
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        cfg.echo.insert("seed".into(), seed.to_string());
    }

    let report = match run(&cfg, mode) {
        Ok(report) => report,
        Err(err @ RunError::Invalid(_)) => {
            eprintln!("error: {err}");
            return ExitCode::from(1);
        }
        Err(err @ RunError::Io { .. }) => {
            eprintln!("error: {err}");
            return ExitCode::from(1);
        }
        Err(err @ RunError::Numerical(_)) => {
            eprintln!("error: {err}");
            return ExitCode::from(2);
        }
    };

    for check in &report.checks {
        let status = if check.passed { "PASS" } else { "FAIL" };
        eprintln!("{status} {}: {}", check.name, check.detail);
    }

    let csv = report.to_csv();
    let out_path = args.out.or_else(|| cfg.out.as_ref().map(PathBuf::from));
    if let Some(path) = &out_path {
        if let Err(err) = fs::write(path, &csv) {
            eprintln!("error: cannot write {}: {err}", path.display());
            return ExitCode::from(1);
        }
    }
    if args.json {
        println!("{}", report.to_json());
    } else if out_path.is_none() {
        print!("{csv}");
    }

    if report.all_checks_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}
