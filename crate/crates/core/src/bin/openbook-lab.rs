use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use openbook_core::scenario::{run_suite, ScenarioConfig, SUITES};

/// Runs verification suites and writes a JSON report plus CSV plot data.
#[derive(Parser, Debug)]
#[command(name = "openbook-lab", version)]
struct Args {
    /// TOML scenario config; defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Suite name, overriding the config.
    #[arg(long)]
    suite: Option<String>,
    /// RNG seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.json and CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the suite names and exit.
    #[arg(long)]
    list_suites: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list_suites {
        for s in SUITES {
            println!("{s}");
        }
        return ExitCode::SUCCESS;
    }
    let mut config = match &args.config {
        Some(p) => match ScenarioConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => ScenarioConfig::default(),
    };
    if let Some(s) = args.suite {
        config.suite = s;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    let output = match run_suite(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for c in &output.report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status} {:<40} {} = {:.3e} (threshold {:.1e})", c.name, c.statistic, c.value, c.threshold);
        if let Some(d) = &c.diagnostics {
            println!("     {d}");
        }
    }
    match &args.out {
        Some(dir) => {
            if let Err(e) = output.write(dir) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
        None => print!("{}", output.report.to_json()),
    }
    if output.report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
