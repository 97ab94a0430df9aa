//! `heterotic`: run catalogue scenarios, dump dilaton profiles and
//! cross-check symbolic derivatives against finite differences.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on a
//! configuration error.

mod crosscheck;
mod dump;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heterotic_core::anomaly::scenario::{run_scenario, ScenarioSpec};

#[derive(Parser, Debug)]
#[command(name = "heterotic", version, about = "Verify heterotic solutions on torus-bundle coframes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a catalogue scenario and write its JSON report
    Verify {
        #[arg(long)]
        scenario: Option<String>,
        /// JSON scenario spec; `--scenario`, `--seed` and `--set` override it
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Report path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Named override, e.g. `rank2-lambda`; repeatable
        #[arg(long = "set", value_name = "OVERRIDE")]
        overrides: Vec<String>,
    },
    /// Tabulate a dilaton profile as CSV
    DumpProfile {
        #[arg(long)]
        profile: String,
        /// Comma-separated `key=value` pairs
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare symbolic derivatives with central differences on a profile
    Crosscheck {
        #[arg(long)]
        profile: String,
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long)]
        expr: String,
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        /// Shift the jet f_1 by 1e-3 on the symbolic side (sensitivity control)
        #[arg(long)]
        perturb: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failure before any check could run.
#[derive(Debug)]
struct ConfigError(String);

impl<E: std::fmt::Display> From<E> for ConfigError {
    fn from(e: E) -> Self {
        ConfigError(e.to_string())
    }
}

fn parse_params(s: &str) -> Result<BTreeMap<String, f64>, ConfigError> {
    let mut out = BTreeMap::new();
    for kv in s.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("expected key=value, got `{kv}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("`{v}` is not a number")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> Result<(), ConfigError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| ConfigError(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn verify(
    scenario: Option<String>,
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    overrides: Vec<String>,
) -> Result<bool, ConfigError> {
    let mut spec = match (&config, &scenario) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<ScenarioSpec>(&text)?
        }
        (None, Some(name)) => ScenarioSpec::new(name),
        (None, None) => return Err(ConfigError("either --scenario or --config is required".into())),
    };
    if let Some(name) = scenario {
        spec.scenario = name;
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.overrides.extend(overrides);
    let report = run_scenario(&spec)?;
    for c in &report.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        let residual = c.residual.map_or("error".to_string(), |r| format!("{r:e}"));
        eprintln!("{verdict} {:<26} residual {residual} (tol {:e})", c.id, c.tolerance);
    }
    write_or_print(out.as_ref(), &serde_json::to_string_pretty(&report)?)?;
    Ok(report.all_pass)
}

fn run(cli: Cli) -> Result<bool, ConfigError> {
    match cli.command {
        Command::Verify {
            scenario,
            config,
            seed,
            out,
            overrides,
        } => verify(scenario, config, seed, out, overrides),
        Command::DumpProfile {
            profile,
            params,
            grid,
            out,
        } => {
            let params = parse_params(&params)?;
            dump::dump_profile(&profile, &params, grid, &out)?;
            Ok(true)
        }
        Command::Crosscheck {
            profile,
            params,
            expr,
            step,
            seed,
            samples,
            perturb,
            out,
        } => {
            let params = parse_params(&params)?;
            let cfg = crosscheck::Config {
                profile,
                params,
                expr,
                step,
                seed,
                samples,
                perturb,
            };
            let report = crosscheck::run(&cfg)?;
            eprintln!(
                "{} {} on {}: max relative error {:e} (tol {:e})",
                if report.pass { "PASS" } else { "FAIL" },
                report.expr,
                report.profile,
                report.max_rel_error,
                report.tolerance
            );
            write_or_print(out.as_ref(), &serde_json::to_string_pretty(&report)?)?;
            Ok(report.pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
