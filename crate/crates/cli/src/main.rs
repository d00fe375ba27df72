use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cosym_cli::config::{parse_config, CheckName, ConfigError, RunConfig};
use cosym_cli::explain::explain;
use cosym_cli::report::{ScenarioReport, Status};
use cosym_cli::runner::{run, write_morse_csv};
use cosym_core::constructions::registry;

/// Longest compact detail echoed on a summary line.
const SUMMARY_DETAIL_MAX: usize = 120;

#[derive(Parser)]
#[command(
    name = "cosym",
    version,
    about = "Checks cosymplectic and precosymplectic example spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in scenarios.
    List,
    /// Run a config file, or a registry name with default settings.
    Run {
        /// Path to a config file, or a scenario name such as `cn(3,1)`.
        target: String,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write moment-body and critical-component CSV files into this directory.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Override a tolerance, as `name=value`. Repeatable.
        #[arg(long = "tol", value_name = "NAME=VALUE")]
        tol: Vec<String>,
        /// Comma-separated check names; replaces the config's list.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
        /// Record wall times in the report. The output is then no longer reproducible byte for byte.
        #[arg(long)]
        timing: bool,
    },
    /// Describe what a check computes and when it passes.
    Explain { check: String },
}

fn load_config(target: &str) -> Result<RunConfig, ConfigError> {
    let path = Path::new(target);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Parse {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        parse_config(&text)
    } else {
        parse_config(&format!("scenario = {target}"))
    }
}

fn usage_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(2)
}

fn apply_overrides(
    cfg: &mut RunConfig,
    seed: Option<u64>,
    tol: &[String],
    checks: &[String],
    timing: bool,
) -> Result<(), String> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    for item in tol {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| format!("--tol expects name=value, got `{item}`"))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("--tol {name}: `{value}` is not a number"))?;
        cfg.tolerances.set(name.trim(), value)?;
    }
    if !checks.is_empty() {
        let parsed = checks
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<CheckName>()
                    .map_err(|n| format!("unknown check `{n}`"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        *cfg = cfg.clone().with_checks(&parsed);
    }
    cfg.timing |= timing;
    Ok(())
}

fn summary_line(report: &ScenarioReport, check: CheckName) -> String {
    let entry = &report.checks[&check];
    let status = match entry.status {
        Status::Pass => "pass",
        Status::Fail => "FAIL",
        Status::Error => "ERROR",
        Status::Skipped => "skipped",
    };
    let mut line = format!("{check}: {status}");
    if let Some(m) = &entry.message {
        line.push_str(&format!(" ({m})"));
    } else if let Some(d) = &entry.detail {
        let compact = d.to_string();
        if compact.len() <= SUMMARY_DETAIL_MAX {
            line.push(' ');
            line.push_str(&compact);
        }
    }
    line
}

fn write_csvs(dir: &Path, out: &cosym_cli::RunOutput) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    if let Some(body) = &out.moment_body {
        let path = dir.join("moment_body.csv");
        let f = fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        body.write_csv(BufWriter::new(f))
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if !out.morse.is_empty() {
        let path = dir.join("critical_components.csv");
        let f = fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        write_morse_csv(&out.morse, BufWriter::new(f))
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

fn configure_threads() {
    if let Some(n) = std::env::var("COSYM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        if n > 0 {
            // Fails only if a pool already exists, which cannot happen this early.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match cli.command {
        Command::List => {
            for entry in registry() {
                println!("{:<28} {}", entry.pattern, entry.description);
            }
            ExitCode::SUCCESS
        }
        Command::Explain { check } => match check.parse::<CheckName>() {
            Ok(c) => {
                println!("{c}: {}", explain(c));
                ExitCode::SUCCESS
            }
            Err(name) => usage_error(format!("unknown check `{name}`")),
        },
        Command::Run {
            target,
            out,
            csv,
            seed,
            tol,
            checks,
            timing,
        } => {
            let mut cfg = match load_config(&target) {
                Ok(c) => c,
                Err(e) => return usage_error(e),
            };
            if let Err(e) = apply_overrides(&mut cfg, seed, &tol, &checks, timing) {
                return usage_error(e);
            }
            let output = run(&cfg);
            let json = output.report.to_canonical_json();
            let summary: Vec<String> = cfg
                .checks
                .iter()
                .map(|&c| summary_line(&output.report, c))
                .collect();
            match &out {
                Some(path) => {
                    if let Err(e) = fs::write(path, &json) {
                        return usage_error(format!("{}: {e}", path.display()));
                    }
                    for line in &summary {
                        println!("{line}");
                    }
                }
                None => {
                    print!("{json}");
                    let _ = io::stdout().flush();
                    for line in &summary {
                        eprintln!("{line}");
                    }
                }
            }
            if let Some(dir) = &csv {
                if let Err(e) = write_csvs(dir, &output) {
                    return usage_error(e);
                }
            }
            ExitCode::from(output.report.exit_code() as u8)
        }
    }
}
