use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fading_cli::config::{GridSpec, ScenarioConfig};
use fading_cli::registry::CONST_CHECK;
use fading_cli::{registry_listing, run_const_check, run_scenario, CliError};

/// Information rates for fading channels: scenario sweeps as CSV.
#[derive(Parser)]
#[command(name = "rates", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write its CSV
    Run {
        /// Scenario id (see `rates list`); may come from the config file instead
        scenario: Option<String>,
        /// Flat key = value config file
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "mc-n")]
        mc_n: Option<u64>,
        /// Quadrature tolerance
        #[arg(long)]
        tol: Option<f64>,
        /// SNR grid in dB as lo:hi:steps
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Eb/N0 grid in dB as lo:hi:steps
        #[arg(long = "ebn0-grid", allow_hyphen_values = true)]
        ebn0_grid: Option<String>,
        /// Extra key=value overrides
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// List registered scenarios
    List,
    /// Print the reference constants table
    Check {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn write_out(path: Option<&PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Io { path: p.clone(), source: e }),
        None => Ok(()),
    }
}

fn check(out: Option<&PathBuf>, tol: f64) -> Result<bool, CliError> {
    let (res, bytes) = run_const_check(tol)?;
    for r in &res {
        println!("{}", r.line());
    }
    write_out(out, &bytes)?;
    Ok(res.iter().all(|r| r.pass()))
}

fn run(cmd: Cmd) -> Result<ExitCode, CliError> {
    match cmd {
        Cmd::List => {
            print!("{}", registry_listing());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Check { out, tol } => Ok(if check(out.as_ref(), tol.unwrap_or(fading_cli::config::DEFAULT_TOL))? { ExitCode::SUCCESS } else { ExitCode::from(3) }),
        Cmd::Run { scenario, config, out, seed, mc_n, tol, grid, ebn0_grid, set } => {
            let mut cfg = ScenarioConfig::default();
            if let Some(path) = &config {
                cfg.load(path)?;
            }
            for kv in &set {
                let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects key=value, got '{kv}'")))?;
                cfg.set(k, v)?;
            }
            if let Some(s) = scenario {
                cfg.scenario = s;
            }
            if let Some(p) = out {
                cfg.out = Some(p);
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = mc_n {
                cfg.set("mc.n", &n.to_string())?;
            }
            if let Some(t) = tol {
                cfg.set("tol", &t.to_string())?;
            }
            if let Some(g) = grid {
                cfg.grid = Some(GridSpec::parse(&g)?);
            }
            if let Some(g) = ebn0_grid {
                cfg.ebn0_grid = Some(GridSpec::parse(&g)?);
            }
            if cfg.scenario.is_empty() {
                return Err(CliError::Usage(format!("no scenario given; registered scenarios:\n{}", registry_listing())));
            }
            if cfg.scenario == CONST_CHECK {
                return Ok(if check(cfg.out.as_ref(), cfg.tol)? { ExitCode::SUCCESS } else { ExitCode::from(3) });
            }
            let report = run_scenario(&cfg)?;
            match &cfg.out {
                Some(p) => write_out(Some(p), &report.csv)?,
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(&report.csv).map_err(|e| CliError::Io { path: "<stdout>".into(), source: e })?;
                }
            }
            for line in &report.summary {
                eprintln!("{line}");
            }
            Ok(if report.errors > 0 { ExitCode::from(3) } else { ExitCode::SUCCESS })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rates: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
