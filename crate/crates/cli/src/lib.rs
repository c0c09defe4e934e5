//! Scenario registry, sweeps and CSV output for the `rates` tool.

pub mod check;
pub mod config;
pub mod output;
pub mod registry;
pub mod sweep;

use std::path::PathBuf;

use fading_core::Quadrature;

use config::{ScenarioConfig, Sweep};
use registry::{Ctx, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 3,
        }
    }
}

pub fn registry_listing() -> String {
    let mut s = String::new();
    for sc in registry::registry() {
        s.push_str(&format!("{:<38} {}\n", sc.id, sc.description));
    }
    s.push_str(&format!("{:<38} {}\n", registry::CONST_CHECK, "Reference constants (minimum Eb/N0, saturations, thresholds) with tolerances"));
    s
}

fn unknown(id: &str) -> CliError {
    CliError::Usage(format!("unknown scenario '{id}'; registered scenarios:\n{}", registry_listing()))
}

/// What a run produced besides the CSV bytes.
#[derive(Debug)]
pub struct RunReport {
    pub csv: Vec<u8>,
    pub summary: Vec<String>,
    pub errors: usize,
}

pub fn resolve_sweep(cfg: &ScenarioConfig, sc: &Scenario) -> Result<Sweep, CliError> {
    if cfg.grid.is_some() && cfg.ebn0_grid.is_some() {
        return Err(CliError::Usage("give either an SNR grid or an Eb/N0 grid, not both".into()));
    }
    let sweep = match (&cfg.grid, &cfg.ebn0_grid) {
        (_, Some(g)) => Sweep::Ebn0Grid(g.points()),
        (Some(g), None) => Sweep::PowerGrid(sweep::budgets(&g.points())),
        (None, None) => {
            let (lo, hi, n) = sc.snr_db;
            Sweep::PowerGrid(sweep::budgets(&config::GridSpec { lo, hi, steps: n }.points()))
        }
    };
    if sweep.is_empty() {
        return Err(CliError::Usage("the sweep grid is empty".into()));
    }
    Ok(sweep)
}

fn metadata(cfg: &ScenarioConfig, sc: &Scenario, sweep: &Sweep) -> Vec<String> {
    let grid = match (&cfg.grid, &cfg.ebn0_grid) {
        (_, Some(g)) => format!("ebn0_grid = {} (dB)", g.to_spec()),
        (Some(g), None) => format!("grid = {} (SNR dB)", g.to_spec()),
        (None, None) => format!("grid = {}:{}:{} (SNR dB, default)", sc.snr_db.0, sc.snr_db.1, sc.snr_db.2),
    };
    vec![
        format!("scenario = {}", sc.id),
        format!("description = {}", sc.description),
        grid,
        format!("points = {}", sweep.len()),
        format!("seed = {}", cfg.seed),
        format!("mc.n = {}", cfg.mc_n),
        format!("tol = {:e}", cfg.tol),
        format!("version = {} ({})", env!("CARGO_PKG_VERSION"), env!("RATES_GIT_DESCRIBE")),
    ]
}

/// Runs a registered scenario and renders its CSV.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport, CliError> {
    let sc = registry::find(&cfg.scenario).ok_or_else(|| unknown(&cfg.scenario))?;
    let sweep = resolve_sweep(cfg, &sc)?;
    let q = Quadrature::adaptive(cfg.tol).map_err(|e| CliError::Usage(e.to_string()))?;
    let ctx = Ctx { q, mc_n: cfg.mc_n };
    let methods = (sc.methods)();
    let out = match &sweep {
        Sweep::PowerGrid(ps) => sweep::sweep_power(&methods, ps, &ctx, cfg.seed),
        Sweep::Ebn0Grid(targets) => {
            let (lo, hi, n) = sc.snr_db;
            let scan = sweep::budgets(&config::GridSpec { lo, hi, steps: 2 * n }.points());
            sweep::sweep_ebn0(&methods, targets, &scan, &ctx, cfg.seed)
        }
    };
    let mut meta = metadata(cfg, &sc, &sweep);
    meta.extend(out.notes.iter().cloned());
    let csv = output::render(&out.rows, &meta)?;
    let mut summary = vec![format!("scenario {}: {} rows, {} errors", sc.id, out.rows.len(), out.errors)];
    for m in &methods {
        let min = out.rows.iter().filter(|r| r.method == m.label).map(|r| r.ebn0_db).filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min);
        let wb = sweep::wideband(m, &ctx).map_or("n/a".to_string(), |(e, s)| format!("{e:.3} dB, slope {s:.3}"));
        summary.push(format!("  {:<18} min Eb/N0 on grid {:>9.3} dB; wideband {}", m.label, min, wb));
    }
    let checks = check::run_checks(Some(sc.id), &ctx.q);
    for c in &checks {
        summary.push(format!("  check: {}", c.line()));
    }
    Ok(RunReport { csv, summary, errors: out.errors })
}

/// The constants table; also written as CSV when `out` is set.
pub fn run_const_check(tol: f64) -> Result<(Vec<check::CheckResult>, Vec<u8>), CliError> {
    let q = Quadrature::adaptive(tol).map_err(|e| CliError::Usage(e.to_string()))?;
    let res = check::run_checks(None, &q);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "value", "unit", "target", "tol", "pass"])?;
    for r in &res {
        w.write_record([r.name.to_string(), output::fmt12(r.value), r.unit.to_string(), output::fmt12(r.target), output::fmt12(r.tol), r.pass().to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Numerical(format!("csv buffer: {e}")))?;
    Ok((res, bytes))
}
