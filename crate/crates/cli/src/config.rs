//! Flat `key = value` run configuration.

use std::path::{Path, PathBuf};

use crate::CliError;

pub const DEFAULT_MC_N: u64 = 2_000_000;
pub const DEFAULT_TOL: f64 = 1e-8;

/// Points of a sweep: budgets `P`, or Eb/N0 targets in dB.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    PowerGrid(Vec<f64>),
    Ebn0Grid(Vec<f64>),
}

impl Sweep {
    pub fn len(&self) -> usize {
        match self {
            Sweep::PowerGrid(v) | Sweep::Ebn0Grid(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `lo:hi:steps` with `steps` evenly spaced points (dB).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::Usage(format!("grid '{s}' is not lo:hi:steps"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if !(lo.is_finite() && hi.is_finite()) || hi < lo || steps == 0 || (steps == 1 && hi != lo) {
            return Err(CliError::Usage(format!("grid '{s}' needs lo <= hi and steps >= 1 (steps = 1 only when lo = hi)")));
        }
        Ok(Self { lo, hi, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        (0..self.steps).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.steps - 1) as f64).collect()
    }

    pub fn to_spec(&self) -> String {
        format!("{}:{}:{}", self.lo, self.hi, self.steps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: String,
    /// SNR grid in dB; `None` means the scenario default.
    pub grid: Option<GridSpec>,
    pub ebn0_grid: Option<GridSpec>,
    pub mc_n: u64,
    pub seed: u64,
    pub tol: f64,
    pub out: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self { scenario: String::new(), grid: None, ebn0_grid: None, mc_n: DEFAULT_MC_N, seed: 1, tol: DEFAULT_TOL, out: None }
    }
}

impl ScenarioConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        let num = |what: &str| CliError::Usage(format!("{what} '{v}' is not a valid number"));
        match key.trim() {
            "scenario" => self.scenario = v.to_string(),
            "grid" => self.grid = Some(GridSpec::parse(v)?),
            "ebn0_grid" => self.ebn0_grid = Some(GridSpec::parse(v)?),
            "mc.n" | "mc_n" => {
                self.mc_n = v.parse().map_err(|_| num("mc.n"))?;
                if self.mc_n < 2 {
                    return Err(CliError::Usage("mc.n must be at least 2".into()));
                }
            }
            "mc.seed" | "seed" => self.seed = v.parse().map_err(|_| num("seed"))?,
            "tol" | "quadrature.tol" => {
                self.tol = v.parse().map_err(|_| num("tol"))?;
                if !(self.tol > 0.0 && self.tol < 1.0) {
                    return Err(CliError::Usage("tol must lie in (0, 1)".into()));
                }
            }
            "out" => self.out = Some(PathBuf::from(v)),
            k => return Err(CliError::Usage(format!("unknown config key '{k}'"))),
        }
        Ok(())
    }

    pub fn parse_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn load(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        self.parse_text(&text)
    }
}
