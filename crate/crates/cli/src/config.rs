//! Run configuration: TOML file, then command-line overrides, then defaults.

use std::path::{Path, PathBuf};

use firmcomp::scenarios::grid;
use firmcomp::solver::NashSettings;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A grid written either as an explicit list or as `{ start, stop, step }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl GridSpec {
    pub fn range(start: f64, stop: f64, step: f64) -> Self {
        GridSpec::Range { start, stop, step }
    }

    pub fn values(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let values = match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Range { start, stop, step } => {
                if !(step.is_finite() && *step > 0.0 && start.is_finite() && stop >= start) {
                    return Err(CliError::Config(format!(
                        "grid `{name}`: need step > 0 and stop >= start, got {start}:{stop}:{step}"
                    )));
                }
                grid(*start, *stop, *step)
            }
        };
        if values.is_empty() {
            return Err(CliError::Config(format!("grid `{name}` is empty")));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Config(format!("grid `{name}` contains {bad}")));
        }
        Ok(values)
    }

    /// Parses `start:stop:step` or `v1,v2,...`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
        if text.contains(':') {
            let parts: Vec<&str> = text.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("expected start:stop:step, got `{text}`"));
            }
            Ok(GridSpec::range(num(parts[0])?, num(parts[1])?, num(parts[2])?))
        } else {
            text.split(',').map(num).collect::<Result<_, _>>().map(GridSpec::List)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    /// Consumer quality sensitivity for single-population commands.
    pub alpha: f64,
    /// Maximal price. When absent, the acceptance figures use 2 and
    /// everything else uses 1.
    pub p_max: Option<f64>,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        Self { alpha: 2.0, p_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub oscillation_window: usize,
    pub residual_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = NashSettings::default();
        Self {
            damping: s.damping,
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            oscillation_window: s.oscillation_window,
            residual_tolerance: s.residual_tolerance,
        }
    }
}

impl SolverConfig {
    pub fn settings(&self) -> Result<NashSettings, CliError> {
        let s = NashSettings {
            damping: self.damping,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            oscillation_window: self.oscillation_window,
            residual_tolerance: self.residual_tolerance,
        };
        s.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Alpha sweep for figures 2, 3 and 5b.
    pub alpha: GridSpec,
    pub tau: GridSpec,
    pub lambda: GridSpec,
    pub eta: GridSpec,
    /// Firm counts for figure 2.
    pub n: Vec<u64>,
    /// Alpha values for figure 6.
    pub efficiency_alphas: Vec<f64>,
    /// Alpha values for the curves of figure 1.
    pub acceptance_alphas: Vec<f64>,
    /// Perception noise values for figure 7.
    pub sigma: Vec<f64>,
    /// Alpha-model curves overlaid on figure 7.
    pub overlay_alphas: Vec<f64>,
    /// Points per curve in figures 1 and 7.
    pub curve_points: usize,
    /// Small-firm weight used for the limit panel of figure 5.
    pub small_lambda: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            alpha: GridSpec::range(0.0, 10.0, 0.05),
            tau: GridSpec::range(0.0, 1.5, 0.005),
            lambda: GridSpec::range(0.01, 0.99, 0.01),
            eta: GridSpec::range(0.6, 1.0, 0.01),
            n: vec![2, 3, 5, 10],
            efficiency_alphas: vec![1.0, 2.0, 4.0],
            acceptance_alphas: vec![0.5, 1.0, 2.0, 4.0, 10.0],
            sigma: vec![0.05, 0.1, 0.2, 0.5],
            overlay_alphas: vec![2.0, 4.0, 10.0],
            curve_points: 201,
            small_lambda: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub num_consumers: u64,
    pub seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self { num_consumers: 1_000_000, seed: 1 }
    }
}

/// One firm of an explicit market. Offers are optional for `nash`, where
/// they only seed the iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirmConfig {
    pub quality: Option<f64>,
    pub price: Option<f64>,
    #[serde(default = "one")]
    pub size_weight: f64,
    #[serde(default = "one")]
    pub efficiency: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("output") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub population: PopulationConfig,
    pub solver: SolverConfig,
    pub grids: GridConfig,
    pub montecarlo: MonteCarloConfig,
    /// Explicit market for `nash` and `simulate`; empty means symmetric
    /// standard firms (see `symmetric_firms`).
    pub firms: Vec<FirmConfig>,
    /// Firm count used when `firms` is empty.
    pub symmetric_firms: usize,
    pub output: OutputConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            population: PopulationConfig::default(),
            solver: SolverConfig::default(),
            grids: GridConfig::default(),
            montecarlo: MonteCarloConfig::default(),
            firms: Vec::new(),
            symmetric_firms: 2,
            output: OutputConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }

    pub fn p_max_or(&self, fallback: f64) -> f64 {
        self.population.p_max.unwrap_or(fallback)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        self.solver.settings()?;
        for (name, g) in [
            ("alpha", &self.grids.alpha),
            ("tau", &self.grids.tau),
            ("lambda", &self.grids.lambda),
            ("eta", &self.grids.eta),
        ] {
            g.values(name)?;
        }
        for (name, v) in [
            ("efficiency_alphas", &self.grids.efficiency_alphas),
            ("acceptance_alphas", &self.grids.acceptance_alphas),
            ("sigma", &self.grids.sigma),
            ("overlay_alphas", &self.grids.overlay_alphas),
        ] {
            if v.is_empty() {
                return bad(format!("grid `{name}` is empty"));
            }
        }
        if self.grids.n.is_empty() || self.grids.n.iter().any(|&n| n < 2) {
            return bad("grid `n` must be non-empty with every n >= 2".into());
        }
        if self.grids.curve_points < 2 {
            return bad("`curve_points` must be at least 2".into());
        }
        if !(self.grids.small_lambda > 0.0 && self.grids.small_lambda < 0.5) {
            return bad(format!("`small_lambda` must lie in (0, 0.5), got {}", self.grids.small_lambda));
        }
        if self.montecarlo.num_consumers == 0 {
            return bad("`num_consumers` must be at least 1".into());
        }
        if self.firms.is_empty() && self.symmetric_firms == 0 {
            return bad("`symmetric_firms` must be at least 1".into());
        }
        Ok(())
    }
}
