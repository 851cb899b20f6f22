//! Experiment configuration read from JSON.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::bb::SolveOptions;
use crate::branching::BranchOrder;
use crate::error::{Error, Result};
use crate::heuristics::HeuristicConfig;
use crate::penalty::{MinimizerOptions, Mixture};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureConfig {
    pub indices: Vec<usize>,
    pub target: f64,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        MixtureConfig {
            indices: Vec::new(),
            target: 100.0,
        }
    }
}

impl From<MixtureConfig> for Mixture {
    fn from(m: MixtureConfig) -> Self {
        Mixture {
            indices: m.indices,
            target: m.target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub model_path: Option<PathBuf>,
    pub data_path: Option<PathBuf>,
    /// Penalty weight.
    pub lambda: f64,
    /// Number of principal loadings kept; required when data is given.
    pub rank: Option<usize>,
    pub mixture: Option<MixtureConfig>,
    /// Trees per root block; `None` picks a size from the tree count.
    pub subset_size: Option<usize>,
    pub lookahead: usize,
    /// Seconds per partition refinement.
    pub refine_limit: f64,
    pub gap_tol: f64,
    /// Seconds.
    pub time_limit: Option<f64>,
    pub node_limit: Option<usize>,
    pub seed: u64,
    pub branch_order: BranchOrder,
    pub threads: Option<usize>,
    pub stationarity_tol: f64,
    pub bound_back_off: f64,
    pub heuristics: HeuristicConfig,
    pub log_csv: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let m = MinimizerOptions::default();
        SolverConfig {
            model_path: None,
            data_path: None,
            lambda: 1.0,
            rank: None,
            mixture: None,
            subset_size: None,
            lookahead: 100,
            refine_limit: 120.0,
            gap_tol: 1e-6,
            time_limit: None,
            node_limit: None,
            seed: 0,
            branch_order: BranchOrder::Weight,
            threads: None,
            stationarity_tol: m.stationarity_tol,
            bound_back_off: m.back_off,
            heuristics: HeuristicConfig::default(),
            log_csv: None,
            report_path: None,
        }
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be a finite non-negative number, got {v}")))
    }
}

impl SolverConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let c: SolverConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks ranges that do not depend on the model. The rank is checked
    /// against the variable count when the penalty is fitted.
    pub fn validate(&self) -> Result<()> {
        non_negative("lambda", self.lambda)?;
        non_negative("refine_limit", self.refine_limit)?;
        non_negative("gap_tol", self.gap_tol)?;
        if let Some(t) = self.time_limit {
            non_negative("time_limit", t)?;
        }
        if !(self.stationarity_tol > 0.0 && self.bound_back_off > 0.0) {
            return Err(Error::Config("minimizer tolerances must be positive".into()));
        }
        if self.rank == Some(0) {
            return Err(Error::Config("rank must be at least 1".into()));
        }
        if self.subset_size == Some(0) {
            return Err(Error::Config("subset_size must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if let Some(m) = &self.mixture {
            if !m.target.is_finite() {
                return Err(Error::Config("mixture target must be finite".into()));
            }
        }
        self.heuristics.validate()
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            subset_size: self.subset_size,
            lookahead: self.lookahead,
            refine_limit: Duration::from_secs_f64(self.refine_limit),
            gap_tol: self.gap_tol,
            time_limit: self.time_limit.map(Duration::from_secs_f64),
            node_limit: self.node_limit,
            branch_order: self.branch_order,
            threads: self.threads,
            minimizer: MinimizerOptions {
                stationarity_tol: self.stationarity_tol,
                back_off: self.bound_back_off,
                ..MinimizerOptions::default()
            },
            ..SolveOptions::default()
        }
    }
}
