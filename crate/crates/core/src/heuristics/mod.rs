//! Upper-bound heuristics: incremental sub-ensemble solving, particle swarm
//! optimization and simulated annealing.

mod incremental;
mod pso;
mod sa;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use incremental::{incremental_minlp, select_next, IncrementalConfig, Strategy};
pub use pso::{pso, PsoConfig};
pub use sa::{simulated_annealing, SaConfig};

/// Objective value after one heuristic iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iter: usize,
    pub wall_ms: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub trace: Vec<TracePoint>,
}

/// Settings of all three heuristics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeuristicConfig {
    pub incremental: IncrementalConfig,
    pub pso: PsoConfig,
    pub sa: SaConfig,
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<()> {
        let c = &self.incremental;
        if c.step == 0 {
            return Err(Error::Config("incremental step must be at least 1".into()));
        }
        let p = &self.pso;
        if !(p.omega >= 0.0 && p.c1 >= 0.0 && p.c2 >= 0.0) {
            return Err(Error::Config("pso weights must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&p.h) {
            return Err(Error::Config("pso projection mix h must lie in [0, 1]".into()));
        }
        if p.particles == 0 {
            return Err(Error::Config("pso needs at least one particle".into()));
        }
        let s = &self.sa;
        if !(0.80..=0.99).contains(&s.alpha) {
            return Err(Error::Config("sa cooling factor must lie in [0.80, 0.99]".into()));
        }
        if !(s.t0 > 0.0 && s.epsilon > 0.0 && s.prob_const > 0.0 && s.step_scale > 0.0) {
            return Err(Error::Config("sa temperatures, constant and step must be positive".into()));
        }
        Ok(())
    }
}

fn clip(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
}
