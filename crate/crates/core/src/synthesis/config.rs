use serde::{Deserialize, Serialize};

use super::spg::SpgOptions;
use crate::dynamics::Population;
use crate::error::{Error, Result};
use crate::reach::ReachConfig;

/// Settings of the inner optimizer and the outer verification loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Sharpness of the smooth robustness, one value per continuation stage.
    pub beta_schedule: Vec<f64>,
    /// Constraint-violation penalty weight, one value per continuation stage.
    pub penalty_schedule: Vec<f64>,
    /// Gradient iterations per continuation stage.
    pub max_inner_iterations: usize,
    pub step_min: f64,
    pub step_max: f64,
    pub armijo: f64,
    pub nonmonotone_memory: usize,
    pub gradient_tolerance: f64,
    /// Slack (millions) allowed below the robustness target when declaring feasibility.
    pub feasibility_tolerance: f64,
    /// Extra solves at the last stage that shift the target by the remaining shortfall.
    pub polish_rounds: usize,
    /// Outer-iteration cap.
    pub iter_max: usize,
    pub restarts: usize,
    /// Random restarts start uniformly in `[0, restart_scale * u_max]`.
    pub restart_scale: f64,
    /// Population treatment inside the optimizer only.
    pub population: Population,
    /// When the zero control is not certified, start from the cheapest control whose
    /// nominal trajectory satisfies the formula.
    pub warm_start: bool,
    pub reach: ReachConfig,
    /// Monte-Carlo trajectories drawn when verifying.
    pub samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            beta_schedule: vec![100.0, 300.0, 1e3, 3e3, 1e4, 3e4, 1e5],
            penalty_schedule: vec![1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8],
            max_inner_iterations: 400,
            step_min: 1e-12,
            step_max: 1e12,
            armijo: 1e-4,
            nonmonotone_memory: 8,
            gradient_tolerance: 1e-9,
            feasibility_tolerance: 1e-6,
            polish_rounds: 6,
            iter_max: 100,
            restarts: 4,
            restart_scale: 0.05,
            population: Population::Recomputed,
            warm_start: true,
            reach: ReachConfig::default(),
            samples: 500,
        }
    }
}

fn increasing(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Invalid(format!("{name} must not be empty")));
    }
    if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Invalid(format!("{name} entries must be positive")));
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid(format!(
            "{name} must be strictly increasing"
        )));
    }
    Ok(())
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        increasing("beta_schedule", &self.beta_schedule)?;
        increasing("penalty_schedule", &self.penalty_schedule)?;
        if self.iter_max < 1 {
            return Err(Error::Invalid("iter_max must be at least 1".into()));
        }
        if self.restarts < 1 {
            return Err(Error::Invalid("restarts must be at least 1".into()));
        }
        if !(self.feasibility_tolerance >= 0.0) {
            return Err(Error::Invalid("feasibility_tolerance must be >= 0".into()));
        }
        if !(self.restart_scale >= 0.0 && self.restart_scale <= 1.0) {
            return Err(Error::Invalid("restart_scale must lie in [0, 1]".into()));
        }
        if self.samples < 1 {
            return Err(Error::Invalid("samples must be at least 1".into()));
        }
        if self.reach.pieces < 1 {
            return Err(Error::Invalid("reach pieces must be at least 1".into()));
        }
        Ok(())
    }

    pub fn stages(&self) -> usize {
        self.beta_schedule.len().max(self.penalty_schedule.len())
    }

    /// `(beta, penalty)` of stage `s`; a shorter schedule repeats its last entry.
    pub fn stage(&self, s: usize) -> (f64, f64) {
        let b = self.beta_schedule[s.min(self.beta_schedule.len() - 1)];
        let w = self.penalty_schedule[s.min(self.penalty_schedule.len() - 1)];
        (b, w)
    }

    pub(crate) fn spg(&self) -> SpgOptions {
        SpgOptions {
            max_iterations: self.max_inner_iterations,
            step_min: self.step_min,
            step_max: self.step_max,
            armijo: self.armijo,
            memory: self.nonmonotone_memory,
            tolerance: self.gradient_tolerance,
        }
    }
}
