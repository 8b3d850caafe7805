//! Minimum-effort control for the nominal trajectory under a robustness target.
//!
//! Controls are normalized to `v = u / u_max` in the unit box. The objective
//! `|v|^2 + w * max(0, target - smooth_robustness)^2` is minimized by spectral
//! projected gradient, sweeping the sharpness and the penalty weight upward. Final
//! rounds shift the target by the exact-robustness shortfall.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spg::minimize;
use super::Scenario;
use crate::dynamics::{control_effort, Model, ModelParams};
use crate::error::{Error, Result};
use crate::logic::{robustness, smooth_robustness};
use crate::trajectory::{State, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerStatus {
    Feasible,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerResult {
    pub u: Vec<f64>,
    pub status: InnerStatus,
    /// Exact robustness of the nominal trajectory at index 0.
    pub robustness: f64,
    pub effort: f64,
    /// Index of the restart that produced `u`.
    pub restart: usize,
}

struct Nominal<'a> {
    scenario: &'a Scenario,
    model: Model,
    x0: State,
    params: ModelParams,
}

impl Nominal<'_> {
    fn controls(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|x| x * self.scenario.u_max).collect()
    }

    fn trajectory(&self, u: &[f64]) -> Result<Trajectory> {
        Ok(self
            .model
            .simulate(&self.x0, u, &self.params, self.scenario.horizon)?
            .trajectory)
    }

    /// Exact nominal robustness; controls that leave the model domain score `-inf`.
    fn exact(&self, v: &[f64]) -> Result<f64> {
        match self.trajectory(&self.controls(v)) {
            Ok(traj) => robustness(&traj, &self.scenario.formula, 0),
            Err(Error::ModelDomain { .. } | Error::NonFinite { .. }) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    }

    /// Penalized objective and its gradient in normalized coordinates.
    fn objective(&self, v: &[f64], beta: f64, weight: f64, target: f64) -> Result<(f64, Vec<f64>)> {
        let u = self.controls(v);
        let traj = match self.trajectory(&u) {
            Ok(t) => t,
            // leaving the model domain makes the trial point unacceptable
            Err(Error::ModelDomain { .. } | Error::NonFinite { .. }) => {
                return Ok((f64::INFINITY, vec![0.0; v.len()]))
            }
            Err(e) => return Err(e),
        };
        let s = smooth_robustness(&traj, &self.scenario.formula, 0, beta)?;
        let effort: f64 = v.iter().map(|x| x * x).sum();
        let viol = (target - s.value).max(0.0);
        let mut grad: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
        if viol > 0.0 {
            let dr = self
                .model
                .control_gradient(&traj, &u, &self.params, &s.gradient)?;
            let scale = 2.0 * weight * viol * self.scenario.u_max;
            for (g, d) in grad.iter_mut().zip(&dr) {
                *g -= scale * d;
            }
        }
        let value = effort + weight * viol * viol;
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Solver(format!(
                "non-finite objective {value} at iterate with effort {}",
                control_effort(&u)
            )));
        }
        Ok((value, grad))
    }

    fn run(&self, delta: f64, start: Vec<f64>) -> Result<Vec<f64>> {
        let cfg = &self.scenario.solver;
        let spg = cfg.spg();
        let mut v = start;
        for s in 0..cfg.stages() {
            let (beta, weight) = cfg.stage(s);
            v = minimize(|x| self.objective(x, beta, weight, delta), &v, &spg)?.x;
        }
        let (beta, weight) = cfg.stage(cfg.stages() - 1);
        let mut shift = 0.0;
        for _ in 0..cfg.polish_rounds {
            let rho = self.exact(&v)?;
            if rho >= delta {
                break;
            }
            shift += delta - rho + 0.1 * cfg.feasibility_tolerance;
            v = minimize(|x| self.objective(x, beta, weight, delta + shift), &v, &spg)?.x;
        }
        Ok(v)
    }
}

/// Solves the nominal minimum-effort problem with target `delta`, starting restart 0
/// from the zero control.
pub fn solve_inner(scenario: &Scenario, delta: f64) -> Result<InnerResult> {
    solve_inner_from(scenario, delta, &vec![0.0; scenario.horizon])
}

/// As [`solve_inner`], with restart 0 starting from `init` (clamped to `[0, u_max]`).
pub fn solve_inner_from(scenario: &Scenario, delta: f64, init: &[f64]) -> Result<InnerResult> {
    if !delta.is_finite() {
        return Err(Error::Invalid(format!(
            "robustness target must be finite, got {delta}"
        )));
    }
    let cfg = &scenario.solver;
    let t = scenario.horizon;
    if init.len() < t {
        return Err(Error::Invalid(format!(
            "initial control has {} values, horizon is {t}",
            init.len()
        )));
    }
    let nominal = Nominal {
        scenario,
        model: scenario.model.with_population(cfg.population),
        x0: scenario.x0.midpoint(),
        params: scenario.theta.midpoint(),
    };
    let start0: Vec<f64> = init[..t]
        .iter()
        .map(|u| (u / scenario.u_max).clamp(0.0, 1.0))
        .collect();

    let candidates: Vec<(usize, Vec<f64>, f64)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                start0.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
                rng.set_stream(r as u64);
                (0..t)
                    .map(|_| cfg.restart_scale * rng.gen::<f64>())
                    .collect()
            };
            let v = nominal.run(delta, start)?;
            let rho = nominal.exact(&v)?;
            Ok((r, v, rho))
        })
        .collect::<Result<_>>()?;

    let feasible = |rho: f64| rho >= delta - cfg.feasibility_tolerance;
    let best = candidates
        .iter()
        .filter(|c| feasible(c.2))
        .min_by(|a, b| {
            control_effort(&a.1)
                .total_cmp(&control_effort(&b.1))
                .then(a.0.cmp(&b.0))
        })
        .or_else(|| {
            candidates
                .iter()
                .max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.cmp(&a.0)))
        })
        .expect("at least one restart");

    let u = nominal.controls(&best.1);
    Ok(InnerResult {
        effort: control_effort(&u),
        u,
        status: if feasible(best.2) {
            InnerStatus::Feasible
        } else {
            InnerStatus::Infeasible
        },
        robustness: best.2,
        restart: best.0,
    })
}
