//! Robust control synthesis: an outer loop that verifies the interval trajectory and
//! tightens the nominal robustness target until the whole uncertainty set satisfies
//! the formula.

mod config;
mod inner;
pub mod spg;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::SolverConfig;
pub use inner::{solve_inner, solve_inner_from, InnerResult, InnerStatus};

use crate::dynamics::{control_effort, ControlSignal, Model, ParamBox};
use crate::error::{Error, Result};
use crate::logic::{interval_robustness, robustness, Formula, RobustnessInterval};
use crate::reach::{
    delta_profile, nominal_dynamic, nominal_midpoint, propagate, sample_trajectories, StateBox,
};
use crate::trajectory::{IntervalTrajectory, Trajectory};

/// A complete synthesis problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub model: Model,
    pub x0: StateBox,
    pub theta: ParamBox,
    pub formula: Formula,
    /// Number of control days `T`; trajectories have `T + 1` samples.
    pub horizon: usize,
    pub u_max: f64,
    pub solver: SolverConfig,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.x0.validate()?;
        self.theta.validate()?;
        self.solver.validate()?;
        if self.formula.horizon() > self.horizon {
            return Err(Error::Invalid(format!(
                "formula horizon {} exceeds scenario horizon {}",
                self.formula.horizon(),
                self.horizon
            )));
        }
        if !(self.u_max.is_finite() && self.u_max > 0.0) {
            return Err(Error::Invalid(format!(
                "u_max must be positive, got {}",
                self.u_max
            )));
        }
        Ok(())
    }

    pub fn propagate(&self, u: &[f64]) -> Result<IntervalTrajectory> {
        propagate(
            &self.model,
            &self.x0,
            u,
            &self.theta,
            self.horizon,
            &self.solver.reach,
        )
    }

    pub fn nominal(&self, u: &[f64]) -> Result<Trajectory> {
        nominal_dynamic(&self.model, &self.x0, u, &self.theta, self.horizon)
    }

    fn check_control(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.horizon {
            return Err(Error::Invalid(format!(
                "control has {} values, horizon is {}",
                u.len(),
                self.horizon
            )));
        }
        ControlSignal::new(self.model.kind, u.to_vec(), self.u_max).map(|_| ())
    }
}

/// One pass of the outer loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Robustness target of the first solve of the pass (the current `delta_max`).
    pub delta_max_target: f64,
    pub delta_max_status: InnerStatus,
    /// `zeta` after this pass; unchanged when the first solve was feasible.
    pub zeta: f64,
    /// Target of the solve that produced the adopted control.
    pub delta_target: f64,
    pub status: InnerStatus,
    pub nominal_robustness: f64,
    pub effort: f64,
    /// Interval robustness and `delta_max` after adopting the new control.
    pub interval_robustness: RobustnessInterval,
    pub delta_max: f64,
}

/// Initial control used when the zero control is not certified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    pub status: InnerStatus,
    pub nominal_robustness: f64,
    pub effort: f64,
    pub interval_robustness: RobustnessInterval,
    pub delta_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisResult {
    pub u: ControlSignal,
    pub success: bool,
    /// Lower interval robustness of the final control is nonnegative.
    pub certified: bool,
    pub interval_robustness: RobustnessInterval,
    pub delta_max: f64,
    pub control_effort: f64,
    pub iterations: Vec<IterationRecord>,
    pub warm_start: Option<WarmStart>,
    pub interval_trajectory: IntervalTrajectory,
    pub nominal: Trajectory,
}

fn assess(scenario: &Scenario, u: &[f64]) -> Result<(IntervalTrajectory, RobustnessInterval, f64)> {
    let xi = scenario.propagate(u)?;
    let rho = interval_robustness(&xi, &scenario.formula, 0)?;
    let dmax = delta_profile(&xi).delta_max;
    Ok((xi, rho, dmax))
}

/// Runs the outer verification loop starting from the zero control.
pub fn synthesize(scenario: &Scenario) -> Result<SynthesisResult> {
    scenario.validate()?;
    let cfg = &scenario.solver;
    let mut u = vec![0.0; scenario.horizon];
    // an uncontrolled outbreak can widen the enclosure past the model domain; that
    // only means the zero control is not certified
    let zero = match assess(scenario, &u) {
        Err(Error::ModelDomain { .. } | Error::NonFinite { .. }) if cfg.warm_start => None,
        other => Some(other?),
    };
    let certified_at_zero = zero.as_ref().is_some_and(|z| z.1.lo >= 0.0);

    let mut warm_start = None;
    let (mut xi, mut rho, mut dmax);
    if !certified_at_zero && cfg.warm_start {
        let w = solve_inner(scenario, 0.0)?;
        u = w.u;
        (xi, rho, dmax) = assess(scenario, &u)?;
        warm_start = Some(WarmStart {
            status: w.status,
            nominal_robustness: w.robustness,
            effort: w.effort,
            interval_robustness: rho,
            delta_max: dmax,
        });
    } else {
        (xi, rho, dmax) = zero.expect("zero control assessed");
    }

    let mut zeta = 0.0;
    let mut iterations = Vec::new();
    let mut iter = 1;
    while rho.lo < 0.0 && iter < cfg.iter_max {
        let first = solve_inner_from(scenario, dmax, &u)?;
        let delta_max_target = dmax;
        let delta_max_status = first.status;
        let (chosen, target) = if first.status == InnerStatus::Feasible {
            (first, dmax)
        } else {
            zeta -= rho.lo;
            (solve_inner_from(scenario, zeta, &u)?, zeta)
        };
        u = chosen.u;
        (xi, rho, dmax) = assess(scenario, &u)?;
        iterations.push(IterationRecord {
            iteration: iter,
            delta_max_target,
            delta_max_status,
            zeta,
            delta_target: target,
            status: chosen.status,
            nominal_robustness: chosen.robustness,
            effort: chosen.effort,
            interval_robustness: rho,
            delta_max: dmax,
        });
        iter += 1;
    }

    let certified = rho.lo >= 0.0;
    let nominal = scenario.nominal(&u)?;
    Ok(SynthesisResult {
        control_effort: control_effort(&u),
        u: ControlSignal::new(scenario.model.kind, u, scenario.u_max)?,
        success: certified,
        certified,
        interval_robustness: rho,
        delta_max: dmax,
        iterations,
        warm_start,
        interval_trajectory: xi,
        nominal,
    })
}

/// Certification quantities for a given control.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub interval_robustness: RobustnessInterval,
    pub delta_max: f64,
    pub control_effort: f64,
    /// Robustness of the per-index midpoint of the interval trajectory.
    pub midpoint_robustness: f64,
    /// Robustness of the trajectory simulated from the box midpoints.
    pub nominal_robustness: f64,
    pub samples: usize,
    pub sampled_min_robustness: f64,
    pub sampled_max_robustness: f64,
    /// Largest `|rho(sample) - rho(midpoint)|` over the samples.
    pub max_midpoint_deviation: f64,
    /// Samples whose deviation exceeds `delta_max` (plus 1e-9).
    pub deviation_bound_violations: usize,
    /// Samples leaving the interval trajectory (tolerance 1e-9).
    pub containment_violations: usize,
    pub satisfied: bool,
}

/// Recomputes the certificate for `u` and checks it against sampled trajectories.
pub fn verify(scenario: &Scenario, u: &[f64], samples: usize) -> Result<VerifyReport> {
    scenario.validate()?;
    scenario.check_control(u)?;
    let (xi, rho, dmax) = assess(scenario, u)?;
    let f = &scenario.formula;
    let mid = robustness(&nominal_midpoint(&xi), f, 0)?;
    let nominal = robustness(&scenario.nominal(u)?, f, 0)?;
    let trajs = sample_trajectories(
        &scenario.model,
        &scenario.x0,
        u,
        &scenario.theta,
        scenario.horizon,
        samples,
        scenario.seed,
    )?;
    let per_sample: Vec<(f64, bool)> = trajs
        .par_iter()
        .map(|t| Ok((robustness(t, f, 0)?, xi.contains(t, 1e-9))))
        .collect::<Result<_>>()?;
    let values = per_sample.iter().map(|p| p.0);
    let max_dev = values.clone().map(|r| (r - mid).abs()).fold(0.0, f64::max);
    Ok(VerifyReport {
        interval_robustness: rho,
        delta_max: dmax,
        control_effort: control_effort(u),
        midpoint_robustness: mid,
        nominal_robustness: nominal,
        samples,
        sampled_min_robustness: values.clone().fold(f64::INFINITY, f64::min),
        sampled_max_robustness: values.clone().fold(f64::NEG_INFINITY, f64::max),
        max_midpoint_deviation: max_dev,
        deviation_bound_violations: values.filter(|r| (r - mid).abs() > dmax + 1e-9).count(),
        containment_violations: per_sample.iter().filter(|p| !p.1).count(),
        satisfied: rho.lo >= 0.0,
    })
}
