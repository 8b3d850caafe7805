//! State vectors and (interval) trajectories sampled once per step.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of compartments in the state vector.
pub const DIM: usize = 5;

/// Compartment names in state-vector order.
pub const COMPARTMENTS: [&str; DIM] = ["I", "E", "S", "R", "D"];

pub const I: usize = 0;
pub const E: usize = 1;
pub const S: usize = 2;
pub const R: usize = 3;
pub const D: usize = 4;

/// Looks up a compartment index by its one-letter name.
pub fn compartment_index(name: &str) -> Option<usize> {
    COMPARTMENTS.iter().position(|c| *c == name)
}

/// Population state `[I, E, S, R, D]`, in millions of persons.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct State(pub [f64; DIM]);

impl State {
    pub fn new(i: f64, e: f64, s: f64, r: f64, d: f64) -> Self {
        State([i, e, s, r, d])
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn as_array(&self) -> &[f64; DIM] {
        &self.0
    }
}

impl Index<usize> for State {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for State {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// A discrete-time trajectory; `states[k]` is the state at time index `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<State>,
    /// Sample period in days.
    pub step: f64,
}

impl Trajectory {
    pub fn new(states: Vec<State>, step: f64) -> Self {
        Trajectory { states, step }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// The suffix starting at index `k`.
    pub fn suffix(&self, k: usize) -> Trajectory {
        Trajectory::new(self.states[k.min(self.len())..].to_vec(), self.step)
    }

    pub fn column(&self, coord: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[coord]).collect()
    }
}

/// Per-step state boxes `[lower_k, upper_k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalTrajectory {
    pub lower: Trajectory,
    pub upper: Trajectory,
}

impl IntervalTrajectory {
    /// Checks that both bounds have the same shape and `lower <= upper` everywhere.
    pub fn new(lower: Trajectory, upper: Trajectory) -> Result<Self> {
        if lower.len() != upper.len() || lower.step != upper.step {
            return Err(Error::Invalid(format!(
                "interval trajectory bounds disagree: {} vs {} samples",
                lower.len(),
                upper.len()
            )));
        }
        let it = IntervalTrajectory { lower, upper };
        it.validate()?;
        Ok(it)
    }

    /// Degenerate interval trajectory around a single trajectory.
    pub fn point(traj: &Trajectory) -> Self {
        IntervalTrajectory {
            lower: traj.clone(),
            upper: traj.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, (lo, hi)) in self.lower.states.iter().zip(&self.upper.states).enumerate() {
            for c in 0..DIM {
                if !(lo[c] <= hi[c]) {
                    return Err(Error::MalformedInterval {
                        index: k,
                        coord: c,
                        lo: lo[c],
                        hi: hi[c],
                    });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// Whether `traj` lies inside the boxes at every index, up to `tol`.
    pub fn contains(&self, traj: &Trajectory, tol: f64) -> bool {
        traj.len() <= self.len()
            && traj.states.iter().enumerate().all(|(k, x)| {
                (0..DIM).all(|c| {
                    self.lower.states[k][c] - tol <= x[c] && x[c] <= self.upper.states[k][c] + tol
                })
            })
    }
}
