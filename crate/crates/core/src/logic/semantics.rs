//! Boolean, quantitative and interval semantics.
//!
//! All three share one bottom-up evaluation over whole signals: every subformula is
//! evaluated at each index where its horizon still fits, so each node is visited once.

use serde::{Deserialize, Serialize};

use super::formula::{Formula, Predicate, Relation};
use crate::error::{Error, Result};
use crate::trajectory::{IntervalTrajectory, State, Trajectory};

/// Bracket `[lo, hi]` on the robustness of every trajectory inside an interval trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessInterval {
    pub lo: f64,
    pub hi: f64,
}

impl RobustnessInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Value domain of a semantics: a lattice with an involutive negation.
trait Lattice: Copy {
    const TOP: Self;
    fn meet(self, other: Self) -> Self;
    fn join(self, other: Self) -> Self;
    fn negate(self) -> Self;
}

impl Lattice for bool {
    const TOP: bool = true;
    fn meet(self, other: bool) -> bool {
        self && other
    }
    fn join(self, other: bool) -> bool {
        self || other
    }
    fn negate(self) -> bool {
        !self
    }
}

impl Lattice for f64 {
    const TOP: f64 = f64::INFINITY;
    fn meet(self, other: f64) -> f64 {
        self.min(other)
    }
    fn join(self, other: f64) -> f64 {
        self.max(other)
    }
    fn negate(self) -> f64 {
        -self
    }
}

impl Lattice for RobustnessInterval {
    const TOP: RobustnessInterval = RobustnessInterval {
        lo: f64::INFINITY,
        hi: f64::INFINITY,
    };
    fn meet(self, o: Self) -> Self {
        RobustnessInterval {
            lo: self.lo.min(o.lo),
            hi: self.hi.min(o.hi),
        }
    }
    fn join(self, o: Self) -> Self {
        RobustnessInterval {
            lo: self.lo.max(o.lo),
            hi: self.hi.max(o.hi),
        }
    }
    fn negate(self) -> Self {
        RobustnessInterval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

/// Values of `f` at indices `0..n`; the caller guarantees `n + horizon(f) <= len`.
fn signal<V: Lattice>(f: &Formula, n: usize, leaf: &dyn Fn(&Predicate, usize) -> V) -> Vec<V> {
    match f {
        Formula::True => vec![V::TOP; n],
        Formula::Atom(p) => (0..n).map(|k| leaf(p, k)).collect(),
        Formula::Not(c) => signal(c, n, leaf).into_iter().map(V::negate).collect(),
        Formula::And(a, b) | Formula::Or(a, b) => {
            let is_and = matches!(f, Formula::And(..));
            let sa = signal(a, n, leaf);
            let sb = signal(b, n, leaf);
            sa.into_iter()
                .zip(sb)
                .map(|(x, y)| if is_and { x.meet(y) } else { x.join(y) })
                .collect()
        }
        Formula::Eventually { child, window } | Formula::Always { child, window } => {
            let is_always = matches!(f, Formula::Always { .. });
            let sc = signal(child, n + window.end, leaf);
            (0..n)
                .map(|k| {
                    let mut acc = sc[k + window.start];
                    for &v in &sc[k + window.start + 1..=k + window.end] {
                        acc = if is_always { acc.meet(v) } else { acc.join(v) };
                    }
                    acc
                })
                .collect()
        }
        Formula::Until { lhs, rhs, window } => {
            // lhs is read on [k, k'), which is empty for every k when the window ends at 0
            let sl = if window.end > 0 {
                signal(lhs, n + window.end - 1, leaf)
            } else {
                Vec::new()
            };
            let sr = signal(rhs, n + window.end, leaf);
            (0..n)
                .map(|k| {
                    // prefix = conjunction of lhs over [k, k')
                    let mut prefix = V::TOP;
                    for kk in k..k + window.start {
                        prefix = prefix.meet(sl[kk]);
                    }
                    let mut acc: Option<V> = None;
                    for kp in k + window.start..=k + window.end {
                        let term = sr[kp].meet(prefix);
                        acc = Some(match acc {
                            None => term,
                            Some(a) => a.join(term),
                        });
                        if kp < k + window.end {
                            prefix = prefix.meet(sl[kp]);
                        }
                    }
                    acc.expect("window is nonempty")
                })
                .collect()
        }
    }
}

fn check_fit(f: &Formula, k: usize, len: usize) -> Result<()> {
    let needed = k + f.horizon();
    if needed >= len {
        return Err(Error::HorizonOverflow { needed, len });
    }
    Ok(())
}

fn eval_at<V: Lattice>(
    f: &Formula,
    k: usize,
    len: usize,
    leaf: &dyn Fn(&Predicate, usize) -> V,
) -> Result<V> {
    check_fit(f, k, len)?;
    let shifted = |p: &Predicate, i: usize| leaf(p, i + k);
    Ok(signal(f, 1, &shifted)[0])
}

/// Boolean satisfaction of `f` by `traj` at index `k`.
pub fn eval_boolean(traj: &Trajectory, f: &Formula, k: usize) -> Result<bool> {
    let states = &traj.states;
    eval_at(f, k, states.len(), &|p, i| p.holds(states[i][p.coord]))
}

/// Robustness degree of `traj` with respect to `f` at index `k`.
pub fn robustness(traj: &Trajectory, f: &Formula, k: usize) -> Result<f64> {
    let states = &traj.states;
    eval_at(f, k, states.len(), &|p, i| p.robustness(states[i][p.coord]))
}

/// Robustness at every index where the formula fits, i.e. `0..len - horizon`.
pub fn robustness_signal(traj: &Trajectory, f: &Formula) -> Result<Vec<f64>> {
    check_fit(f, 0, traj.len())?;
    let states = &traj.states;
    let n = states.len() - f.horizon();
    Ok(signal(f, n, &|p, i| p.robustness(states[i][p.coord])))
}

fn atom_interval(p: &Predicate, lo: &State, hi: &State) -> RobustnessInterval {
    let (l, h) = (lo[p.coord], hi[p.coord]);
    match p.relation {
        Relation::Le => RobustnessInterval {
            lo: p.threshold - h,
            hi: p.threshold - l,
        },
        Relation::Ge => RobustnessInterval {
            lo: l - p.threshold,
            hi: h - p.threshold,
        },
    }
}

/// Interval recursion of the robust semantics over the boxes of `xi`.
///
/// `lo` never exceeds the robustness of any trajectory selected from the boxes, and
/// `hi` never falls below it.
pub fn interval_robustness(
    xi: &IntervalTrajectory,
    f: &Formula,
    k: usize,
) -> Result<RobustnessInterval> {
    xi.validate()?;
    let (lo, hi) = (&xi.lower.states, &xi.upper.states);
    eval_at(f, k, xi.len(), &|p, i| atom_interval(p, &lo[i], &hi[i]))
}
