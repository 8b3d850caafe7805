//! Differentiable surrogate of the robust semantics.
//!
//! Every min is replaced by `softmin(v; β) = -(1/β) ln Σ exp(-β v_j)` and every max by
//! its dual. Chains of `&` (or `|`) are flattened into one aggregation. Both are
//! computed with a max shift, so large `β` never overflows.

use super::formula::Formula;
use crate::error::{Error, Result};
use crate::trajectory::{Trajectory, DIM};

/// `(1/β) ln Σ exp(β v_j)`, an upper approximation of `max v` within `ln(m)/β`.
pub fn softmax(values: &[f64], beta: f64) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = values.iter().map(|&v| (beta * (v - m)).exp()).sum();
    m + s.ln() / beta
}

/// `-(1/β) ln Σ exp(-β v_j)`, a lower approximation of `min v` within `ln(m)/β`.
pub fn softmin(values: &[f64], beta: f64) -> f64 {
    let m = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = values.iter().map(|&v| (-beta * (v - m)).exp()).sum();
    m - s.ln() / beta
}

/// Smooth robustness value and its gradient with respect to every trajectory entry.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothRobustness {
    pub value: f64,
    /// `gradient[k][i]` is the derivative with respect to `traj.states[k][i]`.
    pub gradient: Vec<[f64; DIM]>,
}

struct Node {
    value: f64,
    grad: Vec<(usize, usize, f64)>,
}

fn aggregate(children: Vec<Node>, beta: f64, is_min: bool) -> Node {
    let sign = if is_min { -1.0 } else { 1.0 };
    let m = children
        .iter()
        .map(|c| sign * c.value)
        .fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Node {
            value: sign * m,
            grad: Vec::new(),
        };
    }
    let e: Vec<f64> = children
        .iter()
        .map(|c| (beta * (sign * c.value - m)).exp())
        .collect();
    let total: f64 = e.iter().sum();
    let mut grad = Vec::new();
    for (c, w) in children.into_iter().zip(&e) {
        let w = w / total;
        if w == 0.0 {
            continue;
        }
        grad.extend(c.grad.into_iter().map(|(k, i, g)| (k, i, g * w)));
    }
    Node {
        value: sign * (m + total.ln() / beta),
        grad,
    }
}

fn flatten<'a>(f: &'a Formula, want_and: bool, out: &mut Vec<&'a Formula>) {
    match f {
        Formula::And(a, b) if want_and => {
            flatten(a, true, out);
            flatten(b, true, out);
        }
        Formula::Or(a, b) if !want_and => {
            flatten(a, false, out);
            flatten(b, false, out);
        }
        other => out.push(other),
    }
}

fn eval(traj: &Trajectory, f: &Formula, k: usize, beta: f64) -> Node {
    match f {
        Formula::True => Node {
            value: f64::INFINITY,
            grad: Vec::new(),
        },
        Formula::Atom(p) => Node {
            value: p.robustness(traj.states[k][p.coord]),
            grad: vec![(k, p.coord, p.robustness(1.0) - p.robustness(0.0))],
        },
        Formula::Not(c) => {
            let n = eval(traj, c, k, beta);
            Node {
                value: -n.value,
                grad: n.grad.into_iter().map(|(k, i, g)| (k, i, -g)).collect(),
            }
        }
        Formula::And(..) | Formula::Or(..) => {
            let is_and = matches!(f, Formula::And(..));
            let mut parts = Vec::new();
            flatten(f, is_and, &mut parts);
            let children = parts.iter().map(|g| eval(traj, g, k, beta)).collect();
            aggregate(children, beta, is_and)
        }
        Formula::Eventually { child, window } | Formula::Always { child, window } => {
            let children = (k + window.start..=k + window.end)
                .map(|kk| eval(traj, child, kk, beta))
                .collect();
            aggregate(children, beta, matches!(f, Formula::Always { .. }))
        }
        Formula::Until { lhs, rhs, window } => {
            let lhs_vals: Vec<Node> = (k..k + window.end)
                .map(|kk| eval(traj, lhs, kk, beta))
                .collect();
            let outer = (k + window.start..=k + window.end)
                .map(|kp| {
                    let mut inner = vec![eval(traj, rhs, kp, beta)];
                    inner.extend(lhs_vals[..kp - k].iter().map(|n| Node {
                        value: n.value,
                        grad: n.grad.clone(),
                    }));
                    aggregate(inner, beta, true)
                })
                .collect();
            aggregate(outer, beta, false)
        }
    }
}

/// Smooth robustness of `traj` for `f` at index `k` with sharpness `beta`.
pub fn smooth_robustness(
    traj: &Trajectory,
    f: &Formula,
    k: usize,
    beta: f64,
) -> Result<SmoothRobustness> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Invalid(format!(
            "sharpness must be positive, got {beta}"
        )));
    }
    let needed = k + f.horizon();
    if needed >= traj.len() {
        return Err(Error::HorizonOverflow {
            needed,
            len: traj.len(),
        });
    }
    let node = eval(traj, f, k, beta);
    let mut gradient = vec![[0.0; DIM]; traj.len()];
    for (kk, i, g) in node.grad {
        gradient[kk][i] += g;
    }
    Ok(SmoothRobustness {
        value: node.value,
        gradient,
    })
}

/// Largest number of operands of any single smoothed min/max in `f`.
pub fn max_arity(f: &Formula) -> usize {
    match f {
        Formula::True | Formula::Atom(_) => 1,
        Formula::Not(c) => max_arity(c),
        Formula::And(..) | Formula::Or(..) => {
            let mut parts = Vec::new();
            flatten(f, matches!(f, Formula::And(..)), &mut parts);
            parts
                .iter()
                .map(|g| max_arity(g))
                .max()
                .unwrap_or(1)
                .max(parts.len())
        }
        Formula::Eventually { child, window } | Formula::Always { child, window } => {
            max_arity(child).max(window.len())
        }
        Formula::Until { lhs, rhs, window } => max_arity(lhs)
            .max(max_arity(rhs))
            .max(window.len())
            .max(window.end + 1),
    }
}

/// Bound on `|smooth - exact|`: the errors of nested aggregations add up along the
/// deepest path, each contributing `ln(arity)/β`.
pub fn smooth_error_bound(f: &Formula, beta: f64) -> f64 {
    let ln = |n: usize| (n as f64).ln() / beta;
    match f {
        Formula::True | Formula::Atom(_) => 0.0,
        Formula::Not(c) => smooth_error_bound(c, beta),
        Formula::And(..) | Formula::Or(..) => {
            let mut parts = Vec::new();
            flatten(f, matches!(f, Formula::And(..)), &mut parts);
            let inner = parts
                .iter()
                .map(|g| smooth_error_bound(g, beta))
                .fold(0.0, f64::max);
            ln(parts.len()) + inner
        }
        Formula::Eventually { child, window } | Formula::Always { child, window } => {
            ln(window.len()) + smooth_error_bound(child, beta)
        }
        Formula::Until { lhs, rhs, window } => {
            let inner = smooth_error_bound(lhs, beta).max(smooth_error_bound(rhs, beta));
            ln(window.len()) + ln(window.end + 1) + inner
        }
    }
}
