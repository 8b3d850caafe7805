//! Interval reachability: boxes of initial states and parameters pushed through the
//! discrete dynamics, plus the sampling used to check the enclosures.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Model, ModelParams, ParamBox, Population, BETA, LAMBDA, N_PARAMS};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::trajectory::{IntervalTrajectory, State, Trajectory, D, DIM, E, I, R, S};

/// Axis-aligned box of states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateBox {
    pub lower: State,
    pub upper: State,
}

impl StateBox {
    pub fn new(lower: State, upper: State) -> Result<Self> {
        let b = StateBox { lower, upper };
        b.validate()?;
        Ok(b)
    }

    pub fn point(x: State) -> Self {
        StateBox { lower: x, upper: x }
    }

    pub fn from_intervals(iv: &[Interval; DIM]) -> Self {
        StateBox {
            lower: State(iv.map(|v| v.lo)),
            upper: State(iv.map(|v| v.hi)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for c in 0..DIM {
            let (lo, hi) = (self.lower[c], self.upper[c]);
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::MalformedInterval {
                    index: 0,
                    coord: c,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    pub fn intervals(&self) -> [Interval; DIM] {
        std::array::from_fn(|c| Interval::new(self.lower[c], self.upper[c]))
    }

    pub fn midpoint(&self) -> State {
        State(std::array::from_fn(|c| {
            0.5 * (self.lower[c] + self.upper[c])
        }))
    }

    /// The state at relative position `t` (each in `[0, 1]`) inside the box.
    pub fn at(&self, t: [f64; DIM]) -> State {
        State(std::array::from_fn(|c| {
            let (lo, hi) = (self.lower[c], self.upper[c]);
            if lo == hi {
                lo
            } else {
                lo + t[c] * (hi - lo)
            }
        }))
    }

    pub fn contains(&self, x: &State, tol: f64) -> bool {
        (0..DIM).all(|c| self.lower[c] - tol <= x[c] && x[c] <= self.upper[c] + tol)
    }

    pub fn contains_box(&self, other: &StateBox) -> bool {
        (0..DIM).all(|c| self.lower[c] <= other.lower[c] && other.upper[c] <= self.upper[c])
    }

    fn slice(&self, c: usize, a: f64, b: f64) -> StateBox {
        let mut out = *self;
        let (lo, hi) = (self.lower[c], self.upper[c]);
        out.lower[c] = lo + a * (hi - lo);
        if b < 1.0 {
            out.upper[c] = lo + b * (hi - lo);
        }
        out
    }
}

/// Inclusion function used for one interval step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Inclusion {
    /// Interval arithmetic on the update equations, with the infection term bounded
    /// through the signs of its partial derivatives.
    Natural,
    /// Midpoint value plus an interval-Jacobian remainder, intersected with `Natural`.
    Centered,
    /// First-order affine enclosure carried along the whole trajectory; the
    /// linearization error of each step is added as fresh independent noise.
    Affine,
}

impl fmt::Display for Inclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Inclusion::Natural => "natural",
            Inclusion::Centered => "centered",
            Inclusion::Affine => "affine",
        })
    }
}

impl FromStr for Inclusion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "natural" => Ok(Inclusion::Natural),
            "centered" => Ok(Inclusion::Centered),
            "affine" => Ok(Inclusion::Affine),
            other => Err(Error::Invalid(format!("unknown inclusion mode '{other}'"))),
        }
    }
}

/// Number of uncertain coordinates: five states followed by six parameters.
pub const UNCERTAIN_DIMS: usize = DIM + N_PARAMS;

/// Name of an uncertain coordinate, e.g. `I0` or `beta`.
pub fn uncertain_dim_name(k: usize) -> String {
    if k < DIM {
        format!("{}0", crate::trajectory::COMPARTMENTS[k])
    } else {
        crate::dynamics::PARAM_NAMES[k - DIM].to_string()
    }
}

pub fn uncertain_dim_index(name: &str) -> Option<usize> {
    (0..UNCERTAIN_DIMS).find(|&k| uncertain_dim_name(k) == name)
}

/// Reachability settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachConfig {
    pub inclusion: Inclusion,
    /// Uncertain coordinates (see [`uncertain_dim_name`]) split before propagation.
    pub split_dims: Vec<usize>,
    /// Pieces per split coordinate; the results of all sub-boxes are joined.
    pub pieces: usize,
}

impl Default for ReachConfig {
    fn default() -> Self {
        ReachConfig {
            inclusion: Inclusion::Affine,
            split_dims: vec![I, E, DIM + BETA],
            pieces: 4,
        }
    }
}

impl ReachConfig {
    pub fn unsplit(inclusion: Inclusion) -> Self {
        ReachConfig {
            inclusion,
            split_dims: Vec::new(),
            pieces: 1,
        }
    }
}

fn domain_at(err: Error, step: usize) -> Error {
    match err {
        Error::ModelDomain { detail, .. } => Error::ModelDomain { step, detail },
        Error::NonFinite { .. } => Error::NonFinite { step },
        other => other,
    }
}

fn check_finite(b: &[Interval; DIM]) -> Result<()> {
    if b.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { step: 0 })
    }
}

/// Enclosure of the infection flow over a box, using the sign of each partial
/// derivative when it is constant on the box.
fn infection_enclosure(
    model: &Model,
    x: &[Interval; DIM],
    u: f64,
    beta: Interval,
    n0: f64,
) -> Result<Interval> {
    let h = model.infection(x, Interval::point(u), beta, n0)?;
    let vars = [S, E, I, R];
    let mut lo_x = [0.0; DIM];
    let mut hi_x = [0.0; DIM];
    for c in 0..DIM {
        lo_x[c] = x[c].lo;
        hi_x[c] = x[c].hi;
    }
    for &c in &vars {
        let d = h.d_state[c];
        if d.lo >= 0.0 {
        } else if d.hi <= 0.0 {
            std::mem::swap(&mut lo_x[c], &mut hi_x[c]);
        } else {
            return Ok(h.value);
        }
    }
    // d/d beta = S*I/den has the sign of S*I
    let (b_lo, b_hi) = if h.d_beta.lo >= 0.0 {
        (beta.lo, beta.hi)
    } else if h.d_beta.hi <= 0.0 {
        (beta.hi, beta.lo)
    } else {
        return Ok(h.value);
    };
    let lo = model.infection(&lo_x, u, b_lo, n0)?.value;
    let hi = model.infection(&hi_x, u, b_hi, n0)?.value;
    Ok(Interval::new(lo, hi)
        .intersect(&h.value)
        .unwrap_or(Interval::new(lo, hi)))
}

/// One Euler substep of length `dt` in natural interval arithmetic.
fn natural_euler(
    model: &Model,
    x: &[Interval; DIM],
    u: f64,
    th: &[Interval; N_PARAMS],
    n0: f64,
    dt: f64,
) -> Result<[Interval; DIM]> {
    use crate::dynamics::{ALPHA, EPSILON, GAMMA, MU};
    let one = Interval::point(1.0);
    let h = infection_enclosure(model, x, u, th[BETA], n0)?;
    let (v, _) = match model.kind {
        crate::dynamics::ControlKind::Vaccination => (u, 0.0),
        crate::dynamics::ControlKind::Shield => (0.0, u),
    };
    let (alpha, eps, gamma, mu, lam) = (th[ALPHA], th[EPSILON], th[GAMMA], th[MU], th[LAMBDA]);
    let living = x[S] + x[E] + x[I] + x[R];
    let ni = x[I] * (one - (gamma + mu + alpha).scale(dt)) + (eps * x[E]).scale(dt);
    let ne = x[E] * (one - (mu + eps).scale(dt)) + h.scale(dt);
    let ns = match model.population {
        Population::Recomputed => {
            x[S] * (one - mu.scale(dt) + lam.scale(dt)) + (lam * (x[E] + x[I] + x[R])).scale(dt)
        }
        Population::Initial => x[S] * (one - mu.scale(dt)) + lam.scale(dt * n0),
    } - h.scale(dt)
        - Interval::point(dt * v);
    let nr = x[R] * (one - mu.scale(dt)) + (gamma * x[I]).scale(dt) + Interval::point(dt * v);
    let nd = match model.population {
        Population::Recomputed => x[D] + (alpha * x[I] + (mu - lam) * living).scale(dt),
        Population::Initial => x[D] + (alpha * x[I] + mu * living - lam.scale(n0)).scale(dt),
    };
    let mut out = [ni, ne, ns, nr, nd];
    check_finite(&out)?;
    let floor = nonnegative_floor(model, x, v, th, dt);
    for c in 0..DIM {
        if floor[c] <= out[c].hi {
            out[c].lo = out[c].lo.max(floor[c]);
        }
    }
    Ok(out)
}

/// Lower bounds that hold while the box has no negative coordinate: each compartment
/// keeps at least its undecayed share, provided no decay coefficient exceeds one.
/// The infection flow is then at most `beta*S`, since `I` cannot exceed the denominator.
fn nonnegative_floor(
    model: &Model,
    x: &[Interval; DIM],
    v: f64,
    th: &[Interval; N_PARAMS],
    dt: f64,
) -> [f64; DIM] {
    use crate::dynamics::{ALPHA, EPSILON, GAMMA, MU};
    let mut floor = [f64::NEG_INFINITY; DIM];
    if x.iter().any(|c| c.lo < 0.0) || th.iter().any(|p| p.lo < 0.0) {
        return floor;
    }
    let mu = th[MU].hi;
    let keep = |decay: f64| 1.0 - decay * dt;
    let keep_i = keep(th[GAMMA].hi + mu + th[ALPHA].hi);
    if keep_i >= 0.0 {
        floor[I] = keep_i * x[I].lo + dt * th[EPSILON].lo * x[E].lo;
    }
    let keep_e = keep(mu + th[EPSILON].hi);
    if keep_e >= 0.0 {
        floor[E] = keep_e * x[E].lo;
    }
    if keep(mu) >= 0.0 {
        floor[R] = keep(mu) * x[R].lo + dt * (th[GAMMA].lo * x[I].lo + v);
    }
    if model.population == Population::Recomputed {
        // with the birth rate tied to the death rate, D only grows
        if th[MU] == th[LAMBDA] {
            floor[D] = x[D].lo;
        }
        let keep_s = keep(mu + th[BETA].hi);
        if keep_s >= 0.0 {
            floor[S] = keep_s * x[S].lo - dt * v;
        }
    }
    floor
}

fn point_euler(
    model: &Model,
    x: &[f64; DIM],
    u: f64,
    th: &[f64; N_PARAMS],
    n0: f64,
    dt: f64,
) -> Result<[f64; DIM]> {
    let f = model.rates(x, u, th, n0)?;
    Ok(std::array::from_fn(|i| x[i] + dt * f[i]))
}

/// Mean-value enclosure of one Euler substep around the box midpoint.
fn centered_euler(
    model: &Model,
    x: &[Interval; DIM],
    u: f64,
    th: &[Interval; N_PARAMS],
    n0: f64,
    dt: f64,
) -> Result<[Interval; DIM]> {
    let xc: [f64; DIM] = x.map(|v| v.mid());
    let tc: [f64; N_PARAMS] = th.map(|v| v.mid());
    let fc = point_euler(model, &xc, u, &tc, n0, dt)?;
    let j = model.euler_jacobians(x, Interval::point(u), th, n0, dt)?;
    let out: [Interval; DIM] = std::array::from_fn(|i| {
        let mut acc = Interval::point(fc[i]);
        for c in 0..DIM {
            acc = acc + j.fx[i][c] * (x[c] - Interval::point(xc[c]));
        }
        for q in 0..N_PARAMS {
            acc = acc + j.ftheta[i][q] * (th[q] - Interval::point(tc[q]));
        }
        acc
    });
    check_finite(&out)?;
    Ok(out)
}

fn intersect_all(a: &[Interval; DIM], b: &[Interval; DIM]) -> [Interval; DIM] {
    // an empty intersection can only come from rounding; keep the first operand then
    std::array::from_fn(|c| a[c].intersect(&b[c]).unwrap_or(a[c]))
}

/// Tightens a box using the conserved compartment sum `total`.
fn conserve(x: &[Interval; DIM], total: Interval) -> [Interval; DIM] {
    let sum_lo: f64 = x.iter().map(|v| v.lo).sum();
    let sum_hi: f64 = x.iter().map(|v| v.hi).sum();
    std::array::from_fn(|c| {
        let others_lo = sum_lo - x[c].lo;
        let others_hi = sum_hi - x[c].hi;
        let bound = Interval::new(total.lo - others_hi, total.hi - others_lo);
        x[c].intersect(&bound).unwrap_or(x[c])
    })
}

fn conserved_total(x0: &StateBox) -> Interval {
    let lo: f64 = x0.lower.0.iter().sum();
    let hi: f64 = x0.upper.0.iter().sum();
    let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
    Interval::new(lo - slack, hi + slack)
}

/// Box enclosing `step(x, u, theta)` for every `x` in `x` and `theta` in `theta`.
pub fn interval_step(
    model: &Model,
    x: &StateBox,
    u: f64,
    theta: &ParamBox,
    inclusion: Inclusion,
) -> Result<StateBox> {
    x.validate()?;
    let total = conserved_total(x);
    let model = &model.with_conserved_total(total.lo, total.hi);
    match inclusion {
        Inclusion::Natural | Inclusion::Centered => {
            let th = theta.intervals();
            let dt = theta.lower.ts / model.substeps as f64;
            let mut b = x.intervals();
            for _ in 0..model.substeps {
                let nat = natural_euler(model, &b, u, &th, theta.lower.n0, dt)?;
                b = if inclusion == Inclusion::Centered {
                    intersect_all(
                        &nat,
                        &centered_euler(model, &b, u, &th, theta.lower.n0, dt)?,
                    )
                } else {
                    nat
                };
            }
            Ok(StateBox::from_intervals(&b))
        }
        Inclusion::Affine => {
            let xi = affine_propagate(model, x, &[u], theta, 1)?;
            Ok(StateBox {
                lower: xi.lower.states[1],
                upper: xi.upper.states[1],
            })
        }
    }
}

fn box_propagate(
    model: &Model,
    x0: &StateBox,
    u: &[f64],
    theta: &ParamBox,
    steps: usize,
    inclusion: Inclusion,
) -> Result<IntervalTrajectory> {
    let total = conserved_total(x0);
    let model = &model.with_conserved_total(total.lo, total.hi);
    let mut lower = Vec::with_capacity(steps + 1);
    let mut upper = Vec::with_capacity(steps + 1);
    let mut b = *x0;
    lower.push(b.lower);
    upper.push(b.upper);
    for (k, &uk) in u.iter().enumerate().take(steps) {
        let next = interval_step(model, &b, uk, theta, inclusion).map_err(|e| domain_at(e, k))?;
        b = StateBox::from_intervals(&conserve(&next.intervals(), total));
        lower.push(b.lower);
        upper.push(b.upper);
    }
    IntervalTrajectory::new(
        Trajectory::new(lower, theta.lower.ts),
        Trajectory::new(upper, theta.lower.ts),
    )
}

/// Affine form `c + G e` with `e` in the unit box; columns of `G` are stored.
struct AffineState {
    center: [f64; DIM],
    cols: Vec<[f64; DIM]>,
}

impl AffineState {
    fn radius(&self) -> [f64; DIM] {
        let mut r = [0.0; DIM];
        for col in &self.cols {
            for i in 0..DIM {
                r[i] += col[i].abs();
            }
        }
        r
    }
}

fn affine_propagate(
    model: &Model,
    x0: &StateBox,
    u: &[f64],
    theta: &ParamBox,
    steps: usize,
) -> Result<IntervalTrajectory> {
    let n0 = theta.lower.n0;
    let dt = theta.lower.ts / model.substeps as f64;
    let total = conserved_total(x0);
    let model = &model.with_conserved_total(total.lo, total.hi);
    let th_box = theta.intervals();
    let th_c = theta.midpoint().theta();
    let th_r: [f64; N_PARAMS] = std::array::from_fn(|q| th_box[q].max_dev_from(th_c[q]));
    let th_dev: [Interval; N_PARAMS] =
        std::array::from_fn(|q| th_box[q] - Interval::point(th_c[q]));

    let mut aff = AffineState {
        center: x0.midpoint().0,
        cols: (0..DIM)
            .filter(|&c| x0.upper[c] > x0.lower[c])
            .map(|c| {
                let mut col = [0.0; DIM];
                col[c] = 0.5 * (x0.upper[c] - x0.lower[c]);
                col
            })
            .collect(),
    };
    // sensitivity of the state to the normalized parameter deviations
    let mut gth = [[0.0; N_PARAMS]; DIM];

    let mut b = x0.intervals();
    let mut lower = vec![x0.lower];
    let mut upper = vec![x0.upper];
    for (k, &uk) in u.iter().enumerate().take(steps) {
        for _ in 0..model.substeps {
            let mut run = || -> Result<[Interval; DIM]> {
                let nat = natural_euler(model, &b, uk, &th_box, n0, dt)?;
                let c = aff.center;
                let a0 = model.euler_jacobians(&c, uk, &th_c, n0, dt)?;
                let ab = model.euler_jacobians(&b, Interval::point(uk), &th_box, n0, dt)?;
                let dev: [Interval; DIM] = std::array::from_fn(|i| b[i] - Interval::point(c[i]));
                let mut noise = [0.0; DIM];
                for i in 0..DIM {
                    let mut acc = Interval::ZERO;
                    for j in 0..DIM {
                        acc = acc + (ab.fx[i][j] - Interval::point(a0.fx[i][j])) * dev[j];
                    }
                    for q in 0..N_PARAMS {
                        acc =
                            acc + (ab.ftheta[i][q] - Interval::point(a0.ftheta[i][q])) * th_dev[q];
                    }
                    noise[i] = acc.mag();
                }
                let c_next = point_euler(model, &c, uk, &th_c, n0, dt)?;
                for col in aff.cols.iter_mut() {
                    *col = std::array::from_fn(|i| (0..DIM).map(|j| a0.fx[i][j] * col[j]).sum());
                }
                gth = std::array::from_fn(|i| {
                    std::array::from_fn(|q| {
                        (0..DIM).map(|j| a0.fx[i][j] * gth[j][q]).sum::<f64>()
                            + a0.ftheta[i][q] * th_r[q]
                    })
                });
                for (i, &n) in noise.iter().enumerate() {
                    if n > 0.0 {
                        let mut col = [0.0; DIM];
                        col[i] = n;
                        aff.cols.push(col);
                    }
                }
                aff.center = c_next;
                let mut r = aff.radius();
                for i in 0..DIM {
                    r[i] += gth[i].iter().map(|v| v.abs()).sum::<f64>();
                }
                let enc: [Interval; DIM] =
                    std::array::from_fn(|i| Interval::centered(c_next[i], r[i]));
                check_finite(&enc)?;
                Ok(conserve(&intersect_all(&enc, &nat), total))
            };
            b = run().map_err(|e| domain_at(e, k))?;
        }
        lower.push(State(b.map(|v| v.lo)));
        upper.push(State(b.map(|v| v.hi)));
        merge_noise(&mut aff);
    }
    IntervalTrajectory::new(
        Trajectory::new(lower, theta.lower.ts),
        Trajectory::new(upper, theta.lower.ts),
    )
}

/// Replaces all but the oldest generators by their interval hull (one column per
/// coordinate), which keeps the generator count bounded.
fn merge_noise(aff: &mut AffineState) {
    const KEEP: usize = 64;
    if aff.cols.len() <= KEEP {
        return;
    }
    let mut merged = [0.0; DIM];
    let tail = aff.cols.split_off(KEEP / 2);
    for col in tail {
        for i in 0..DIM {
            merged[i] += col[i].abs();
        }
    }
    for (i, &m) in merged.iter().enumerate() {
        if m > 0.0 {
            let mut col = [0.0; DIM];
            col[i] = m;
            aff.cols.push(col);
        }
    }
}

/// All sub-boxes obtained by cutting the chosen uncertain coordinates into equal pieces.
fn sub_boxes(x0: &StateBox, theta: &ParamBox, cfg: &ReachConfig) -> Vec<(StateBox, ParamBox)> {
    let mut out = vec![(*x0, *theta)];
    if cfg.pieces <= 1 {
        return out;
    }
    let p = cfg.pieces as f64;
    for &d in &cfg.split_dims {
        let degenerate = if d < DIM {
            x0.lower[d] == x0.upper[d]
        } else {
            theta.lower.theta()[d - DIM] == theta.upper.theta()[d - DIM]
        };
        if degenerate || d >= UNCERTAIN_DIMS {
            continue;
        }
        out = out
            .into_iter()
            .flat_map(|(xb, tb)| {
                (0..cfg.pieces).map(move |j| {
                    let (a, b) = (j as f64 / p, (j + 1) as f64 / p);
                    if d < DIM {
                        (xb.slice(d, a, b), tb)
                    } else {
                        (xb, tb.slice(d - DIM, a, b))
                    }
                })
            })
            .collect();
    }
    out
}

/// Interval trajectory enclosing every trajectory from `x0` under any parameters in
/// `theta`; element 0 equals `x0`.
pub fn propagate(
    model: &Model,
    x0: &StateBox,
    u: &[f64],
    theta: &ParamBox,
    steps: usize,
    cfg: &ReachConfig,
) -> Result<IntervalTrajectory> {
    x0.validate()?;
    theta.validate()?;
    if u.len() < steps {
        return Err(Error::Invalid(format!(
            "control has {} values but {steps} steps were requested",
            u.len()
        )));
    }
    let run = |(xb, tb): &(StateBox, ParamBox)| match cfg.inclusion {
        Inclusion::Affine => affine_propagate(model, xb, u, tb, steps),
        mode => box_propagate(model, xb, u, tb, steps, mode),
    };
    let parts: Vec<IntervalTrajectory> = sub_boxes(x0, theta, cfg)
        .par_iter()
        .map(run)
        .collect::<Result<_>>()?;
    let mut it = parts.into_iter();
    let mut acc = it.next().expect("at least one sub-box");
    for part in it {
        for k in 0..=steps {
            for c in 0..DIM {
                let lo = &mut acc.lower.states[k][c];
                *lo = lo.min(part.lower.states[k][c]);
                let hi = &mut acc.upper.states[k][c];
                *hi = hi.max(part.upper.states[k][c]);
            }
        }
    }
    acc.lower.states[0] = x0.lower;
    acc.upper.states[0] = x0.upper;
    Ok(acc)
}

/// Per-index midpoint of an interval trajectory.
pub fn nominal_midpoint(xi: &IntervalTrajectory) -> Trajectory {
    let states = xi
        .lower
        .states
        .iter()
        .zip(&xi.upper.states)
        .map(|(lo, hi)| State(std::array::from_fn(|c| 0.5 * (lo[c] + hi[c]))))
        .collect();
    Trajectory::new(states, xi.lower.step)
}

/// Trajectory simulated from the midpoint initial state with midpoint parameters.
pub fn nominal_dynamic(
    model: &Model,
    x0: &StateBox,
    u: &[f64],
    theta: &ParamBox,
    steps: usize,
) -> Result<Trajectory> {
    Ok(model
        .simulate(&x0.midpoint(), u, &theta.midpoint(), steps)?
        .trajectory)
}

/// Half of the widest box side at every index, and its maximum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaProfile {
    pub delta_k: Vec<f64>,
    pub delta_max: f64,
}

pub fn delta_profile(xi: &IntervalTrajectory) -> DeltaProfile {
    let delta_k: Vec<f64> = xi
        .lower
        .states
        .iter()
        .zip(&xi.upper.states)
        .map(|(lo, hi)| (0..DIM).map(|c| 0.5 * (hi[c] - lo[c])).fold(0.0, f64::max))
        .collect();
    let delta_max = delta_k.iter().copied().fold(0.0, f64::max);
    DeltaProfile { delta_k, delta_max }
}

/// Draws `n` `(initial state, parameters)` pairs from the boxes. When the corners of
/// the non-degenerate coordinates number at most `n / 2` they are all included first;
/// the remaining draws are uniform. Sample `i` uses its own stream of `seed`.
pub fn sample_points(
    x0: &StateBox,
    theta: &ParamBox,
    n: usize,
    seed: u64,
) -> Vec<(State, ModelParams)> {
    let (tlo, thi) = (theta.lower.theta(), theta.upper.theta());
    let free: Vec<usize> = (0..UNCERTAIN_DIMS)
        .filter(|&d| {
            if d < DIM {
                x0.lower[d] < x0.upper[d]
            } else {
                d - DIM != LAMBDA && tlo[d - DIM] < thi[d - DIM]
            }
        })
        .collect();
    let corners = if free.len() < 63 && (1usize << free.len()) <= n / 2 {
        1usize << free.len()
    } else {
        0
    };
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut t = [0.5; UNCERTAIN_DIMS];
            if i < corners {
                for (bit, &d) in free.iter().enumerate() {
                    t[d] = ((i >> bit) & 1) as f64;
                }
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                for &d in &free {
                    t[d] = rng.gen::<f64>();
                }
            }
            let ts: [f64; DIM] = std::array::from_fn(|c| t[c]);
            let tp: [f64; N_PARAMS] = std::array::from_fn(|q| t[DIM + q]);
            (x0.at(ts), theta.at(tp))
        })
        .collect()
}

/// Simulates `n` trajectories with `(x0, theta)` drawn by [`sample_points`].
pub fn sample_trajectories(
    model: &Model,
    x0: &StateBox,
    u: &[f64],
    theta: &ParamBox,
    steps: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    if n == 0 {
        return Err(Error::Invalid("sample count must be at least 1".into()));
    }
    sample_points(x0, theta, n, seed)
        .par_iter()
        .map(|(x, p)| Ok(model.simulate(x, u, p, steps)?.trajectory))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ControlKind;

    fn params() -> ModelParams {
        ModelParams {
            alpha: 0.006,
            beta: 0.75,
            epsilon: 0.2,
            gamma: 0.2,
            mu: 1.0 / 30295.0,
            lambda: 1.0 / 30295.0,
            n0: 10.0,
            ts: 1.0,
        }
    }

    fn widened(p: ModelParams, w: f64) -> ParamBox {
        let lo = p.with_theta({
            let mut t = p.theta();
            for v in t.iter_mut().take(4) {
                *v -= w;
            }
            t
        });
        let hi = p.with_theta({
            let mut t = p.theta();
            for v in t.iter_mut().take(4) {
                *v += w;
            }
            t
        });
        ParamBox::new(lo, hi).unwrap()
    }

    fn x_box() -> StateBox {
        StateBox::new(
            State::new(0.0, 0.019, 9.978, 0.0, 0.0),
            State::new(0.002, 0.021, 9.980, 0.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn degenerate_boxes_give_point_step() {
        for kind in [ControlKind::Vaccination, ControlKind::Shield] {
            let m = Model::new(kind);
            let x = State::new(0.3, 0.2, 8.0, 1.0, 0.1);
            let p = params();
            let y = m.step(&x, 0.4, &p).unwrap();
            for mode in [Inclusion::Natural, Inclusion::Centered, Inclusion::Affine] {
                let b =
                    interval_step(&m, &StateBox::point(x), 0.4, &ParamBox::point(p), mode).unwrap();
                for c in 0..DIM {
                    assert!((b.lower[c] - y[c]).abs() < 1e-12, "{mode} {c}");
                    assert!((b.upper[c] - y[c]).abs() < 1e-12, "{mode} {c}");
                }
            }
        }
    }

    #[test]
    fn zero_width_propagation_matches_simulation() {
        let m = Model::new(ControlKind::Shield);
        let x = State::new(0.001, 0.02, 9.979, 0.0, 0.0);
        let u: Vec<f64> = (0..30).map(|k| 10.0 * k as f64).collect();
        let sim = m.simulate(&x, &u, &params(), 30).unwrap().trajectory;
        for mode in [Inclusion::Natural, Inclusion::Centered, Inclusion::Affine] {
            let xi = propagate(
                &m,
                &StateBox::point(x),
                &u,
                &ParamBox::point(params()),
                30,
                &ReachConfig::unsplit(mode),
            )
            .unwrap();
            assert!(xi.contains(&sim, 1e-10));
            assert!(delta_profile(&xi).delta_max < 1e-9);
        }
    }

    #[test]
    fn single_steps_contain_samples() {
        let m = Model::new(ControlKind::Vaccination);
        let xb = StateBox::new(
            State::new(0.1, 0.2, 8.0, 1.0, 0.1),
            State::new(0.3, 0.3, 8.5, 1.5, 0.2),
        )
        .unwrap();
        let tb = widened(params(), 0.005);
        for mode in [Inclusion::Natural, Inclusion::Centered, Inclusion::Affine] {
            let b = interval_step(&m, &xb, 0.3, &tb, mode).unwrap();
            for (x, p) in sample_points(&xb, &tb, 300, 7) {
                let y = m.step(&x, 0.3, &p).unwrap();
                assert!(b.contains(&y, 1e-12), "{mode}");
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_hits_corners() {
        let tb = widened(params(), 0.001);
        let a = sample_points(&x_box(), &tb, 400, 3);
        let b = sample_points(&x_box(), &tb, 400, 3);
        assert_eq!(a, b);
        // 3 free state coordinates + 4 free rates
        assert_eq!(a[0].0, x_box().lower);
        assert_eq!(a[127].0, x_box().upper);
        let c = sample_points(&x_box(), &tb, 400, 4);
        assert_ne!(a[200], c[200]);
    }

    #[test]
    fn delta_profile_constant_widths() {
        let lower = Trajectory::new(vec![State([0.0; DIM]); 3], 1.0);
        let upper = Trajectory::new(vec![State([0.2, 0.4, 0.1, 0.0, 0.0]); 3], 1.0);
        let d = delta_profile(&IntervalTrajectory::new(lower, upper).unwrap());
        assert!(d.delta_k.iter().all(|&v| (v - 0.2).abs() < 1e-15));
        assert!((d.delta_max - 0.2).abs() < 1e-15);
    }

    #[test]
    fn midpoint_of_constant_box() {
        let lower = Trajectory::new(vec![State([0.0; DIM]); 4], 1.0);
        let upper = Trajectory::new(vec![State([2.0; DIM]); 4], 1.0);
        let mid = nominal_midpoint(&IntervalTrajectory::new(lower, upper).unwrap());
        assert!(mid.states.iter().all(|s| s.0 == [1.0; DIM]));
    }

    #[test]
    fn split_names_round_trip() {
        for k in 0..UNCERTAIN_DIMS {
            assert_eq!(uncertain_dim_index(&uncertain_dim_name(k)), Some(k));
        }
        assert_eq!(uncertain_dim_name(DIM + BETA), "beta");
        assert_eq!(uncertain_dim_name(I), "I0");
    }
}
