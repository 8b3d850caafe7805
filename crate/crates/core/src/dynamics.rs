//! SEIR epidemic models with vaccination or shield-immunity control.
//!
//! State order is `[I, E, S, R, D]` (see [`crate::trajectory`]); parameter order is
//! `[alpha, beta, epsilon, gamma, mu, lambda]`. Time is discretized with explicit
//! Euler, optionally split into several substeps per sample period.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Interval, Scalar};
use crate::trajectory::{State, Trajectory, D, DIM, E, I, R, S};

pub const N_PARAMS: usize = 6;
pub const PARAM_NAMES: [&str; N_PARAMS] = ["alpha", "beta", "epsilon", "gamma", "mu", "lambda"];

pub const ALPHA: usize = 0;
pub const BETA: usize = 1;
pub const EPSILON: usize = 2;
pub const GAMMA: usize = 3;
pub const MU: usize = 4;
pub const LAMBDA: usize = 5;

/// Smallest admissible value of the infection-term denominator.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Rate constants (per day), initial population (millions) and sample period (days).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub mu: f64,
    pub lambda: f64,
    pub n0: f64,
    pub ts: f64,
}

impl ModelParams {
    pub fn theta(&self) -> [f64; N_PARAMS] {
        [
            self.alpha,
            self.beta,
            self.epsilon,
            self.gamma,
            self.mu,
            self.lambda,
        ]
    }

    pub fn with_theta(&self, th: [f64; N_PARAMS]) -> Self {
        ModelParams {
            alpha: th[ALPHA],
            beta: th[BETA],
            epsilon: th[EPSILON],
            gamma: th[GAMMA],
            mu: th[MU],
            lambda: th[LAMBDA],
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in PARAM_NAMES.iter().zip(self.theta()) {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Invalid(format!(
                    "rate {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(self.n0.is_finite() && self.n0 > 0.0) {
            return Err(Error::Invalid(format!(
                "N0 must be positive, got {}",
                self.n0
            )));
        }
        if !(self.ts.is_finite() && self.ts >= 0.0) {
            return Err(Error::Invalid(format!("Ts must be >= 0, got {}", self.ts)));
        }
        if self.lambda != self.mu {
            return Err(Error::Invalid(format!(
                "birth rate lambda ({}) must equal death rate mu ({})",
                self.lambda, self.mu
            )));
        }
        Ok(())
    }
}

/// Box of rate constants; `n0` and `ts` are shared by both corners.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub lower: ModelParams,
    pub upper: ModelParams,
}

impl ParamBox {
    pub fn new(lower: ModelParams, upper: ModelParams) -> Result<Self> {
        let b = ParamBox { lower, upper };
        b.validate()?;
        Ok(b)
    }

    pub fn point(p: ModelParams) -> Self {
        ParamBox { lower: p, upper: p }
    }

    pub fn validate(&self) -> Result<()> {
        self.lower.validate()?;
        self.upper.validate()?;
        for (k, (lo, hi)) in self
            .lower
            .theta()
            .iter()
            .zip(self.upper.theta())
            .enumerate()
        {
            if *lo > hi {
                return Err(Error::Invalid(format!(
                    "parameter {} has lower {lo} > upper {hi}",
                    PARAM_NAMES[k]
                )));
            }
        }
        if self.lower.n0 != self.upper.n0 || self.lower.ts != self.upper.ts {
            return Err(Error::Invalid(
                "N0 and Ts must not carry uncertainty".into(),
            ));
        }
        Ok(())
    }

    pub fn midpoint(&self) -> ModelParams {
        self.at([0.5; N_PARAMS])
    }

    /// The parameters at relative position `t` (each in `[0, 1]`) inside the box.
    /// `lambda` follows `mu`, which keeps the birth/death balance inside the box.
    pub fn at(&self, t: [f64; N_PARAMS]) -> ModelParams {
        let (lo, hi) = (self.lower.theta(), self.upper.theta());
        let mut th = [0.0; N_PARAMS];
        for k in 0..N_PARAMS {
            th[k] = if lo[k] == hi[k] {
                lo[k]
            } else {
                lo[k] + t[k] * (hi[k] - lo[k])
            };
        }
        th[LAMBDA] = th[MU];
        self.lower.with_theta(th)
    }

    pub fn intervals(&self) -> [Interval; N_PARAMS] {
        let (lo, hi) = (self.lower.theta(), self.upper.theta());
        std::array::from_fn(|k| Interval::new(lo[k], hi[k]))
    }

    /// Restricts parameter `k` to the sub-range `[a, b]` given in relative coordinates.
    pub fn slice(&self, k: usize, a: f64, b: f64) -> ParamBox {
        let (lo, hi) = (self.lower.theta(), self.upper.theta());
        let mut nlo = lo;
        let mut nhi = hi;
        nlo[k] = lo[k] + a * (hi[k] - lo[k]);
        nhi[k] = if b >= 1.0 {
            hi[k]
        } else {
            lo[k] + b * (hi[k] - lo[k])
        };
        if k == MU {
            nlo[LAMBDA] = nlo[MU];
            nhi[LAMBDA] = nhi[MU];
        }
        ParamBox {
            lower: self.lower.with_theta(nlo),
            upper: self.upper.with_theta(nhi),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }
}

/// Which control input the model exposes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlKind {
    /// Vaccinations per day (millions/day), moving susceptibles to recovered.
    Vaccination,
    /// Shield strength (dimensionless), scaling the recovered share of contacts.
    Shield,
}

impl fmt::Display for ControlKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControlKind::Vaccination => "vaccination",
            ControlKind::Shield => "shield",
        })
    }
}

impl FromStr for ControlKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vaccination" => Ok(ControlKind::Vaccination),
            "shield" => Ok(ControlKind::Shield),
            other => Err(Error::Invalid(format!("unknown control kind '{other}'"))),
        }
    }
}

/// Per-day control values with their admissible upper bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    pub kind: ControlKind,
    pub values: Vec<f64>,
    pub u_max: f64,
}

impl ControlSignal {
    pub fn new(kind: ControlKind, values: Vec<f64>, u_max: f64) -> Result<Self> {
        let u = ControlSignal {
            kind,
            values,
            u_max,
        };
        u.validate()?;
        Ok(u)
    }

    pub fn zeros(kind: ControlKind, len: usize, u_max: f64) -> Self {
        ControlSignal {
            kind,
            values: vec![0.0; len],
            u_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u_max.is_finite() && self.u_max > 0.0) {
            return Err(Error::Invalid(format!(
                "u_max must be positive, got {}",
                self.u_max
            )));
        }
        for (k, &v) in self.values.iter().enumerate() {
            if !(v >= 0.0 && v <= self.u_max) {
                return Err(Error::Invalid(format!(
                    "control value {v} at day {k} outside [0, {}]",
                    self.u_max
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// How the total living population `N` enters the infection term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Population {
    /// `N = S + E + I + R`, recomputed from the state.
    Recomputed,
    /// `N` frozen at the initial population `N0`.
    Initial,
}

/// Infection flow with its partial derivatives (`d_state[D]` is always zero).
#[derive(Clone, Copy, Debug)]
pub struct Infection<T> {
    pub value: T,
    pub d_state: [T; DIM],
    pub d_beta: T,
    pub d_chi: T,
}

/// Jacobians of the continuous-time rate function.
#[derive(Clone, Copy, Debug)]
pub struct RateJacobians<T> {
    pub fx: [[T; DIM]; DIM],
    pub fu: [T; DIM],
    pub ftheta: [[T; N_PARAMS]; DIM],
}

/// Jacobians of one sample-period update `x' = step(x, u, theta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepJacobians {
    pub dx: [[f64; DIM]; DIM],
    pub du: [f64; DIM],
    pub dtheta: [[f64; DIM]; N_PARAMS],
}

/// A simulated trajectory plus the entries that left the nonnegative orthant.
#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub trajectory: Trajectory,
    /// `(step, compartment, value)` for every negative state entry.
    pub negatives: Vec<(usize, usize, f64)>,
}

impl Simulation {
    pub fn is_valid(&self) -> bool {
        self.negatives.is_empty()
    }
}

/// Model structure: control kind, population treatment and Euler substeps per period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub kind: ControlKind,
    pub population: Population,
    pub substeps: usize,
    /// Known range of the compartment sum `I + E + S + R + D`. Interval evaluations
    /// narrow the living population to this range minus `D`; points ignore it.
    #[serde(skip)]
    pub conserved_total: Option<(f64, f64)>,
}

fn domain(detail: impl Into<String>) -> Error {
    Error::ModelDomain {
        step: 0,
        detail: detail.into(),
    }
}

fn at_step(err: Error, step: usize) -> Error {
    match err {
        Error::ModelDomain { detail, .. } => Error::ModelDomain { step, detail },
        Error::NonFinite { .. } => Error::NonFinite { step },
        other => other,
    }
}

impl Model {
    pub fn new(kind: ControlKind) -> Self {
        Model {
            kind,
            population: Population::Recomputed,
            substeps: 1,
            conserved_total: None,
        }
    }

    pub fn with_conserved_total(self, lo: f64, hi: f64) -> Self {
        Model {
            conserved_total: Some((lo, hi)),
            ..self
        }
    }

    pub fn with_population(self, population: Population) -> Self {
        Model { population, ..self }
    }

    pub fn with_substeps(self, substeps: usize) -> Self {
        Model {
            substeps: substeps.max(1),
            ..self
        }
    }

    /// Splits the control value into `(V, chi)`.
    fn split<T: Scalar>(&self, u: T) -> (T, T) {
        match self.kind {
            ControlKind::Vaccination => (u, T::cst(0.0)),
            ControlKind::Shield => (T::cst(0.0), u),
        }
    }

    fn population_of<T: Scalar>(&self, x: &[T; DIM], n0: f64) -> T {
        match self.population {
            Population::Recomputed => {
                let n = x[S] + x[E] + x[I] + x[R];
                match self.conserved_total {
                    Some((lo, hi)) => n.meet(lo - x[D].upper(), hi - x[D].lower()),
                    None => n,
                }
            }
            Population::Initial => T::cst(n0),
        }
    }

    fn denominator<T: Scalar>(&self, x: &[T; DIM], chi: T, n0: f64) -> Result<T> {
        let den = self.population_of(x, n0) + chi * x[R];
        if !(den.lower() > DENOMINATOR_FLOOR) {
            return Err(domain(format!(
                "infection denominator N + chi*R reaches {} (floor {DENOMINATOR_FLOOR})",
                den.lower()
            )));
        }
        Ok(den)
    }

    /// The infection flow `beta*S*I/(N + chi*R)` and its partial derivatives.
    pub fn infection<T: Scalar>(
        &self,
        x: &[T; DIM],
        u: T,
        beta: T,
        n0: f64,
    ) -> Result<Infection<T>> {
        let zero = T::cst(0.0);
        let one = T::cst(1.0);
        let (_, chi) = self.split(u);
        let den = self.denominator(x, chi, n0)?;
        let den2 = den.square();
        let si = x[S] * x[I];
        // each partial is written so that no variable cancels against itself
        let mut d_state = [zero; DIM];
        match self.population {
            Population::Recomputed => {
                let rr = x[R] * (one + chi);
                d_state[S] = beta * x[I] * (x[E] + x[I] + rr) / den2;
                d_state[E] = -(beta * si) / den2;
                d_state[I] = beta * x[S] * (x[S] + x[E] + rr) / den2;
                d_state[R] = -(beta * si * (one + chi)) / den2;
            }
            Population::Initial => {
                d_state[S] = beta * x[I] / den;
                d_state[I] = beta * x[S] / den;
                d_state[R] = -(beta * si * chi) / den2;
            }
        }
        Ok(Infection {
            value: beta * si / den,
            d_state,
            d_beta: si / den,
            d_chi: -(beta * si * x[R]) / den2,
        })
    }

    /// Continuous-time rates, generic over point and interval arithmetic.
    pub fn rates<T: Scalar>(
        &self,
        x: &[T; DIM],
        u: T,
        th: &[T; N_PARAMS],
        n0: f64,
    ) -> Result<[T; DIM]> {
        let (v, chi) = self.split(u);
        let den = self.denominator(x, chi, n0)?;
        let n = self.population_of(x, n0);
        let h = th[BETA] * x[S] * x[I] / den;
        let di = th[EPSILON] * x[E] - (th[GAMMA] + th[MU] + th[ALPHA]) * x[I];
        let de = h - (th[MU] + th[EPSILON]) * x[E];
        let ds = th[LAMBDA] * n - th[MU] * x[S] - h - v;
        let dr = th[GAMMA] * x[I] - th[MU] * x[R] + v;
        let dd = -(di + de + ds + dr);
        Ok([di, de, ds, dr, dd])
    }

    /// Analytic Jacobians of [`Model::rates`].
    pub fn rate_jacobians<T: Scalar>(
        &self,
        x: &[T; DIM],
        u: T,
        th: &[T; N_PARAMS],
        n0: f64,
    ) -> Result<RateJacobians<T>> {
        let zero = T::cst(0.0);
        let one = T::cst(1.0);
        let h = self.infection(x, u, th[BETA], n0)?;
        let [h_i, h_e, h_s, h_r, _] = h.d_state;
        let (h_beta, h_chi) = (h.d_beta, h.d_chi);
        let recomputed = self.population == Population::Recomputed;
        let dn = if recomputed { one } else { zero };
        let lam = th[LAMBDA];
        let mu = th[MU];

        let mut fx = [[zero; DIM]; DIM];
        fx[I][I] = -(th[GAMMA] + mu + th[ALPHA]);
        fx[I][E] = th[EPSILON];
        fx[E][I] = h_i;
        fx[E][E] = h_e - (mu + th[EPSILON]);
        fx[E][S] = h_s;
        fx[E][R] = h_r;
        fx[S][I] = lam * dn - h_i;
        fx[S][E] = lam * dn - h_e;
        fx[S][S] = lam * dn - mu - h_s;
        fx[S][R] = lam * dn - h_r;
        fx[R][I] = th[GAMMA];
        fx[R][R] = -mu;

        let mut ft = [[zero; N_PARAMS]; DIM];
        ft[I][ALPHA] = -x[I];
        ft[I][EPSILON] = x[E];
        ft[I][GAMMA] = -x[I];
        ft[I][MU] = -x[I];
        ft[E][BETA] = h_beta;
        ft[E][EPSILON] = -x[E];
        ft[E][MU] = -x[E];
        ft[S][BETA] = -h_beta;
        ft[S][MU] = -x[S];
        ft[S][LAMBDA] = self.population_of(x, n0);
        ft[R][GAMMA] = x[I];
        ft[R][MU] = -x[R];

        let mut fu = [zero; DIM];
        match self.kind {
            ControlKind::Vaccination => {
                fu[S] = -one;
                fu[R] = one;
            }
            ControlKind::Shield => {
                fu[E] = h_chi;
                fu[S] = -h_chi;
            }
        }

        // the D rate is the negated sum of the others
        for j in 0..DIM {
            fx[D][j] = -(fx[I][j] + fx[E][j] + fx[S][j] + fx[R][j]);
        }
        for j in 0..N_PARAMS {
            ft[D][j] = -(ft[I][j] + ft[E][j] + ft[S][j] + ft[R][j]);
        }
        fu[D] = -(fu[I] + fu[E] + fu[S] + fu[R]);
        Ok(RateJacobians { fx, fu, ftheta: ft })
    }

    pub fn derivative(&self, x: &State, u: f64, p: &ModelParams) -> Result<State> {
        if !x.is_finite() || !u.is_finite() {
            return Err(Error::NonFinite { step: 0 });
        }
        Ok(State(self.rates(&x.0, u, &p.theta(), p.n0)?))
    }

    fn euler(
        &self,
        x: &[f64; DIM],
        u: f64,
        th: &[f64; N_PARAMS],
        n0: f64,
        dt: f64,
    ) -> Result<[f64; DIM]> {
        let f = self.rates(x, u, th, n0)?;
        Ok(std::array::from_fn(|i| x[i] + dt * f[i]))
    }

    /// One sample period of the Euler discretization.
    pub fn step(&self, x: &State, u: f64, p: &ModelParams) -> Result<State> {
        if !x.is_finite() || !u.is_finite() {
            return Err(Error::NonFinite { step: 0 });
        }
        let th = p.theta();
        let dt = p.ts / self.substeps as f64;
        let mut y = x.0;
        for _ in 0..self.substeps {
            y = self.euler(&y, u, &th, p.n0, dt)?;
        }
        let out = State(y);
        if !out.is_finite() {
            return Err(Error::NonFinite { step: 0 });
        }
        Ok(out)
    }

    /// Simulates `steps` periods from `x0` under `u[0..steps]`.
    pub fn simulate(
        &self,
        x0: &State,
        u: &[f64],
        p: &ModelParams,
        steps: usize,
    ) -> Result<Simulation> {
        if u.len() < steps {
            return Err(Error::Invalid(format!(
                "control has {} values but {steps} steps were requested",
                u.len()
            )));
        }
        let mut states = Vec::with_capacity(steps + 1);
        let mut negatives = Vec::new();
        let mut x = *x0;
        for k in 0..=steps {
            for c in 0..DIM {
                if x[c] < 0.0 {
                    negatives.push((k, c, x[c]));
                }
            }
            states.push(x);
            if k < steps {
                x = self.step(&x, u[k], p).map_err(|e| at_step(e, k))?;
            }
        }
        Ok(Simulation {
            trajectory: Trajectory::new(states, p.ts),
            negatives,
        })
    }

    /// Jacobians of the Euler update with step `dt`, on points or boxes.
    pub fn euler_jacobians<T: Scalar>(
        &self,
        x: &[T; DIM],
        u: T,
        th: &[T; N_PARAMS],
        n0: f64,
        dt: f64,
    ) -> Result<RateJacobians<T>> {
        let j = self.rate_jacobians(x, u, th, n0)?;
        let h = T::cst(dt);
        let mut fx = j.fx;
        for (i, row) in fx.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = h * *v + T::cst(if i == c { 1.0 } else { 0.0 });
            }
        }
        let fu = j.fu.map(|v| h * v);
        let ftheta = j.ftheta.map(|row| row.map(|v| h * v));
        Ok(RateJacobians { fx, fu, ftheta })
    }

    /// Jacobians of [`Model::step`] with respect to state, control and parameters.
    pub fn jacobians(&self, x: &State, u: f64, p: &ModelParams) -> Result<StepJacobians> {
        let th = p.theta();
        let dt = p.ts / self.substeps as f64;
        let mut a = identity();
        let mut b = [0.0; DIM];
        let mut bt = [[0.0; N_PARAMS]; DIM];
        let mut y = x.0;
        for _ in 0..self.substeps {
            let j = self.euler_jacobians(&y, u, &th, p.n0, dt)?;
            a = matmul(&j.fx, &a);
            b = std::array::from_fn(|i| (0..DIM).map(|c| j.fx[i][c] * b[c]).sum::<f64>() + j.fu[i]);
            bt = std::array::from_fn(|i| {
                std::array::from_fn(|q| {
                    (0..DIM).map(|c| j.fx[i][c] * bt[c][q]).sum::<f64>() + j.ftheta[i][q]
                })
            });
            y = self.euler(&y, u, &th, p.n0, dt)?;
        }
        Ok(StepJacobians {
            dx: a,
            du: b,
            dtheta: std::array::from_fn(|q| std::array::from_fn(|i| bt[i][q])),
        })
    }

    /// Forward sensitivities `sens[k][j] = d x_k / d u_j` along `traj` under `u`.
    pub fn control_sensitivities(
        &self,
        traj: &Trajectory,
        u: &[f64],
        p: &ModelParams,
    ) -> Result<Vec<Vec<[f64; DIM]>>> {
        let steps = traj.len().saturating_sub(1);
        let mut sens = vec![vec![[0.0; DIM]; steps]; steps + 1];
        for k in 0..steps {
            let j = self
                .jacobians(&traj.states[k], u[k], p)
                .map_err(|e| at_step(e, k))?;
            let (prev, next) = sens.split_at_mut(k + 1);
            let (prev, next) = (&prev[k], &mut next[0]);
            for q in 0..k {
                next[q] = std::array::from_fn(|i| (0..DIM).map(|c| j.dx[i][c] * prev[q][c]).sum());
            }
            next[k] = j.du;
        }
        Ok(sens)
    }

    /// Gradient of `sum_k w[k] . x_k` with respect to the control, by the adjoint
    /// recursion along `traj`.
    pub fn control_gradient(
        &self,
        traj: &Trajectory,
        u: &[f64],
        p: &ModelParams,
        w: &[[f64; DIM]],
    ) -> Result<Vec<f64>> {
        let steps = traj.len().saturating_sub(1);
        let mut grad = vec![0.0; steps];
        let mut lam = w[steps];
        for k in (0..steps).rev() {
            let j = self
                .jacobians(&traj.states[k], u[k], p)
                .map_err(|e| at_step(e, k))?;
            grad[k] = (0..DIM).map(|i| j.du[i] * lam[i]).sum();
            lam = std::array::from_fn(|c| {
                w[k][c] + (0..DIM).map(|i| j.dx[i][c] * lam[i]).sum::<f64>()
            });
        }
        Ok(grad)
    }
}

fn identity() -> [[f64; DIM]; DIM] {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }))
}

fn matmul(a: &[[f64; DIM]; DIM], b: &[[f64; DIM]; DIM]) -> [[f64; DIM]; DIM] {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..DIM).map(|c| a[i][c] * b[c][j]).sum()))
}

/// Euclidean norm of a control sequence.
pub fn control_effort(u: &[f64]) -> f64 {
    u.iter().map(|v| v * v).sum::<f64>().sqrt()
}
