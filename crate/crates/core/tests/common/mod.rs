#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use seir_mtl::dynamics::{Model, ModelParams, N_PARAMS};
use seir_mtl::logic::{smooth_robustness, Formula, Relation};
use seir_mtl::scenario::load_scenario;
use seir_mtl::synthesis::Scenario;
use seir_mtl::trajectory::{State, Trajectory, DIM};

pub const SCENARIOS: [&str; 6] = [
    "vaccination_1",
    "vaccination_2",
    "vaccination_3",
    "shield_1",
    "shield_2",
    "shield_3",
];

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.scn"))
}

pub fn scenario(name: &str) -> Scenario {
    load_scenario(&scenario_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Robustness written out operator by operator from the textbook recursion: only
/// true, atoms, negation, disjunction and until are primitive.
pub fn oracle(f: &Formula, x: &[State], k: usize) -> f64 {
    match f {
        Formula::True => f64::INFINITY,
        Formula::Atom(p) => match p.relation {
            Relation::Le => p.threshold - x[k][p.coord],
            Relation::Ge => x[k][p.coord] - p.threshold,
        },
        Formula::Not(a) => -oracle(a, x, k),
        Formula::Or(a, b) => oracle(a, x, k).max(oracle(b, x, k)),
        // a & b is !(!a | !b)
        Formula::And(a, b) => -((-oracle(a, x, k)).max(-oracle(b, x, k))),
        Formula::Until { lhs, rhs, window } => until(lhs, rhs, window.start, window.end, x, k),
        Formula::Eventually { child, window } => {
            until(&Formula::True, child, window.start, window.end, x, k)
        }
        Formula::Always { child, window } => {
            let neg = Formula::Not(child.clone());
            -until(&Formula::True, &neg, window.start, window.end, x, k)
        }
    }
}

fn until(lhs: &Formula, rhs: &Formula, a: usize, b: usize, x: &[State], k: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for kp in (k + a)..=(k + b) {
        let mut inner = oracle(rhs, x, kp);
        for kpp in k..kp {
            inner = inner.min(oracle(lhs, x, kpp));
        }
        best = best.max(inner);
    }
    best
}

/// Boolean satisfaction, transcribed the same way.
pub fn oracle_bool(f: &Formula, x: &[State], k: usize) -> bool {
    match f {
        Formula::True => true,
        Formula::Atom(p) => p.holds(x[k][p.coord]),
        Formula::Not(a) => !oracle_bool(a, x, k),
        Formula::Or(a, b) => oracle_bool(a, x, k) || oracle_bool(b, x, k),
        Formula::And(a, b) => oracle_bool(a, x, k) && oracle_bool(b, x, k),
        Formula::Until { lhs, rhs, window } => ((k + window.start)..=(k + window.end))
            .any(|kp| oracle_bool(rhs, x, kp) && (k..kp).all(|kpp| oracle_bool(lhs, x, kpp))),
        Formula::Eventually { child, window } => {
            ((k + window.start)..=(k + window.end)).any(|kp| oracle_bool(child, x, kp))
        }
        Formula::Always { child, window } => {
            ((k + window.start)..=(k + window.end)).all(|kp| oracle_bool(child, x, kp))
        }
    }
}

/// Random formula of temporal depth at most `depth`, windows within `[0, 4]`.
pub fn random_formula<R: Rng>(rng: &mut R, depth: usize) -> Formula {
    let atom = |rng: &mut R| {
        let coord = rng.gen_range(0..DIM);
        let t = (rng.gen_range(-8..=8) as f64) / 8.0;
        if rng.gen_bool(0.5) {
            Formula::le(coord, t)
        } else {
            Formula::ge(coord, t)
        }
    };
    if depth == 0 {
        return if rng.gen_bool(0.05) {
            Formula::True
        } else {
            atom(rng)
        };
    }
    let window = |rng: &mut R| {
        let a = rng.gen_range(0..=2);
        (a, a + rng.gen_range(0..=2))
    };
    match rng.gen_range(0..7) {
        0 => atom(rng),
        1 => Formula::not(random_formula(rng, depth - 1)),
        2 => Formula::and(
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        ),
        3 => Formula::or(
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        ),
        4 => {
            let (a, b) = window(rng);
            Formula::until(
                random_formula(rng, depth - 1),
                random_formula(rng, depth - 1),
                a,
                b,
            )
        }
        5 => {
            let (a, b) = window(rng);
            Formula::eventually(random_formula(rng, depth - 1), a, b)
        }
        _ => {
            let (a, b) = window(rng);
            Formula::always(random_formula(rng, depth - 1), a, b)
        }
    }
}

/// Random trajectory of `len` states with coordinates on a coarse grid in `[-1, 1]`,
/// so that ties between samples and thresholds occur.
pub fn random_trajectory<R: Rng>(rng: &mut R, len: usize) -> Trajectory {
    let states = (0..len)
        .map(|_| {
            State(std::array::from_fn(|_| {
                if rng.gen_bool(0.3) {
                    (rng.gen_range(-8..=8) as f64) / 8.0
                } else {
                    rng.gen_range(-1.0..1.0)
                }
            }))
        })
        .collect();
    Trajectory::new(states, 1.0)
}

/// Random admissible control: a random overall level times per-day uniform draws.
pub fn random_control<R: Rng>(rng: &mut R, len: usize, u_max: f64) -> Vec<f64> {
    let level: f64 = rng.gen_range(0.0..1.0);
    let level = level * level;
    (0..len).map(|_| u_max * level * rng.gen::<f64>()).collect()
}

/// `|a - b|` relative to the larger magnitude of the two (absolute below `floor`).
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub fn table_params() -> ModelParams {
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

pub fn x0() -> State {
    State::new(0.001, 0.02, 9.979, 0.0, 0.0)
}

pub fn random_state<R: Rng>(rng: &mut R) -> State {
    State::new(
        rng.gen_range(0.0..2.0),
        rng.gen_range(0.0..2.0),
        rng.gen_range(1.0..9.0),
        rng.gen_range(0.0..5.0),
        rng.gen_range(0.0..0.5),
    )
}

pub fn random_params<R: Rng>(rng: &mut R) -> ModelParams {
    let mu = rng.gen_range(1e-5..1e-3);
    ModelParams {
        alpha: rng.gen_range(0.001..0.02),
        beta: rng.gen_range(0.2..1.0),
        epsilon: rng.gen_range(0.1..0.4),
        gamma: rng.gen_range(0.1..0.4),
        mu,
        lambda: mu,
        n0: 10.0,
        ts: 1.0,
    }
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Norm-wise relative error of analytic step Jacobians against central differences.
pub fn jacobian_error(model: &Model, x: &State, u: f64, p: &ModelParams) -> f64 {
    let j = model.jacobians(x, u, p).unwrap();
    let step = |x: &State, u: f64, p: &ModelParams| model.step(x, u, p).unwrap();
    let mut worst: f64 = 0.0;

    let mut num = [[0.0; DIM]; DIM];
    for c in 0..DIM {
        let h = 1e-6 * (1.0 + x[c].abs());
        let (mut a, mut b) = (*x, *x);
        a[c] += h;
        b[c] -= h;
        let (fa, fb) = (step(&a, u, p), step(&b, u, p));
        for i in 0..DIM {
            num[i][c] = (fa[i] - fb[i]) / (2.0 * h);
        }
    }
    let diff = max_abs(
        (0..DIM)
            .flat_map(|i| (0..DIM).map(move |c| (i, c)))
            .map(|(i, c)| num[i][c] - j.dx[i][c]),
    );
    worst = worst.max(diff / max_abs(num.iter().flatten().copied()).max(1e-12));

    let h = 1e-6 * (1.0 + u.abs());
    let (fa, fb) = (step(x, u + h, p), step(x, (u - h).max(0.0), p));
    let span = u + h - (u - h).max(0.0);
    let num_u: Vec<f64> = (0..DIM).map(|i| (fa[i] - fb[i]) / span).collect();
    let diff = max_abs((0..DIM).map(|i| num_u[i] - j.du[i]));
    worst = worst.max(diff / max_abs(num_u.iter().copied()).max(1e-12));

    let th = p.theta();
    for q in 0..N_PARAMS {
        let h = 1e-6 * (1.0 + th[q].abs());
        let (mut ta, mut tb) = (th, th);
        ta[q] += h;
        tb[q] -= h;
        // perturb one rate at a time, so lambda moves without mu here
        let (pa, pb) = (p.with_theta(ta), p.with_theta(tb));
        let (fa, fb) = (step(x, u, &pa), step(x, u, &pb));
        let num: Vec<f64> = (0..DIM).map(|i| (fa[i] - fb[i]) / (2.0 * h)).collect();
        let diff = max_abs((0..DIM).map(|i| num[i] - j.dtheta[q][i]));
        let scale = max_abs(num.iter().copied())
            .max(max_abs(j.dtheta[q]))
            .max(1e-12);
        if scale > 1e-12 {
            worst = worst.max(diff / scale);
        }
    }
    worst
}

/// Largest gradient mismatch relative to the gradient's own size.
pub fn smooth_gradient_error(f: &Formula, t: &Trajectory, beta: f64) -> Option<f64> {
    let s = smooth_robustness(t, f, 0, beta).unwrap();
    if !s.value.is_finite() {
        return None;
    }
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1e-3;
    for k in 0..t.len() {
        for c in 0..DIM {
            let mut plus = t.clone();
            let mut minus = t.clone();
            plus.states[k][c] += h;
            minus.states[k][c] -= h;
            let fp = smooth_robustness(&plus, f, 0, beta).unwrap().value;
            let fm = smooth_robustness(&minus, f, 0, beta).unwrap().value;
            let fd = (fp - fm) / (2.0 * h);
            worst = worst.max((fd - s.gradient[k][c]).abs());
            scale = scale.max(fd.abs());
        }
    }
    Some(worst / scale)
}
