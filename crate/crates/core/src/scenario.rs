//! Scenario files: a sectioned `key = value` text format.
//!
//! ```text
//! # comment
//! [model]
//! kind = vaccination        # or shield
//! Ts = 1
//! N0 = 10
//!
//! [params]
//! alpha = 0.006 +- 0.001    # center +- half-width; `±` also accepted
//! mu = 1/30295              # fractions are allowed
//! ...
//! ```
//!
//! Sections: `model`, `params`, `initial_state`, `spec`, `horizon`, `control`,
//! `solver`, `seed`. Unknown sections and keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use crate::dynamics::{
    ControlKind, Model, ModelParams, ParamBox, Population, N_PARAMS, PARAM_NAMES,
};
use crate::error::{Error, Result};
use crate::logic::parse;
use crate::reach::{uncertain_dim_index, uncertain_dim_name, Inclusion, StateBox};
use crate::synthesis::{Scenario, SolverConfig};
use crate::trajectory::{State, COMPARTMENTS, DIM};

const SECTIONS: [(&str, &[&str]); 8] = [
    ("model", &["kind", "Ts", "N0", "substeps", "population"]),
    (
        "params",
        &["alpha", "beta", "epsilon", "gamma", "mu", "lambda"],
    ),
    ("initial_state", &["I", "E", "S", "R", "D"]),
    ("spec", &["formula"]),
    ("horizon", &["days"]),
    ("control", &["kind", "u_max"]),
    (
        "solver",
        &[
            "beta_schedule",
            "penalty_schedule",
            "max_inner_iterations",
            "step_min",
            "step_max",
            "armijo",
            "nonmonotone_memory",
            "gradient_tolerance",
            "feasibility_tolerance",
            "polish_rounds",
            "iter_max",
            "restarts",
            "restart_scale",
            "population",
            "warm_start",
            "inclusion",
            "split",
            "pieces",
            "samples",
        ],
    ),
    ("seed", &["value"]),
];

/// Default control bound for each kind.
pub fn default_u_max(kind: ControlKind) -> f64 {
    match kind {
        ControlKind::Vaccination => 1.0,
        ControlKind::Shield => 10_000.0,
    }
}

struct Entry {
    line: usize,
    value: String,
}

type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

fn err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Invalid(format!("line {line}: {msg}"))
}

fn tokenize(text: &str) -> Result<Sections> {
    let mut out: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(err(line, format!("unknown section [{name}]")));
            }
            if out.contains_key(name) {
                return Err(err(line, format!("duplicate section [{name}]")));
            }
            out.insert(name.to_string(), BTreeMap::new());
            current = Some(name.to_string());
            continue;
        }
        let Some(section) = &current else {
            return Err(err(line, "key outside of any section"));
        };
        let Some((key, value)) = content.split_once('=') else {
            return Err(err(
                line,
                format!("expected 'key = value', found '{content}'"),
            ));
        };
        let key = key.trim();
        let allowed = SECTIONS.iter().find(|(s, _)| s == section).unwrap().1;
        if !allowed.contains(&key) {
            return Err(err(line, format!("unknown key '{key}' in [{section}]")));
        }
        let map = out.get_mut(section).unwrap();
        if map.contains_key(key) {
            return Err(err(line, format!("duplicate key '{key}'")));
        }
        map.insert(
            key.to_string(),
            Entry {
                line,
                value: value.trim().to_string(),
            },
        );
    }
    Ok(out)
}

fn number(line: usize, s: &str) -> Result<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| err(line, format!("invalid number '{s}'")))?;
            let b: f64 = b
                .trim()
                .parse()
                .map_err(|_| err(line, format!("invalid number '{s}'")))?;
            a / b
        }
        None => s
            .parse()
            .map_err(|_| err(line, format!("invalid number '{s}'")))?,
    };
    if !v.is_finite() {
        return Err(err(line, format!("number '{s}' is not finite")));
    }
    Ok(v)
}

/// `center +- halfwidth` (or a bare center) as `(lower, upper)`.
fn uncertain(e: &Entry) -> Result<(f64, f64)> {
    let parts: Vec<&str> = if e.value.contains("+-") {
        e.value.split("+-").collect()
    } else {
        e.value.split('±').collect()
    };
    match parts.as_slice() {
        [c] => {
            let c = number(e.line, c)?;
            Ok((c, c))
        }
        [c, h] => {
            let c = number(e.line, c)?;
            let h = number(e.line, h)?;
            if h < 0.0 {
                return Err(err(e.line, "half-width must be nonnegative"));
            }
            Ok((c - h, c + h))
        }
        _ => Err(err(
            e.line,
            format!("malformed uncertain value '{}'", e.value),
        )),
    }
}

fn integer(e: &Entry) -> Result<usize> {
    e.value.parse().map_err(|_| {
        err(
            e.line,
            format!("expected a nonnegative integer, found '{}'", e.value),
        )
    })
}

fn list(e: &Entry) -> Result<Vec<f64>> {
    e.value.split(',').map(|s| number(e.line, s)).collect()
}

fn population(e: &Entry) -> Result<Population> {
    match e.value.to_ascii_lowercase().as_str() {
        "recomputed" => Ok(Population::Recomputed),
        "initial" => Ok(Population::Initial),
        other => Err(err(
            e.line,
            format!("population must be 'recomputed' or 'initial', found '{other}'"),
        )),
    }
}

struct Doc {
    sections: Sections,
}

impl Doc {
    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|m| m.get(key))
    }

    fn require(&self, section: &str, key: &str) -> Result<&Entry> {
        self.get(section, key)
            .ok_or_else(|| Error::Invalid(format!("missing '{key}' in [{section}]")))
    }
}

fn solver_config(doc: &Doc) -> Result<SolverConfig> {
    let mut c = SolverConfig::default();
    let Some(map) = doc.sections.get("solver") else {
        return Ok(c);
    };
    for (key, e) in map {
        match key.as_str() {
            "beta_schedule" => c.beta_schedule = list(e)?,
            "penalty_schedule" => c.penalty_schedule = list(e)?,
            "max_inner_iterations" => c.max_inner_iterations = integer(e)?,
            "step_min" => c.step_min = number(e.line, &e.value)?,
            "step_max" => c.step_max = number(e.line, &e.value)?,
            "armijo" => c.armijo = number(e.line, &e.value)?,
            "nonmonotone_memory" => c.nonmonotone_memory = integer(e)?,
            "gradient_tolerance" => c.gradient_tolerance = number(e.line, &e.value)?,
            "feasibility_tolerance" => c.feasibility_tolerance = number(e.line, &e.value)?,
            "polish_rounds" => c.polish_rounds = integer(e)?,
            "iter_max" => c.iter_max = integer(e)?,
            "restarts" => c.restarts = integer(e)?,
            "restart_scale" => c.restart_scale = number(e.line, &e.value)?,
            "population" => c.population = population(e)?,
            "warm_start" => {
                c.warm_start = match e.value.as_str() {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(err(
                            e.line,
                            format!("expected true or false, found '{other}'"),
                        ))
                    }
                }
            }
            "inclusion" => {
                c.reach.inclusion = e.value.parse::<Inclusion>().map_err(|x| err(e.line, x))?
            }
            "split" => {
                c.reach.split_dims = if e.value.is_empty() || e.value == "none" {
                    Vec::new()
                } else {
                    e.value
                        .split(',')
                        .map(|s| {
                            uncertain_dim_index(s.trim()).ok_or_else(|| {
                                err(e.line, format!("unknown split coordinate '{}'", s.trim()))
                            })
                        })
                        .collect::<Result<_>>()?
                }
            }
            "pieces" => c.reach.pieces = integer(e)?,
            "samples" => c.samples = integer(e)?,
            _ => unreachable!("keys are checked while tokenizing"),
        }
    }
    Ok(c)
}

/// Parses a scenario document; `name` labels the result.
pub fn parse_scenario(text: &str, name: &str) -> Result<Scenario> {
    let doc = Doc {
        sections: tokenize(text)?,
    };

    let model_kind = doc
        .get("model", "kind")
        .map(|e| e.value.parse::<ControlKind>())
        .transpose()?;
    let control_kind = doc
        .get("control", "kind")
        .map(|e| e.value.parse::<ControlKind>())
        .transpose()?;
    let kind = match (model_kind, control_kind) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::Invalid(format!(
                "model kind {a} disagrees with control kind {b}"
            )))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(Error::Invalid("missing 'kind' in [model]".into())),
    };

    let ts = number(
        doc.require("model", "Ts")?.line,
        &doc.require("model", "Ts")?.value,
    )?;
    let n0 = number(
        doc.require("model", "N0")?.line,
        &doc.require("model", "N0")?.value,
    )?;
    let mut model = Model::new(kind);
    if let Some(e) = doc.get("model", "substeps") {
        let n = integer(e)?;
        if n == 0 {
            return Err(err(e.line, "substeps must be at least 1"));
        }
        model = model.with_substeps(n);
    }
    if let Some(e) = doc.get("model", "population") {
        model = model.with_population(population(e)?);
    }

    let mut lo = [0.0; N_PARAMS];
    let mut hi = [0.0; N_PARAMS];
    for (k, name) in PARAM_NAMES.iter().enumerate() {
        (lo[k], hi[k]) = uncertain(doc.require("params", name)?)?;
    }
    let base = ModelParams {
        alpha: 0.0,
        beta: 0.0,
        epsilon: 0.0,
        gamma: 0.0,
        mu: 0.0,
        lambda: 0.0,
        n0,
        ts,
    };
    let theta = ParamBox::new(base.with_theta(lo), base.with_theta(hi))?;

    let mut xlo = [0.0; DIM];
    let mut xhi = [0.0; DIM];
    for (c, name) in COMPARTMENTS.iter().enumerate() {
        (xlo[c], xhi[c]) = uncertain(doc.require("initial_state", name)?)?;
    }
    let x0 = StateBox::new(State(xlo), State(xhi))?;

    let formula = parse(&doc.require("spec", "formula")?.value)?;
    let horizon = integer(doc.require("horizon", "days")?)?;
    let u_max = match doc.get("control", "u_max") {
        Some(e) => number(e.line, &e.value)?,
        None => default_u_max(kind),
    };
    let seed = match doc.get("seed", "value") {
        Some(e) => e
            .value
            .parse::<u64>()
            .map_err(|_| err(e.line, format!("invalid seed '{}'", e.value)))?,
        None => 0,
    };

    let scenario = Scenario {
        name: name.to_string(),
        model,
        x0,
        theta,
        formula,
        horizon,
        u_max,
        solver: solver_config(&doc)?,
        seed,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Reads and parses a scenario file, naming it after the file stem.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_scenario(&text, &name)
}

/// Names of the split coordinates, for reports.
pub fn split_names(dims: &[usize]) -> Vec<String> {
    dims.iter().map(|&d| uncertain_dim_name(d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::I;

    const BASE: &str = "\
[model]
kind = vaccination
Ts = 1
N0 = 10

[params]
alpha = 0.006 +- 0.001
beta = 0.75 ± 0.001
epsilon = 0.2 +- 0.001
gamma = 0.2 +- 0.001
mu = 1/30295
lambda = 1/30295

[initial_state]
I = 0.001 +- 0.001
E = 0.02 +- 0.001
S = 9.979 +- 0.001
R = 0
D = 0

[spec]
formula = G[0,10](I <= 0.3)

[horizon]
days = 20
";

    #[test]
    fn parses_minimal_document() {
        let s = parse_scenario(BASE, "t").unwrap();
        assert_eq!(s.horizon, 20);
        assert_eq!(s.u_max, 1.0);
        assert_eq!(s.x0.lower[I], 0.0);
        assert!((s.x0.upper[I] - 0.002).abs() < 1e-15);
        assert!((s.theta.upper.beta - 0.751).abs() < 1e-15);
        assert_eq!(s.theta.lower.mu, 1.0 / 30295.0);
    }

    #[test]
    fn rejects_unknown_key() {
        let text = BASE.replace("N0 = 10", "N0 = 10\ncolour = red");
        let e = parse_scenario(&text, "t").unwrap_err().to_string();
        assert!(e.contains("unknown key 'colour'"), "{e}");
    }

    #[test]
    fn rejects_unknown_section() {
        let text = format!("{BASE}\n[extras]\n");
        assert!(parse_scenario(&text, "t").is_err());
    }

    #[test]
    fn short_horizon_is_invalid() {
        let text = BASE.replace("days = 20", "days = 5");
        let e = parse_scenario(&text, "t").unwrap_err().to_string();
        assert!(e.contains("exceeds scenario horizon"), "{e}");
    }

    #[test]
    fn bad_formula_reports_position() {
        let text = BASE.replace("G[0,10](I <= 0.3)", "G[0,10](I <= 0.3");
        let e = parse_scenario(&text, "t").unwrap_err();
        assert!(matches!(e, Error::Parse(_)));
    }

    #[test]
    fn solver_overrides() {
        let text = format!(
            "{BASE}\n[solver]\nrestarts = 2\nsplit = I0, beta\npieces = 3\ninclusion = natural\nbeta_schedule = 1, 10\n[seed]\nvalue = 9\n"
        );
        let s = parse_scenario(&text, "t").unwrap();
        assert_eq!(s.solver.restarts, 2);
        assert_eq!(split_names(&s.solver.reach.split_dims), vec!["I0", "beta"]);
        assert_eq!(s.solver.reach.inclusion, Inclusion::Natural);
        assert_eq!(s.solver.beta_schedule, vec![1.0, 10.0]);
        assert_eq!(s.seed, 9);
    }

    #[test]
    fn conflicting_kinds_rejected() {
        let text = format!("{BASE}\n[control]\nkind = shield\n");
        assert!(parse_scenario(&text, "t").is_err());
    }
}
