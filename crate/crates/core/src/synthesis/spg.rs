//! Spectral projected gradient on the unit box with a nonmonotone Armijo search.

use crate::error::{Error, Result};

/// Step-size rule parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SpgOptions {
    pub max_iterations: usize,
    pub step_min: f64,
    pub step_max: f64,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    /// Number of past objective values the Armijo test compares against.
    pub memory: usize,
    /// Stop once the projected-gradient step is below this (infinity norm).
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpgOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` over `[0, 1]^n` starting from `x0`; `f` returns value and gradient.
pub fn minimize<F>(mut f: F, x0: &[f64], opt: &SpgOptions) -> Result<SpgOutcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut x = x0.to_vec();
    project(&mut x);
    let (mut fx, mut g) = f(&x)?;
    if !fx.is_finite() {
        return Err(Error::Solver(format!(
            "non-finite objective at the initial iterate: {fx}"
        )));
    }
    let n = x.len();
    let mut history = vec![fx];
    let mut trial = vec![0.0; n];
    let mut d = vec![0.0; n];

    let pg_norm = |x: &[f64], g: &[f64], step: f64, d: &mut [f64]| {
        let mut m: f64 = 0.0;
        for i in 0..x.len() {
            d[i] = (x[i] - step * g[i]).clamp(0.0, 1.0) - x[i];
            m = m.max(d[i].abs());
        }
        m
    };

    let unit = pg_norm(&x, &g, 1.0, &mut d);
    if unit <= opt.tolerance {
        return Ok(SpgOutcome {
            x,
            value: fx,
            iterations: 0,
            converged: true,
        });
    }
    let mut step = (1.0 / unit).clamp(opt.step_min, opt.step_max);

    for it in 0..opt.max_iterations {
        if pg_norm(&x, &g, 1.0, &mut d) <= opt.tolerance {
            return Ok(SpgOutcome {
                x,
                value: fx,
                iterations: it,
                converged: true,
            });
        }
        pg_norm(&x, &g, step, &mut d);
        let gd = dot(&g, &d);
        let reference = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            for i in 0..n {
                trial[i] = x[i] + lambda * d[i];
            }
            let (ft, gt) = f(&trial)?;
            if ft.is_finite() && ft <= reference + opt.armijo * lambda * gd {
                accepted = Some((ft, gt));
                break;
            }
            // safeguarded quadratic backtracking
            let q = if ft.is_finite() {
                -0.5 * gd * lambda * lambda / (ft - fx - lambda * gd)
            } else {
                0.1 * lambda
            };
            lambda = if q >= 0.1 * lambda && q <= 0.5 * lambda {
                q
            } else {
                0.5 * lambda
            };
        }
        let Some((ft, gt)) = accepted else {
            return Ok(SpgOutcome {
                x,
                value: fx,
                iterations: it,
                converged: false,
            });
        };
        let mut sts = 0.0;
        let mut sty = 0.0;
        for i in 0..n {
            let s = trial[i] - x[i];
            sts += s * s;
            sty += s * (gt[i] - g[i]);
        }
        x.copy_from_slice(&trial);
        fx = ft;
        g = gt;
        step = if sty <= 0.0 {
            opt.step_max
        } else {
            (sts / sty).clamp(opt.step_min, opt.step_max)
        };
        history.push(fx);
        if history.len() > opt.memory.max(1) {
            history.remove(0);
        }
    }
    let converged = pg_norm(&x, &g, 1.0, &mut d) <= opt.tolerance;
    Ok(SpgOutcome {
        x,
        value: fx,
        iterations: opt.max_iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn options() -> SpgOptions {
        SpgOptions {
            max_iterations: 500,
            step_min: 1e-10,
            step_max: 1e10,
            armijo: 1e-4,
            memory: 10,
            tolerance: 1e-10,
        }
    }

    #[test]
    fn interior_quadratic_minimum() {
        let c = [0.2, 0.7, 0.5];
        let f = |x: &[f64]| {
            let v = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b) * 3.0).sum();
            let g = x.iter().zip(&c).map(|(a, b)| 6.0 * (a - b)).collect();
            Ok((v, g))
        };
        let out = minimize(f, &[1.0, 0.0, 1.0], &options()).unwrap();
        assert!(out.converged);
        for (a, b) in out.x.iter().zip(&c) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn active_bounds_are_respected() {
        // minimum of (x+1)^2 + (y-2)^2 on the unit box is (0, 1)
        let f = |x: &[f64]| {
            Ok((
                (x[0] + 1.0).powi(2) + (x[1] - 2.0).powi(2),
                vec![2.0 * (x[0] + 1.0), 2.0 * (x[1] - 2.0)],
            ))
        };
        let out = minimize(f, &[0.5, 0.5], &options()).unwrap();
        assert_eq!(out.x, vec![0.0, 1.0]);
    }

    #[test]
    fn ill_conditioned_rosenbrock_in_box() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            Ok((v, g))
        };
        let opt = SpgOptions {
            max_iterations: 5000,
            ..options()
        };
        let out = minimize(f, &[0.0, 0.0], &opt).unwrap();
        assert!(out.value < 1e-8, "{}", out.value);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let f = |_: &[f64]| Ok((f64::NAN, vec![0.0]));
        assert!(minimize(f, &[0.0], &options()).is_err());
    }
}
