//! CSV and JSON artifacts of a run.
//!
//! Numbers are written with nine significant digits so that repeated runs diff
//! cleanly; the first CSV column is the integer time index `day`.

use serde::Serialize;
use serde_json::Value;

use crate::dynamics::ControlKind;
use crate::error::{Error, Result};
use crate::logic::RobustnessInterval;
use crate::synthesis::{IterationRecord, Scenario, SynthesisResult, WarmStart};
use crate::trajectory::{
    compartment_index, IntervalTrajectory, State, Trajectory, COMPARTMENTS, DIM,
};

const DIGITS: i32 = 9;

/// Formats `x` like C's `%.9g`.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x` rounded to nine significant digits.
pub fn round_significant(x: f64) -> f64 {
    if x.is_finite() {
        format_number(x).parse().unwrap_or(x)
    } else {
        x
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Invalid(format!("csv: {e}"))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Invalid(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `day,u` with one row per control step.
pub fn control_csv(u: &[f64]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["day", "u"]).map_err(csv_error)?;
    for (k, v) in u.iter().enumerate() {
        w.write_record([k.to_string(), format_number(*v)])
            .map_err(csv_error)?;
    }
    finish(w)
}

/// Reads the `u` column of a control CSV.
pub fn read_control_csv(text: &str) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(csv_error)?.clone();
    let col = headers
        .iter()
        .position(|h| h.trim() == "u")
        .ok_or_else(|| Error::Invalid("control csv has no 'u' column".into()))?;
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let field = rec
            .get(col)
            .ok_or_else(|| Error::Invalid(format!("control csv row {}: missing 'u'", row + 1)))?;
        out.push(parse_field(field, row + 1)?);
    }
    Ok(out)
}

fn parse_field(field: &str, row: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::Invalid(format!("csv row {row}: invalid number '{field}'")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Invalid(format!(
            "csv row {row}: non-finite value '{field}'"
        )))
    }
}

/// `day,I,E,S,R,D` for a point trajectory.
pub fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["day".to_string()];
    header.extend(COMPARTMENTS.iter().map(|c| c.to_string()));
    w.write_record(&header).map_err(csv_error)?;
    for (k, x) in traj.states.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(x.0.iter().map(|v| format_number(*v)));
        w.write_record(&row).map_err(csv_error)?;
    }
    finish(w)
}

/// Lower, nominal and upper value of every compartment per day.
pub fn interval_trajectory_csv(xi: &IntervalTrajectory, nominal: &Trajectory) -> Result<String> {
    if nominal.len() != xi.len() {
        return Err(Error::Invalid(format!(
            "nominal trajectory has {} samples, interval trajectory {}",
            nominal.len(),
            xi.len()
        )));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["day".to_string()];
    for c in COMPARTMENTS {
        header.extend([
            format!("{c}_lower"),
            format!("{c}_nominal"),
            format!("{c}_upper"),
        ]);
    }
    w.write_record(&header).map_err(csv_error)?;
    for k in 0..xi.len() {
        let mut row = vec![k.to_string()];
        for c in 0..DIM {
            row.extend([
                format_number(xi.lower.states[k][c]),
                format_number(nominal.states[k][c]),
                format_number(xi.upper.states[k][c]),
            ]);
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    finish(w)
}

/// Reads a point trajectory. Columns are matched to compartments by header name;
/// absent compartments read as zero and are left out of the returned index list.
pub fn read_trajectory_csv(text: &str, step: f64) -> Result<(Trajectory, Vec<usize>)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(csv_error)?.clone();
    let columns: Vec<(usize, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(pos, h)| compartment_index(h.trim()).map(|c| (pos, c)))
        .collect();
    if columns.is_empty() {
        return Err(Error::Invalid(format!(
            "trajectory csv has none of the columns {}",
            COMPARTMENTS.join(", ")
        )));
    }
    let mut states = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let mut x = State::default();
        for &(pos, c) in &columns {
            let field = rec.get(pos).ok_or_else(|| {
                Error::Invalid(format!("trajectory csv row {}: too few fields", row + 1))
            })?;
            x[c] = parse_field(field, row + 1)?;
        }
        states.push(x);
    }
    let mut present: Vec<usize> = columns.iter().map(|p| p.1).collect();
    present.sort_unstable();
    present.dedup();
    Ok((Trajectory::new(states, step), present))
}

/// Copy of `v` with every number rounded to nine significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if !(n.is_i64() || n.is_u64()) => {
                serde_json::Number::from_f64(round_significant(x))
                    .map_or(Value::Null, Value::Number)
            }
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with rounded numbers and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Invalid(format!("json: {e}")))?;
    let mut s = serde_json::to_string_pretty(&round_json(v))
        .map_err(|e| Error::Invalid(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Summary written next to the control and trajectory CSVs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthesisReport {
    pub scenario: String,
    pub kind: ControlKind,
    pub formula: String,
    pub horizon: usize,
    pub seed: u64,
    pub inclusion: String,
    pub certified: bool,
    pub control_effort: f64,
    pub interval_robustness: RobustnessInterval,
    pub delta_max: f64,
    pub outer_iterations: usize,
    pub warm_start: Option<WarmStart>,
    pub iterations: Vec<IterationRecord>,
    /// Seconds spent in synthesis; the only field that varies between identical runs.
    pub wall_clock_seconds: f64,
}

impl SynthesisReport {
    pub fn new(scenario: &Scenario, result: &SynthesisResult, wall_clock_seconds: f64) -> Self {
        SynthesisReport {
            scenario: scenario.name.clone(),
            kind: scenario.model.kind,
            formula: scenario.formula.to_string(),
            horizon: scenario.horizon,
            seed: scenario.seed,
            inclusion: scenario.solver.reach.inclusion.to_string(),
            certified: result.certified,
            control_effort: result.control_effort,
            interval_robustness: result.interval_robustness,
            delta_max: result.delta_max,
            outer_iterations: result.iterations.len(),
            warm_start: result.warm_start.clone(),
            iterations: result.iterations.clone(),
            wall_clock_seconds,
        }
    }
}

/// File contents of a synthesis run, keyed by file name.
pub struct RunArtifacts {
    pub control_csv: String,
    pub trajectory_csv: String,
    pub report_json: String,
}

impl RunArtifacts {
    pub fn new(
        scenario: &Scenario,
        result: &SynthesisResult,
        wall_clock_seconds: f64,
    ) -> Result<Self> {
        Ok(RunArtifacts {
            control_csv: control_csv(&result.u.values)?,
            trajectory_csv: interval_trajectory_csv(&result.interval_trajectory, &result.nominal)?,
            report_json: to_json(&SynthesisReport::new(scenario, result, wall_clock_seconds))?,
        })
    }

    pub fn files(&self) -> [(&'static str, &str); 3] {
        [
            ("control.csv", &self.control_csv),
            ("trajectory.csv", &self.trajectory_csv),
            ("report.json", &self.report_json),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(0.1 + 0.2), "0.3");
        assert_eq!(format_number(1234567890.0), "1.23456789e+09");
        assert_eq!(format_number(123456789.0), "123456789");
        assert_eq!(format_number(0.000123456789123), "0.000123456789");
        assert_eq!(format_number(0.0000123456789123), "1.23456789e-05");
        assert_eq!(format_number(-2.5), "-2.5");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333");
        assert_eq!(format_number(9.9999999999), "10");
    }

    #[test]
    fn control_round_trip() {
        let u = vec![0.0, 0.25, 1.0 / 3.0];
        let text = control_csv(&u).unwrap();
        assert!(text.starts_with("day,u\n0,0\n1,0.25\n"));
        let back = read_control_csv(&text).unwrap();
        assert_eq!(back.len(), 3);
        assert!((back[2] - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn control_rejects_garbage() {
        assert!(read_control_csv("day,v\n0,1\n").is_err());
        assert!(read_control_csv("day,u\n0,abc\n").is_err());
        assert!(read_control_csv("day,u\n0,inf\n").is_err());
    }

    #[test]
    fn partial_trajectory_columns() {
        let (t, present) = read_trajectory_csv("day,I\n0,0.2\n1,0.25\n", 1.0).unwrap();
        assert_eq!(present, vec![0]);
        assert_eq!(t.len(), 2);
        assert_eq!(t.states[1].0, [0.25, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn trajectory_round_trip() {
        let t = Trajectory::new(vec![State::new(0.1, 0.2, 9.7, 0.0, 0.0); 3], 1.0);
        let text = trajectory_csv(&t).unwrap();
        let (back, present) = read_trajectory_csv(&text, 1.0).unwrap();
        assert_eq!(present, vec![0, 1, 2, 3, 4]);
        assert_eq!(back, t);
    }

    #[test]
    fn json_numbers_are_rounded() {
        let v = serde_json::json!({"a": 0.1 + 0.2, "b": [1.0 / 3.0, 7], "c": f64::NAN});
        let s = to_json(&v).unwrap();
        assert!(s.contains("0.3,") || s.contains("0.3\n"));
        assert!(s.contains("0.333333333"));
        assert!(s.contains("null"));
    }
}
