use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use seir_mtl::artifacts::{
    format_number, read_control_csv, read_trajectory_csv, to_json, trajectory_csv, RunArtifacts,
};
use seir_mtl::logic::{parse, robustness};
use seir_mtl::reach::Inclusion;
use seir_mtl::scenario::load_scenario;
use seir_mtl::synthesis::{synthesize, verify, Scenario};
use seir_mtl::trajectory::COMPARTMENTS;

/// Robust vaccination and shield-immunity control for an uncertain SEIR model.
///
/// Exit status: 0 when certified or satisfied, 2 when not, 1 on error.
#[derive(Parser)]
#[command(name = "seir-mtl", version)]
struct Cli {
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the reachability inclusion (natural, centered or affine).
    #[arg(long, global = true)]
    mode: Option<Inclusion>,
    /// Overrides the number of Monte-Carlo samples used by `verify`.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a certified control and write control.csv, trajectory.csv and report.json.
    Synthesize {
        scenario: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Re-check a control: interval robustness, delta_max and sampled trajectories.
    Verify {
        scenario: PathBuf,
        /// Control CSV with a `u` column.
        #[arg(short = 'u', long)]
        control: PathBuf,
        /// Where to write the JSON report (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Simulate the nominal model from the box midpoints.
    Simulate {
        scenario: PathBuf,
        #[arg(
            short = 'u',
            long,
            conflicts_with = "zero",
            required_unless_present = "zero"
        )]
        control: Option<PathBuf>,
        /// Use the zero control.
        #[arg(long)]
        zero: bool,
        /// Directory for trajectory.csv and simulation.json (default: CSV on stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Robustness of a formula over a trajectory CSV.
    Robustness {
        #[arg(short, long)]
        spec: String,
        #[arg(short, long)]
        trajectory: PathBuf,
        #[arg(long, default_value_t = 0)]
        at: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn scenario(cli: &Cli, path: &Path) -> Result<Scenario> {
    let mut s =
        load_scenario(path).with_context(|| format!("loading scenario {}", path.display()))?;
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    if let Some(mode) = cli.mode {
        s.solver.reach.inclusion = mode;
    }
    if let Some(n) = cli.samples {
        s.solver.samples = n;
    }
    s.validate()?;
    Ok(s)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn control(s: &Scenario, path: &Path) -> Result<Vec<f64>> {
    let u =
        read_control_csv(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    if u.len() != s.horizon {
        bail!(
            "{} has {} control values, the scenario horizon is {}",
            path.display(),
            u.len(),
            s.horizon
        );
    }
    Ok(u)
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Synthesize {
            scenario: path,
            output,
        } => {
            let s = scenario(cli, path)?;
            let start = Instant::now();
            let result = synthesize(&s)?;
            let elapsed = start.elapsed().as_secs_f64();
            fs::create_dir_all(output).with_context(|| format!("creating {}", output.display()))?;
            for (name, text) in RunArtifacts::new(&s, &result, elapsed)?.files() {
                write(&output.join(name), text)?;
            }
            println!(
                "{}: certified={} effort={} robustness=[{}, {}] delta_max={} outer_iterations={} time={:.2}s",
                s.name,
                result.certified,
                format_number(result.control_effort),
                format_number(result.interval_robustness.lo),
                format_number(result.interval_robustness.hi),
                format_number(result.delta_max),
                result.iterations.len(),
                elapsed
            );
            Ok(result.certified)
        }
        Command::Verify {
            scenario: path,
            control: csv,
            output,
        } => {
            let s = scenario(cli, path)?;
            let u = control(&s, csv)?;
            let report = verify(&s, &u, s.solver.samples)?;
            let text = to_json(&report)?;
            match output {
                Some(p) => write(p, &text)?,
                None => print!("{text}"),
            }
            eprintln!(
                "{}: satisfied={} robustness=[{}, {}] sampled_min={}",
                s.name,
                report.satisfied,
                format_number(report.interval_robustness.lo),
                format_number(report.interval_robustness.hi),
                format_number(report.sampled_min_robustness)
            );
            Ok(report.satisfied)
        }
        Command::Simulate {
            scenario: path,
            control: csv,
            zero,
            output,
        } => {
            let s = scenario(cli, path)?;
            let u = match csv {
                Some(p) if !zero => control(&s, p)?,
                _ => vec![0.0; s.horizon],
            };
            let sim = s
                .model
                .simulate(&s.x0.midpoint(), &u, &s.theta.midpoint(), s.horizon)?;
            let traj = &sim.trajectory;
            let rho = robustness(traj, &s.formula, 0)?;
            let n0 = traj.states[0].total();
            let drift = traj
                .states
                .iter()
                .map(|x| (x.total() - n0).abs())
                .fold(0.0, f64::max);
            let negatives: Vec<_> = sim
                .negatives
                .iter()
                .map(|&(k, c, v)| json!({"day": k, "compartment": COMPARTMENTS[c], "value": v}))
                .collect();
            let report = json!({
                "scenario": s.name,
                "robustness": rho,
                "satisfied": rho >= 0.0,
                "max_conservation_drift": drift,
                "negative_compartments": negatives,
            });
            let csv_text = trajectory_csv(traj)?;
            match output {
                Some(dir) => {
                    fs::create_dir_all(dir)
                        .with_context(|| format!("creating {}", dir.display()))?;
                    write(&dir.join("trajectory.csv"), &csv_text)?;
                    write(&dir.join("simulation.json"), &to_json(&report)?)?;
                }
                None => print!("{csv_text}"),
            }
            if !sim.negatives.is_empty() {
                eprintln!(
                    "warning: {} negative compartment values",
                    sim.negatives.len()
                );
            }
            eprintln!(
                "{}: robustness={} satisfied={}",
                s.name,
                format_number(rho),
                rho >= 0.0
            );
            Ok(rho >= 0.0)
        }
        Command::Robustness {
            spec,
            trajectory,
            at,
        } => {
            let formula = parse(spec).with_context(|| format!("parsing formula '{spec}'"))?;
            let (traj, present) = read_trajectory_csv(&read(trajectory)?, 1.0)
                .with_context(|| format!("parsing {}", trajectory.display()))?;
            if let Some(p) = formula.atoms().iter().find(|p| !present.contains(&p.coord)) {
                bail!(
                    "{} has no column {}",
                    trajectory.display(),
                    COMPARTMENTS[p.coord]
                );
            }
            let rho = robustness(&traj, &formula, *at)?;
            println!("{rho}");
            Ok(rho >= 0.0)
        }
    }
}
