//! `qlaw`: run, tune and check low-thrust orbit transfers from JSON scenarios.

mod artifacts;
mod plot;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use qlaw::guidance::LawKind;
use qlaw::propagator::{propagate, RunSummary};
use qlaw::scenario_file::{preset, ScenarioFile, PRESET_NAMES};
use qlaw::tuner::{pareto_sweep, pso_optimize, PsoParams, SearchSpace, TunedParam};
use qlaw::validate::run_all;
use qlaw::QlawError;

use artifacts::{read_trajectory, write_json, write_plots, write_trajectory, SummaryFile, CSV_COLUMNS};

fn after_help() -> String {
    format!(
        "\
Scenarios are JSON files (angles in degrees) or one of the built-in presets \
caseA, caseB, caseC (a missing file named caseA.json also resolves to the preset).

propagate --out DIR writes:
  trajectory.csv  header row, comma-separated, dot decimal; columns in order:
                  {CSV_COLUMNS}
  summary.json    run summary (final_elements in radians) and the fully resolved scenario
  plots/*.svg     element histories, V and dV/dt, effectivity, equatorial projection

Exit status: 0 success, 1 error (JSON object on stderr), 2 run did not converge."
    )
}

#[derive(Parser)]
#[command(name = "qlaw", version, about = "Q-law low-thrust orbit transfer guidance", after_help = after_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop transfer.
    Propagate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory for trajectory.csv, summary.json and plots.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tune the Lyapunov weights with particle swarm optimization.
    Tune {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        pso: PsoArgs,
        /// Output directory for tune_result.json, tune_log.csv and tuned_scenario.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Tune at several effectivity thresholds and report the time/propellant front.
    Pareto {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        pso: PsoArgs,
        /// Comma-separated effectivity thresholds in [0, 1), ascending.
        #[arg(long, value_delimiter = ',', default_value = "0,0.3,0.6")]
        thresholds: Vec<f64>,
        /// Output directory for pareto.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the numerical oracle suites and print pass/fail per suite.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Regenerate the SVG plots from an existing trajectory.csv.
    Report {
        /// Path to trajectory.csv.
        #[arg(long)]
        trajectory: PathBuf,
        /// Output directory (plots go to OUT/plots); defaults to the CSV's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON file or preset name.
    #[arg(long)]
    scenario: String,
    /// Guidance law: classic or modified.
    #[arg(long)]
    law: Option<LawKind>,
    /// Effectivity threshold in [0, 1).
    #[arg(long)]
    eta: Option<f64>,
    /// Lyapunov weights for a, e, i, e.g. 1,0.5,2.
    #[arg(long, value_parser = parse_weights)]
    weights: Option<[f64; 3]>,
    /// Integrator step [s].
    #[arg(long)]
    step_s: Option<f64>,
    /// Run length limit [days].
    #[arg(long)]
    max_days: Option<f64>,
}

#[derive(Args)]
struct PsoArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = PsoParams::default().swarm)]
    swarm: usize,
    #[arg(long, default_value_t = PsoParams::default().iterations)]
    iterations: usize,
    /// Also tune the modified law's semi-major-axis guard factor.
    #[arg(long)]
    tune_zeta: bool,
}

impl PsoArgs {
    fn params(&self) -> PsoParams {
        PsoParams {
            swarm: self.swarm,
            iterations: self.iterations,
            ..Default::default()
        }
    }
}

fn parse_weights(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated weights a,e,i, got {s:?}"));
    }
    let mut w = [0.0; 3];
    for (slot, p) in w.iter_mut().zip(&parts) {
        *slot = p.parse::<f64>().map_err(|e| format!("weight {p:?}: {e}"))?;
    }
    Ok(w)
}

/// A run that ended without meeting its targets.
#[derive(Debug)]
struct DidNotConverge(RunSummary);

impl std::fmt::Display for DidNotConverge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "did not converge: {}", self.0.termination.name())
    }
}

impl std::error::Error for DidNotConverge {}

fn load_scenario(args: &ScenarioArgs) -> Result<ScenarioFile> {
    let path = Path::new(&args.scenario);
    let mut file = if path.exists() {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        ScenarioFile::from_json(&text)?
    } else {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        preset(stem).ok_or_else(|| {
            anyhow!(
                "scenario {:?} is neither a file nor a preset ({})",
                args.scenario,
                PRESET_NAMES.join(", ")
            )
        })?
    };
    if let Some(law) = args.law {
        file.set_law(law);
    }
    if let Some(eta) = args.eta {
        file.set_eta_threshold(eta);
    }
    if let Some([a, e, i]) = args.weights {
        file.set_weights(a, e, i);
    }
    if let Some(step) = args.step_s {
        file.set_step_s(step);
    }
    if let Some(days) = args.max_days {
        file.set_max_days(days);
    }
    Ok(file.resolved())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn cmd_propagate(args: &ScenarioArgs, out: Option<&Path>) -> Result<()> {
    let file = load_scenario(args)?;
    let scenario = file.to_scenario()?;
    let (trajectory, summary) = propagate(&scenario)?;
    let bundle = SummaryFile {
        summary,
        recorded_samples: trajectory.len(),
        scenario: file,
    };
    if let Some(dir) = out {
        create_dir(dir)?;
        write_trajectory(&dir.join("trajectory.csv"), &trajectory)?;
        write_json(&dir.join("summary.json"), &bundle)?;
        let rows = read_trajectory(&dir.join("trajectory.csv"))?;
        write_plots(dir, &rows)?;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "scenario": bundle.scenario.name,
            "law": bundle.scenario.law().name(),
            "summary": summary,
        }))?
    );
    if !summary.converged {
        return Err(DidNotConverge(summary).into());
    }
    Ok(())
}

fn cmd_tune(args: &ScenarioArgs, pso: &PsoArgs, out: &Path) -> Result<()> {
    let file = load_scenario(args)?;
    let scenario = file.to_scenario()?;
    let mut space = SearchSpace::weights_for(&scenario);
    if pso.tune_zeta {
        space = space.with_zeta();
    }
    let result = pso_optimize(&scenario, &space, &pso.params(), pso.seed)?;

    create_dir(out)?;
    write_json(&out.join("tune_result.json"), &result)?;
    let mut log = csv::Writer::from_path(out.join("tune_log.csv"))?;
    for entry in &result.log {
        log.serialize(entry)?;
    }
    log.flush()?;

    let mut tuned = file.clone();
    let w = result.best_weights;
    tuned.set_weights(w.a, w.e, w.i);
    if result.best_params.iter().any(|(p, _)| *p == TunedParam::Zeta) {
        tuned.set_zeta(result.best_zeta);
    }
    fs::write(out.join("tuned_scenario.json"), tuned.resolved().to_json() + "\n")?;

    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "best_params": result.best_params,
            "best_objective": result.best_objective,
            "incumbent_objective": result.incumbent_objective,
            "evaluations": result.evaluations,
            "transfer_days": result.best_summary.transfer_days,
            "propellant_kg": result.best_summary.propellant_kg,
            "converged": result.best_summary.converged,
        }))?
    );
    Ok(())
}

fn cmd_pareto(args: &ScenarioArgs, pso: &PsoArgs, thresholds: &[f64], out: &Path) -> Result<()> {
    let file = load_scenario(args)?;
    let scenario = file.to_scenario()?;
    let mut space = SearchSpace::weights_for(&scenario);
    if pso.tune_zeta {
        space = space.with_zeta();
    }
    let sweep = pareto_sweep(&scenario, thresholds, &space, &pso.params(), pso.seed)?;

    create_dir(out)?;
    let mut w = csv::Writer::from_path(out.join("pareto.csv"))?;
    w.write_record([
        "eta_threshold",
        "transfer_days",
        "propellant_kg",
        "w_a",
        "w_e",
        "w_i",
        "zeta",
        "converged",
        "on_front",
    ])?;
    for p in &sweep.points {
        let on_front = sweep.front.contains(p);
        w.write_record([
            p.eta_threshold.to_string(),
            p.transfer_days.to_string(),
            p.propellant_kg.to_string(),
            p.weights.a.to_string(),
            p.weights.e.to_string(),
            p.weights.i.to_string(),
            p.zeta.to_string(),
            (p.converged as u8).to_string(),
            (on_front as u8).to_string(),
        ])?;
    }
    w.flush()?;
    for p in &sweep.points {
        println!(
            "eta {:.2}: {:>9.3} days {:>9.3} kg {}{}",
            p.eta_threshold,
            p.transfer_days,
            p.propellant_kg,
            if p.converged { "converged" } else { "not converged" },
            if sweep.front.contains(p) { ", on front" } else { "" }
        );
    }
    Ok(())
}

fn cmd_validate(seed: u64) -> Result<()> {
    let reports = run_all(seed);
    for r in &reports {
        println!(
            "{} {:<22} {:>7.2} s  {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.elapsed_s,
            r.detail
        );
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    if !failed.is_empty() {
        bail!("validation failed: {}", failed.join(", "));
    }
    Ok(())
}

fn cmd_report(trajectory: &Path, out: Option<&Path>) -> Result<()> {
    let rows = read_trajectory(trajectory)?;
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => trajectory.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    for path in write_plots(&dir, &rows)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn error_json(err: &anyhow::Error) -> (serde_json::Value, u8) {
    if let Some(DidNotConverge(s)) = err.downcast_ref::<DidNotConverge>() {
        return (
            json!({
                "error": "did-not-converge",
                "termination": s.termination.name(),
                "elapsed_days": s.transfer_days,
                "min_periapsis_km": s.min_periapsis_km,
            }),
            2,
        );
    }
    let value = match err.downcast_ref::<QlawError>() {
        Some(QlawError::Config { key, msg }) => json!({"error": "config", "key": key, "message": msg}),
        Some(QlawError::ScenarioFile(msg)) => json!({"error": "scenario-file", "message": msg}),
        Some(other) => json!({"error": "qlaw", "message": other.to_string()}),
        None => json!({"error": "runtime", "message": format!("{err:#}")}),
    };
    (value, 1)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Propagate { scenario, out } => cmd_propagate(scenario, out.as_deref()),
        Command::Tune { scenario, pso, out } => cmd_tune(scenario, pso, out),
        Command::Pareto {
            scenario,
            pso,
            thresholds,
            out,
        } => cmd_pareto(scenario, pso, thresholds, out),
        Command::Validate { seed } => cmd_validate(*seed),
        Command::Report { trajectory, out } => cmd_report(trajectory, out.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (value, code) = error_json(&err);
            eprintln!("{value}");
            ExitCode::from(code)
        }
    }
}
