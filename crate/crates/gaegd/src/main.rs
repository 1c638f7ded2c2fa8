//! Command-line harness for the energy-adaptive gradient methods.
//!
//! Subcommands: `run` one experiment, `tune` the base step size, `sweep-c`
//! across energy shifts, `verify` the invariant suite over a configuration
//! matrix, and `report` on stored results. Exit codes: 0 success, 1
//! invariant violation (from `verify`) or runtime failure, 2 usage error.

use clap::{Args, Parser, Subcommand};
use gaegd::bench::{self, BenchError, ExperimentSpec, PlotKind, RunResult, StopReason};
use gaegd::energy::EnergyFunction;
use gaegd::objectives::Objective;
use gaegd::optimizer::{Coupling, GaegdConfig, R0Policy, Trajectory};
use gaegd::theory::{self, TheoryError, TheoryInputs};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "gaegd",
    version,
    about = "Energy-adaptive gradient methods: runner, tuner, theory engine, and verifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment; writes result.json, trajectory.csv, theory.json.
    Run(RunArgs),
    /// Tune the base step size; writes grid.csv with every evaluated cell.
    Tune(TuneArgs),
    /// Tune at each shift value; writes sweep.csv.
    #[command(name = "sweep-c")]
    SweepC(SweepArgs),
    /// Check run invariants over a configuration matrix; exit 1 on any
    /// violation.
    Verify(VerifyArgs),
    /// Summarize stored run directories and emit plot data from their
    /// trajectories.
    Report(ReportArgs),
}

/// Flags shared by all subcommands. CLI values override config-file values.
#[derive(Args, Clone)]
struct CommonArgs {
    /// Objective: quad100, rosenbrock, or rosenbrock:<b>.
    #[arg(long)]
    objective: Option<String>,
    /// Algorithm: gaegd, aegd, alegd, aegd-ref, or gdm.
    #[arg(long)]
    algo: Option<String>,
    /// Energy for gaegd: power:<p> or log.
    #[arg(long)]
    energy: Option<String>,
    /// Base step size (learning rate for gdm).
    #[arg(long)]
    eta: Option<f64>,
    /// Energy shift c.
    #[arg(long)]
    c: Option<f64>,
    /// Target accuracy; omit to run to the iteration cap.
    #[arg(long)]
    target: Option<f64>,
    /// Accuracy metric: f-gap or grad-norm-sq.
    #[arg(long)]
    metric: Option<String>,
    /// Iteration cap.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Output directory (default `out`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// JSON spec file; flags given here override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also render self-contained SVG plots.
    #[arg(long)]
    svg: bool,
    /// Energy coupling: per-coordinate (default) or scalar.
    #[arg(long)]
    coupling: Option<String>,
    /// Explicit initial energy r0 (default: transformed start value).
    #[arg(long)]
    r0: Option<f64>,
    /// Heavy-ball momentum for gdm (default 0.9).
    #[arg(long)]
    momentum: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Wall-time averaging repeats (timing only; results are identical).
    #[arg(long)]
    timing_repeats: Option<usize>,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Explicit grid, comma separated (single-stage tuning).
    #[arg(long, value_delimiter = ',')]
    eta_grid: Option<Vec<f64>>,
    /// Two-stage tuning range (default per objective).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    eta_range: Option<Vec<f64>>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Shift values to sweep, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000")]
    c_values: Vec<f64>,
    /// Explicit grid, comma separated (single-stage tuning).
    #[arg(long, value_delimiter = ',')]
    eta_grid: Option<Vec<f64>>,
    /// Two-stage tuning range (default per objective).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    eta_range: Option<Vec<f64>>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Steps per verification run.
    #[arg(long, default_value_t = 1000)]
    steps: usize,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    common: CommonArgs,
}

fn build_spec(common: &CommonArgs) -> Result<ExperimentSpec, BenchError> {
    let mut spec = match &common.config {
        Some(path) => ExperimentSpec::from_json(&fs::read_to_string(path)?)?,
        None => ExperimentSpec::default(),
    };
    if let Some(v) = &common.objective {
        spec.objective = v.clone();
    }
    if let Some(v) = &common.algo {
        spec.algo = v.clone();
    }
    if let Some(v) = &common.energy {
        spec.energy = Some(v.clone());
    }
    if let Some(v) = common.eta {
        spec.eta = Some(v);
    }
    if let Some(v) = common.c {
        spec.c = v;
    }
    if let Some(v) = common.target {
        spec.target = Some(v);
    }
    if let Some(v) = &common.metric {
        spec.metric = v.parse()?;
    }
    if let Some(v) = common.max_iters {
        spec.max_iters = v;
    }
    if let Some(v) = &common.coupling {
        spec.coupling = match v.as_str() {
            "scalar" => Coupling::Scalar,
            "per-coordinate" => Coupling::PerCoordinate,
            other => return Err(BenchError::UnknownCoupling(other.to_string())),
        };
    }
    if let Some(v) = common.r0 {
        spec.r0 = Some(v);
    }
    if let Some(v) = common.momentum {
        spec.momentum = v;
    }
    if common.svg {
        spec.svg = true;
    }
    Ok(spec)
}

fn out_dir(common: &CommonArgs) -> PathBuf {
    common
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Theory inputs for a finished run; falls back to the empirical curvature
/// surrogate when the objective has no global Lipschitz constant.
fn theory_inputs_for(
    config: &GaegdConfig,
    obj: &Objective,
    x0: &[f64],
    trajectory: &Trajectory,
) -> Result<Option<TheoryInputs>, BenchError> {
    match TheoryInputs::from_config(config, obj, x0) {
        Ok(inputs) => Ok(Some(inputs)),
        Err(TheoryError::MissingLipschitz) => {
            let Some(lipschitz) = bench::lipschitz_surrogate(obj, trajectory) else {
                return Ok(None);
            };
            let f0 = obj.evaluate(x0);
            let r0 = match config.r0_policy {
                R0Policy::DefaultF0 => config.energy.value(f0 + config.c)?,
                R0Policy::Explicit(r0) => r0,
            };
            Ok(Some(TheoryInputs::new(
                config.eta,
                config.c,
                r0,
                f0,
                obj.f_star,
                lipschitz,
                config.energy.clone(),
            )?))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), BenchError> {
    let mut spec = build_spec(&args.common)?;
    if let Some(v) = args.timing_repeats {
        spec.timing_repeats = v;
    }
    let dir = out_dir(&args.common);
    let (result, trajectory) = bench::run_experiment(&spec, Some(&dir))?;

    if let Some(energy) = bench::resolved_energy(&spec)? {
        let obj = Objective::parse(&spec.objective)?;
        let x0 = spec.x0.clone().unwrap_or_else(|| obj.default_x0.clone());
        let config = bench::gaegd_config(&spec, energy)?;
        if let Some(inputs) = theory_inputs_for(&config, &obj, &x0, &trajectory)? {
            let eps = spec.target.unwrap_or(1e-3);
            match theory::full_report(&inputs, eps, Some(trajectory.min_r()), obj.pl_modulus) {
                Ok(report) => {
                    fs::write(
                        dir.join("theory.json"),
                        serde_json::to_string_pretty(&report)?,
                    )?;
                }
                Err(e) => eprintln!("note: theory.json skipped ({e})"),
            }
        }
    }

    if spec.svg {
        let label = spec.algo.clone();
        let runs = vec![(label, &trajectory)];
        for kind in [PlotKind::LossCurve, PlotKind::RCurve, PlotKind::EtaCurve] {
            bench::emit_plot_data(&runs, kind, &dir, true)?;
        }
        if trajectory.final_x.len() == 2 {
            bench::emit_plot_data(&runs, PlotKind::Trajectory2d, &dir, true)?;
        }
    }

    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(())
}

fn cmd_tune(args: &TuneArgs) -> Result<(), BenchError> {
    let mut spec = build_spec(&args.common)?;
    if let Some(grid) = &args.eta_grid {
        spec.eta_grid = Some(grid.clone());
    }
    if let Some(range) = &args.eta_range {
        spec.eta_range = Some([range[0], range[1]]);
    }
    let outcome = bench::tune_lr(&spec)?;
    let dir = out_dir(&args.common);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("grid.csv"), outcome.grid_csv())?;
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "best_eta": outcome.best_eta,
            "best_iterations": outcome.best_iterations,
            "best_final_f": outcome.best_final_f,
            "cells_evaluated": outcome.cells.len(),
            "grid_table": dir.join("grid.csv").display().to_string(),
        }))?
    );
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), BenchError> {
    let mut spec = build_spec(&args.common)?;
    if let Some(grid) = &args.eta_grid {
        spec.eta_grid = Some(grid.clone());
    }
    if let Some(range) = &args.eta_range {
        spec.eta_range = Some([range[0], range[1]]);
    }
    let rows = bench::sweep_c(&spec, &args.c_values);
    let dir = out_dir(&args.common);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("sweep.csv"), bench::sweep_csv(&rows))?;
    println!(
        "{:>12} {:>14} {:>12} {:>14}",
        "c", "best_eta", "iterations", "final_f"
    );
    for row in &rows {
        match &row.error {
            Some(e) => println!("{:>12} failed: {e}", row.c),
            None => println!(
                "{:>12} {:>14.4} {:>12} {:>14.3e}",
                row.c,
                row.best_eta.unwrap_or(f64::NAN),
                row.iterations
                    .map(|n| n.to_string())
                    .unwrap_or_else(|| "-".into()),
                row.final_f.unwrap_or(f64::NAN)
            ),
        }
    }
    Ok(())
}

struct VerifyOutcome {
    label: String,
    failures: Vec<String>,
}

fn verify_one(
    objective: &str,
    energy_name: &str,
    eta: f64,
    steps: usize,
    c: f64,
) -> Result<VerifyOutcome, BenchError> {
    let label = format!("{objective} {energy_name} eta={eta}");
    let spec = ExperimentSpec {
        objective: objective.to_string(),
        algo: "gaegd".to_string(),
        energy: Some(energy_name.to_string()),
        eta: Some(eta),
        c,
        coupling: Coupling::Scalar,
        target: None,
        max_iters: steps,
        ..ExperimentSpec::default()
    };
    let (_, trajectory) = bench::run_experiment(&spec, None)?;
    let obj = Objective::parse(objective)?;
    let energy = EnergyFunction::parse(energy_name)?;
    let config = bench::gaegd_config(&spec, energy.clone())?;

    let mut failures = Vec::new();
    // Unconditional invariants: hold for every admissible config.
    for (i, rec) in trajectory.records.iter().enumerate() {
        if rec.k != i {
            failures.push(format!("records not contiguous at {i}"));
            break;
        }
    }
    for pair in trajectory.records.windows(2) {
        if pair[1].r != pair[0].r_next {
            failures.push("energy chain broken between records".to_string());
            break;
        }
    }
    // Exact arithmetic keeps the energy positive; at extreme step sizes it
    // decays below the smallest positive f64 and rounds to +0.0. Zero is
    // accepted only as that underflow — a sign flip or NaN is a violation.
    for rec in &trajectory.records {
        if !(rec.r_next.is_finite() && rec.r_next >= 0.0) {
            failures.push(format!("energy lost positivity at k={}", rec.k));
            break;
        }
        if rec.r_next == 0.0 && rec.r > 1e-290 {
            failures.push(format!("energy hit zero at k={} without underflow", rec.k));
            break;
        }
    }
    if !trajectory.records.iter().all(|r| r.r_next <= r.r) {
        failures.push("energy increased".to_string());
    }
    let identity_tol = 1e-9 * trajectory.r0 * trajectory.r0;
    if trajectory.identity_residual_max > identity_tol {
        failures.push(format!(
            "per-step identity residual {:.3e} exceeds {:.3e}",
            trajectory.identity_residual_max, identity_tol
        ));
    }
    for rec in &trajectory.records {
        let big_f = energy.value(rec.f + c)?;
        let expected = eta * rec.r_next / big_f;
        if (rec.eta_eff - expected).abs() > 1e-15 * expected.abs().max(1e-300) {
            failures.push(format!("effective step mismatch at k={}", rec.k));
            break;
        }
    }
    // Conditional checks need a curvature constant: exact where the
    // objective has one, the trajectory surrogate otherwise (gap bound
    // only — the envelopes assume a globally valid constant).
    let exact_l = obj.lipschitz.is_some();
    if let Some(inputs) = theory_inputs_for(&config, &obj, &obj.default_x0, &trajectory)? {
        let gap = theory::gap_bound_check(&trajectory, &inputs)?;
        if gap > 1e-9 {
            failures.push(format!("gap-bound violation {gap:.3e}"));
        }
        if exact_l {
            let bounds = theory::stability_bounds(&inputs)?;
            let envelope = bench::envelope_violation(&trajectory, &inputs)?;
            let tol = 1e-9 * bounds.big_f_bar.abs();
            if envelope > tol {
                failures.push(format!(
                    "envelope violation {envelope:.3e} exceeds {tol:.3e}"
                ));
            }
        }
    }
    Ok(VerifyOutcome { label, failures })
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, BenchError> {
    let objectives: Vec<String> = match &args.common.objective {
        Some(o) => vec![o.clone()],
        None => vec!["quad100".to_string(), "rosenbrock".to_string()],
    };
    let energies: Vec<String> = match &args.common.energy {
        Some(e) => vec![e.clone()],
        None => ["power:0.1", "power:0.5", "power:0.9", "power:1.0", "log"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    };
    let etas: Vec<f64> = match args.common.eta {
        Some(eta) => vec![eta],
        None => vec![1e-3, 1.0, 1e3],
    };
    let c = args.common.c.unwrap_or(1.0);

    let mut all_ok = true;
    let mut checked = 0usize;
    for objective in &objectives {
        for energy in &energies {
            for &eta in &etas {
                let outcome = verify_one(objective, energy, eta, args.steps, c)?;
                checked += 1;
                if outcome.failures.is_empty() {
                    println!("[ok]        {}", outcome.label);
                } else {
                    all_ok = false;
                    for failure in &outcome.failures {
                        println!("[VIOLATION] {} — {failure}", outcome.label);
                    }
                }
            }
        }
    }
    println!(
        "{checked} configurations checked, {}",
        if all_ok {
            "no violations"
        } else {
            "violations found"
        }
    );
    Ok(all_ok)
}

fn cmd_report(args: &ReportArgs) -> Result<(), BenchError> {
    let dir = out_dir(&args.common);
    let mut rows: Vec<(String, RunResult, Option<Trajectory>)> = Vec::new();
    if dir.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir() && p.join("result.json").exists())
            .collect();
        entries.sort();
        if dir.join("result.json").exists() {
            entries.insert(0, dir.clone());
        }
        for entry in entries {
            let name = entry
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| entry.display().to_string());
            let result: RunResult =
                serde_json::from_str(&fs::read_to_string(entry.join("result.json"))?)?;
            let trajectory = fs::read_to_string(entry.join("trajectory.csv"))
                .ok()
                .and_then(|text| bench::parse_trajectory_csv(&text).ok());
            rows.push((name, result, trajectory));
        }
    }
    if rows.is_empty() {
        println!("no stored results under {}", dir.display());
        return Ok(());
    }

    println!(
        "{:<24} {:>14} {:>12} {:>14} {:>12}",
        "run", "stop", "iterations", "final_f", "seconds"
    );
    for (name, result, _) in &rows {
        println!(
            "{:<24} {:>14} {:>12} {:>14.3e} {:>12.4}",
            name,
            result.stop_reason.to_string(),
            result
                .iterations_to_target
                .map(|n| n.to_string())
                .unwrap_or_else(|| "-".into()),
            result.final_f,
            result.wall_time_secs
        );
        if result.stop_reason == StopReason::Divergence {
            println!("{:<24} (diverged; partial trajectory on disk)", "");
        }
    }

    let plots_dir = dir.join("plots");
    let labeled: Vec<(String, &Trajectory)> = rows
        .iter()
        .filter_map(|(name, _, t)| t.as_ref().map(|t| (name.clone(), t)))
        .collect();
    for kind in [PlotKind::LossCurve, PlotKind::RCurve, PlotKind::EtaCurve] {
        let files = bench::emit_plot_data(&labeled, kind, &plots_dir, args.common.svg)?;
        if !files.is_empty() {
            println!("wrote {} series files for {:?}", files.len(), kind);
        }
    }
    Ok(())
}

fn usage_error(err: &BenchError) -> bool {
    matches!(
        err,
        BenchError::UnknownAlgorithm(_)
            | BenchError::UnknownMetric(_)
            | BenchError::UnknownCoupling(_)
            | BenchError::UnknownPlotKind(_)
            | BenchError::MissingEta(_)
            | BenchError::MissingEnergy
            | BenchError::EmptyGrid
            | BenchError::InvalidGridPoint(_)
            | BenchError::Json(_)
            | BenchError::Objective(_)
            | BenchError::Energy(_)
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Tune(args) => cmd_tune(args),
        Command::SweepC(args) => cmd_sweep(args),
        Command::Verify(args) => {
            return match cmd_verify(args) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::from(1),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(if usage_error(&e) { 2 } else { 1 })
                }
            }
        }
        Command::Report(args) => cmd_report(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if usage_error(&e) { 2 } else { 1 })
        }
    }
}
