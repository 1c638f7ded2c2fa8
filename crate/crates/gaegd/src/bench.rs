//! Experiment harness: run specifications, step-size tuning, shift sweeps,
//! per-step diagnostics, and plot-data emission.
//!
//! Everything here is deterministic: the optimizer core has no randomness,
//! so identical specifications produce bit-identical trajectory CSVs. Wall
//! times are measured (optionally averaged over repeats) and reported, but
//! never asserted anywhere — they are hardware facts, not invariants.

use crate::energy::{EnergyError, EnergyFunction};
use crate::objectives::{Objective, ObjectiveError};
use crate::optimizer::{
    self, aegd_reference_step, gdm_step, Coupling, GaegdConfig, GaegdError, R0Policy, StepRecord,
    Trajectory,
};
use crate::theory::{gap_bound_check, TheoryError, TheoryInputs, TheoryReport};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;
use thiserror::Error;

/// Errors from the harness.
#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Optimizer(#[from] GaegdError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("unknown algorithm `{0}` (expected gaegd, aegd, alegd, aegd-ref, or gdm)")]
    UnknownAlgorithm(String),
    #[error("unknown accuracy metric `{0}` (expected f-gap or grad-norm-sq)")]
    UnknownMetric(String),
    #[error("unknown coupling `{0}` (expected scalar or per-coordinate)")]
    UnknownCoupling(String),
    #[error("unknown plot kind `{0}` (expected loss-curve, r-curve, eta-curve, or trajectory-2d)")]
    UnknownPlotKind(String),
    #[error("algorithm `{0}` needs a base step size; set `eta` or run `tune`")]
    MissingEta(String),
    #[error("algorithm `gaegd` needs an energy name (power:<p> or log)")]
    MissingEnergy,
    #[error("tuning grid must contain positive, finite step sizes, got {0}")]
    InvalidGridPoint(f64),
    #[error("tuning grid is empty")]
    EmptyGrid,
    #[error("no grid point reached the target; see the grid table for per-cell outcomes")]
    AllGridFailed,
    #[error("trajectory plots need a 2-dimensional objective, got dimension {0}")]
    PlotDimension(usize),
    #[error("malformed trajectory CSV: {0}")]
    MalformedCsv(String),
}

/// What "reached the target" means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StopMetric {
    /// Objective gap: stop once `f(x_k) − f* ≤ threshold`.
    #[default]
    FGap,
    /// Stationarity: stop once `‖∇f(x_k)‖² < threshold`.
    GradNormSq,
}

impl FromStr for StopMetric {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "f-gap" => Ok(StopMetric::FGap),
            "grad-norm-sq" => Ok(StopMetric::GradNormSq),
            other => Err(BenchError::UnknownMetric(other.to_string())),
        }
    }
}

/// When a run halts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub metric: StopMetric,
    /// `None` runs to the iteration cap (budget mode).
    pub threshold: Option<f64>,
    pub max_iters: usize,
}

/// Why a run halted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TargetReached,
    MaxIters,
    Divergence,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::TargetReached => "target_reached",
            StopReason::MaxIters => "max_iters",
            StopReason::Divergence => "divergence",
        })
    }
}

/// Outcome summary of one run; serialized as `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Iterations needed to satisfy the stop rule, when it fired.
    pub iterations_to_target: Option<usize>,
    pub final_f: f64,
    pub final_grad_norm_sq: f64,
    pub stop_reason: StopReason,
    /// Mean wall time over the spec's timing repeats. Reported, never
    /// asserted.
    pub wall_time_secs: f64,
    pub trajectory_path: Option<String>,
}

fn default_objective() -> String {
    "quad100".to_string()
}
fn default_algo() -> String {
    "gaegd".to_string()
}
fn default_c() -> f64 {
    1.0
}
fn default_coupling() -> Coupling {
    Coupling::PerCoordinate
}
fn default_max_iters() -> usize {
    100_000
}
fn default_timing_repeats() -> usize {
    1
}
fn default_seed() -> u64 {
    2026
}
fn default_momentum() -> f64 {
    0.9
}

/// One experiment, as configured by a JSON file and/or CLI flags. Every
/// field has a default so a file may specify only what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// `quad100`, `rosenbrock`, or `rosenbrock:<b>`.
    #[serde(default = "default_objective")]
    pub objective: String,
    /// `gaegd` (with `energy`), `aegd` (square-root energy), `alegd`
    /// (logarithmic), `aegd-ref` (independent square-root reference), or
    /// `gdm` (heavy ball; `eta` is its learning rate).
    #[serde(default = "default_algo")]
    pub algo: String,
    /// Energy name for `gaegd` (`power:<p>` or `log`).
    #[serde(default)]
    pub energy: Option<String>,
    /// Base step size. Optional only when tuning supplies it.
    #[serde(default)]
    pub eta: Option<f64>,
    /// Explicit tuning grid (single stage). Takes precedence over
    /// `eta_range`.
    #[serde(default)]
    pub eta_grid: Option<Vec<f64>>,
    /// Two-stage tuning range `[lo, hi]`; defaults per objective.
    #[serde(default)]
    pub eta_range: Option<[f64; 2]>,
    #[serde(default = "default_c")]
    pub c: f64,
    /// Explicit initial energy; default is the transformed start value.
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default = "default_coupling")]
    pub coupling: Coupling,
    /// Target accuracy; `None` runs to the iteration cap.
    #[serde(default)]
    pub target: Option<f64>,
    #[serde(default)]
    pub metric: StopMetric,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Wall-time averaging repeats (timing only; results are deterministic).
    #[serde(default = "default_timing_repeats")]
    pub timing_repeats: usize,
    /// Seed for any randomized harness element. The optimizer itself is
    /// deterministic; this only pins auxiliary sampling (e.g. spot checks).
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Momentum for `gdm`.
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    /// Keep an `x` snapshot every this many steps (default: 1 if d ≤ 10,
    /// else 100).
    #[serde(default)]
    pub snapshot_stride: Option<usize>,
    /// Start point; defaults to the objective's standard start.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Also render SVG plots where applicable.
    #[serde(default)]
    pub svg: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty spec deserializes from defaults")
    }
}

impl ExperimentSpec {
    /// Parses a JSON spec file.
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// The algorithm an [`ExperimentSpec`] resolves to.
enum ResolvedAlgo {
    Gaegd(EnergyFunction),
    AegdRef,
    Gdm,
}

fn resolve_algo(spec: &ExperimentSpec) -> Result<ResolvedAlgo, BenchError> {
    match spec.algo.as_str() {
        "gaegd" => {
            let name = spec.energy.as_deref().ok_or(BenchError::MissingEnergy)?;
            Ok(ResolvedAlgo::Gaegd(EnergyFunction::parse(name)?))
        }
        "aegd" => Ok(ResolvedAlgo::Gaegd(EnergyFunction::sqrt())),
        "alegd" => Ok(ResolvedAlgo::Gaegd(EnergyFunction::logarithmic())),
        "aegd-ref" => Ok(ResolvedAlgo::AegdRef),
        "gdm" => Ok(ResolvedAlgo::Gdm),
        other => Err(BenchError::UnknownAlgorithm(other.to_string())),
    }
}

/// The energy function a spec's algorithm runs with, when it has one (the
/// heavy-ball baseline does not).
pub fn resolved_energy(spec: &ExperimentSpec) -> Result<Option<EnergyFunction>, BenchError> {
    Ok(match resolve_algo(spec)? {
        ResolvedAlgo::Gaegd(energy) => Some(energy),
        ResolvedAlgo::AegdRef => Some(EnergyFunction::sqrt()),
        ResolvedAlgo::Gdm => None,
    })
}

fn resolve_x0(spec: &ExperimentSpec, obj: &Objective) -> Vec<f64> {
    spec.x0.clone().unwrap_or_else(|| obj.default_x0.clone())
}

/// Builds the optimizer configuration an [`ExperimentSpec`] describes.
pub fn gaegd_config(
    spec: &ExperimentSpec,
    energy: EnergyFunction,
) -> Result<GaegdConfig, BenchError> {
    let eta = spec
        .eta
        .ok_or_else(|| BenchError::MissingEta(spec.algo.clone()))?;
    Ok(GaegdConfig {
        eta,
        c: spec.c,
        r0_policy: spec
            .r0
            .map(R0Policy::Explicit)
            .unwrap_or(R0Policy::DefaultF0),
        energy,
        coupling: spec.coupling,
        max_iters: spec.max_iters,
        stop: StopRule {
            metric: spec.metric,
            threshold: spec.target,
            max_iters: spec.max_iters,
        },
        snapshot_stride: spec.snapshot_stride,
    })
}

fn stop_satisfied(stop: &StopRule, f: f64, f_star: f64, grad_norm_sq: f64) -> bool {
    match (stop.threshold, stop.metric) {
        (Some(t), StopMetric::FGap) => f - f_star <= t,
        (Some(t), StopMetric::GradNormSq) => grad_norm_sq < t,
        (None, _) => false,
    }
}

/// Runs the independent square-root reference iteration under a spec.
fn execute_reference(
    spec: &ExperimentSpec,
    obj: &Objective,
    x0: &[f64],
) -> Result<(RunResult, Trajectory), BenchError> {
    let eta = spec
        .eta
        .ok_or_else(|| BenchError::MissingEta(spec.algo.clone()))?;
    let config = {
        let mut cfg = gaegd_config(spec, EnergyFunction::sqrt())?;
        cfg.coupling = Coupling::Scalar;
        cfg
    };
    let stop = config.stop;
    let mut state = optimizer::init(&config, obj, x0)?;
    let stride = spec
        .snapshot_stride
        .unwrap_or(if obj.dimension <= 10 { 1 } else { 100 })
        .max(1);
    let mut trajectory = Trajectory::new_external(state.r.summary(), stride, Coupling::Scalar);

    let finish = |state: &optimizer::OptimizerState, trajectory: &mut Trajectory| {
        trajectory.final_x = state.x.clone();
        trajectory.final_f = state.f;
        trajectory.final_grad_norm_sq = state.grad_norm_sq;
        trajectory.final_r = state.r.summary();
    };

    let reason = loop {
        if stop_satisfied(&stop, state.f, obj.f_star, state.grad_norm_sq) {
            break StopReason::TargetReached;
        }
        if state.k >= spec.max_iters {
            break StopReason::MaxIters;
        }
        match aegd_reference_step(&state, eta, spec.c, obj) {
            Ok(next) => {
                trajectory.records.push(StepRecord {
                    k: state.k,
                    f: state.f,
                    grad_norm_sq: state.grad_norm_sq,
                    r: state.r.summary(),
                    r_next: next.r.summary(),
                    eta_eff: eta * next.r.summary() / state.big_f,
                    x_snapshot: (state.k % stride == 0).then(|| state.x.clone()),
                });
                state = next;
            }
            Err(GaegdError::Divergence { .. }) => break StopReason::Divergence,
            Err(e) => return Err(e.into()),
        }
    };
    finish(&state, &mut trajectory);

    let result = RunResult {
        iterations_to_target: (reason == StopReason::TargetReached).then_some(state.k),
        final_f: state.f,
        final_grad_norm_sq: state.grad_norm_sq,
        stop_reason: reason,
        wall_time_secs: 0.0,
        trajectory_path: None,
    };
    Ok((result, trajectory))
}

/// Runs the heavy-ball baseline under a spec. Trajectory rows reuse the
/// shared record shape with the energy columns pinned to zero (the baseline
/// has no energy variable) and `eta_eff` equal to the constant learning
/// rate.
fn execute_gdm(
    spec: &ExperimentSpec,
    obj: &Objective,
    x0: &[f64],
) -> Result<(RunResult, Trajectory), BenchError> {
    let lr = spec
        .eta
        .ok_or_else(|| BenchError::MissingEta(spec.algo.clone()))?;
    let stop = StopRule {
        metric: spec.metric,
        threshold: spec.target,
        max_iters: spec.max_iters,
    };
    let stride = spec
        .snapshot_stride
        .unwrap_or(if obj.dimension <= 10 { 1 } else { 100 })
        .max(1);
    let mut trajectory = Trajectory::new_external(0.0, stride, Coupling::Scalar);

    let mut x = x0.to_vec();
    let mut velocity = vec![0.0; obj.dimension];
    let mut k = 0usize;
    let mut f = obj.evaluate(&x);
    let mut grad_norm_sq: f64 = obj.gradient(&x).iter().map(|g| g * g).sum();

    let reason = loop {
        if stop_satisfied(&stop, f, obj.f_star, grad_norm_sq) {
            break StopReason::TargetReached;
        }
        if k >= spec.max_iters {
            break StopReason::MaxIters;
        }
        match gdm_step(&x, &velocity, lr, spec.momentum, obj) {
            Ok((x_next, v_next)) => {
                trajectory.records.push(StepRecord {
                    k,
                    f,
                    grad_norm_sq,
                    r: 0.0,
                    r_next: 0.0,
                    eta_eff: lr,
                    x_snapshot: k.is_multiple_of(stride).then(|| x.clone()),
                });
                x = x_next;
                velocity = v_next;
                k += 1;
                f = obj.evaluate(&x);
                grad_norm_sq = obj.gradient(&x).iter().map(|g| g * g).sum();
                if !f.is_finite() || !grad_norm_sq.is_finite() {
                    break StopReason::Divergence;
                }
            }
            Err(GaegdError::Divergence { .. }) => break StopReason::Divergence,
            Err(e) => return Err(e.into()),
        }
    };
    trajectory.final_x = x;
    trajectory.final_f = f;
    trajectory.final_grad_norm_sq = grad_norm_sq;
    trajectory.final_r = 0.0;

    let result = RunResult {
        iterations_to_target: (reason == StopReason::TargetReached).then_some(k),
        final_f: f,
        final_grad_norm_sq: grad_norm_sq,
        stop_reason: reason,
        wall_time_secs: 0.0,
        trajectory_path: None,
    };
    Ok((result, trajectory))
}

fn execute(spec: &ExperimentSpec) -> Result<(RunResult, Trajectory), BenchError> {
    let obj = Objective::parse(&spec.objective)?;
    let x0 = resolve_x0(spec, &obj);
    match resolve_algo(spec)? {
        ResolvedAlgo::Gaegd(energy) => {
            let config = gaegd_config(spec, energy)?;
            match optimizer::run(&config, &obj, &x0) {
                Ok(pair) => Ok(pair),
                Err(GaegdError::Divergence { k: _, trajectory }) => {
                    let trajectory = *trajectory;
                    let result = RunResult {
                        iterations_to_target: None,
                        final_f: trajectory.final_f,
                        final_grad_norm_sq: trajectory.final_grad_norm_sq,
                        stop_reason: StopReason::Divergence,
                        wall_time_secs: 0.0,
                        trajectory_path: None,
                    };
                    Ok((result, trajectory))
                }
                Err(e) => Err(e.into()),
            }
        }
        ResolvedAlgo::AegdRef => execute_reference(spec, &obj, &x0),
        ResolvedAlgo::Gdm => execute_gdm(spec, &obj, &x0),
    }
}

/// Runs one experiment. Divergence is a recorded outcome (stop reason), not
/// an error. With `out_dir` set, writes `result.json` and `trajectory.csv`
/// there. Wall time is the mean over the spec's timing repeats.
pub fn run_experiment(
    spec: &ExperimentSpec,
    out_dir: Option<&Path>,
) -> Result<(RunResult, Trajectory), BenchError> {
    let started = Instant::now();
    let (mut result, trajectory) = execute(spec)?;
    let mut total = started.elapsed().as_secs_f64();
    for _ in 1..spec.timing_repeats.max(1) {
        let started = Instant::now();
        let _ = execute(spec)?;
        total += started.elapsed().as_secs_f64();
    }
    result.wall_time_secs = total / spec.timing_repeats.max(1) as f64;

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let traj_path = dir.join("trajectory.csv");
        fs::write(&traj_path, trajectory.to_csv())?;
        result.trajectory_path = Some(traj_path.display().to_string());
        fs::write(
            dir.join("result.json"),
            serde_json::to_string_pretty(&result)?,
        )?;
    }
    Ok((result, trajectory))
}

/// One evaluated tuning cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub eta: f64,
    pub iterations: Option<usize>,
    pub final_f: f64,
    pub stop_reason: StopReason,
}

/// A tuning outcome together with the full audit table that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneOutcome {
    pub best_eta: f64,
    pub best_iterations: Option<usize>,
    pub best_final_f: f64,
    /// Every evaluated cell, in evaluation order (coarse stage then
    /// refinement).
    pub cells: Vec<GridCell>,
}

impl TuneOutcome {
    /// Audit table as CSV (`grid.csv`): `eta,iterations,final_f,stop_reason`.
    pub fn grid_csv(&self) -> String {
        let mut out = String::from("eta,iterations,final_f,stop_reason\n");
        for cell in &self.cells {
            out.push_str(&format!(
                "{:.17e},{},{:.17e},{}\n",
                cell.eta,
                cell.iterations.map(|n| n.to_string()).unwrap_or_default(),
                cell.final_f,
                cell.stop_reason
            ));
        }
        out
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|j| if j == n - 1 { b } else { a + step * j as f64 })
        .collect()
}

fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(
        n >= 2 && lo > 0.0 && hi > lo,
        "geomspace needs 0 < lo < hi and n ≥ 2"
    );
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let step = (ln_hi - ln_lo) / (n - 1) as f64;
    (0..n)
        .map(|j| {
            if j == 0 {
                lo
            } else if j == n - 1 {
                hi
            } else {
                (ln_lo + step * j as f64).exp()
            }
        })
        .collect()
}

/// Coarse stage of the two-stage tuning protocol: log-spaced grid with 25
/// points per decade of range.
pub fn coarse_grid(lo: f64, hi: f64) -> Vec<f64> {
    let n = (25.0 * (hi / lo).log10()).ceil() as usize + 1;
    geomspace(lo, hi, n.max(2))
}

/// Default tuning range per objective family.
pub fn default_eta_range(obj: &Objective) -> [f64; 2] {
    if obj.name().starts_with("rosenbrock") {
        [1e-5, 0.1]
    } else {
        [0.5, 4000.0]
    }
}

/// Where the tuner looks.
#[derive(Debug, Clone, PartialEq)]
pub enum TuneGrid {
    /// Evaluate exactly these step sizes (single stage).
    Explicit(Vec<f64>),
    /// Two-stage protocol over `[lo, hi]`: coarse log grid (25 points per
    /// decade), then 20 linearly spaced points spanning the coarse winner's
    /// neighbors; best over the union.
    Range { lo: f64, hi: f64 },
}

impl TuneGrid {
    fn from_spec(spec: &ExperimentSpec, obj: &Objective) -> Result<TuneGrid, BenchError> {
        if let Some(grid) = &spec.eta_grid {
            if grid.is_empty() {
                return Err(BenchError::EmptyGrid);
            }
            return Ok(TuneGrid::Explicit(grid.clone()));
        }
        let [lo, hi] = spec.eta_range.unwrap_or_else(|| default_eta_range(obj));
        Ok(TuneGrid::Range { lo, hi })
    }
}

/// Selection key: with a target, fewest iterations wins; without one,
/// smallest final loss wins. Ties go to the smaller step size. `None` means
/// the cell is not selectable.
fn selection_key(cell: &GridCell, has_target: bool) -> Option<(f64, f64)> {
    if has_target {
        cell.iterations.map(|n| (n as f64, cell.eta))
    } else {
        (cell.stop_reason != StopReason::Divergence && cell.final_f.is_finite())
            .then_some((cell.final_f, cell.eta))
    }
}

fn better(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Tunes the base step size per the two-stage protocol (or over an explicit
/// grid). Returns the winner plus the complete audit table; errs with
/// [`BenchError::AllGridFailed`] when no cell is selectable.
pub fn tune_lr(spec: &ExperimentSpec) -> Result<TuneOutcome, BenchError> {
    let obj = Objective::parse(&spec.objective)?;
    let grid = TuneGrid::from_spec(spec, &obj)?;
    let has_target = spec.target.is_some();

    let evaluate = |eta: f64, cells: &mut Vec<GridCell>| -> Result<(), BenchError> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(BenchError::InvalidGridPoint(eta));
        }
        let mut cell_spec = spec.clone();
        cell_spec.eta = Some(eta);
        cell_spec.timing_repeats = 1;
        cell_spec.snapshot_stride = Some(usize::MAX); // snapshots are dead weight here
        if has_target {
            // A cell only wins by reaching the target in fewer iterations
            // than the incumbent (ties break toward smaller η, which a run
            // capped at the incumbent's count can still record), so later
            // evaluations can stop there. Selection is identical to running
            // every cell to the full cap.
            let best_so_far = cells
                .iter()
                .filter_map(|c| c.iterations)
                .min()
                .unwrap_or(usize::MAX);
            cell_spec.max_iters = cell_spec.max_iters.min(best_so_far);
        }
        let (result, _) = run_experiment(&cell_spec, None)?;
        cells.push(GridCell {
            eta,
            iterations: result.iterations_to_target,
            final_f: result.final_f,
            stop_reason: result.stop_reason,
        });
        Ok(())
    };

    let mut cells = Vec::new();
    match grid {
        TuneGrid::Explicit(points) => {
            for eta in points {
                evaluate(eta, &mut cells)?;
            }
        }
        TuneGrid::Range { lo, hi } => {
            let coarse = coarse_grid(lo, hi);
            for &eta in &coarse {
                evaluate(eta, &mut cells)?;
            }
            let winner = cells
                .iter()
                .enumerate()
                .filter_map(|(i, cell)| selection_key(cell, has_target).map(|key| (key, i)))
                .fold(None, |best: Option<((f64, f64), usize)>, cand| match best {
                    Some(b) if !better(cand.0, b.0) => Some(b),
                    _ => Some(cand),
                });
            if let Some((_, i)) = winner {
                let lo2 = coarse[i.saturating_sub(1)];
                let hi2 = coarse[(i + 1).min(coarse.len() - 1)];
                if hi2 > lo2 {
                    for eta in linspace(lo2, hi2, 20) {
                        evaluate(eta, &mut cells)?;
                    }
                }
            }
        }
    }

    let best = cells
        .iter()
        .filter_map(|cell| selection_key(cell, has_target).map(|key| (key, cell)))
        .fold(
            None,
            |best: Option<((f64, f64), &GridCell)>, cand| match best {
                Some(b) if !better(cand.0, b.0) => Some(b),
                _ => Some(cand),
            },
        );
    let Some((_, cell)) = best else {
        return Err(BenchError::AllGridFailed);
    };
    Ok(TuneOutcome {
        best_eta: cell.eta,
        best_iterations: cell.iterations,
        best_final_f: cell.final_f,
        cells,
    })
}

/// One row of a shift sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub c: f64,
    pub best_eta: Option<f64>,
    pub iterations: Option<usize>,
    pub final_f: Option<f64>,
    pub error: Option<String>,
}

/// Tunes the step size at each shift value, shaping the benchmark tables.
/// Per-cell failures are recorded in their rows; the sweep always finishes.
pub fn sweep_c(spec: &ExperimentSpec, c_values: &[f64]) -> Vec<SweepRow> {
    c_values
        .iter()
        .map(|&c| {
            let mut cell_spec = spec.clone();
            cell_spec.c = c;
            match tune_lr(&cell_spec) {
                Ok(outcome) => SweepRow {
                    c,
                    best_eta: Some(outcome.best_eta),
                    iterations: outcome.best_iterations,
                    final_f: Some(outcome.best_final_f),
                    error: None,
                },
                Err(e) => SweepRow {
                    c,
                    best_eta: None,
                    iterations: None,
                    final_f: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Sweep table as CSV (`sweep.csv`): `c,best_eta,iterations,final_f,error`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("c,best_eta,iterations,final_f,error\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.c,
            row.best_eta
                .map(|v| format!("{v:.17e}"))
                .unwrap_or_default(),
            row.iterations.map(|n| n.to_string()).unwrap_or_default(),
            row.final_f.map(|v| format!("{v:.17e}")).unwrap_or_default(),
            row.error.as_deref().unwrap_or_default().replace(',', ";")
        ));
    }
    out
}

/// One row of a diagnostics report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub k: usize,
    pub f: f64,
    pub grad_norm_sq: f64,
    pub r: f64,
    pub eta_eff: f64,
    /// Whether the effective step size sits at or below the classical `2/L`
    /// stability ceiling.
    pub below_two_over_l: bool,
}

/// Per-step verification of a finished run against its theory report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    /// Classical stability ceiling `2/L` (reference line).
    pub two_over_l: f64,
    /// Energy level `F*/(Lη)` (reference line).
    pub energy_level: f64,
    /// First iteration from which the recorded effective step size stays at
    /// or below `2/L` for the rest of the run (`None` if it never settles;
    /// `Some(0)` if it never exceeds the ceiling). For per-coordinate runs
    /// the recorded step size is the minimum over coordinates.
    pub first_sustained_eta_crossing: Option<usize>,
    pub r_non_increasing: bool,
    /// `F* ≤ F_k ≤ F̄`, `f_k ≤ f̄`, `F̂'(f̄+c) ≤ F'_k ≤ F̂'(f*+c)` along the
    /// run, within `1e-9` relative on `F̄`.
    pub envelopes_ok: bool,
    pub max_envelope_violation: f64,
    /// Max residual of the per-step energy identity along the run.
    pub identity_residual_max: f64,
    pub identity_ok: bool,
    /// Worst violation of the energy gap bound.
    pub gap_violation: f64,
    pub gap_ok: bool,
    pub rows: Vec<DiagnosticsRow>,
}

/// Largest violation of the stability envelopes along a trajectory:
/// `F* ≤ F_k ≤ F̄`, `f* ≤ f_k ≤ f̄`, `F̂'(f̄+c) ≤ F'_k ≤ F̂'(f*+c)`. A run
/// respecting them keeps this at numerical-noise level.
pub fn envelope_violation(
    trajectory: &Trajectory,
    inputs: &TheoryInputs,
) -> Result<f64, BenchError> {
    let bounds = crate::theory::stability_bounds(inputs)?;
    let mut max_violation: f64 = 0.0;
    for rec in &trajectory.records {
        let big_f = inputs.energy.value(rec.f + inputs.c)?;
        let big_f_prime = inputs.energy.derivative(rec.f + inputs.c)?;
        max_violation = max_violation
            .max(bounds.big_f_star - big_f)
            .max(big_f - bounds.big_f_bar)
            .max(rec.f - bounds.f_bar)
            .max(inputs.f_star - rec.f)
            .max(big_f_prime - bounds.fp_star)
            .max(bounds.fp_bar - big_f_prime);
    }
    Ok(max_violation)
}

/// Builds the per-step verification record for a completed run (envelope
/// checks are meaningful for scalar-coupling runs, where the recorded `r`
/// is the exact energy).
pub fn diagnostics_report(
    trajectory: &Trajectory,
    report: &TheoryReport,
    inputs: &TheoryInputs,
) -> Result<DiagnosticsReport, BenchError> {
    let two_over_l = 2.0 / inputs.lipschitz;
    let energy_level = report.big_f_star / (inputs.lipschitz * inputs.eta);
    let tol = 1e-9 * report.big_f_bar.abs();
    let max_violation = envelope_violation(trajectory, inputs)?;

    let mut rows = Vec::with_capacity(trajectory.records.len());
    let mut r_non_increasing = true;
    let mut prev_r = f64::INFINITY;
    for rec in &trajectory.records {
        rows.push(DiagnosticsRow {
            k: rec.k,
            f: rec.f,
            grad_norm_sq: rec.grad_norm_sq,
            r: rec.r,
            eta_eff: rec.eta_eff,
            below_two_over_l: rec.eta_eff <= two_over_l,
        });
        if rec.r > prev_r || rec.r_next > rec.r {
            r_non_increasing = false;
        }
        prev_r = rec.r_next;
    }

    let first_crossing = {
        let mut last_above = None;
        for (i, rec) in trajectory.records.iter().enumerate() {
            if rec.eta_eff > two_over_l {
                last_above = Some(i);
            }
        }
        match last_above {
            None => Some(0),
            Some(i) if i + 1 < trajectory.records.len() => Some(i + 1),
            Some(_) => None,
        }
    };

    let gap_violation = gap_bound_check(trajectory, inputs)?;
    let identity_residual_max = trajectory.identity_residual_max;
    let identity_tol = 1e-9 * trajectory.r0 * trajectory.r0;
    Ok(DiagnosticsReport {
        two_over_l,
        energy_level,
        first_sustained_eta_crossing: first_crossing,
        r_non_increasing,
        envelopes_ok: max_violation <= tol,
        max_envelope_violation: max_violation,
        identity_residual_max,
        identity_ok: identity_residual_max <= identity_tol,
        gap_violation,
        gap_ok: gap_violation <= 1e-9,
        rows,
    })
}

/// Diagnostics rows as CSV: `k,f,grad_norm_sq,r,eta_eff,below_two_over_l`.
pub fn diagnostics_csv(report: &DiagnosticsReport) -> String {
    let mut out = String::from("k,f,grad_norm_sq,r,eta_eff,below_two_over_l\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
            row.k, row.f, row.grad_norm_sq, row.r, row.eta_eff, row.below_two_over_l
        ));
    }
    out
}

/// What to extract from trajectories for plotting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    LossCurve,
    RCurve,
    EtaCurve,
    Trajectory2d,
}

impl PlotKind {
    fn slug(self) -> &'static str {
        match self {
            PlotKind::LossCurve => "loss-curve",
            PlotKind::RCurve => "r-curve",
            PlotKind::EtaCurve => "eta-curve",
            PlotKind::Trajectory2d => "trajectory-2d",
        }
    }
}

impl FromStr for PlotKind {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "loss-curve" => Ok(PlotKind::LossCurve),
            "r-curve" => Ok(PlotKind::RCurve),
            "eta-curve" => Ok(PlotKind::EtaCurve),
            "trajectory-2d" => Ok(PlotKind::Trajectory2d),
            other => Err(BenchError::UnknownPlotKind(other.to_string())),
        }
    }
}

fn series_points(trajectory: &Trajectory, kind: PlotKind) -> Result<Vec<(f64, f64)>, BenchError> {
    Ok(match kind {
        PlotKind::LossCurve => {
            let mut pts: Vec<(f64, f64)> = trajectory
                .records
                .iter()
                .map(|r| (r.k as f64, r.f))
                .collect();
            if trajectory.final_f.is_finite() {
                pts.push((trajectory.records.len() as f64, trajectory.final_f));
            }
            pts
        }
        PlotKind::RCurve => {
            let mut pts: Vec<(f64, f64)> = trajectory
                .records
                .iter()
                .map(|r| (r.k as f64, r.r))
                .collect();
            pts.push((trajectory.records.len() as f64, trajectory.final_r));
            pts
        }
        PlotKind::EtaCurve => trajectory
            .records
            .iter()
            .map(|r| (r.k as f64, r.eta_eff))
            .collect(),
        PlotKind::Trajectory2d => {
            if trajectory.final_x.len() != 2 {
                return Err(BenchError::PlotDimension(trajectory.final_x.len()));
            }
            let mut pts: Vec<(f64, f64)> = trajectory
                .records
                .iter()
                .filter_map(|r| r.x_snapshot.as_ref().map(|x| (x[0], x[1])))
                .collect();
            pts.push((trajectory.final_x[0], trajectory.final_x[1]));
            pts
        }
    })
}

fn series_csv(points: &[(f64, f64)], kind: PlotKind) -> String {
    let header = match kind {
        PlotKind::LossCurve => "k,f",
        PlotKind::RCurve => "k,r",
        PlotKind::EtaCurve => "k,eta_eff",
        PlotKind::Trajectory2d => "x1,x2",
    };
    let mut out = String::from(header);
    out.push('\n');
    for (a, b) in points {
        out.push_str(&format!("{a:.17e},{b:.17e}\n"));
    }
    out
}

/// Extracts plot series from labeled trajectories into `out_dir`: one CSV
/// per run (`<label>-<kind>.csv`) plus, when `svg` is set, a combined
/// `<kind>.svg`. An empty run list succeeds and writes nothing.
pub fn emit_plot_data(
    runs: &[(String, &Trajectory)],
    kind: PlotKind,
    out_dir: &Path,
    svg: bool,
) -> Result<Vec<PathBuf>, BenchError> {
    if runs.is_empty() {
        return Ok(Vec::new());
    }
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut series = Vec::new();
    for (label, trajectory) in runs {
        let points = series_points(trajectory, kind)?;
        let path = out_dir.join(format!("{label}-{}.csv", kind.slug()));
        fs::write(&path, series_csv(&points, kind))?;
        written.push(path);
        series.push((label.clone(), points));
    }
    if svg {
        let log_y = kind != PlotKind::Trajectory2d;
        let (x_label, y_label) = match kind {
            PlotKind::LossCurve => ("iteration", "objective value"),
            PlotKind::RCurve => ("iteration", "energy r"),
            PlotKind::EtaCurve => ("iteration", "effective step size"),
            PlotKind::Trajectory2d => ("x1", "x2"),
        };
        let markers = kind == PlotKind::Trajectory2d;
        let svg_text = render_line_svg(kind.slug(), x_label, y_label, log_y, markers, &series);
        let path = out_dir.join(format!("{}.svg", kind.slug()));
        fs::write(&path, svg_text)?;
        written.push(path);
    }
    Ok(written)
}

/// Empirical gradient-Lipschitz surrogate for objectives without a global
/// constant: the largest Hessian spectral norm over the iterates the
/// trajectory retained (snapshots plus the terminal point). Computed post
/// hoc; meaningful only as a descriptive constant for the visited region.
pub fn lipschitz_surrogate(obj: &Objective, trajectory: &Trajectory) -> Option<f64> {
    let mut best: Option<f64> = None;
    let mut consider = |x: &[f64]| {
        let norm = obj.hessian_spectral_norm(x);
        best = Some(best.map_or(norm, |b: f64| b.max(norm)));
    };
    for rec in &trajectory.records {
        if let Some(x) = &rec.x_snapshot {
            consider(x);
        }
    }
    if trajectory.final_x.len() == obj.dimension {
        consider(&trajectory.final_x);
    }
    best
}

/// Reconstructs per-step diagnostics from a stored `trajectory.csv`. Parsed
/// trajectories carry scalar summaries only: no snapshots, no identity
/// accumulators, no terminal iterate coordinates.
pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory, BenchError> {
    struct Row {
        k: usize,
        f: f64,
        grad_norm_sq: f64,
        r: f64,
        eta_eff: Option<f64>,
    }

    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "k,f,grad_norm_sq,r,eta_eff" {
        return Err(BenchError::MalformedCsv(format!(
            "unexpected header `{header}`"
        )));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(BenchError::MalformedCsv(format!(
                "row {} has {} fields, expected 5",
                lineno + 2,
                fields.len()
            )));
        }
        let num = |s: &str| -> Result<f64, BenchError> {
            s.parse().map_err(|_| {
                BenchError::MalformedCsv(format!("bad number `{s}` on row {}", lineno + 2))
            })
        };
        rows.push(Row {
            k: fields[0].parse().map_err(|_| {
                BenchError::MalformedCsv(format!("bad index `{}` on row {}", fields[0], lineno + 2))
            })?,
            f: num(fields[1])?,
            grad_norm_sq: num(fields[2])?,
            r: num(fields[3])?,
            eta_eff: if fields[4].is_empty() {
                None
            } else {
                Some(num(fields[4])?)
            },
        });
    }
    let Some(first) = rows.first() else {
        return Err(BenchError::MalformedCsv("no data rows".to_string()));
    };

    let mut trajectory = Trajectory::new_external(first.r, 1, Coupling::Scalar);
    for pair in rows.windows(2) {
        let Some(eta_eff) = pair[0].eta_eff else {
            return Err(BenchError::MalformedCsv(format!(
                "row for step {} has no effective step size but is not terminal",
                pair[0].k
            )));
        };
        trajectory.records.push(StepRecord {
            k: pair[0].k,
            f: pair[0].f,
            grad_norm_sq: pair[0].grad_norm_sq,
            r: pair[0].r,
            r_next: pair[1].r,
            eta_eff,
            x_snapshot: None,
        });
    }
    let last = rows.last().expect("rows is non-empty");
    if last.eta_eff.is_none() {
        trajectory.final_f = last.f;
        trajectory.final_grad_norm_sq = last.grad_norm_sq;
        trajectory.final_r = last.r;
    }
    Ok(trajectory)
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Renders a minimal self-contained SVG line plot (no external references).
/// With `log_y`, non-positive or non-finite y values are dropped from the
/// drawing.
fn render_line_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    log_y: bool,
    endpoint_markers: bool,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    let (w, h) = (720.0, 480.0);
    let (ml, mr, mt, mb) = (80.0, 24.0, 44.0, 56.0);

    let transformed: Vec<(String, Vec<(f64, f64)>)> = series
        .iter()
        .map(|(label, pts)| {
            let pts = pts
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log_y || *y > 0.0))
                .map(|&(x, y)| (x, if log_y { y.log10() } else { y }))
                .collect();
            (label.clone(), pts)
        })
        .collect();

    let all: Vec<(f64, f64)> = transformed
        .iter()
        .flat_map(|(_, p)| p.iter().copied())
        .collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"13\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    );
    if all.is_empty() {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">no drawable points</text>\n</svg>\n",
            w / 2.0,
            h / 2.0
        ));
        return svg;
    }

    let (mut x_min, mut x_max, mut y_min, mut y_max) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for (x, y) in &all {
        x_min = x_min.min(*x);
        x_max = x_max.max(*x);
        y_min = y_min.min(*y);
        y_max = y_max.max(*y);
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
    }
    let sx = |x: f64| ml + (x - x_min) / (x_max - x_min) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - y_min) / (y_max - y_min) * (h - mt - mb);

    // Frame, title, axis labels.
    svg.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
        w - ml - mr,
        h - mt - mb
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{title}</text>\n",
        w / 2.0
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>\n",
        w / 2.0,
        h - 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {})\">{}</text>\n",
        h / 2.0,
        h / 2.0,
        if log_y { format!("{y_label} (log scale)") } else { y_label.to_string() }
    ));

    // Ticks: 5 linear x ticks; y ticks at decades when log, else 5 linear.
    for i in 0..=4 {
        let x = x_min + (x_max - x_min) * i as f64 / 4.0;
        let px = sx(x);
        svg.push_str(&format!(
            "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"#333\"/>\n\
             <text x=\"{px}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            h - mb,
            h - mb + 5.0,
            h - mb + 20.0,
            fmt_tick(x)
        ));
    }
    let y_ticks: Vec<f64> = if log_y {
        let (lo, hi) = (y_min.floor() as i64, y_max.ceil() as i64);
        let stride = (((hi - lo) as f64 / 8.0).ceil() as i64).max(1);
        (lo..=hi)
            .step_by(stride as usize)
            .map(|d| d as f64)
            .collect()
    } else {
        (0..=4)
            .map(|i| y_min + (y_max - y_min) * i as f64 / 4.0)
            .collect()
    };
    for &y in &y_ticks {
        if y < y_min - 1e-12 || y > y_max + 1e-12 {
            continue;
        }
        let py = sy(y);
        let label = if log_y {
            format!("1e{}", y as i64)
        } else {
            fmt_tick(y)
        };
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{py}\" x2=\"{ml}\" y2=\"{py}\" stroke=\"#333\"/>\n\
             <line x1=\"{ml}\" y1=\"{py}\" x2=\"{}\" y2=\"{py}\" stroke=\"#ddd\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{label}</text>\n",
            ml - 5.0,
            w - mr,
            ml - 9.0,
            py + 4.0
        ));
    }

    // Series.
    for (i, (label, pts)) in transformed.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        ));
        if endpoint_markers {
            let (x0, y0) = pts[0];
            let (x1, y1) = pts[pts.len() - 1];
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"none\" stroke=\"{color}\"/>\n\
                 <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{color}\"/>\n",
                sx(x0),
                sy(y0),
                sx(x1),
                sy(y1)
            ));
        }
        let ly = mt + 18.0 + 18.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{}\" y=\"{}\">{label}</text>\n",
            w - mr - 150.0,
            w - mr - 120.0,
            w - mr - 112.0,
            ly + 4.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
