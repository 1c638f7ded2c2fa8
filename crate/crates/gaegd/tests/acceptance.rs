//! The acceptance gate. One test per criterion; each prints a single
//! pass/fail line with the measured numbers before asserting, so the whole
//! scorecard is visible with `cargo test --test acceptance -- --nocapture`.

use gaegd::bench::{diagnostics_report, run_experiment, tune_lr, ExperimentSpec, TuneOutcome};
use gaegd::energy::EnergyFunction;
use gaegd::objectives::Objective;
use gaegd::optimizer::{aegd_reference_step, init, run, step, GaegdConfig, GaegdError, Trajectory};
use gaegd::theory::{
    c_guards, c_star, eta_threshold, full_report, gap_bound_check, iteration_bound, kl_constants,
    stability_bounds, two_stage_threshold, TheoryInputs,
};
use once_cell::sync::Lazy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(criterion: u32, ok: bool, detail: &str) {
    println!(
        "criterion {criterion:02} [{}] {detail}",
        if ok { "pass" } else { "FAIL" }
    );
}

fn spec_json(json: &str) -> ExperimentSpec {
    ExperimentSpec::from_json(json).expect("experiment spec must parse")
}

/// Iterations to reach `f - f* <= 1e-7` with the experiment-reproducing
/// coordinate-wise coupling, from the objective's standard start.
fn iterations_at(objective: &str, algo: &str, eta: f64, c: f64) -> Option<usize> {
    let spec = spec_json(&format!(
        r#"{{"objective": "{objective}", "algo": "{algo}", "eta": {eta}, "c": {c}, "target": 1e-7}}"#
    ));
    let (result, _) = run_experiment(&spec, None).expect("benchmark run must complete");
    result.iterations_to_target
}

#[test]
fn criterion_01_quadratic_benchmark_iteration_counts() {
    let cells = [
        ("aegd", 13.0, 1.0, 34usize),
        ("aegd", 45.0, 100.0, 11),
        ("alegd", 17.0, 1.0, 53),
        ("alegd", 94.0, 100.0, 19),
    ];
    let mut measured = Vec::new();
    let mut all_ok = true;
    for (algo, eta, c, expected) in cells {
        let got = iterations_at("quad100", algo, eta, c);
        let ok = got.is_some_and(|k| k.abs_diff(expected) <= 5);
        all_ok &= ok;
        measured.push(format!(
            "{algo} c={c} eta={eta}: {} (expect {expected}±5){}",
            got.map_or("none".to_string(), |k| k.to_string()),
            if ok { "" } else { " <-" }
        ));
    }
    let detail = format!(
        "quad100 counts at published settings — {}",
        measured.join("; ")
    );
    verdict(1, all_ok, &detail);
    assert!(
        all_ok,
        "{detail}. The aegd c=100 count is spiky in eta (44 -> 10, 45 -> 171); \
         the expected count is not reachable at eta=45 from x0 = ones with r0 = F0."
    );
}

#[test]
fn criterion_02_rosenbrock_iteration_counts() {
    let aegd = iterations_at("rosenbrock", "aegd", 0.0004, 1.0);
    let alegd = iterations_at("rosenbrock", "alegd", 0.0007, 1.0);
    let ok_a = aegd.is_some_and(|k| (k as f64 - 8035.0).abs() <= 0.05 * 8035.0);
    let ok_l = alegd.is_some_and(|k| (k as f64 - 5465.0).abs() <= 0.05 * 5465.0);
    let detail = format!(
        "rosenbrock counts — aegd eta=4e-4: {aegd:?} (expect 8035±5%); alegd eta=7e-4: {alegd:?} (expect 5465±5%)"
    );
    verdict(2, ok_a && ok_l, &detail);
    assert!(ok_a && ok_l, "{detail}");
}

// ---------------------------------------------------------------------------
// Stability matrix shared by criteria 3 and 5.

struct StabilityRun {
    energy: EnergyFunction,
    eta: f64,
    trajectory: Trajectory,
}

fn stability_energies() -> Vec<EnergyFunction> {
    let mut energies: Vec<EnergyFunction> = (1..=10)
        .map(|i| EnergyFunction::parse(&format!("power:{}", i as f64 / 10.0)).unwrap())
        .collect();
    energies.push(EnergyFunction::logarithmic());
    energies
}

fn stability_run(obj: &Objective, energy: &EnergyFunction, eta: f64) -> Trajectory {
    let config = GaegdConfig::new(eta, 1.0, energy.clone()).with_budget(1000);
    match run(&config, obj, &obj.default_x0) {
        Ok((_, traj)) => traj,
        // A run whose iterate leaves the energy domain still must satisfy
        // the stability claims on the steps it took.
        Err(GaegdError::Divergence { trajectory, .. }) => *trajectory,
        Err(e) => panic!("stability run setup failed: {e}"),
    }
}

static QUAD_STABILITY: Lazy<Vec<StabilityRun>> = Lazy::new(|| {
    let obj = Objective::quadratic_100d();
    let mut runs = Vec::new();
    for energy in stability_energies() {
        for eta in [1e-3, 1.0, 1e3] {
            runs.push(StabilityRun {
                energy: energy.clone(),
                eta,
                trajectory: stability_run(&obj, &energy, eta),
            });
        }
    }
    runs
});

fn check_stability(traj: &Trajectory, label: &str) -> Result<(), String> {
    let tol = 1e-9 * traj.r0 * traj.r0;
    for pair in traj.records.windows(2) {
        if pair[1].r > pair[0].r {
            return Err(format!("{label}: energy increased at k={}", pair[1].k));
        }
    }
    for rec in &traj.records {
        if !(rec.r_next.is_finite() && rec.r_next >= 0.0) {
            return Err(format!("{label}: energy lost positivity at k={}", rec.k));
        }
        if rec.r_next == 0.0 && rec.r > 1e-290 {
            return Err(format!(
                "{label}: energy hit zero at k={} without underflow",
                rec.k
            ));
        }
        if rec.r_next > rec.r {
            return Err(format!("{label}: energy increased within step k={}", rec.k));
        }
    }
    if traj.identity_residual_max > tol {
        return Err(format!(
            "{label}: identity residual {:e} above {tol:e}",
            traj.identity_residual_max
        ));
    }
    Ok(())
}

#[test]
fn criterion_03_unconditional_energy_stability() {
    let rosen = Objective::rosenbrock(100.0);
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for stability in QUAD_STABILITY.iter() {
        let label = format!("quad100 {} eta={}", stability.energy.name(), stability.eta);
        if let Err(e) = check_stability(&stability.trajectory, &label) {
            failures.push(e);
        }
        checked += 1;
    }
    for energy in stability_energies() {
        for eta in [1e-3, 1.0, 1e3] {
            let traj = stability_run(&rosen, &energy, eta);
            let label = format!("rosenbrock {} eta={eta}", energy.name());
            if let Err(e) = check_stability(&traj, &label) {
                failures.push(e);
            }
            checked += 1;
        }
    }
    let ok = failures.is_empty();
    let detail = format!(
        "energy stability over {checked} configs (11 energies x 3 step sizes x 2 objectives, 1000 steps){}",
        if ok { String::new() } else { format!(" — {}", failures.join("; ")) }
    );
    verdict(3, ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_04_reference_aegd_equivalence() {
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-30);
    let mut worst: f64 = 0.0;
    for (obj, eta) in [
        (Objective::quadratic_100d(), 13.0),
        (Objective::rosenbrock(100.0), 0.0004),
    ] {
        let config = GaegdConfig::new(eta, 1.0, EnergyFunction::sqrt()).with_budget(1000);
        let mut general = init(&config, &obj, &obj.default_x0).unwrap();
        let mut reference = general.clone();
        for k in 0..1000 {
            general = step(&general, &config, &obj).unwrap();
            reference = aegd_reference_step(&reference, eta, 1.0, &obj).unwrap();
            worst = worst.max(rel(general.r.summary(), reference.r.summary()));
            worst = worst.max(rel(general.f, reference.f));
            for (a, b) in general.x.iter().zip(&reference.x) {
                worst = worst.max(rel(*a, *b));
            }
            assert!(
                worst <= 1e-10,
                "{} diverged from the hand-written square-root update at k={k}: rel {worst:e}",
                obj.name()
            );
        }
    }
    let detail = format!(
        "power:0.5 matches the hand-written square-root update over 1000 steps on both objectives (worst rel {worst:.2e}, tol 1e-10)"
    );
    verdict(4, worst <= 1e-10, &detail);
    assert!(worst <= 1e-10, "{detail}");
}

#[test]
fn criterion_05_energy_gap_bound() {
    let mut worst: f64 = f64::NEG_INFINITY;
    for stability in QUAD_STABILITY.iter() {
        let inputs = TheoryInputs::new(
            stability.eta,
            1.0,
            stability.trajectory.r0,
            50.5,
            0.0,
            2.0,
            stability.energy.clone(),
        )
        .unwrap();
        let violation = gap_bound_check(&stability.trajectory, &inputs).unwrap();
        worst = worst.max(violation);
    }
    let ok = worst <= 1e-9;
    let detail = format!(
        "gap bound on {} quad100 runs, anchor 0 plus 100 seeded pairs each: worst violation {worst:.2e} (tol 1e-9)",
        QUAD_STABILITY.len()
    );
    verdict(5, ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_06_two_stage_dichotomy() {
    let obj = Objective::quadratic_100d();
    let energies = ["power:0.3", "power:0.5", "power:0.7", "log"];
    let mut checked = 0usize;
    for name in energies {
        let energy = EnergyFunction::parse(name).unwrap();
        for eta in [0.1, 1.0, 10.0] {
            let config = GaegdConfig::new(eta, 1.0, energy.clone()).with_budget(usize::MAX);
            let inputs = TheoryInputs::from_config(&config, &obj, &obj.default_x0).unwrap();
            let bounds = stability_bounds(&inputs).unwrap();
            let level = bounds.big_f_star / (inputs.lipschitz * eta);
            for eps in [1e-2, 1e-4] {
                let n0 = two_stage_threshold(eps, level, inputs.r0, eta, bounds.alpha_lower);
                let horizon = n0.ceil() as usize;
                // Both arms of the dichotomy are monotone (min-gradient can
                // only fall, r can only fall), so the first arm to fire
                // settles the check for the whole horizon.
                let mut state = init(&config, &obj, &obj.default_x0).unwrap();
                let mut fired = state.grad_norm_sq < eps || state.r.summary() <= level;
                while !fired && state.k < horizon {
                    state = step(&state, &config, &obj).unwrap();
                    fired = state.grad_norm_sq < eps || state.r.summary() <= level;
                    assert!(
                        state.k <= horizon,
                        "walk overran the dichotomy horizon {horizon}"
                    );
                }
                assert!(
                    fired,
                    "{name} eta={eta} eps={eps}: neither arm fired by N0 = {n0:.1}"
                );
                checked += 1;
            }
        }
    }
    let detail = format!(
        "dichotomy at the energy level F*/(L eta) held exactly on 12 configurations x 2 tolerances ({checked} checks)"
    );
    verdict(6, true, &detail);
}

#[test]
fn criterion_07_energy_floor_below_threshold() {
    let obj = Objective::quadratic_100d();
    // (energy, threshold step size, guaranteed floor at 0.9x the threshold),
    // both precomputed from the closed forms and pinned.
    let cases = [
        (EnergyFunction::sqrt(), 0.038834951456311, 0.1),
        (
            EnergyFunction::logarithmic(),
            0.061250861724125,
            0.069314718055994,
        ),
    ];
    let mut details = Vec::new();
    for (energy, eta_r0_expected, floor_expected) in cases {
        let r0 = energy.value(51.5).unwrap();
        let probe = TheoryInputs::new(1.0, 1.0, r0, 50.5, 0.0, 2.0, energy.clone()).unwrap();
        let eta_r0 = eta_threshold(&probe).unwrap().eta_r0;
        assert!(
            (eta_r0 - eta_r0_expected).abs() <= 1e-9 * eta_r0_expected,
            "{}: eta_r0 {eta_r0} drifted from {eta_r0_expected}",
            energy.name()
        );

        let eta = 0.9 * eta_r0;
        let inputs = TheoryInputs::new(eta, 1.0, r0, 50.5, 0.0, 2.0, energy.clone()).unwrap();
        let floor = eta_threshold(&inputs).unwrap().r_star_lb;
        assert!(
            (floor - floor_expected).abs() <= 1e-9 * floor_expected,
            "{}: floor {floor} drifted from {floor_expected}",
            energy.name()
        );

        let config = GaegdConfig::new(eta, 1.0, energy.clone()).with_budget(100_000);
        let (_, traj) = run(&config, &obj, &obj.default_x0).unwrap();
        let measured = traj.min_r();
        assert!(
            measured >= floor - 1e-9,
            "{}: inf r {measured:e} fell below the floor {floor:e}",
            energy.name()
        );
        details.push(format!(
            "{}: inf r {measured:.6} >= floor {floor:.6}",
            energy.name()
        ));
    }
    let detail = format!(
        "energy floor over 1e5 iterations at 0.9x threshold — {}",
        details.join("; ")
    );
    verdict(7, true, &detail);
}

// ---------------------------------------------------------------------------
// Shift constructions for criteria 8 and 9.

fn quad_scalar_spec(energy: &str, eta: f64, c: f64, r0: f64) -> ExperimentSpec {
    spec_json(&format!(
        r#"{{"algo": "gaegd", "energy": "{energy}", "eta": {eta}, "c": {c}, "r0": {r0},
            "coupling": "scalar", "metric": "grad-norm-sq", "target": 1e-3,
            "max_iters": 200000, "snapshot_stride": 1000000}}"#
    ))
}

/// Damped fixed-point iteration for `c = max{c*, c_tilde} + 0.1` under the
/// default start `r0 = F(f0 + c)`: both constants move with `c` only
/// through `r0`, so the iteration settles quickly.
fn self_consistent_kl_shift(energy: &EnergyFunction, eta: f64) -> f64 {
    let obj = Objective::quadratic_100d();
    let f0 = obj.evaluate(&obj.default_x0);
    let mut c = 1.0;
    for _ in 0..60 {
        let r0 = energy.value(f0 + c).unwrap();
        let inputs = TheoryInputs::new(eta, c, r0, f0, 0.0, 2.0, energy.clone()).unwrap();
        let cs = c_star(eta, r0, f0, 0.0, 2.0, energy).unwrap();
        // c_tilde depends only on r0; the r* argument is irrelevant here.
        let guard = c_guards(&inputs, 1.0).unwrap().c_tilde;
        let target = cs.c_star.max(guard) + 0.1;
        if (target - c).abs() <= 1e-9 * (1.0 + c.abs()) {
            return target;
        }
        c += 0.5 * (target - c);
    }
    panic!(
        "shift fixed point did not settle for {} at eta={eta}",
        energy.name()
    );
}

#[test]
fn criterion_08_iteration_bound_validity() {
    let eps = 1e-3;
    let f0 = 50.5;
    let mut details = Vec::new();
    for energy in [EnergyFunction::sqrt(), EnergyFunction::logarithmic()] {
        for eta in [0.1, 1.0] {
            // The shift premise couples c to the run's limiting energy
            // through c_bar = F^{-1}(L eta r*) - f0. Starting the energy at
            // r0 = 0.9 F(f0)/(L eta) keeps L eta r* below F(f0) for every
            // reachable r* <= r0, so c_bar < 0 and c = c* + 0.1 satisfies
            // the whole constraint outright.
            let r0 = 0.9 * energy.value(f0).unwrap() / (2.0 * eta);
            let c = c_star(eta, r0, f0, 0.0, 2.0, &energy).unwrap().c_star + 0.1;
            let spec = quad_scalar_spec(&energy.name(), eta, c, r0);
            let (result, traj) = run_experiment(&spec, None).unwrap();
            let first_hit = result
                .iterations_to_target
                .expect("the run must reach the gradient target");

            let inputs = TheoryInputs::new(eta, c, r0, f0, 0.0, 2.0, energy.clone()).unwrap();
            let bounds = stability_bounds(&inputs).unwrap();
            let bound = iteration_bound(&inputs, eps, traj.min_r(), &bounds).unwrap();
            assert!(
                bound.precondition_ok,
                "{} eta={eta}: constructed shift must satisfy the hypothesis",
                energy.name()
            );
            assert!(
                (first_hit as f64) <= bound.n,
                "{} eta={eta}: first gradient hit {first_hit} exceeds the bound {}",
                energy.name(),
                bound.n
            );
            details.push(format!(
                "{} eta={eta} c={c:.1}: hit {first_hit} <= N {:.3e} ({:?})",
                energy.name(),
                bound.n,
                bound.branch
            ));
        }
    }
    let detail = format!(
        "first gradient-target hit within the computed count — {}",
        details.join("; ")
    );
    verdict(8, true, &detail);
}

#[test]
fn criterion_09_linear_rate_under_gradient_domination() {
    let obj = Objective::quadratic_100d();
    let mu = 0.02;

    // The modulus itself, brute-forced over seeded random points.
    let mut rng = ChaCha8Rng::seed_from_u64(20268);
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..100).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let f = obj.evaluate(&x);
        let g2: f64 = obj.gradient(&x).iter().map(|g| g * g).sum();
        assert!(
            g2 >= 2.0 * mu * f * (1.0 - 1e-12),
            "gradient-domination modulus {mu} fails at f={f}"
        );
    }

    let energy = EnergyFunction::sqrt();
    let eta = 0.1;
    let c = self_consistent_kl_shift(&energy, eta);
    let config = GaegdConfig::new(eta, c, energy.clone()).with_budget(3000);
    let (_, traj) = run(&config, &obj, &obj.default_x0).unwrap();

    let f0 = obj.evaluate(&obj.default_x0);
    let big_f0 = energy.value(f0 + c).unwrap();
    let constants = kl_constants(mu, 1.0, eta, traj.min_r(), big_f0, f0, 0).unwrap();
    let q = constants.q;
    assert!(q > 0.0 && q < 1.0, "contraction factor {q} out of range");

    let mut worst: f64 = f64::NEG_INFINITY;
    for pair in traj.records.windows(2) {
        worst = worst.max(pair[1].f - ((1.0 - q) * pair[0].f + 1e-12));
    }
    let last = traj.records.last().unwrap();
    worst = worst.max(traj.final_f - ((1.0 - q) * last.f + 1e-12));
    let ok = worst <= 0.0;
    let detail = format!(
        "per-step linear contraction at Q={q:.6} over 3000 steps (worst slack overshoot {worst:.2e}); modulus {mu} brute-forced on 1e4 points"
    );
    verdict(9, ok, &detail);
    assert!(ok, "{detail}");
}

// ---------------------------------------------------------------------------
// Tuning-based criteria.

static TUNED_BY_C: Lazy<Vec<(String, f64, TuneOutcome)>> = Lazy::new(|| {
    let mut outcomes = Vec::new();
    for algo in ["aegd", "alegd"] {
        for c in [1.0, 10.0, 100.0, 1000.0] {
            let spec = spec_json(&format!(
                r#"{{"algo": "{algo}", "c": {c}, "target": 1e-7}}"#
            ));
            let outcome = tune_lr(&spec).expect("tuning must select a cell");
            outcomes.push((algo.to_string(), c, outcome));
        }
    }
    outcomes
});

#[test]
fn criterion_10_tuned_step_grows_with_shift() {
    let mut details = Vec::new();
    let mut ok = true;
    for algo in ["aegd", "alegd"] {
        let etas: Vec<f64> = TUNED_BY_C
            .iter()
            .filter(|(a, _, _)| a == algo)
            .map(|(_, _, outcome)| outcome.best_eta)
            .collect();
        let monotone = etas.windows(2).all(|w| w[1] >= w[0]);
        ok &= monotone;
        details.push(format!(
            "{algo}: {}{}",
            etas.iter()
                .map(|e| format!("{e:.2}"))
                .collect::<Vec<_>>()
                .join(" -> "),
            if monotone { "" } else { " (not monotone)" }
        ));
    }
    let detail = format!(
        "tuned step size vs shift c in {{1,10,100,1000}} — {}",
        details.join("; ")
    );
    verdict(10, ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_11_effective_step_crossing_window() {
    let obj = Objective::quadratic_100d();
    let mut details = Vec::new();
    let mut ok = true;
    for algo in ["aegd", "alegd"] {
        let tuned = TUNED_BY_C
            .iter()
            .find(|(a, c, _)| a == algo && *c == 1.0)
            .map(|(_, _, outcome)| outcome.best_eta)
            .unwrap();
        let spec = spec_json(&format!(
            r#"{{"algo": "{algo}", "eta": {tuned}, "c": 1.0, "target": 1e-7, "snapshot_stride": 1}}"#
        ));
        let (_, traj) = run_experiment(&spec, None).unwrap();
        let energy = if algo == "aegd" {
            EnergyFunction::sqrt()
        } else {
            EnergyFunction::logarithmic()
        };
        let inputs = TheoryInputs::new(tuned, 1.0, traj.r0, 50.5, 0.0, 2.0, energy).unwrap();
        let report = full_report(&inputs, 1e-7, Some(traj.min_r()), obj.pl_modulus).unwrap();
        let diag = diagnostics_report(&traj, &report, &inputs).unwrap();
        let crossing = diag.first_sustained_eta_crossing;
        let in_window = crossing.is_some_and(|k| (5..=15).contains(&k));
        ok &= in_window;
        details.push(format!(
            "{algo} at tuned eta {tuned:.2}: crossing {crossing:?}"
        ));
    }
    let detail = format!(
        "first sustained drop of the effective step below 2/L lands in [5, 15] — {}",
        details.join("; ")
    );
    verdict(11, ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_12_reported_substitutes() {
    // (a) Wall-clock to 1e-10 on rosenbrock, mean of 10 repeats per
    // algorithm at its tuned step size: reported, never asserted.
    let mut timing = Vec::new();
    for algo in ["gdm", "aegd", "alegd"] {
        let tune_spec = spec_json(&format!(
            r#"{{"objective": "rosenbrock", "algo": "{algo}", "target": 1e-10}}"#
        ));
        let tuned = tune_lr(&tune_spec).expect("rosenbrock tuning must select a cell");
        let run_spec = spec_json(&format!(
            r#"{{"objective": "rosenbrock", "algo": "{algo}", "eta": {},
                "target": 1e-10, "timing_repeats": 10}}"#,
            tuned.best_eta
        ));
        let (result, _) = run_experiment(&run_spec, None).unwrap();
        timing.push(format!(
            "{algo}: {:.1e}s over {} iters at eta {:.2e}",
            result.wall_time_secs,
            result
                .iterations_to_target
                .map_or("cap".into(), |k| k.to_string()),
            tuned.best_eta
        ));
    }

    // (b) Final loss after a 200-iteration budget at each algorithm's
    // budget-tuned step size: the logarithmic energy must do at least as
    // well as the square-root one.
    let budget_tune = |algo: &str| -> (f64, f64) {
        let spec = spec_json(&format!(
            r#"{{"algo": "{algo}", "c": 1.0, "max_iters": 200}}"#
        ));
        let outcome = tune_lr(&spec).unwrap();
        (outcome.best_eta, outcome.best_final_f)
    };
    let (eta_aegd, final_aegd) = budget_tune("aegd");
    let (eta_alegd, final_alegd) = budget_tune("alegd");
    let budget_ok = final_alegd <= final_aegd;

    // (c) The tuned step size is non-increasing in the power exponent.
    let mut tuned_by_p = Vec::new();
    for i in 1..=10 {
        let p = i as f64 / 10.0;
        let spec = spec_json(&format!(
            r#"{{"algo": "gaegd", "energy": "power:{p}", "c": 1.0, "target": 1e-10}}"#
        ));
        tuned_by_p.push(tune_lr(&spec).unwrap().best_eta);
    }
    let trend_ok = tuned_by_p.windows(2).all(|w| w[1] <= w[0]);

    let ok = budget_ok && trend_ok;
    let detail = format!(
        "timings (reported only): {}; 200-iteration budget: alegd {final_alegd:.3e} @ eta {eta_alegd:.2} <= aegd {final_aegd:.3e} @ eta {eta_aegd:.2}: {budget_ok}; tuned eta by exponent {} non-increasing: {trend_ok}",
        timing.join(", "),
        tuned_by_p.iter().map(|e| format!("{e:.2}")).collect::<Vec<_>>().join(" -> ")
    );
    verdict(12, ok, &detail);
    assert!(ok, "{detail}");
}

// Keeps the audit honest: the shared stability matrix really is 33 runs.
#[test]
fn stability_matrix_has_the_advertised_shape() {
    assert_eq!(QUAD_STABILITY.len(), 33);
    assert!(QUAD_STABILITY
        .iter()
        .all(|r| !r.trajectory.records.is_empty()));
}
