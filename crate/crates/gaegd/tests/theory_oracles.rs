//! Cross-module checks: run the optimizer, feed the finished trajectory to
//! the theory calculators, and verify that every closed-form bound actually
//! holds on the measured data.

use gaegd::bench::{diagnostics_report, envelope_violation};
use gaegd::energy::EnergyFunction;
use gaegd::objectives::Objective;
use gaegd::optimizer::{run, GaegdConfig};
use gaegd::theory::{
    c_star, eta_threshold, full_report, gap_bound_check, stability_bounds, two_stage_threshold,
    RStarSource, TheoryInputs,
};

fn quad_scalar_run(eta: f64, c: f64, steps: usize) -> (GaegdConfig, gaegd::optimizer::Trajectory) {
    let obj = Objective::quadratic_100d();
    let config = GaegdConfig::new(eta, c, EnergyFunction::sqrt()).with_budget(steps);
    let (_, traj) = run(&config, &obj, &obj.default_x0).unwrap();
    (config, traj)
}

#[test]
fn report_invariants_hold_on_the_quadratic_benchmark() {
    let obj = Objective::quadratic_100d();
    let (config, traj) = quad_scalar_run(1.0, 1.0, 500);
    let inputs = TheoryInputs::from_config(&config, &obj, &obj.default_x0).unwrap();
    let report = full_report(&inputs, 1e-3, Some(traj.min_r()), obj.pl_modulus).unwrap();

    assert!(report.big_f_star <= report.big_f0 && report.big_f0 <= report.big_f_bar);
    assert!(inputs.f_star <= report.f_bar);
    assert!(report.fp_bar <= report.fp_star);
    assert!(report.alpha_lower > 0.0);
    assert_eq!(report.r_star_source, RStarSource::Measured);
    assert!(report.r_star > 0.0);
    assert!(report.c_star.is_some() && report.a_star.is_some());

    // Every key of the serialized artifact, spelled as consumers read them.
    let json: serde_json::Value =
        serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    for key in [
        "F_star",
        "F0",
        "F_bar",
        "f_bar",
        "Fp_star",
        "Fp_bar",
        "alpha_lower",
        "eta_r0",
        "r_star_lb",
        "r_star",
        "r_star_source",
        "c_star",
        "c_bar",
        "c_tilde",
        "N0",
        "N_bound",
        "Q",
        "C1",
        "C2",
        "C3",
        "eps",
    ] {
        assert!(json.get(key).is_some(), "report must expose {key}");
    }
}

#[test]
fn measured_run_respects_every_bound_it_reports() {
    let obj = Objective::quadratic_100d();
    let (config, traj) = quad_scalar_run(1.0, 1.0, 500);
    let inputs = TheoryInputs::from_config(&config, &obj, &obj.default_x0).unwrap();
    let report = full_report(&inputs, 1e-3, Some(traj.min_r()), obj.pl_modulus).unwrap();
    let diag = diagnostics_report(&traj, &report, &inputs).unwrap();

    assert!(diag.r_non_increasing);
    assert!(
        diag.envelopes_ok,
        "envelope violation {:e}",
        diag.max_envelope_violation
    );
    assert!(
        diag.identity_ok,
        "identity residual {:e}",
        diag.identity_residual_max
    );
    assert!(diag.gap_ok, "gap violation {:e}", diag.gap_violation);
    assert_eq!(diag.two_over_l, 1.0);
    assert_eq!(diag.rows.len(), traj.records.len());
}

#[test]
fn envelopes_and_gap_hold_across_energies_and_step_sizes() {
    let obj = Objective::quadratic_100d();
    for energy in [EnergyFunction::sqrt(), EnergyFunction::logarithmic()] {
        for eta in [0.01, 1.0, 100.0] {
            let config = GaegdConfig::new(eta, 1.0, energy.clone()).with_budget(400);
            let (_, traj) = run(&config, &obj, &obj.default_x0).unwrap();
            let inputs = TheoryInputs::from_config(&config, &obj, &obj.default_x0).unwrap();
            let bounds = stability_bounds(&inputs).unwrap();
            let violation = envelope_violation(&traj, &inputs).unwrap();
            assert!(
                violation <= 1e-9 * bounds.big_f_bar.abs(),
                "{} at eta={eta}: envelope violation {violation:e}",
                energy.name()
            );
            let gap = gap_bound_check(&traj, &inputs).unwrap();
            assert!(
                gap <= 1e-9,
                "{} at eta={eta}: gap violation {gap:e}",
                energy.name()
            );
        }
    }
}

#[test]
fn small_step_sizes_keep_the_energy_above_the_a_priori_floor() {
    // Short-horizon version of the energy-floor guarantee: below the
    // threshold step size the energy cannot fall under its closed-form
    // floor, however long the run.
    let obj = Objective::quadratic_100d();
    for energy in [EnergyFunction::sqrt(), EnergyFunction::logarithmic()] {
        let r0 = energy.value(obj.evaluate(&obj.default_x0) + 1.0).unwrap();
        let probe = TheoryInputs::new(1.0, 1.0, r0, 50.5, 0.0, 2.0, energy.clone()).unwrap();
        let eta_r0 = eta_threshold(&probe).unwrap().eta_r0;

        let eta = 0.9 * eta_r0;
        let inputs = TheoryInputs::new(eta, 1.0, r0, 50.5, 0.0, 2.0, energy.clone()).unwrap();
        let floor = eta_threshold(&inputs).unwrap().r_star_lb;
        assert!(
            floor > 0.0,
            "{}: floor must be guaranteed below eta_r0",
            energy.name()
        );

        let config = GaegdConfig::new(eta, 1.0, energy.clone()).with_budget(2_000);
        let (_, traj) = run(&config, &obj, &obj.default_x0).unwrap();
        assert!(
            traj.min_r() >= floor - 1e-9,
            "{}: measured inf r = {:e} under floor {:e}",
            energy.name(),
            traj.min_r(),
            floor
        );
    }
}

#[test]
fn dichotomy_threshold_is_definitional() {
    // N0 = ln(r0/C) / ln(1 + α̲·η·ε), clamped to at least one step.
    let n0 = two_stage_threshold(1e-2, 1.0, (51.5f64).sqrt(), 1.0, 0.2);
    let by_hand = ((51.5f64).sqrt().ln() - 1f64.ln()) / (1.0f64 + 0.2 * 1.0 * 1e-2).ln();
    assert!((n0 - by_hand).abs() <= 1e-12 * by_hand);
    assert_eq!(
        two_stage_threshold(1e-2, 10.0, 1.0, 1.0, 0.2),
        1.0,
        "r0 at or under C needs one step"
    );
}

#[test]
fn robust_shift_grows_with_the_step_size_and_beats_its_parts() {
    let energy = EnergyFunction::sqrt();
    let mut last = 0.0;
    for eta in [0.1, 0.5, 2.0, 10.0] {
        let cs = c_star(eta, 1.0, 1.0, 0.0, 2.0, &energy).unwrap();
        assert!(cs.c_star > last, "c* must increase with eta");
        assert!(cs.a_star > 0.0 && cs.a_star < 1.0);
        last = cs.c_star;
    }
}

#[test]
fn stationary_start_produces_a_constant_diagnostics_table() {
    let obj = Objective::quadratic_100d();
    let config = GaegdConfig::new(1.0, 1.0, EnergyFunction::sqrt()).with_budget(10);
    let x0 = vec![0.0; 100];
    let (_, traj) = run(&config, &obj, &x0).unwrap();
    let inputs = TheoryInputs::from_config(&config, &obj, &x0).unwrap();
    let report = full_report(&inputs, 1e-3, Some(traj.min_r()), obj.pl_modulus).unwrap();
    assert!(
        report.c_star.is_none(),
        "no shift constraint exists at the optimum"
    );

    let diag = diagnostics_report(&traj, &report, &inputs).unwrap();
    assert!(diag
        .rows
        .iter()
        .all(|row| row.f == 0.0 && row.grad_norm_sq == 0.0));
    assert!(diag.rows.iter().all(|row| row.r == diag.rows[0].r));
    assert!(diag.r_non_increasing && diag.envelopes_ok && diag.gap_ok);
}
