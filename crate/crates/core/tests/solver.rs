use bulb_core::diagnostics::{GradNorm, LogMeta, TrajectoryLog};
use bulb_core::init::{abc, random_solenoidal, shear, taylor_green};
use bulb_core::solver::{
    run, step, verify_scaling_property, CoefficientSchedule, DriftMode, RenormSpec, SimState, SolverConfig,
    SolverError, Termination,
};
use bulb_core::spectral::{divergence, helicity, kinetic_energy, Field, GridSpec};

fn empty_log() -> TrajectoryLog {
    TrajectoryLog::new(LogMeta::physical(vec![2.0], GradNorm::Frobenius))
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    let a = a.as_physical().unwrap();
    let b = b.as_physical().unwrap();
    a.add_scaled(-1.0, &b).unwrap().max_abs()
}

#[test]
fn zero_velocity_stays_zero() {
    let g = GridSpec::new(16).unwrap();
    let v = Field::zeros(g);
    let out = run(&v, &SolverConfig::new(0.1, 0.01, 0.1), &mut empty_log(), None).unwrap();
    assert_eq!(out.state.velocity.max_abs(), 0.0);
}

#[test]
fn beltrami_decays_exactly() {
    let g = GridSpec::new(16).unwrap();
    let v0 = abc(g, 1.0, 1.0, 1.0).unwrap();
    let cfg = SolverConfig::new(0.1, 1e-3, 0.2);
    let out = run(&v0, &cfg, &mut empty_log(), None).unwrap();
    let exact = v0.scaled((-0.1f64 * 0.2).exp());
    assert!(max_diff(&out.state.velocity, &exact) < 1e-10);
}

#[test]
fn shear_is_steady_and_t_end_zero_is_a_no_op() {
    let g = GridSpec::new(16).unwrap();
    let v0 = shear(g, 1.0).unwrap();
    let mut log = empty_log();
    let out = run(&v0, &SolverConfig::new(0.0, 0.05, 0.0), &mut log, None).unwrap();
    assert!(log.is_empty());
    assert_eq!(out.state.step_count, 0);
    assert!(max_diff(&out.state.velocity, &v0) < 1e-15);
    let out = run(&v0, &SolverConfig::new(0.0, 0.05, 1.0), &mut log, None).unwrap();
    assert!(max_diff(&out.state.velocity, &v0) < 1e-10);
    assert_eq!(log.len(), 21);
}

#[test]
fn inviscid_invariants_and_divergence() {
    let g = GridSpec::new(24).unwrap();
    let v0 = random_solenoidal(g, 7, 4, 1.0).unwrap();
    let e0 = kinetic_energy(&v0).unwrap();
    let h0 = helicity(&v0).unwrap();
    let cfg = SolverConfig::new(0.0, 0.01, 0.3);
    let out = run(&v0, &cfg, &mut empty_log(), None).unwrap();
    let v = &out.state.velocity;
    assert!(((kinetic_energy(v).unwrap() - e0) / e0).abs() < 1e-7);
    // helicity is measured relative to ‖v‖‖ω‖ since it may vanish
    let scale = (2.0 * e0).sqrt() * bulb_core::spectral::enstrophy(&v0).unwrap().sqrt();
    assert!((helicity(v).unwrap() - h0).abs() < 1e-6 * scale);
    let div = divergence(v).unwrap().as_physical().unwrap().max_abs();
    assert!(div < 1e-12, "{div}");
}

#[test]
fn time_reversal() {
    let g = GridSpec::new(16).unwrap();
    let v0 = taylor_green(g, 1.0).unwrap();
    let fwd = run(&v0, &SolverConfig::new(0.0, 0.01, 0.2), &mut empty_log(), None).unwrap();
    let mut back_cfg = SolverConfig::new(0.0, 0.01, 0.0);
    back_cfg.t_end = 0.0;
    let back = bulb_core::solver::run_from(fwd.state, &back_cfg, &mut empty_log(), None);
    let back = back.unwrap_or_else(|e| panic!("{e}"));
    let d = back.state.velocity.add_scaled(-1.0, &v0).unwrap().l2_norm_sq().sqrt();
    assert!(d < 1e-8, "{d}");
    assert!(matches!(
        bulb_core::solver::run_from(back.state, &SolverConfig::new(0.1, 0.01, -0.1), &mut empty_log(), None),
        Err(SolverError::InvalidConfig(_))
    ));
}

#[test]
fn cfl_violation_is_reported() {
    let g = GridSpec::new(16).unwrap();
    let v0 = taylor_green(g, 10.0).unwrap();
    let st = SimState::new(v0).unwrap();
    match step(&st, &SolverConfig::new(0.0, 0.5, 0.5), 0.5, None) {
        Err(SolverError::Cfl { advisory_dt, .. }) => {
            assert!(advisory_dt > 0.0 && advisory_dt < 0.5);
            step(&st, &SolverConfig::new(0.0, advisory_dt, 1.0), advisory_dt, None).unwrap();
        }
        other => panic!("expected a CFL rejection, got {other:?}"),
    }
}

#[test]
fn scaling_property() {
    let g = GridSpec::new(16).unwrap();
    let v0 = taylor_green(g, 1.0).unwrap();
    let cfg = SolverConfig::new(0.0, 0.01, 0.0);
    let r = verify_scaling_property(&v0, 1.0, 1.0, &cfg, 0.05).unwrap();
    assert!(r.difference_l2 < 1e-13);
    for alpha in [1.0, -0.5] {
        let r = verify_scaling_property(&v0, 2.0, alpha, &cfg, 0.05).unwrap();
        assert!(r.difference_l2 < 1e-11 * r.reference_l2.max(1.0), "{r:?}");
    }
    assert!(verify_scaling_property(&v0, 1.5, 1.0, &cfg, 0.05).is_err());
}

/// With `b ≡ 1` the weight is `μ = 1/(1−t)` and `s = −ln(1−t)`; lattice point
/// `j` of the comoving box sits at `y = μ^{1/(α+1)} x_j`, so the renormalized
/// state must equal `μ^{−α/(α+1)} v(x_j, t)` point by point.
#[test]
fn prescribed_drift_matches_physical_run() {
    let g = GridSpec::new(16).unwrap();
    let v0 = random_solenoidal(g, 3, 3, 0.5).unwrap();
    let t = 0.4;
    let s = -(1.0f64 - t).ln();
    let alpha = 0.5;
    let phys = run(&v0, &SolverConfig::new(0.0, 1e-3, t), &mut empty_log(), None).unwrap();
    let renorm_cfg = SolverConfig::new(0.0, 1e-3, s).with_renorm(RenormSpec {
        alpha,
        mode: DriftMode::Prescribed(CoefficientSchedule::constant(1.0)),
    });
    let mut log = empty_log();
    let ren = run(&v0, &renorm_cfg, &mut log, None).unwrap();
    let mu: f64 = 1.0 / (1.0 - t);
    assert!((ren.state.log_mu - mu.ln()).abs() < 1e-12);
    assert!((ren.state.phys_time - t).abs() < 1e-10);
    let expect = phys.state.velocity.scaled(mu.powf(-alpha / (alpha + 1.0)));
    let got = ren.state.velocity.clone().with_grid(g).unwrap();
    assert!(max_diff(&got, &expect) < 1e-9, "{}", max_diff(&got, &expect));
    assert!((ren.state.grid().domain_length - g.domain_length * mu.powf(1.0 / (alpha + 1.0))).abs() < 1e-12);
    assert_eq!(log.header().last().unwrap(), "log_mu");
}

/// The enstrophy-driven system is an exact change of variables of the
/// Navier–Stokes equations with unit viscosity.
#[test]
fn enstrophy_drift_matches_navier_stokes() {
    let g = GridSpec::new(16).unwrap();
    let v0 = taylor_green(g, 0.3).unwrap();
    let cfg = SolverConfig::new(1.0, 5e-5, 0.002).with_renorm(RenormSpec {
        alpha: 1.0,
        mode: DriftMode::SelfConsistentEnstrophy { gamma: 2.0 },
    });
    let ren = run(&v0, &cfg, &mut empty_log(), None).unwrap();
    let t = ren.state.phys_time;
    assert!(t > 0.0 && t < 0.002);
    let phys = run(&v0, &SolverConfig::new(1.0, t / 20.0, t), &mut empty_log(), None).unwrap();
    let mu = ren.state.log_mu.exp();
    let expect = phys.state.velocity.scaled(mu.powf(-0.5));
    let got = ren.state.velocity.clone().with_grid(g).unwrap();
    assert!(max_diff(&got, &expect) < 1e-8, "{}", max_diff(&got, &expect));
}

#[test]
fn resolution_exhaustion_stops_the_run() {
    let g = GridSpec::new(16).unwrap();
    let v0 = random_solenoidal(g, 11, 5, 1.0).unwrap();
    let mut cfg = SolverConfig::new(0.0, 0.01, 1.0);
    cfg.tail_threshold = Some(1e-12);
    let out = run(&v0, &cfg, &mut empty_log(), None).unwrap();
    assert!(matches!(out.termination, Termination::ResolutionExhausted { .. }));
}
