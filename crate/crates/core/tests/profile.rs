use bulb_core::diagnostics::{lp_norm, GradNorm, LogMeta, TrajectoryLog};
use bulb_core::init::shear;
use bulb_core::profile::{
    compact_template, profile_convergence_test, profile_energy_identity, stationary_residual, synthesize_selfsimilar,
    test_family, weak_pairing, ProfileCandidate, ProfileError, Provenance, StationarySystem, Verdict, WindowSchedule,
};
use bulb_core::similarity::{push_snapshot, MuSchedule, SimilarityMap};
use bulb_core::solver::{run, SolverConfig};
use bulb_core::spectral::{gradient, Field, GridSpec};
use proptest::prelude::*;

const R: f64 = 1.0;

fn window(n: usize) -> GridSpec {
    GridSpec::centered(n, R).unwrap()
}

fn candidate(n: usize, seed: u64, alpha: f64) -> ProfileCandidate {
    ProfileCandidate::new(compact_template(window(n), seed, 3).unwrap(), alpha, Provenance::Synthesized).unwrap()
}

fn l2(f: &Field) -> f64 {
    lp_norm(&f.as_physical().unwrap(), 2.0).unwrap()
}

#[test]
fn unit_scale_synthesis_is_the_template() {
    let t = compact_template(window(32), 1, 2).unwrap();
    let v = synthesize_selfsimilar(&t, 1.0, 2.0, 1.0, window(32)).unwrap();
    let d = v.add_scaled(-1.0, &t).unwrap();
    assert!(d.max_abs() < 1e-12 * t.max_abs(), "{}", d.max_abs());
}

/// Box lattice `h = σ·h_window` so template nodes land on box nodes.
fn commensurate(n: usize, alpha: f64, t_blow: f64, t: f64) -> GridSpec {
    let sigma = (t_blow - t).powf(1.0 / (alpha + 1.0));
    GridSpec::centered(n, sigma * R).unwrap()
}

#[test]
fn energy_scaling_of_synthesized_fields() {
    let tpl = compact_template(window(32), 2, 3).unwrap();
    let t_blow = 1.0;
    let norms: Vec<f64> = [0.2, 0.5, 0.9]
        .iter()
        .map(|&t| l2(&synthesize_selfsimilar(&tpl, 1.5, t_blow, t, commensurate(32, 1.5, t_blow, t)).unwrap()))
        .collect();
    for n in &norms[1..] {
        assert!((n - norms[0]).abs() < 1e-6 * norms[0], "{norms:?}");
    }
    // α = 1: ‖v(t)‖ ∝ (T−t)^{(α−3/2)/(α+1)}
    let (t1, t2) = (0.2, 0.7);
    let a = l2(&synthesize_selfsimilar(&tpl, 1.0, t_blow, t1, commensurate(32, 1.0, t_blow, t1)).unwrap());
    let b = l2(&synthesize_selfsimilar(&tpl, 1.0, t_blow, t2, commensurate(32, 1.0, t_blow, t2)).unwrap());
    let expect = ((t_blow - t1) / (t_blow - t2)).powf(1.0 / 2.0 - 3.0 / 4.0);
    assert!((b / a - expect).abs() < 1e-6 * expect, "{} vs {expect}", b / a);
}

#[test]
fn energy_scaling_on_a_fixed_box() {
    // not commensurate: interpolation error only
    let tpl = compact_template(window(32), 2, 3).unwrap();
    let out = GridSpec::new(96).unwrap();
    let norms: Vec<f64> = [0.0, 0.3, 0.5]
        .iter()
        .map(|&t| l2(&synthesize_selfsimilar(&tpl, 1.5, 1.0, t, out).unwrap()))
        .collect();
    for n in &norms[1..] {
        assert!((n - norms[0]).abs() < 1e-3 * norms[0], "{norms:?}");
    }
}

#[test]
fn support_escape_is_an_error() {
    let tpl = compact_template(window(16), 3, 1).unwrap();
    let small = GridSpec::centered(16, 0.2).unwrap();
    assert!(matches!(
        synthesize_selfsimilar(&tpl, 1.0, 1.0, 0.0, small),
        Err(ProfileError::SupportEscape { .. })
    ));
    assert!(synthesize_selfsimilar(&tpl, 1.0, 1.0, 1.0, small).is_err());
}

#[test]
fn self_similarity_loop_recovers_the_template() {
    let (alpha, t_blow, n) = (1.0, 1.0, 32);
    let tpl = compact_template(window(n), 4, 3).unwrap();
    let map = SimilarityMap::new(MuSchedule::power_law(t_blow, 1.0).unwrap(), alpha).unwrap();
    let mut snaps = Vec::new();
    for t in [0.0, 0.3, 0.6, 0.9] {
        let v = synthesize_selfsimilar(&tpl, alpha, t_blow, t, commensurate(n, alpha, t_blow, t)).unwrap();
        let w = push_snapshot(&v, &map, t, R, n).unwrap();
        let err = w.add_scaled(-1.0, &tpl).unwrap();
        for p in [1.0, 2.0, f64::INFINITY] {
            let e = lp_norm(&err, p).unwrap();
            assert!(e < 1e-8, "t={t} p={p}: {e:e}");
        }
        snaps.push((map.s_of_t(t).unwrap(), w));
    }
    for p in [1.0, 2.0, f64::INFINITY] {
        let r = profile_convergence_test(&snaps, p, &WindowSchedule::Whole).unwrap();
        assert_eq!(r.verdict, Verdict::Converging);
        assert!(!r.zero_profile);
        assert!(r.differences.iter().all(|d| *d < 1e-8), "{:?}", r.differences);
    }
}

#[test]
fn geometric_perturbation_rate() {
    let v = compact_template(window(16), 5, 2).unwrap();
    let w = compact_template(window(16), 6, 2).unwrap();
    let snaps: Vec<(f64, Field)> =
        (0..6).map(|k| (k as f64, v.add_scaled(0.5f64.powi(k), &w).unwrap())).collect();
    for sched in [WindowSchedule::Whole, WindowSchedule::Fixed { radius: 0.8 }] {
        let r = profile_convergence_test(&snaps, 2.0, &sched).unwrap();
        for d in r.differences.windows(2) {
            assert!((d[1] / d[0] - 0.5).abs() < 1e-12);
        }
        assert!((r.rate.unwrap() - std::f64::consts::LN_2).abs() < 1e-10);
        assert_eq!(r.verdict, Verdict::Converging);
        assert!(!r.zero_profile);
    }
}

#[test]
fn shear_collapses_to_the_zero_profile() {
    let g = GridSpec::new(16).unwrap();
    let v = shear(g, 1.0).unwrap();
    let mut log = TrajectoryLog::new(LogMeta::physical(vec![], GradNorm::Dominant));
    run(&v, &SolverConfig::new(0.0, 0.01, 2.0), &mut log, None).unwrap();
    let map = SimilarityMap::new(MuSchedule::exp_gradient(&log, 1.0, 1).unwrap(), 1.0).unwrap();
    let snaps: Vec<(f64, Field)> = [0.0, 0.5, 1.0, 1.5, 2.0]
        .iter()
        .map(|&t| (map.s_of_t(t).unwrap(), push_snapshot(&v, &map, t, std::f64::consts::PI, 16).unwrap()))
        .collect();
    let r = profile_convergence_test(&snaps, 2.0, &WindowSchedule::Whole).unwrap();
    assert!(r.zero_profile, "{r:?}");
    assert_eq!(r.verdict, Verdict::Diverging);
}

#[test]
fn lattice_mismatch_and_short_sequences() {
    let a = Field::zeros(window(16));
    let b = Field::zeros(window(32));
    let snaps = vec![(0.0, a.clone()), (1.0, a.clone()), (2.0, b)];
    assert!(matches!(
        profile_convergence_test(&snaps, 2.0, &WindowSchedule::Whole),
        Err(ProfileError::LatticeMismatch(2))
    ));
    assert!(profile_convergence_test(&snaps[..2], 2.0, &WindowSchedule::Whole).is_err());
}

#[test]
fn energy_identity_matches_closed_form() {
    for seed in 0..3 {
        for alpha in [0.0, 1.0, 1.5, 3.0] {
            let c = candidate(80, seed, alpha);
            let e = profile_energy_identity(&c, alpha).unwrap();
            assert!(e.rel_diff < 1e-6, "seed {seed} α {alpha}: {e:?}");
            if alpha == 1.5 {
                assert!(e.integral.abs() < 1e-9 * e.l2_sq);
            }
            if alpha != 1.5 {
                assert_eq!(e.integral.signum(), (alpha - 1.5).signum());
            }
        }
    }
    let edge = ProfileCandidate::new(
        Field::from_fn(window(32), |y| if y[0].abs() > 0.95 { [1.0, 0.0, 0.0] } else { [0.0; 3] }),
        1.0,
        Provenance::External,
    )
    .unwrap();
    assert!(matches!(profile_energy_identity(&edge, 1.0), Err(ProfileError::NotCompact(_))));
}

/// Strong form `∫[αV̄ + (y·∇)V̄ + (α+1)(V̄·∇)V̄]·φ` with derivatives on `V̄`.
fn strong_pairing(v: &Field, phi: &Field, alpha: f64) -> f64 {
    let g = *v.grid();
    let vp = v.as_physical().unwrap();
    let vd = vp.physical().unwrap();
    let gp = gradient(&v.as_spectral().unwrap()).unwrap().to_physical().unwrap();
    let gd = gp.physical().unwrap();
    let pp = phi.as_physical().unwrap();
    let pd = pp.physical().unwrap();
    let xs = g.coords();
    let mut s = 0.0;
    for z in 0..g.n {
        for y in 0..g.n {
            for x in 0..g.n {
                let i = g.idx(x, y, z);
                let pos = [xs[x], xs[y], xs[z]];
                for a in 0..3 {
                    let mut r = alpha * vd[a][i];
                    for b in 0..3 {
                        r += (pos[b] + (alpha + 1.0) * vd[b][i]) * gd[3 * a + b][i];
                    }
                    s += r * pd[a][i];
                }
            }
        }
    }
    s * g.cell_volume()
}

#[test]
fn weak_form_matches_strong_form() {
    let c = candidate(64, 11, 1.0);
    let fam = test_family(R, 3);
    let rep = stationary_residual(&c, StationarySystem::SelfSimilarEuler, &fam).unwrap();
    let mut worst = 0.0f64;
    for (f, p) in fam.functions.iter().zip(&rep.pairings) {
        let (phi, _) = f.sample(*c.field.grid()).unwrap();
        let strong = strong_pairing(&c.field, &phi, 1.0);
        worst = worst.max((strong - p.total).abs() / rep.candidate_l2_sq);
    }
    assert!(worst < 1e-6);
    assert!(rep.max_normalized > 1e-3);
}

#[test]
fn shear_is_a_weak_euler_solution() {
    let v = Field::from_fn(window(32), |y| [y[1].sin(), 0.0, 0.0]);
    let c = ProfileCandidate::new(v, 1.0, Provenance::External).unwrap();
    let r = stationary_residual(&c, StationarySystem::WeakEulerLimit, &test_family(R, 1)).unwrap();
    assert_eq!(r.family_size, 24);
    assert!(r.max_residual < 1e-8, "{}", r.max_residual);
}

#[test]
fn steady_navier_stokes_pairing_with_the_candidate_is_the_dirichlet_energy() {
    let c = candidate(64, 9, 0.0);
    let p = weak_pairing(&c, StationarySystem::SteadyNavierStokes, &c.field).unwrap();
    let g = gradient(&c.field.as_spectral().unwrap()).unwrap().to_physical().unwrap();
    let dirichlet = lp_norm(&g, 2.0).unwrap().powi(2);
    assert!((p.total - dirichlet).abs() < 1e-8 * dirichlet, "{} vs {dirichlet}", p.total);
}

#[test]
fn test_functions_must_fit_the_window() {
    let c = candidate(16, 1, 1.0);
    let big = test_family(2.0 * R, 1);
    assert!(matches!(
        stationary_residual(&c, StationarySystem::SelfSimilarEuler, &big),
        Err(ProfileError::TestSupport { .. })
    ));
    let mut few = test_family(R, 1);
    few.functions.truncate(7);
    assert!(stationary_residual(&c, StationarySystem::SelfSimilarEuler, &few).is_err());
}

#[test]
fn exponential_system_uses_the_gradient_sup() {
    let c = candidate(32, 2, 1.5);
    let r = stationary_residual(&c, StationarySystem::ExponentialEuler, &test_family(R, 2)).unwrap();
    assert!(r.grad_sup.unwrap() > 0.0);
    assert!(r.max_residual.is_finite() && r.divergence_residual < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Doubling the candidate quadruples the nonlinear pairing and doubles the linear ones.
    #[test]
    fn pairings_are_bilinear(seed in 0u64..1000, k in 0usize..24) {
        let c = candidate(16, seed, 1.0);
        let c2 = ProfileCandidate::new(c.field.scaled(2.0), 1.0, Provenance::External).unwrap();
        let f = test_family(R, seed).functions[k];
        let (phi, _) = f.sample(window(16)).unwrap();
        let a = weak_pairing(&c, StationarySystem::SteadyNavierStokes, &phi).unwrap();
        let b = weak_pairing(&c2, StationarySystem::SteadyNavierStokes, &phi).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-10 * x.abs().max(y.abs()).max(1e-300);
        prop_assert!(close(b.nonlinear, 4.0 * a.nonlinear));
        prop_assert!(close(b.mass, 2.0 * a.mass));
        prop_assert!(close(b.drift, 2.0 * a.drift));
        prop_assert!(close(b.viscous, 2.0 * a.viscous));
    }

    /// Sign of the energy identity follows `α − 3/2`.
    #[test]
    fn energy_identity_sign(seed in 0u64..1000, alpha in -0.9f64..5.0) {
        prop_assume!((alpha - 1.5).abs() > 0.05);
        let c = candidate(32, seed, alpha);
        let e = profile_energy_identity(&c, alpha).unwrap();
        prop_assert_eq!(e.integral.signum(), (alpha - 1.5).signum());
    }
}
