use bulb_core::diagnostics::{GradNorm, LogMeta, RowSample, TrajectoryLog};
use bulb_core::init::{shear, taylor_green};
use bulb_core::solver::{run, DriftMode, RenormSpec, SolverConfig};
use bulb_core::spectral::GridSpec;
use bulb_core::verify::{
    exclusion_region, exclusion_verdict, verify_enstrophy_estimate, verify_gamma_family, verify_lp_power_sandwich,
    verify_lp_sandwich, verify_ratio_lower_bound, verify_renorm_field_decay, CheckStatus, DEFAULT_C0,
};
use proptest::prelude::*;

fn log(p: Vec<f64>, norm: GradNorm) -> TrajectoryLog {
    TrajectoryLog::new(LogMeta::physical(p, norm))
}

fn tg_euler() -> TrajectoryLog {
    let g = GridSpec::new(16).unwrap();
    let mut l = log(vec![2.0, f64::INFINITY], GradNorm::Dominant);
    run(&taylor_green(g, 1.0).unwrap(), &SolverConfig::new(0.0, 0.005, 0.5), &mut l, None).unwrap();
    l
}

#[test]
fn taylor_green_inequality_suite() {
    let l = tg_euler();
    for p in [2.0, f64::INFINITY] {
        for r in verify_lp_sandwich(&l, p, 0.0).unwrap() {
            assert_eq!(r.status, CheckStatus::Pass, "{r:?}");
            assert!(r.worst_margin.unwrap() >= -1e-3);
        }
        let r = verify_lp_power_sandwich(&l, p, 1.0, 0.1, 1.0, None).unwrap();
        assert_eq!(r.status, CheckStatus::Pass, "{r:?}");
    }
    for gamma in [1.0, 2.0, 4.0] {
        for r in verify_gamma_family(&l, gamma).unwrap() {
            assert_eq!(r.status, CheckStatus::Pass, "γ={gamma} {}: {:?}", r.id, r.worst_margin);
        }
    }
}

/// For γ = 1 the γ-family bounds are the p = ∞ sandwich bounds.
#[test]
fn gamma_one_reduces_to_sandwich() {
    let l = tg_euler();
    let fam = verify_gamma_family(&l, 1.0).unwrap();
    let [lo, hi] = verify_lp_sandwich(&l, f64::INFINITY, 0.0).unwrap();
    for (a, b) in fam[0].margins.iter().zip(&hi.margins) {
        assert!((a.bound - b.bound).abs() <= 1e-12 * b.bound.abs());
    }
    for (a, b) in fam[1].margins.iter().zip(&lo.margins) {
        assert!((a.bound - b.bound).abs() <= 1e-12 * b.bound.abs());
    }
    assert_eq!(fam[0].margins.len(), hi.margins.len());
    assert_eq!(fam[1].margins.len(), lo.margins.len());
}

#[test]
fn frobenius_premise_is_vacuous_for_taylor_green() {
    let g = GridSpec::new(16).unwrap();
    let mut l = log(vec![], GradNorm::Frobenius);
    run(&taylor_green(g, 1.0).unwrap(), &SolverConfig::new(0.0, 0.01, 0.1), &mut l, None).unwrap();
    let r = verify_gamma_family(&l, 2.0).unwrap();
    assert!(r.iter().all(|x| x.status == CheckStatus::Vacuous));
}

fn renorm_log(v: &bulb_core::spectral::Field, nu: f64, dt: f64, s_end: f64, spec: RenormSpec, p: Vec<f64>) -> TrajectoryLog {
    let mut l = log(p, GradNorm::Dominant);
    run(v, &SolverConfig::new(nu, dt, s_end).with_renorm(spec), &mut l, None).unwrap();
    l
}

#[test]
fn renormalized_decay_bounds() {
    let g = GridSpec::new(16).unwrap();
    let v = taylor_green(g, 1.0).unwrap();
    // with ‖Ω₀‖∞ = 2 the lower bound for sign − blows up at s = 1/(2(γ−1))
    for (gamma, sign, s_end) in [(1.0, 1i8, 0.2), (2.0, 1, 0.2), (4.0, 1, 0.2), (2.0, -1, 0.2), (4.0, -1, 0.1)] {
        let l = renorm_log(
            &v,
            0.0,
            2e-3,
            s_end,
            RenormSpec {
                alpha: 1.0,
                mode: DriftMode::SelfConsistentGradient { gamma, sign, norm: GradNorm::Dominant },
            },
            vec![],
        );
        let r = verify_renorm_field_decay(&l, DEFAULT_C0).unwrap();
        assert_eq!(r.id, if sign > 0 { "2.10" } else { "2.11" });
        assert_eq!(r.status, CheckStatus::Pass, "γ={gamma} sign={sign}: {r:?}");
        assert!(r.margins[0].margin.abs() < 1e-15);
    }
}

#[test]
fn enstrophy_bounds_for_navier_stokes() {
    let g = GridSpec::new(16).unwrap();
    let v = taylor_green(g, 0.1).unwrap();
    let gamma = DEFAULT_C0 + 1.0;
    let l = renorm_log(
        &v,
        1.0,
        1e-3,
        0.5,
        RenormSpec { alpha: 1.0, mode: DriftMode::SelfConsistentEnstrophy { gamma } },
        vec![],
    );
    let r = verify_renorm_field_decay(&l, DEFAULT_C0).unwrap();
    assert_eq!(r.id, "3.8");
    assert_eq!(r.status, CheckStatus::Pass, "{r:?}");

    let mut pl = log(vec![], GradNorm::Dominant);
    run(&v, &SolverConfig::new(1.0, 1e-3, 0.5), &mut pl, None).unwrap();
    for r in verify_enstrophy_estimate(&pl, gamma, DEFAULT_C0).unwrap() {
        assert_eq!(r.status, CheckStatus::Pass, "{r:?}");
        assert!(r.checked > 10);
    }
    assert!(verify_enstrophy_estimate(&pl, 0.5, DEFAULT_C0).is_err());
    assert!(verify_enstrophy_estimate(&tg_euler(), gamma, DEFAULT_C0).is_err());
}

#[test]
fn ratio_lower_bound_pairs_runs() {
    let g = GridSpec::new(16).unwrap();
    let v = taylor_green(g, 1.0).unwrap();
    let mut pl = log(vec![1.0], GradNorm::Dominant);
    run(&v, &SolverConfig::new(0.0, 0.005, 0.3), &mut pl, None).unwrap();
    for alpha in [0.0, 1.0] {
        let rl = renorm_log(
            &v,
            0.0,
            0.005,
            0.3,
            RenormSpec {
                alpha,
                mode: DriftMode::SelfConsistentGradient { gamma: 1.0, sign: 1, norm: GradNorm::Dominant },
            },
            vec![1.0],
        );
        let r = verify_ratio_lower_bound(&pl, &rl, 1.0).unwrap();
        assert_eq!(r.status, CheckStatus::Pass, "{r:?}");
        let note = r.note.unwrap();
        assert_eq!(note.contains("> 0"), alpha == 0.0, "{note}");
    }
}

#[test]
fn steady_shear_is_inside_every_bound() {
    let g = GridSpec::new(16).unwrap();
    let mut l = log(vec![1.0, 2.0], GradNorm::Dominant);
    run(&shear(g, 1.0).unwrap(), &SolverConfig::new(0.0, 0.01, 1.0), &mut l, None).unwrap();
    for gamma in [1.0, 2.0, 4.0] {
        for r in verify_gamma_family(&l, gamma).unwrap() {
            assert_eq!(r.status, CheckStatus::Pass, "{}: {:?}", r.id, r.worst_margin);
        }
    }
    for p in [1.0, 2.0] {
        for r in verify_lp_sandwich(&l, p, 0.0).unwrap() {
            // ‖ω‖ₚ is constant while ∫‖∇v‖ grows: strict margins after t₀
            assert!(r.margins.last().unwrap().margin > 0.5, "{r:?}");
        }
    }
}

#[test]
fn exclusion_examples() {
    assert_eq!(exclusion_region(0.5, 1.0).unwrap().to_string(), "(0, 1) ∪ (3, ∞]");
    for m in [0.0, 0.5, 0.999] {
        assert!(exclusion_verdict(m, 1.0, f64::INFINITY).unwrap().excluded);
    }
    assert!(!exclusion_verdict(1.0, 1.0, f64::INFINITY).unwrap().excluded);
    for m in [0.0, 1.0, 10.0] {
        assert!(!exclusion_verdict(m, 1.5, 1.2).unwrap().excluded);
    }
    assert_eq!(exclusion_region(0.0, 0.0).unwrap().small_p_region.hi, 1.5);
    assert_eq!(exclusion_region(0.0, 1.0).unwrap().small_p_region.hi, 0.75);
}

fn synthetic(grad: &[f64], omega: &[f64], dt: f64) -> TrajectoryLog {
    let mut l = log(vec![], GradNorm::Dominant);
    for (i, (g, w)) in grad.iter().zip(omega).enumerate() {
        l.push(RowSample { t: i as f64 * dt, grad_sup: *g, omega_sup: *w, ..Default::default() }).unwrap();
    }
    l
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The verdict depends on (M, q) only, q = 3/((α+1)p).
    #[test]
    fn exclusion_depends_on_q(m in 0.0f64..3.0, q in 0.01f64..5.0, a1 in -0.9f64..4.0, a2 in -0.9f64..4.0) {
        let p1 = 3.0 / ((a1 + 1.0) * q);
        let p2 = 3.0 / ((a2 + 1.0) * q);
        let v1 = exclusion_verdict(m, a1, p1).unwrap();
        let v2 = exclusion_verdict(m, a2, p2).unwrap();
        prop_assume!((v1.threshold - m).abs() > 1e-9);
        prop_assert_eq!(v1.excluded, v2.excluded);
        let region = exclusion_region(m, a1).unwrap();
        prop_assert_eq!(region.excluded.iter().any(|i| i.contains(p1)), v1.excluded);
    }

    /// Where the upper and lower γ-bounds hold, the combined estimate holds,
    /// and loosening the tolerance never turns a pass into a failure.
    #[test]
    fn combined_estimate_and_tolerance(
        grad in prop::collection::vec(0.5f64..3.0, 12),
        frac in prop::collection::vec(0.0f64..1.0, 12),
        gamma in 1.0f64..4.0,
        tol in 1e-6f64..1e-2,
    ) {
        let omega: Vec<f64> = grad.iter().zip(&frac).map(|(g, f)| g * f).collect();
        let l = synthetic(&grad, &omega, 0.02);
        let r = verify_gamma_family(&l, gamma).unwrap();
        if r[0].worst_margin.unwrap() >= 0.0 && r[1].worst_margin.map_or(true, |m| m >= 0.0) {
            prop_assert!(r[3].worst_margin.map_or(true, |m| m >= -1e-12), "{:?}", r[3].worst_margin);
        }
        for rep in r {
            let strict = rep.clone().with_tol(tol);
            let loose = rep.with_tol(tol * 10.0);
            prop_assert!(!(strict.status == CheckStatus::Pass && loose.status == CheckStatus::Fail));
        }
    }
}
