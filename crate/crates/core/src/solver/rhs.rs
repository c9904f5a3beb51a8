use num_complex::Complex64;
use std::array;

use super::{DriftMode, SimState, SolverConfig, SolverError, StageInfo, StepObserver};
use crate::diagnostics::grad_sup;
use crate::spectral::fft::plan;
use crate::spectral::{dealias_in_place, enstrophy, project_in_place, Field, GridSpec, Wavenumbers};

type Coeffs = [Vec<Complex64>; 3];

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Explicit RK4 stability reach along the negative real axis, with margin.
const DIFFUSIVE_LIMIT: f64 = 2.5;

struct StageEval {
    du: Coeffs,
    dlog_mu: f64,
    dphys: f64,
    drift: f64,
    max_speed: f64,
    grid: GridSpec,
    nu_eff: f64,
}

/// Box and effective viscosity at a given `log μ`.
fn stage_grid(base: &GridSpec, base_length: f64, alpha: Option<f64>, log_mu: f64) -> Result<GridSpec, SolverError> {
    match alpha {
        None => Ok(*base),
        Some(a) => Ok(base.with_domain_length(base_length * (log_mu / (a + 1.0)).exp())?),
    }
}

/// `P[(v × ω)]`, dealiased, plus the largest pointwise speed.
fn nonlinear(grid: &GridSpec, w: &Wavenumbers, u: &Coeffs) -> (Coeffs, f64) {
    let p = plan(grid.n);
    let mut om: Coeffs = array::from_fn(|_| vec![Complex64::new(0.0, 0.0); u[0].len()]);
    w.for_each(|idx, _, k| {
        let c = [u[0][idx], u[1][idx], u[2][idx]];
        om[0][idx] = I * (c[2] * k[1] - c[1] * k[2]);
        om[1][idx] = I * (c[0] * k[2] - c[2] * k[0]);
        om[2][idx] = I * (c[1] * k[0] - c[0] * k[1]);
    });
    let up: [Vec<f64>; 3] = array::from_fn(|c| p.inverse(&u[c]));
    let op: [Vec<f64>; 3] = array::from_fn(|c| p.inverse(&om[c]));
    let len = up[0].len();
    let mut cross: [Vec<f64>; 3] = array::from_fn(|_| vec![0.0; len]);
    let mut max_speed: f64 = 0.0;
    for i in 0..len {
        let a = [up[0][i], up[1][i], up[2][i]];
        let b = [op[0][i], op[1][i], op[2][i]];
        cross[0][i] = a[1] * b[2] - a[2] * b[1];
        cross[1][i] = a[2] * b[0] - a[0] * b[2];
        cross[2][i] = a[0] * b[1] - a[1] * b[0];
        max_speed = max_speed.max((a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt());
    }
    let band = Some((grid.cutoff() + 1e-9).floor() as usize);
    let mut out: Coeffs = array::from_fn(|c| p.forward(grid, &cross[c], band));
    dealias_in_place(grid, &mut out);
    project_in_place(w, &mut out);
    (out, max_speed)
}

fn evaluate(
    u: &Coeffs,
    log_mu: f64,
    s: f64,
    state: &SimState,
    cfg: &SolverConfig,
) -> Result<StageEval, SolverError> {
    let alpha = cfg.renorm.as_ref().map(|r| r.alpha);
    let grid = stage_grid(state.grid(), state.base_length, alpha, log_mu)?;
    let w = Wavenumbers::new(&grid);
    let drift = match &cfg.renorm {
        None => 0.0,
        Some(r) => match &r.mode {
            DriftMode::Prescribed(sched) => sched.at(s),
            DriftMode::SelfConsistentGradient { gamma, sign, norm } => {
                let f = Field::from_spectral(grid, u.clone())?;
                *sign as f64 * gamma * grad_sup(&f, *norm)?
            }
            DriftMode::SelfConsistentEnstrophy { gamma } => {
                let f = Field::from_spectral(grid, u.clone())?;
                gamma * enstrophy(&f)?.powi(2)
            }
        },
    };
    let nu_eff = match alpha {
        None => cfg.viscosity,
        Some(a) => cfg.viscosity * (log_mu * (1.0 - a) / (a + 1.0)).exp(),
    };
    let damping = alpha.map_or(0.0, |a| drift * a / (a + 1.0));
    let (mut du, max_speed) = nonlinear(&grid, &w, u);
    w.for_each(|idx, _, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let lin = -nu_eff * k2 - damping;
        for c in 0..3 {
            du[c][idx] += u[c][idx] * lin;
        }
    });
    let (dlog_mu, dphys) = match alpha {
        None => (0.0, 1.0),
        Some(_) => (drift, (-log_mu).exp()),
    };
    Ok(StageEval {
        du,
        dlog_mu,
        dphys,
        drift,
        max_speed,
        grid,
        nu_eff,
    })
}

fn axpy(base: &Coeffs, a: f64, d: &Coeffs) -> Coeffs {
    array::from_fn(|c| base[c].iter().zip(&d[c]).map(|(x, y)| x + y * a).collect())
}

fn check_stability(e: &StageEval, h: f64, time: f64, cfg: &SolverConfig, alpha: Option<f64>) -> Result<(), SolverError> {
    let dx = e.grid.spacing();
    let hd = h.abs();
    if e.max_speed * hd > cfg.cfl_max * dx {
        return Err(SolverError::Cfl {
            time,
            reason: format!("advective displacement {:e} exceeds {} cells", e.max_speed * hd / dx, cfg.cfl_max),
            advisory_dt: 0.9 * cfg.cfl_max * dx / e.max_speed,
        });
    }
    let kmax = (0..e.grid.n).map(|j| e.grid.k_eff(j).abs()).fold(0.0, f64::max);
    let stiff = 3.0 * kmax * kmax * e.nu_eff + alpha.map_or(0.0, |a| (e.drift * a / (a + 1.0)).abs());
    if stiff * hd > DIFFUSIVE_LIMIT {
        return Err(SolverError::Cfl {
            time,
            reason: format!("linear stiffness h·λ = {:e} exceeds {DIFFUSIVE_LIMIT}", stiff * hd),
            advisory_dt: 0.9 * DIFFUSIVE_LIMIT / stiff,
        });
    }
    Ok(())
}

/// One RK4 step of signed size `h`. Self-consistent drift coefficients are
/// re-evaluated at every stage; the observer sees each stage in order.
pub fn step(
    state: &SimState,
    cfg: &SolverConfig,
    h: f64,
    mut observer: Option<&mut (dyn StepObserver + '_)>,
) -> Result<SimState, SolverError> {
    let alpha = cfg.renorm.as_ref().map(|r| r.alpha);
    let u0 = state.velocity.spectral()?;
    let (s0, m0, p0) = (state.time, state.log_mu, state.phys_time);
    let nodes = [0.0, 0.5, 0.5, 1.0];
    let weights = [1.0, 2.0, 2.0, 1.0];
    let mut acc: Coeffs = array::from_fn(|c| vec![Complex64::new(0.0, 0.0); u0[c].len()]);
    let (mut acc_m, mut acc_p) = (0.0, 0.0);
    let mut prev: Option<StageEval> = None;
    for st in 0..4 {
        let (u, m) = match &prev {
            None => (u0.clone(), m0),
            Some(e) => (axpy(u0, nodes[st] * h, &e.du), m0 + nodes[st] * h * e.dlog_mu),
        };
        let s = s0 + nodes[st] * h;
        let e = evaluate(&u, m, s, state, cfg)?;
        if st == 0 {
            check_stability(&e, h, s0, cfg, alpha)?;
        }
        if let Some(obs) = observer.as_deref_mut() {
            let f = Field::from_spectral(e.grid, u)?;
            obs.stage(&StageInfo {
                stage: st,
                time: s,
                h,
                velocity: &f,
                drift: e.drift,
                log_mu: m,
            })?;
        }
        for c in 0..3 {
            for (a, d) in acc[c].iter_mut().zip(&e.du[c]) {
                *a += d * weights[st];
            }
        }
        acc_m += weights[st] * e.dlog_mu;
        acc_p += weights[st] * e.dphys;
        prev = Some(e);
    }
    let mut u1 = axpy(u0, h / 6.0, &acc);
    let log_mu = m0 + h / 6.0 * acc_m;
    let phys_time = p0 + h / 6.0 * acc_p;
    let grid = stage_grid(state.grid(), state.base_length, alpha, log_mu)?;
    dealias_in_place(&grid, &mut u1);
    project_in_place(&Wavenumbers::new(&grid), &mut u1);
    let velocity = Field::from_spectral(grid, u1)?;
    if !velocity.is_finite() || !log_mu.is_finite() || !phys_time.is_finite() {
        return Err(SolverError::NonFinite {
            time: s0 + h,
            step: state.step_count + 1,
            last_good: Box::new(state.clone()),
        });
    }
    let next = SimState {
        time: s0 + h,
        velocity,
        step_count: state.step_count + 1,
        log_mu,
        phys_time,
        base_length: state.base_length,
    };
    if let Some(obs) = observer {
        obs.commit(&next)?;
    }
    Ok(next)
}
