use log::{info, warn};

use super::{step, SimState, SolverConfig, SolverError, StepObserver};
use crate::diagnostics::{Diagnostics, Frame, RenormMeta, TrajectoryLog};
use crate::spectral::{dealias, kinetic_energy, leray_project, Field};

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    /// The enstrophy tail fraction passed the configured threshold; the
    /// solution is no longer resolved.
    ResolutionExhausted { time: f64, tail_fraction: f64 },
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: SimState,
    pub termination: Termination,
}

/// Projects and dealiases `v0`, then integrates from `t = 0` (or `s = 0`).
pub fn run(
    v0: &Field,
    cfg: &SolverConfig,
    log: &mut TrajectoryLog,
    observer: Option<&mut (dyn StepObserver + '_)>,
) -> Result<RunOutcome, SolverError> {
    let v = v0.as_spectral()?;
    let e0 = kinetic_energy(&v)?;
    let v = leray_project(&dealias(&v)?)?;
    let e1 = kinetic_energy(&v)?;
    if e0 > 0.0 && (e0 - e1).abs() > 1e-12 * e0 {
        warn!("initial projection and dealiasing removed {:e} of the energy", (e0 - e1) / e0);
    }
    run_from(SimState::new(v)?, cfg, log, observer)
}

/// Integrates an existing state to `cfg.t_end`, logging every
/// `log.meta.stride` steps and at the last step. Backward (time-reversed)
/// runs leave the log untouched since its times must increase.
pub fn run_from(
    state: SimState,
    cfg: &SolverConfig,
    log: &mut TrajectoryLog,
    mut observer: Option<&mut (dyn StepObserver + '_)>,
) -> Result<RunOutcome, SolverError> {
    cfg.validate()?;
    let span = cfg.t_end - state.time;
    if span < 0.0 && cfg.viscosity > 0.0 {
        return Err(SolverError::InvalidConfig("backward integration requires zero viscosity".into()));
    }
    let g = *state.grid();
    log.meta.dt = cfg.dt;
    log.meta.viscosity = cfg.viscosity;
    log.meta.n = g.n;
    log.meta.domain_length = state.base_length;
    log.meta.dealias_fraction = g.dealias_fraction;
    log.meta.stride = log.meta.stride.max(1);
    match &cfg.renorm {
        None => log.meta.frame = Frame::Physical,
        Some(r) => {
            log.meta.frame = Frame::Renormalized;
            log.meta.renorm = Some(RenormMeta {
                alpha: r.alpha,
                mode: r.mode.label().to_string(),
                gamma: r.gamma(),
                sign: r.sign(),
            });
        }
    }
    let diag = Diagnostics::new(log.meta.p_list.clone(), log.meta.grad_norm)?;
    let renorm = cfg.renorm.is_some();
    let stride = log.meta.stride as u64;
    let backward = span < 0.0;
    let record = |st: &SimState, log: &mut TrajectoryLog| -> Result<f64, SolverError> {
        if backward {
            return Ok(0.0);
        }
        let mut row = diag.sample(st.time, &st.velocity)?;
        if renorm {
            row.phys_time = Some(st.phys_time);
            row.log_mu = Some(st.log_mu);
        }
        let tail = row.tail_fraction;
        log.push(row)?;
        Ok(tail)
    };

    let nsteps = (span.abs() / cfg.dt - 1e-9).ceil().max(0.0) as u64;
    let dir = span.signum();
    let (t0, start_step) = (state.time, state.step_count);
    let mut state = state;
    if nsteps == 0 {
        return Ok(RunOutcome {
            state,
            termination: Termination::Completed,
        });
    }
    info!("integrating {nsteps} steps of {:e} from {t0} to {}", cfg.dt, cfg.t_end);
    record(&state, log)?;
    for k in 1..=nsteps {
        let target = if k == nsteps { cfg.t_end } else { t0 + dir * cfg.dt * k as f64 };
        let h = target - state.time;
        let mut next = step(&state, cfg, h, observer.as_deref_mut())?;
        next.time = target;
        state = next;
        if k % stride == 0 || k == nsteps {
            let tail = record(&state, log)?;
            if let Some(th) = cfg.tail_threshold {
                if tail > th {
                    warn!(
                        "resolution exhausted at t = {} (tail fraction {tail:e} > {th:e}) after {} steps",
                        state.time,
                        state.step_count - start_step
                    );
                    return Ok(RunOutcome {
                        termination: Termination::ResolutionExhausted {
                            time: state.time,
                            tail_fraction: tail,
                        },
                        state,
                    });
                }
            }
        }
    }
    Ok(RunOutcome {
        state,
        termination: Termination::Completed,
    })
}
