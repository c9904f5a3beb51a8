//! Fixed-step RK4 integration of the Euler / Navier–Stokes equations and of
//! their renormalized similarity-frame versions.
//!
//! Renormalized runs are carried on a comoving box: the periodic cell in the
//! similarity variable `y` has side `L(s) = L₀ μ(s)^{1/(α+1)}`, so the drift
//! term `−b/(α+1) (y·∇)V` is exactly the rate of change of the box and only
//! the damping `−b α/(α+1) V` remains on the right-hand side. The state then
//! carries `log μ` (with `d log μ/ds = b`) and the physical time
//! (`dt/ds = 1/μ`).

mod rhs;
mod run;
mod scaling;

pub use run::{run, run_from, RunOutcome, Termination};
pub use scaling::{verify_scaling_property, ScalingReport};

use std::fmt;
use std::sync::Arc;
use thiserror::Error;

use crate::diagnostics::{DiagnosticsError, GradNorm};
use crate::spectral::{Field, GridSpec, SpectralError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
}

/// Drift coefficient `b(s) = μ'/μ²` as a function of the similarity time.
#[derive(Clone)]
pub struct CoefficientSchedule(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl CoefficientSchedule {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        CoefficientSchedule(Arc::new(f))
    }

    pub fn constant(b: f64) -> Self {
        Self::new(move |_| b)
    }

    pub fn at(&self, s: f64) -> f64 {
        (self.0)(s)
    }
}

impl fmt::Debug for CoefficientSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoefficientSchedule(b(0) = {})", self.at(0.0))
    }
}

#[derive(Debug, Clone)]
pub enum DriftMode {
    /// `b(s)` given in advance (from a chosen `μ(t)`).
    Prescribed(CoefficientSchedule),
    /// `b = sign·γ‖∇V‖_{L∞}`, re-evaluated at every RK stage.
    SelfConsistentGradient { gamma: f64, sign: i8, norm: GradNorm },
    /// `b = γ‖Ω‖⁴_{L²}`, re-evaluated at every RK stage (`α = 1`).
    SelfConsistentEnstrophy { gamma: f64 },
}

impl DriftMode {
    pub fn label(&self) -> &'static str {
        match self {
            DriftMode::Prescribed(_) => "prescribed",
            DriftMode::SelfConsistentGradient { .. } => "self_consistent_gradient",
            DriftMode::SelfConsistentEnstrophy { .. } => "self_consistent_enstrophy",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenormSpec {
    pub alpha: f64,
    pub mode: DriftMode,
}

impl RenormSpec {
    pub fn gamma(&self) -> f64 {
        match self.mode {
            DriftMode::Prescribed(_) => 0.0,
            DriftMode::SelfConsistentGradient { gamma, .. } | DriftMode::SelfConsistentEnstrophy { gamma } => gamma,
        }
    }

    pub fn sign(&self) -> i8 {
        match self.mode {
            DriftMode::SelfConsistentGradient { sign, .. } => sign,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// `ν ≥ 0`; zero selects the Euler equations.
    pub viscosity: f64,
    pub dt: f64,
    /// Final time (physical `t`, or `s` for renormalized runs). May lie
    /// before the start time for inviscid time reversal.
    pub t_end: f64,
    pub cfl_max: f64,
    pub scheme: Scheme,
    pub renorm: Option<RenormSpec>,
    /// Runs stop once the tail fraction of the enstrophy exceeds this.
    pub tail_threshold: Option<f64>,
}

impl SolverConfig {
    pub fn new(viscosity: f64, dt: f64, t_end: f64) -> Self {
        SolverConfig {
            viscosity,
            dt,
            t_end,
            cfl_max: 0.5,
            scheme: Scheme::Rk4,
            renorm: None,
            tail_threshold: None,
        }
    }

    pub fn with_renorm(mut self, r: RenormSpec) -> Self {
        self.renorm = Some(r);
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::InvalidConfig(m));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.cfl_max > 0.0 && self.cfl_max <= 1.0) {
            return bad(format!("cfl_max must lie in (0, 1], got {}", self.cfl_max));
        }
        if !(self.viscosity >= 0.0) || !self.viscosity.is_finite() {
            return bad(format!("viscosity must be non-negative, got {}", self.viscosity));
        }
        if !self.t_end.is_finite() {
            return bad("t_end must be finite".into());
        }
        if let Some(t) = self.tail_threshold {
            if !(t > 0.0 && t <= 1.0) {
                return bad(format!("tail_threshold must lie in (0, 1], got {t}"));
            }
        }
        if let Some(r) = &self.renorm {
            if !(r.alpha > -1.0) || !r.alpha.is_finite() {
                return bad(format!("alpha must exceed -1, got {}", r.alpha));
            }
            match r.mode {
                DriftMode::Prescribed(_) => {}
                DriftMode::SelfConsistentGradient { gamma, sign, .. } => {
                    if !(gamma >= 1.0) {
                        return bad(format!("gamma must be at least 1, got {gamma}"));
                    }
                    if sign != 1 && sign != -1 {
                        return bad(format!("sign must be +1 or -1, got {sign}"));
                    }
                }
                DriftMode::SelfConsistentEnstrophy { gamma } => {
                    if !(gamma > 0.0) {
                        return bad(format!("gamma must be positive, got {gamma}"));
                    }
                    if r.alpha != 1.0 {
                        return bad("the enstrophy-driven system requires alpha = 1".into());
                    }
                }
            }
        }
        Ok(())
    }
}

/// Solver state. In the physical frame `time` is `t`, `log_mu = 0` and the
/// box keeps its initial side; in the renormalized frame `time` is `s` and
/// the velocity lives on the comoving box of side `base_length·μ^{1/(α+1)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: f64,
    /// Spectral, divergence-free.
    pub velocity: Field,
    pub step_count: u64,
    pub log_mu: f64,
    pub phys_time: f64,
    pub base_length: f64,
}

impl SimState {
    pub fn new(velocity: Field) -> Result<Self, SolverError> {
        let velocity = velocity.as_spectral()?;
        let base_length = velocity.grid().domain_length;
        Ok(SimState {
            time: 0.0,
            velocity,
            step_count: 0,
            log_mu: 0.0,
            phys_time: 0.0,
            base_length,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.velocity.grid()
    }
}

/// What an observer sees at each RK stage.
#[derive(Debug)]
pub struct StageInfo<'a> {
    /// 0..4
    pub stage: usize,
    /// Time at the stage (`t` or `s`).
    pub time: f64,
    /// Signed step size.
    pub h: f64,
    /// Stage velocity, spectral on the stage box.
    pub velocity: &'a Field,
    /// Drift coefficient `b` at the stage (zero in the physical frame).
    pub drift: f64,
    pub log_mu: f64,
}

/// Hook for quantities integrated alongside the flow with the same RK stages.
pub trait StepObserver {
    fn stage(&mut self, info: &StageInfo<'_>) -> Result<(), SolverError>;
    /// Called once the step has been accepted.
    fn commit(&mut self, state: &SimState) -> Result<(), SolverError>;
}

#[derive(Debug, Clone, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("step rejected at t = {time}: {reason}; advisory dt = {advisory_dt:e}")]
    Cfl { time: f64, reason: String, advisory_dt: f64 },
    #[error("non-finite velocity at t = {time} (step {step})")]
    NonFinite {
        time: f64,
        step: u64,
        /// Last finite state, for dumping.
        last_good: Box<SimState>,
    },
    #[error("observer: {0}")]
    Observer(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

pub use rhs::step;
