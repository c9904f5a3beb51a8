use serde::Serialize;

use super::{run, SolverConfig, SolverError};
use crate::diagnostics::{GradNorm, LogMeta, TrajectoryLog};
use crate::spectral::{dealias, Field, GridSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub lambda: f64,
    pub alpha: f64,
    pub t: f64,
    /// `‖v^{λ,α}(·,t) − λ^α v(λ·, λ^{α+1}t)‖_{L²}`.
    pub difference_l2: f64,
    /// `‖v^{λ,α}(·,t)‖_{L²}`.
    pub reference_l2: f64,
}

/// Compares a run from `λ^α v₀(λx)` up to `t` with the rescaled run from
/// `v₀` up to `λ^{α+1} t`.
///
/// The rescaled field has the same Fourier content as `v₀` at wavenumbers
/// multiplied by `λ`, so it is carried on a grid with `λn` points; both runs
/// then resolve exactly corresponding modes and take the same number of steps.
pub fn verify_scaling_property(
    v0: &Field,
    lambda: f64,
    alpha: f64,
    cfg: &SolverConfig,
    t: f64,
) -> Result<ScalingReport, SolverError> {
    if !(lambda >= 1.0) || lambda.fract() != 0.0 {
        return Err(SolverError::InvalidConfig(format!("lambda must be a positive integer, got {lambda}")));
    }
    if cfg.viscosity != 0.0 || cfg.renorm.is_some() {
        return Err(SolverError::InvalidConfig("the scaling check applies to the Euler equations".into()));
    }
    if !(alpha > -1.0) {
        return Err(SolverError::InvalidConfig(format!("alpha must exceed -1, got {alpha}")));
    }
    let lam = lambda as usize;
    let base_grid = *v0.grid();
    let v0 = dealias(&v0.as_spectral()?)?;
    let fine_grid = GridSpec {
        n: base_grid.n * lam,
        ..base_grid
    };
    fine_grid.validate()?;
    let scale_t = lambda.powf(alpha + 1.0);
    let amp = lambda.powf(alpha);

    // λ^α v₀(λx) sampled on the λn lattice: point j maps to base point j mod n
    let lift = |f: &Field, a: f64| -> Result<Field, SolverError> {
        let p = f.as_physical()?;
        let d = p.physical()?;
        let (n, nf) = (base_grid.n, fine_grid.n);
        let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; nf * nf * nf]);
        for z in 0..nf {
            for y in 0..nf {
                for x in 0..nf {
                    let src = base_grid.idx(x % n, y % n, z % n);
                    let dst = fine_grid.idx(x, y, z);
                    for c in 0..3 {
                        out[c][dst] = a * d[c][src];
                    }
                }
            }
        }
        Ok(Field::from_physical(fine_grid, out)?)
    };
    let scaled0 = lift(&v0, amp)?;

    let mut base_cfg = cfg.clone();
    base_cfg.t_end = scale_t * t;
    base_cfg.dt = cfg.dt;
    let mut scaled_cfg = cfg.clone();
    scaled_cfg.t_end = t;
    scaled_cfg.dt = cfg.dt / scale_t;
    let meta = || LogMeta::physical(Vec::new(), GradNorm::Frobenius);
    let base = run(&v0, &base_cfg, &mut TrajectoryLog::new(meta()), None)?;
    let scaled = run(&scaled0, &scaled_cfg, &mut TrajectoryLog::new(meta()), None)?;

    let expected = lift(&base.state.velocity, amp)?;
    let got = scaled.state.velocity.as_physical()?;
    let diff = got.add_scaled(-1.0, &expected)?;
    Ok(ScalingReport {
        lambda,
        alpha,
        t,
        difference_l2: diff.l2_norm_sq().sqrt(),
        reference_l2: got.l2_norm_sq().sqrt(),
    })
}
