//! Norms, trajectory logs and blow-up assessment.

mod blowup;
mod log;
mod norms;

pub use blowup::{bkm_integral, estimate_blowup, estimate_blowup_series, BlowupAssessment, BlowupFitConfig, Classification};
pub use log::{Frame, LogMeta, LogRow, RenormMeta, RowSample, TrajectoryLog};
pub use norms::{grad_sup, grad_sup_lattice, lp_norm, p_label, parse_p, vorticity_sup, GradNorm};
pub(crate) use norms::{lp_of_values, refined_sup, GradientSamples, SupQuantity};

use thiserror::Error;

use crate::spectral::{enstrophy, kinetic_energy, tail_fraction, Field, SpectralError, SpectralProbe};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("exponent p must be positive, got {0}")]
    InvalidExponent(f64),
    #[error("non-finite diagnostic at t = {0}")]
    NonFinite(f64),
    #[error("log times must increase strictly (t = {0})")]
    NonIncreasingTime(f64),
    #[error("log has no column `{0}`")]
    MissingColumn(String),
    #[error("log does not cover t = {0}")]
    Coverage(f64),
    #[error("malformed log: {0}")]
    Format(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Computes one log row from a velocity state.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub p_list: Vec<f64>,
    pub grad_norm: GradNorm,
}

impl Diagnostics {
    pub fn new(p_list: Vec<f64>, grad_norm: GradNorm) -> Result<Self, DiagnosticsError> {
        if let Some(&p) = p_list.iter().find(|p| !(**p > 0.0)) {
            return Err(DiagnosticsError::InvalidExponent(p));
        }
        Ok(Diagnostics { p_list, grad_norm })
    }

    /// Energy, enstrophy, refined sups, vorticity Lᵖ norms and tail fraction.
    /// The `p = ∞` column carries the refined sup.
    pub fn sample(&self, t: f64, v: &Field) -> Result<RowSample, DiagnosticsError> {
        let v = v.as_spectral()?;
        let samples = GradientSamples::from_velocity(&v)?;
        let probe = SpectralProbe::new(&v)?;
        let grad = refined_sup(&probe, &samples, SupQuantity::Grad(self.grad_norm));
        let omega = refined_sup(&probe, &samples, SupQuantity::Vorticity);
        let mags = samples.vorticity_magnitudes();
        let omega_lp = self
            .p_list
            .iter()
            .map(|&p| {
                if p.is_infinite() {
                    Ok(omega)
                } else {
                    lp_of_values(mags.iter().copied(), &samples.grid, p)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RowSample {
            t,
            energy: kinetic_energy(&v)?,
            enstrophy: enstrophy(&v)?,
            grad_sup: grad,
            omega_sup: omega,
            omega_lp,
            tail_fraction: tail_fraction(&v)?,
            phys_time: None,
            log_mu: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::taylor_green;
    use crate::spectral::GridSpec;
    use std::f64::consts::PI;

    #[test]
    fn taylor_green_row() {
        let g = GridSpec::new(16).unwrap();
        let v = taylor_green(g, 1.0).unwrap();
        let d = Diagnostics::new(vec![2.0, f64::INFINITY], GradNorm::Frobenius).unwrap();
        let r = d.sample(0.0, &v).unwrap();
        // v = (sin x cos y cos z, −cos x sin y cos z, 0): ½‖v‖² = (2π)³/8
        assert!((r.energy - (2.0 * PI).powi(3) / 8.0).abs() < 1e-10);
        assert!((r.omega_lp[0].powi(2) - r.enstrophy).abs() < 1e-9 * r.enstrophy);
        assert!((r.omega_sup - 2.0).abs() < 1e-8);
        assert_eq!(r.omega_lp[1], r.omega_sup);
        assert!(Diagnostics::new(vec![0.0], GradNorm::Frobenius).is_err());
    }
}
