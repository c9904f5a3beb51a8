//! A-priori vorticity estimates checked as predicates over trajectory logs,
//! plus the exclusion-region calculators.

mod calibration;
mod estimates;
mod exclusion;

pub use calibration::{calibrate_c0, gn_ratio, sobolev_constant, C0Calibration, C0_FLOOR, DEFAULT_C0};
pub use estimates::{
    premise_m0, verify_enstrophy_estimate, verify_gamma_family, verify_lp_power_sandwich, verify_lp_sandwich,
    verify_ratio_lower_bound, verify_renorm_field_decay, verify_sup_vorticity_growth,
};
pub use exclusion::{exclusion_region, exclusion_verdict, profile_exclusion, ExclusionRegion, ExclusionVerdict, PInterval};

use serde::Serialize;
use std::fmt::Write as _;
use thiserror::Error;

use crate::diagnostics::{DiagnosticsError, TrajectoryLog};
use crate::spectral::SpectralError;

/// Default pass tolerance on relative margins.
pub const DEFAULT_TOL: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("wrong log kind: {0}")]
    WrongLog(String),
    #[error("logs do not pair: {0}")]
    Unpaired(String),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The premise of the estimate fails on this log; nothing was checked.
    Vacuous,
}

/// One checked time. `margin ≥ 0` means the inequality holds; margins are
/// relative to the larger of the two sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginPoint {
    pub t: f64,
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_blow: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sign: Option<i8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub id: String,
    pub statement: String,
    pub status: CheckStatus,
    pub tol: f64,
    pub worst_margin: Option<f64>,
    pub worst_time: Option<f64>,
    pub checked: usize,
    pub params: ReportParams,
    pub grad_norm: String,
    pub stride: usize,
    pub dt: f64,
    /// First time at which a bound's denominator stops being positive; later
    /// rows are outside the validity domain and unchecked.
    pub validity_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip)]
    pub margins: Vec<MarginPoint>,
}

impl EstimateReport {
    fn new(id: &str, statement: &str, log: &TrajectoryLog, params: ReportParams) -> Self {
        EstimateReport {
            id: id.to_string(),
            statement: statement.to_string(),
            status: CheckStatus::Pass,
            tol: DEFAULT_TOL,
            worst_margin: None,
            worst_time: None,
            checked: 0,
            params,
            grad_norm: log.meta.grad_norm.label().to_string(),
            stride: log.meta.stride,
            dt: log.meta.dt,
            validity_end: None,
            note: None,
            margins: Vec::new(),
        }
    }

    fn vacuous(mut self, reason: impl Into<String>) -> Self {
        self.status = CheckStatus::Vacuous;
        self.note = Some(reason.into());
        self.margins.clear();
        self
    }

    fn push(&mut self, t: f64, value: f64, bound: f64, margin: f64) {
        self.margins.push(MarginPoint { t, value, bound, margin });
    }

    fn finish(mut self) -> Self {
        if self.status == CheckStatus::Vacuous {
            return self;
        }
        self.checked = self.margins.len();
        let worst = self
            .margins
            .iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
            .copied();
        self.worst_margin = worst.map(|w| w.margin);
        self.worst_time = worst.map(|w| w.t);
        let tol = self.tol;
        self.with_tol(tol)
    }

    /// Re-evaluates the pass flag under another tolerance.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        if self.status != CheckStatus::Vacuous {
            self.status = match self.worst_margin {
                Some(m) if m < -tol || !m.is_finite() => CheckStatus::Fail,
                _ => CheckStatus::Pass,
            };
        }
        self
    }

    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }

    pub fn margins_csv(&self) -> String {
        let mut s = String::from("t,value,bound,margin\n");
        for m in &self.margins {
            let _ = writeln!(s, "{:e},{:e},{:e},{:e}", m.t, m.value, m.bound, m.margin);
        }
        s
    }
}

/// `(big − small)` relative to the larger magnitude; zero when both vanish.
pub(crate) fn rel_margin(big: f64, small: f64) -> f64 {
    let scale = big.abs().max(small.abs());
    if scale == 0.0 {
        0.0
    } else {
        (big - small) / scale
    }
}
