//! Singular-time estimation from gradient growth, and the BKM integral.

use serde::{Deserialize, Serialize};

use super::log::TrajectoryLog;
use super::DiagnosticsError;
use crate::quadrature::integral_to;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    NoBlowup,
    #[serde(rename = "type_I")]
    TypeI,
    #[serde(rename = "type_II")]
    TypeII,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupFitConfig {
    /// Fraction of the log (by row count) used for the fit.
    pub tail_fraction: f64,
    pub min_rows: usize,
    /// `|κ − 1|` below which the growth counts as type I.
    pub kappa_tol: f64,
    /// Type I requires `C ≥ 1 − type_one_tol`.
    pub type_one_tol: f64,
    /// RMS residual of `log g` above which the power law is rejected.
    pub residual_tol: f64,
}

impl Default for BlowupFitConfig {
    fn default() -> Self {
        BlowupFitConfig {
            tail_fraction: 0.3,
            min_rows: 8,
            kappa_tol: 0.1,
            type_one_tol: 0.05,
            residual_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupAssessment {
    pub t_est: Option<f64>,
    /// Estimate of `lim sup (T−t)‖∇v‖_{L∞}`; `None` when undetermined or type II.
    pub m_est: Option<f64>,
    pub classification: Classification,
    pub kappa: Option<f64>,
    pub c_fit: Option<f64>,
    pub window: (f64, f64),
    pub rows: usize,
    /// RMS residual of the log-space fit.
    pub residual: Option<f64>,
    pub note: String,
}

impl BlowupAssessment {
    fn plain(classification: Classification, m_est: Option<f64>, window: (f64, f64), rows: usize, note: &str) -> Self {
        BlowupAssessment {
            t_est: None,
            m_est,
            classification,
            kappa: None,
            c_fit: None,
            window,
            rows,
            residual: None,
            note: note.to_string(),
        }
    }
}

/// Least-squares fit of `log g = a − κ log(T − t)` for fixed `T`.
/// Returns `(a, κ, sum of squared residuals)`.
fn fit_at(t: &[f64], lg: &[f64], big_t: f64) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let x: Vec<f64> = t.iter().map(|&ti| -(big_t - ti).ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = lg.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(lg) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let kappa = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - kappa * mx;
    let ss = x.iter().zip(lg).map(|(xi, yi)| (yi - a - kappa * xi).powi(2)).sum();
    (a, kappa, ss)
}

/// Fits `g ≈ C/(T−t)^κ` to a growing series and classifies the singularity.
pub fn estimate_blowup_series(t: &[f64], g: &[f64], cfg: &BlowupFitConfig) -> BlowupAssessment {
    let total = t.len().min(g.len());
    let take = ((total as f64 * cfg.tail_fraction).ceil() as usize).max(cfg.min_rows).min(total);
    let (t, g) = (&t[total - take..total], &g[total - take..total]);
    let window = (t.first().copied().unwrap_or(0.0), t.last().copied().unwrap_or(0.0));
    if take < cfg.min_rows.max(3) {
        return BlowupAssessment::plain(Classification::Undetermined, None, window, take, "too few rows");
    }
    let scale = g.iter().cloned().fold(0.0, f64::max);
    let low = g.iter().cloned().fold(f64::INFINITY, f64::min);
    if scale <= 0.0 || scale - low <= 1e-6 * scale {
        return BlowupAssessment::plain(Classification::NoBlowup, Some(0.0), window, take, "no growth in fit window");
    }
    if g.windows(2).all(|w| w[1] <= w[0]) {
        return BlowupAssessment::plain(Classification::NoBlowup, Some(0.0), window, take, "decaying tail");
    }
    if g.windows(2).any(|w| w[1] < w[0] * (1.0 - 1e-9)) {
        return BlowupAssessment::plain(Classification::Undetermined, None, window, take, "non-monotone tail");
    }
    if g.iter().any(|&x| x <= 0.0) {
        return BlowupAssessment::plain(Classification::Undetermined, None, window, take, "non-positive values");
    }
    let lg: Vec<f64> = g.iter().map(|x| x.ln()).collect();
    let t_last = window.1;
    let span = (window.1 - window.0).max(f64::MIN_POSITIVE);
    // distance from the last sample to T, searched in log space
    let (u_lo, u_hi) = ((span * 1e-9).ln(), (span * 1e4).ln());
    let ss_at = |u: f64| fit_at(t, &lg, t_last + u.exp()).2;
    let scan = 400;
    let mut best = (u_lo, f64::INFINITY);
    for k in 0..=scan {
        let u = u_lo + (u_hi - u_lo) * k as f64 / scan as f64;
        let ss = ss_at(u);
        if ss < best.1 {
            best = (u, ss);
        }
    }
    let h = (u_hi - u_lo) / scan as f64;
    let (mut a, mut b) = ((best.0 - h).max(u_lo), (best.0 + h).min(u_hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (ss_at(c), ss_at(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = ss_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = ss_at(d);
        }
    }
    let u = 0.5 * (a + b);
    let big_t = t_last + u.exp();
    let (la, kappa, ss) = fit_at(t, &lg, big_t);
    let c_fit = la.exp();
    let residual = (ss / take as f64).sqrt();
    let mut out = BlowupAssessment {
        t_est: Some(big_t),
        m_est: None,
        classification: Classification::Undetermined,
        kappa: Some(kappa),
        c_fit: Some(c_fit),
        window,
        rows: take,
        residual: Some(residual),
        note: String::new(),
    };
    if u >= u_hi - 2.0 * h {
        out.t_est = None;
        out.m_est = Some(0.0);
        out.classification = Classification::NoBlowup;
        out.note = "fitted singular time far beyond the window".into();
    } else if residual > cfg.residual_tol {
        out.t_est = None;
        out.m_est = Some(0.0);
        out.classification = Classification::NoBlowup;
        out.note = "power law rejected by residual".into();
    } else if (kappa - 1.0).abs() <= cfg.kappa_tol {
        if c_fit >= 1.0 - cfg.type_one_tol {
            out.m_est = Some(c_fit);
            out.classification = Classification::TypeI;
        } else {
            out.m_est = Some(0.0);
            out.classification = Classification::NoBlowup;
            out.note = "type I amplitude below 1".into();
        }
    } else if kappa > 1.0 {
        out.classification = Classification::TypeII;
    } else {
        out.m_est = Some(0.0);
        out.classification = Classification::NoBlowup;
        out.note = "growth exponent below 1".into();
    }
    out
}

/// Fits the `grad_sup` column of a log.
pub fn estimate_blowup(log: &TrajectoryLog, cfg: &BlowupFitConfig) -> Result<BlowupAssessment, DiagnosticsError> {
    Ok(estimate_blowup_series(&log.times(), &log.column("grad_sup")?, cfg))
}

/// `∫ ‖ω‖_{L∞}` from the first row to `t` (trapezoid, linear inside a step).
pub fn bkm_integral(log: &TrajectoryLog, t: f64) -> Result<f64, DiagnosticsError> {
    integral_to(&log.times(), &log.column("omega_sup")?, t).ok_or(DiagnosticsError::Coverage(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(c: f64, big_t: f64, kappa: f64, n: usize, t_end: f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect();
        let g = t.iter().map(|ti| c / (big_t - ti).powf(kappa)).collect();
        (t, g)
    }

    #[test]
    fn type_one_synthetic() {
        let (t, g) = series(2.0, 1.0, 1.0, 200, 0.95);
        let a = estimate_blowup_series(&t, &g, &BlowupFitConfig::default());
        assert_eq!(a.classification, Classification::TypeI);
        assert!((a.t_est.unwrap() - 1.0).abs() < 1e-6, "{a:?}");
        assert!((a.kappa.unwrap() - 1.0).abs() < 1e-3);
        assert!((a.m_est.unwrap() - 2.0).abs() < 1e-3);
    }

    #[test]
    fn type_two_synthetic() {
        let (t, g) = series(1.0, 1.0, 2.0, 200, 0.95);
        let a = estimate_blowup_series(&t, &g, &BlowupFitConfig::default());
        assert_eq!(a.classification, Classification::TypeII);
        assert!((a.kappa.unwrap() - 2.0).abs() < 1e-2);
        assert!((a.t_est.unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn constant_and_decreasing_logs() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let a = estimate_blowup_series(&t, &vec![1.0; 50], &BlowupFitConfig::default());
        assert_eq!(a.classification, Classification::NoBlowup);
        assert_eq!(a.m_est, Some(0.0));
        let g: Vec<f64> = t.iter().map(|x| 1.0 + (3.0 * x).sin()).collect();
        let a = estimate_blowup_series(&t, &g, &BlowupFitConfig::default());
        assert!(matches!(a.classification, Classification::Undetermined | Classification::NoBlowup));
    }

    #[test]
    fn exponential_growth_is_not_a_singularity() {
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 0.05).collect();
        let g: Vec<f64> = t.iter().map(|x| (0.3 * x).exp()).collect();
        let a = estimate_blowup_series(&t, &g, &BlowupFitConfig::default());
        assert_eq!(a.classification, Classification::NoBlowup, "{a:?}");
    }

    #[test]
    fn scale_equivariance() {
        let (t, g) = series(1.5, 1.0, 1.0, 150, 0.9);
        let lam: f64 = 2.0f64.powf(2.0);
        let t2: Vec<f64> = t.iter().map(|x| x / lam).collect();
        let g2: Vec<f64> = g.iter().map(|x| x * lam).collect();
        let cfg = BlowupFitConfig::default();
        let a = estimate_blowup_series(&t, &g, &cfg);
        let b = estimate_blowup_series(&t2, &g2, &cfg);
        assert!((a.t_est.unwrap() / lam - b.t_est.unwrap()).abs() < 1e-7);
        assert!((a.m_est.unwrap() - b.m_est.unwrap()).abs() < 1e-6);
    }
}
