//! Time-dependent similarity transforms
//! `v(x,t) = μ(t)^{α/(α+1)} V(μ(t)^{1/(α+1)} x, s)`, `s = ∫₀ᵗ μ`.

use serde::Serialize;
use thiserror::Error;

use crate::diagnostics::{DiagnosticsError, Frame, TrajectoryLog};
use crate::quadrature::{integral_to, interpolate};
use crate::spectral::{curl, eval_tensor_grid, Field, GridSpec, SpectralError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("t = {t} is outside the schedule domain [0, {limit})")]
    OutOfDomain { t: f64, limit: f64 },
    #[error("s = {s} is beyond the covered horizon {limit}")]
    Coverage { s: f64, limit: f64 },
    #[error("window radius {requested} exceeds the admissible {max_admissible}")]
    WindowTooLarge { requested: f64, max_admissible: f64 },
    #[error("logs do not overlap: {0}")]
    Unpaired(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

/// Logged driving quantity `q(t)` of an exponential family, with
/// `μ = exp(c ∫₀ᵗ q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingTable {
    pub t: Vec<f64>,
    pub q: Vec<f64>,
    /// `c ∫₀ᵗ q` at the nodes, i.e. `log μ`.
    log_mu: Vec<f64>,
    /// `s(t)` at the nodes (trapezoid in `t` of `μ`).
    s: Vec<f64>,
}

impl DrivingTable {
    fn new(t: Vec<f64>, q: Vec<f64>, c: f64) -> Result<Self, SimilarityError> {
        if t.len() < 2 || t.len() != q.len() {
            return Err(SimilarityError::InvalidSchedule("driving table needs at least two rows".into()));
        }
        if t[0] != 0.0 {
            return Err(SimilarityError::InvalidSchedule(format!("driving table must start at t = 0, got {}", t[0])));
        }
        let mut log_mu = vec![0.0];
        let mut s = vec![0.0];
        for i in 1..t.len() {
            let h = t[i] - t[i - 1];
            let lm = log_mu[i - 1] + c * 0.5 * h * (q[i] + q[i - 1]);
            s.push(s[i - 1] + 0.5 * h * (lm.exp() + log_mu[i - 1].exp()));
            log_mu.push(lm);
        }
        Ok(DrivingTable { t, q, log_mu, s })
    }

    fn end(&self) -> f64 {
        *self.t.last().expect("non-empty")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MuSchedule {
    /// `μ ≡ c`.
    Constant(f64),
    /// `μ = (T−t)^{−γ}`, `γ ≥ 1`.
    PowerLaw { t_blow: f64, gamma: f64 },
    /// `μ = exp(sign·γ ∫ ‖∇v‖_{L∞})`, from a physical log.
    ExpGradient { gamma: f64, sign: i8, table: DrivingTable },
    /// `μ = exp(γ ∫ ‖ω‖⁴_{L²})`, from a physical log.
    ExpEnstrophy { gamma: f64, table: DrivingTable },
}

impl MuSchedule {
    pub fn power_law(t_blow: f64, gamma: f64) -> Result<Self, SimilarityError> {
        if !(t_blow > 0.0) || !(gamma >= 1.0) {
            return Err(SimilarityError::InvalidSchedule(format!(
                "power law needs T > 0 and γ ≥ 1, got T = {t_blow}, γ = {gamma}"
            )));
        }
        Ok(MuSchedule::PowerLaw { t_blow, gamma })
    }

    pub fn constant(c: f64) -> Result<Self, SimilarityError> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(SimilarityError::InvalidSchedule(format!("μ must be positive, got {c}")));
        }
        Ok(MuSchedule::Constant(c))
    }

    fn physical_log(log: &TrajectoryLog) -> Result<(), SimilarityError> {
        if log.meta.frame != Frame::Physical {
            return Err(SimilarityError::InvalidSchedule("exponential families are driven by physical logs".into()));
        }
        Ok(())
    }

    /// `μ = exp(sign·γ ∫ ‖∇v‖_{L∞})` from the `grad_sup` column of `log`.
    pub fn exp_gradient(log: &TrajectoryLog, gamma: f64, sign: i8) -> Result<Self, SimilarityError> {
        Self::physical_log(log)?;
        if !(gamma >= 1.0) || (sign != 1 && sign != -1) {
            return Err(SimilarityError::InvalidSchedule(format!("need γ ≥ 1 and sign ±1, got {gamma}, {sign}")));
        }
        let table = DrivingTable::new(log.times(), log.column("grad_sup")?, sign as f64 * gamma)?;
        Ok(MuSchedule::ExpGradient { gamma, sign, table })
    }

    /// `μ = exp(γ ∫ ‖ω‖⁴_{L²})` from the `enstrophy` column of `log`.
    pub fn exp_enstrophy(log: &TrajectoryLog, gamma: f64) -> Result<Self, SimilarityError> {
        Self::physical_log(log)?;
        if !(gamma > 0.0) {
            return Err(SimilarityError::InvalidSchedule(format!("need γ > 0, got {gamma}")));
        }
        let q = log.column("enstrophy")?.into_iter().map(|e| e * e).collect();
        let table = DrivingTable::new(log.times(), q, gamma)?;
        Ok(MuSchedule::ExpEnstrophy { gamma, table })
    }

    /// Family code and parameters `[p0, p1, p2]` for snapshot headers.
    pub fn header(&self) -> (u8, [f64; 3]) {
        match self {
            MuSchedule::Constant(c) => (0, [*c, 0.0, 0.0]),
            MuSchedule::PowerLaw { t_blow, gamma } => (1, [*t_blow, *gamma, 0.0]),
            MuSchedule::ExpGradient { gamma, sign, .. } => (2, [*gamma, *sign as f64, 0.0]),
            MuSchedule::ExpEnstrophy { gamma, .. } => (3, [*gamma, 0.0, 0.0]),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            MuSchedule::Constant(_) => "constant",
            MuSchedule::PowerLaw { .. } => "power_law",
            MuSchedule::ExpGradient { .. } => "exp_gradient",
            MuSchedule::ExpEnstrophy { .. } => "exp_enstrophy",
        }
    }

    fn table(&self) -> Option<(&DrivingTable, f64)> {
        match self {
            MuSchedule::ExpGradient { gamma, sign, table } => Some((table, *sign as f64 * gamma)),
            MuSchedule::ExpEnstrophy { gamma, table } => Some((table, *gamma)),
            _ => None,
        }
    }

    /// Upper end of the time domain (exclusive for the power law).
    pub fn t_limit(&self) -> f64 {
        match self {
            MuSchedule::Constant(_) => f64::INFINITY,
            MuSchedule::PowerLaw { t_blow, .. } => *t_blow,
            MuSchedule::ExpGradient { table, .. } | MuSchedule::ExpEnstrophy { table, .. } => table.end(),
        }
    }

    fn check(&self, t: f64) -> Result<(), SimilarityError> {
        let lim = self.t_limit();
        let ok = match self {
            MuSchedule::PowerLaw { .. } => t >= 0.0 && t < lim,
            _ => t >= 0.0 && t <= lim,
        };
        if ok {
            Ok(())
        } else {
            Err(SimilarityError::OutOfDomain { t, limit: lim })
        }
    }
}

/// The change of variables `y = μ^{1/(α+1)} x`, `s = ∫₀ᵗ μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMap {
    pub mu: MuSchedule,
    pub alpha: f64,
}

impl SimilarityMap {
    pub fn new(mu: MuSchedule, alpha: f64) -> Result<Self, SimilarityError> {
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(SimilarityError::InvalidSchedule(format!("alpha must exceed -1, got {alpha}")));
        }
        Ok(SimilarityMap { mu, alpha })
    }

    pub fn log_mu(&self, t: f64) -> Result<f64, SimilarityError> {
        self.mu.check(t)?;
        Ok(match &self.mu {
            MuSchedule::Constant(c) => c.ln(),
            MuSchedule::PowerLaw { t_blow, gamma } => -gamma * (t_blow - t).ln(),
            _ => {
                let (tab, c) = self.mu.table().expect("exp family");
                c * integral_to(&tab.t, &tab.q, t).expect("checked")
            }
        })
    }

    pub fn mu_value(&self, t: f64) -> Result<f64, SimilarityError> {
        Ok(self.log_mu(t)?.exp())
    }

    pub fn s_of_t(&self, t: f64) -> Result<f64, SimilarityError> {
        self.mu.check(t)?;
        Ok(match &self.mu {
            MuSchedule::Constant(c) => c * t,
            MuSchedule::PowerLaw { t_blow, gamma } => {
                if *gamma == 1.0 {
                    (t_blow / (t_blow - t)).ln()
                } else {
                    let g1 = gamma - 1.0;
                    ((t_blow - t).powf(-g1) - t_blow.powf(-g1)) / g1
                }
            }
            _ => {
                let (tab, _) = self.mu.table().expect("exp family");
                let i = tab.t.partition_point(|&x| x <= t).max(1) - 1;
                if tab.t[i] == t {
                    tab.s[i]
                } else {
                    let lm = self.log_mu(t)?;
                    tab.s[i] + 0.5 * (t - tab.t[i]) * (lm.exp() + tab.log_mu[i].exp())
                }
            }
        })
    }

    /// Largest `s` reachable inside the schedule domain.
    pub fn s_limit(&self) -> f64 {
        match &self.mu {
            MuSchedule::Constant(_) | MuSchedule::PowerLaw { .. } => f64::INFINITY,
            _ => *self.mu.table().expect("exp family").0.s.last().expect("non-empty"),
        }
    }

    /// Inverse of `s_of_t` by bisection to `1e-12` relative in `s`.
    pub fn t_of_s(&self, s: f64) -> Result<f64, SimilarityError> {
        if !(s >= 0.0) {
            return Err(SimilarityError::Coverage { s, limit: self.s_limit() });
        }
        if s > self.s_limit() {
            return Err(SimilarityError::Coverage { s, limit: self.s_limit() });
        }
        let (mut lo, mut hi) = match &self.mu {
            MuSchedule::Constant(c) => (0.0, 2.0 * s / c + 1.0),
            MuSchedule::PowerLaw { t_blow, .. } => (0.0, *t_blow),
            _ => (0.0, self.mu.t_limit()),
        };
        let open_end = matches!(self.mu, MuSchedule::PowerLaw { .. });
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let sm = self.s_of_t(mid)?;
            if (sm - s).abs() <= 1e-12 * s.abs().max(1e-300) {
                return Ok(mid);
            }
            if sm < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if !open_end && (self.s_of_t(hi)? - s).abs() < (self.s_of_t(lo)? - s).abs() {
            return Ok(hi);
        }
        Ok(0.5 * (lo + hi))
    }

    /// `b = μ'(t)/μ(t)²`, the coefficient of the renormalized drift.
    pub fn drift_coefficient(&self, t: f64) -> Result<f64, SimilarityError> {
        self.mu.check(t)?;
        Ok(match &self.mu {
            MuSchedule::Constant(_) => 0.0,
            MuSchedule::PowerLaw { t_blow, gamma } => gamma * (t_blow - t).powf(gamma - 1.0),
            _ => {
                let (tab, c) = self.mu.table().expect("exp family");
                let q = interpolate(&tab.t, &tab.q, t).expect("checked");
                c * q / self.mu_value(t)?
            }
        })
    }

    /// The power-law drift written in `s`: `g(s) = γ/((γ−1)s + T^{1−γ})`.
    pub fn power_law_drift_in_s(&self, s: f64) -> Option<f64> {
        match self.mu {
            MuSchedule::PowerLaw { t_blow, gamma } => Some(gamma / ((gamma - 1.0) * s + t_blow.powf(1.0 - gamma))),
            _ => None,
        }
    }

    /// Spatial dilation factor `μ^{1/(α+1)}`.
    pub fn dilation(&self, t: f64) -> Result<f64, SimilarityError> {
        Ok((self.log_mu(t)? / (self.alpha + 1.0)).exp())
    }

    /// Velocity prefactor `μ^{α/(α+1)}`.
    pub fn velocity_factor(&self, t: f64) -> Result<f64, SimilarityError> {
        Ok((self.log_mu(t)? * self.alpha / (self.alpha + 1.0)).exp())
    }

    /// Pressure prefactor `μ^{2α/(α+1)}`.
    pub fn pressure_factor(&self, t: f64) -> Result<f64, SimilarityError> {
        Ok(self.velocity_factor(t)?.powi(2))
    }

    /// Largest window radius whose preimage fits in a periodic box of side `l`.
    pub fn max_window_radius(&self, t: f64, l: f64) -> Result<f64, SimilarityError> {
        Ok(0.5 * l * self.dilation(t)?)
    }
}

/// Time of the blow-up-rate similarity system for `μ = 1/(T−t)`: its clock is
/// `s/(α+1) = log(T/(T−t))/(α+1)`.
pub fn blowup_frame_time(s: f64, alpha: f64) -> f64 {
    s / (alpha + 1.0)
}

/// Inverse of [`blowup_frame_time`].
pub fn canonical_time(s1: f64, alpha: f64) -> f64 {
    s1 * (alpha + 1.0)
}

fn window_grid(radius: f64, n: usize) -> Result<GridSpec, SimilarityError> {
    Ok(GridSpec::centered(n, radius)?)
}

/// Samples `w(y) = factor · f(y/d)` on the centred `n³` window of radius `r`.
fn sample_window(f: &Field, d: f64, factor: f64, r: f64, n: usize) -> Result<Field, SimilarityError> {
    let wg = window_grid(r, n)?;
    let xs: Vec<f64> = wg.coords().iter().map(|c| c / d).collect();
    let mut comps = eval_tensor_grid(&f.as_spectral()?, &xs, &xs, &xs)?;
    for c in comps.iter_mut() {
        c.iter_mut().for_each(|v| *v *= factor);
    }
    Ok(Field::from_physical(wg, comps)?)
}

/// `V(y,s) = μ^{−α/(α+1)} v(μ^{−1/(α+1)} y, t)` on the centred `n³` lattice
/// of half-width `radius` (a sample lattice, not a periodic cell, unless the
/// radius is the admissible maximum).
pub fn push_snapshot(v: &Field, map: &SimilarityMap, t: f64, radius: f64, n: usize) -> Result<Field, SimilarityError> {
    let max_r = map.max_window_radius(t, v.grid().domain_length)?;
    if radius > max_r * (1.0 + 1e-12) {
        return Err(SimilarityError::WindowTooLarge {
            requested: radius,
            max_admissible: max_r,
        });
    }
    sample_window(v, map.dilation(t)?, 1.0 / map.velocity_factor(t)?, radius, n)
}

/// `Ω(y,s) = μ^{−1} ω(μ^{−1/(α+1)} y, t)` on the same window as [`push_snapshot`].
pub fn push_vorticity(v: &Field, map: &SimilarityMap, t: f64, radius: f64, n: usize) -> Result<Field, SimilarityError> {
    let max_r = map.max_window_radius(t, v.grid().domain_length)?;
    if radius > max_r * (1.0 + 1e-12) {
        return Err(SimilarityError::WindowTooLarge {
            requested: radius,
            max_admissible: max_r,
        });
    }
    let w = curl(&v.as_spectral()?)?;
    sample_window(&w, map.dilation(t)?, 1.0 / map.mu_value(t)?, radius, n)
}

/// Inverse of [`push_snapshot`] on the window: `v(x) = μ^{α/(α+1)} V(μ^{1/(α+1)} x)`
/// on the image lattice of half-width `radius·μ^{−1/(α+1)}`.
pub fn pull_snapshot(w: &Field, map: &SimilarityMap, t: f64) -> Result<Field, SimilarityError> {
    let g = *w.grid();
    let d = map.dilation(t)?;
    let xg = GridSpec::centered(g.n, 0.5 * g.domain_length / d)?;
    let p = w.as_physical()?;
    let a = map.velocity_factor(t)?;
    Ok(p.scaled(a).with_grid(xg)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BkmInvariantReport {
    /// `∫₀ᵀ ‖∇v‖_{L∞} dt` from the physical log.
    pub physical: f64,
    /// `∫₀^{s(T)} ‖∇V‖_{L∞} ds` from the renormalized log.
    pub renormalized: f64,
    pub rel_diff: f64,
    /// Common physical horizon.
    pub t_end: f64,
    pub s_end: f64,
    pub physical_stride: usize,
    pub renormalized_stride: usize,
}

/// Compares `∫‖∇v‖ dt` and `∫‖∇V‖ ds` over the common physical horizon of a
/// physical and a renormalized log of the same flow.
pub fn bkm_invariant_check(phys: &TrajectoryLog, ren: &TrajectoryLog) -> Result<BkmInvariantReport, SimilarityError> {
    if phys.meta.frame != Frame::Physical || ren.meta.frame != Frame::Renormalized {
        return Err(SimilarityError::Unpaired("need one physical and one renormalized log".into()));
    }
    if phys.len() < 2 || ren.len() < 2 {
        return Err(SimilarityError::Unpaired("logs need at least two rows".into()));
    }
    let tp = phys.times();
    let s = ren.times();
    let pt = ren.column("phys_time")?;
    let t_end = tp.last().copied().unwrap_or(0.0).min(pt.last().copied().unwrap_or(0.0));
    if !(t_end > tp[0].max(pt[0])) {
        return Err(SimilarityError::Unpaired("no overlapping time coverage".into()));
    }
    let s_end = interpolate(&pt, &s, t_end).ok_or_else(|| SimilarityError::Unpaired("phys_time not monotone".into()))?;
    let left = integral_to(&tp, &phys.column("grad_sup")?, t_end).expect("covered");
    let right = integral_to(&s, &ren.column("grad_sup")?, s_end).expect("covered");
    let scale = left.abs().max(right.abs());
    Ok(BkmInvariantReport {
        physical: left,
        renormalized: right,
        rel_diff: if scale > 0.0 { (left - right).abs() / scale } else { 0.0 },
        t_end,
        s_end,
        physical_stride: phys.meta.stride,
        renormalized_stride: ren.meta.stride,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximalS {
    /// `∫₀^{T_run} μ dt`.
    pub value: f64,
    pub t_run: f64,
    /// True when the run stopped before the estimated singular time, so the
    /// value only bounds the maximal time from below.
    pub lower_bound: bool,
}

/// `S = ∫₀^{T_run} μ(t) dt` over the covered horizon of an exponential family.
pub fn maximal_s(map: &SimilarityMap, t_blow_estimate: Option<f64>) -> Result<MaximalS, SimilarityError> {
    let t_run = map.mu.t_limit();
    if !t_run.is_finite() || matches!(map.mu, MuSchedule::PowerLaw { .. }) {
        return Err(SimilarityError::InvalidSchedule("maximal s needs a log-driven schedule".into()));
    }
    Ok(MaximalS {
        value: map.s_of_t(t_run)?,
        t_run,
        lower_bound: t_blow_estimate.map_or(true, |tb| t_run < tb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{GradNorm, LogMeta, RowSample};

    fn synthetic_log(n: usize, t_end: f64, g: impl Fn(f64) -> f64) -> TrajectoryLog {
        let mut log = TrajectoryLog::new(LogMeta::physical(vec![], GradNorm::Frobenius));
        for i in 0..n {
            let t = t_end * i as f64 / (n - 1) as f64;
            log.push(RowSample {
                t,
                grad_sup: g(t),
                omega_sup: g(t),
                enstrophy: 1.0,
                ..Default::default()
            })
            .unwrap();
        }
        log
    }

    #[test]
    fn identity_and_power_law() {
        let id = SimilarityMap::new(MuSchedule::constant(1.0).unwrap(), 1.0).unwrap();
        assert_eq!(id.s_of_t(0.7).unwrap(), 0.7);
        assert_eq!(id.dilation(0.7).unwrap(), 1.0);
        assert_eq!(id.drift_coefficient(0.7).unwrap(), 0.0);

        let m = SimilarityMap::new(MuSchedule::power_law(1.0, 2.0).unwrap(), 1.0).unwrap();
        assert!((m.mu_value(0.5).unwrap() - 4.0).abs() < 1e-14);
        assert!((m.s_of_t(0.5).unwrap() - 1.0).abs() < 1e-14);
        assert!((m.drift_coefficient(0.5).unwrap() - 1.0).abs() < 1e-14);
        assert!((m.power_law_drift_in_s(1.0).unwrap() - 1.0).abs() < 1e-14);
        for &t in &[0.0, 0.1, 0.5, 0.9, 0.999] {
            let s = m.s_of_t(t).unwrap();
            let b = m.drift_coefficient(t).unwrap();
            assert!((m.power_law_drift_in_s(s).unwrap() - b).abs() <= 1e-10 * b);
            assert!((m.t_of_s(s).unwrap() - t).abs() < 1e-12);
        }
        assert!(m.s_of_t(1.0).is_err());

        let near = SimilarityMap::new(MuSchedule::power_law(1.0, 1.0 + 1e-6).unwrap(), 1.0).unwrap();
        let one = SimilarityMap::new(MuSchedule::power_law(1.0, 1.0).unwrap(), 1.0).unwrap();
        assert!((near.s_of_t(0.6).unwrap() - (1.0f64 / 0.4).ln()).abs() < 1e-4);
        assert!((one.s_of_t(0.6).unwrap() - (1.0f64 / 0.4).ln()).abs() < 1e-14);
        // blow-up-rate clock
        let s = one.s_of_t(0.6).unwrap();
        assert!((blowup_frame_time(s, 0.5) - (1.0f64 / 0.4).ln() / 1.5).abs() < 1e-15);
        assert!((canonical_time(blowup_frame_time(s, 0.5), 0.5) - s).abs() < 1e-15);
    }

    #[test]
    fn exponential_families_from_logs() {
        let log = synthetic_log(101, 1.0, |_| 1.0);
        let plus = SimilarityMap::new(MuSchedule::exp_gradient(&log, 1.0, 1).unwrap(), 1.0).unwrap();
        let minus = SimilarityMap::new(MuSchedule::exp_gradient(&log, 1.0, -1).unwrap(), 1.0).unwrap();
        let e = 1f64.exp();
        let sp = maximal_s(&plus, None).unwrap();
        assert!((sp.value - (e - 1.0)).abs() < 1e-4 && sp.lower_bound);
        assert!((maximal_s(&minus, None).unwrap().value - (1.0 - 1.0 / e)).abs() < 1e-4);
        assert!((plus.drift_coefficient(0.5).unwrap() - (-0.5f64).exp()).abs() < 1e-12);
        for &t in &[0.0, 0.013, 0.5, 1.0] {
            let s = plus.s_of_t(t).unwrap();
            assert!((plus.t_of_s(s).unwrap() - t).abs() < 1e-11);
        }
        assert!(plus.s_of_t(1.1).is_err());
        assert!(plus.t_of_s(10.0).is_err());
        let zero = SimilarityMap::new(MuSchedule::exp_gradient(&synthetic_log(11, 2.0, |_| 0.0), 2.0, 1).unwrap(), 1.0)
            .unwrap();
        assert!((maximal_s(&zero, Some(5.0)).unwrap().value - 2.0).abs() < 1e-14);
    }
}
