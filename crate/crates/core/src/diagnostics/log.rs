//! Trajectory logs: one row of norms per logged step, with CSV round trip.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use super::norms::{p_label, parse_p, GradNorm};
use super::DiagnosticsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Physical,
    Renormalized,
}

/// Parameters of the renormalized system a log was produced by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormMeta {
    pub alpha: f64,
    /// `prescribed`, `self_consistent_gradient` or `self_consistent_enstrophy`.
    pub mode: String,
    pub gamma: f64,
    /// +1 or −1; the drift sign of the exponential-gradient systems.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogMeta {
    pub frame: Frame,
    pub grad_norm: GradNorm,
    /// Exponents of the logged vorticity Lᵖ columns.
    pub p_list: Vec<f64>,
    pub stride: usize,
    pub dt: f64,
    pub viscosity: f64,
    pub n: usize,
    pub domain_length: f64,
    pub dealias_fraction: f64,
    pub renorm: Option<RenormMeta>,
    pub manifest: Option<String>,
}

impl LogMeta {
    pub fn physical(p_list: Vec<f64>, grad_norm: GradNorm) -> Self {
        LogMeta {
            frame: Frame::Physical,
            grad_norm,
            p_list,
            stride: 1,
            dt: 0.0,
            viscosity: 0.0,
            n: 0,
            domain_length: 2.0 * std::f64::consts::PI,
            dealias_fraction: 2.0 / 3.0,
            renorm: None,
            manifest: None,
        }
    }
}

/// Instantaneous quantities measured on one state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RowSample {
    pub t: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub grad_sup: f64,
    pub omega_sup: f64,
    pub omega_lp: Vec<f64>,
    pub tail_fraction: f64,
    pub phys_time: Option<f64>,
    pub log_mu: Option<f64>,
}

/// A logged row: the sample plus running time integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: f64,
    /// `½‖v‖²_{L²}`.
    pub energy: f64,
    /// `‖ω‖²_{L²}`.
    pub enstrophy: f64,
    pub grad_sup: f64,
    pub omega_sup: f64,
    pub omega_lp: Vec<f64>,
    /// `∫ ‖ω‖_{L∞}` from the first row.
    pub bkm_integral: f64,
    /// `∫ ‖∇v‖_{L∞}` from the first row.
    pub gradint: f64,
    /// `∫ ‖ω‖⁴_{L²}` from the first row.
    pub omega4_integral: f64,
    pub tail_fraction: f64,
    pub phys_time: Option<f64>,
    pub log_mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub meta: LogMeta,
    rows: Vec<LogRow>,
}

const FIXED_HEAD: [&str; 5] = ["t", "energy", "enstrophy", "grad_sup", "omega_sup"];
const FIXED_TAIL: [&str; 4] = ["bkm_integral", "gradint", "omega4_integral", "tail_fraction"];
const RENORM_COLS: [&str; 2] = ["phys_time", "log_mu"];

impl TrajectoryLog {
    pub fn new(meta: LogMeta) -> Self {
        TrajectoryLog { meta, rows: Vec::new() }
    }

    pub fn rows(&self) -> &[LogRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn renormalized(&self) -> bool {
        self.meta.frame == Frame::Renormalized
    }

    /// Appends a row, accumulating the time integrals by the trapezoid rule.
    pub fn push(&mut self, s: RowSample) -> Result<(), DiagnosticsError> {
        if s.omega_lp.len() != self.meta.p_list.len() {
            return Err(DiagnosticsError::Format(format!(
                "row has {} Lp values, log expects {}",
                s.omega_lp.len(),
                self.meta.p_list.len()
            )));
        }
        let mut vals = vec![s.t, s.energy, s.enstrophy, s.grad_sup, s.omega_sup, s.tail_fraction];
        vals.extend(&s.omega_lp);
        vals.extend(s.phys_time);
        vals.extend(s.log_mu);
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(DiagnosticsError::NonFinite(s.t));
        }
        if self.renormalized() != (s.phys_time.is_some() && s.log_mu.is_some()) {
            return Err(DiagnosticsError::Format(
                "phys_time/log_mu must be present exactly for renormalized logs".into(),
            ));
        }
        let (bkm, gradint, omega4) = match self.rows.last() {
            None => (0.0, 0.0, 0.0),
            Some(prev) => {
                if s.t <= prev.t {
                    return Err(DiagnosticsError::NonIncreasingTime(s.t));
                }
                let h = s.t - prev.t;
                (
                    prev.bkm_integral + 0.5 * h * (prev.omega_sup + s.omega_sup),
                    prev.gradint + 0.5 * h * (prev.grad_sup + s.grad_sup),
                    prev.omega4_integral + 0.5 * h * (prev.enstrophy.powi(2) + s.enstrophy.powi(2)),
                )
            }
        };
        self.rows.push(LogRow {
            t: s.t,
            energy: s.energy,
            enstrophy: s.enstrophy,
            grad_sup: s.grad_sup,
            omega_sup: s.omega_sup,
            omega_lp: s.omega_lp,
            bkm_integral: bkm,
            gradint,
            omega4_integral: omega4,
            tail_fraction: s.tail_fraction,
            phys_time: s.phys_time,
            log_mu: s.log_mu,
        });
        Ok(())
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = FIXED_HEAD.iter().map(|s| s.to_string()).collect();
        h.extend(self.meta.p_list.iter().map(|p| format!("omega_lp_{}", p_label(*p))));
        h.extend(FIXED_TAIL.iter().map(|s| s.to_string()));
        if self.renormalized() {
            h.extend(RENORM_COLS.iter().map(|s| s.to_string()));
        }
        h
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    /// Column by its CSV name.
    pub fn column(&self, name: &str) -> Result<Vec<f64>, DiagnosticsError> {
        let pick = |f: &dyn Fn(&LogRow) -> Option<f64>| -> Result<Vec<f64>, DiagnosticsError> {
            self.rows
                .iter()
                .map(|r| f(r).ok_or_else(|| DiagnosticsError::MissingColumn(name.to_string())))
                .collect()
        };
        match name {
            "t" => pick(&|r| Some(r.t)),
            "energy" => pick(&|r| Some(r.energy)),
            "enstrophy" => pick(&|r| Some(r.enstrophy)),
            "grad_sup" => pick(&|r| Some(r.grad_sup)),
            "omega_sup" => pick(&|r| Some(r.omega_sup)),
            "bkm_integral" => pick(&|r| Some(r.bkm_integral)),
            "gradint" => pick(&|r| Some(r.gradint)),
            "omega4_integral" => pick(&|r| Some(r.omega4_integral)),
            "tail_fraction" => pick(&|r| Some(r.tail_fraction)),
            "phys_time" if self.renormalized() => pick(&|r| r.phys_time),
            "log_mu" if self.renormalized() => pick(&|r| r.log_mu),
            other => {
                if let Some(p) = other.strip_prefix("omega_lp_").and_then(parse_p) {
                    return self.omega_lp(p);
                }
                Err(DiagnosticsError::MissingColumn(other.to_string()))
            }
        }
    }

    /// `‖ω‖_{Lᵖ}` series; `p = ∞` falls back to the sup column.
    pub fn omega_lp(&self, p: f64) -> Result<Vec<f64>, DiagnosticsError> {
        if let Some(k) = self.meta.p_list.iter().position(|q| *q == p) {
            return Ok(self.rows.iter().map(|r| r.omega_lp[k]).collect());
        }
        if p.is_infinite() {
            return self.column("omega_sup");
        }
        Err(DiagnosticsError::MissingColumn(format!("omega_lp_{}", p_label(p))))
    }

    /// Serializes metadata as `#` comment lines followed by a header and rows.
    pub fn to_csv(&self) -> String {
        let m = &self.meta;
        let mut out = String::new();
        if let Some(h) = &m.manifest {
            let _ = writeln!(out, "# manifest={h}");
        }
        let frame = match m.frame {
            Frame::Physical => "physical",
            Frame::Renormalized => "renormalized",
        };
        let _ = writeln!(out, "# frame={frame}");
        let _ = writeln!(out, "# grad_norm={}", m.grad_norm.label());
        let _ = writeln!(out, "# stride={}", m.stride);
        let _ = writeln!(out, "# dt={:e}", m.dt);
        let _ = writeln!(out, "# viscosity={:e}", m.viscosity);
        let _ = writeln!(out, "# n={}", m.n);
        let _ = writeln!(out, "# domain_length={:e}", m.domain_length);
        let _ = writeln!(out, "# dealias_fraction={:e}", m.dealias_fraction);
        if let Some(r) = &m.renorm {
            let _ = writeln!(out, "# alpha={:e}", r.alpha);
            let _ = writeln!(out, "# mode={}", r.mode);
            let _ = writeln!(out, "# gamma={:e}", r.gamma);
            let _ = writeln!(out, "# sign={}", r.sign);
        }
        out.push_str(&self.header().join(","));
        out.push('\n');
        for r in &self.rows {
            let mut vals = vec![r.t, r.energy, r.enstrophy, r.grad_sup, r.omega_sup];
            vals.extend(&r.omega_lp);
            vals.extend([r.bkm_integral, r.gradint, r.omega4_integral, r.tail_fraction]);
            if self.renormalized() {
                vals.extend([r.phys_time.unwrap_or(f64::NAN), r.log_mu.unwrap_or(f64::NAN)]);
            }
            let line: Vec<String> = vals.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, DiagnosticsError> {
        let mut meta = LogMeta::physical(Vec::new(), GradNorm::Frobenius);
        let mut renorm = RenormMeta {
            alpha: 0.0,
            mode: String::new(),
            gamma: 1.0,
            sign: 1,
        };
        let mut has_renorm = false;
        let mut header: Option<Vec<String>> = None;
        let mut data: Vec<Vec<f64>> = Vec::new();
        let bad = |line: usize, msg: &str| DiagnosticsError::Format(format!("line {}: {msg}", line + 1));
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                let (k, v) = c.trim().split_once('=').ok_or_else(|| bad(ln, "metadata needs key=value"))?;
                let num = || v.parse::<f64>().map_err(|_| bad(ln, "bad number"));
                match k {
                    "manifest" => meta.manifest = Some(v.to_string()),
                    "frame" => {
                        meta.frame = match v {
                            "physical" => Frame::Physical,
                            "renormalized" => Frame::Renormalized,
                            _ => return Err(bad(ln, "unknown frame")),
                        }
                    }
                    "grad_norm" => meta.grad_norm = GradNorm::parse(v).ok_or_else(|| bad(ln, "unknown grad_norm"))?,
                    "stride" => meta.stride = v.parse().map_err(|_| bad(ln, "bad stride"))?,
                    "dt" => meta.dt = num()?,
                    "viscosity" => meta.viscosity = num()?,
                    "n" => meta.n = v.parse().map_err(|_| bad(ln, "bad n"))?,
                    "domain_length" => meta.domain_length = num()?,
                    "dealias_fraction" => meta.dealias_fraction = num()?,
                    "alpha" => {
                        renorm.alpha = num()?;
                        has_renorm = true;
                    }
                    "mode" => renorm.mode = v.to_string(),
                    "gamma" => renorm.gamma = num()?,
                    "sign" => renorm.sign = v.parse().map_err(|_| bad(ln, "bad sign"))?,
                    _ => return Err(bad(ln, &format!("unknown metadata key `{k}`"))),
                }
                continue;
            }
            if header.is_none() {
                header = Some(line.split(',').map(|s| s.trim().to_string()).collect());
                continue;
            }
            let row: Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            data.push(row.map_err(|_| bad(ln, "non-numeric entry"))?);
        }
        if has_renorm {
            meta.renorm = Some(renorm);
        }
        let header = header.ok_or_else(|| DiagnosticsError::Format("missing header".into()))?;
        // validate header against the fixed column order
        let mut p_list = Vec::new();
        let mut i = FIXED_HEAD.len();
        if header.len() < FIXED_HEAD.len() || header[..FIXED_HEAD.len()] != FIXED_HEAD {
            return Err(DiagnosticsError::Format(format!(
                "header must start with {}",
                FIXED_HEAD.join(",")
            )));
        }
        while i < header.len() {
            match header[i].strip_prefix("omega_lp_").map(parse_p) {
                Some(Some(p)) => p_list.push(p),
                Some(None) => return Err(DiagnosticsError::Format(format!("bad column {}", header[i]))),
                None => break,
            }
            i += 1;
        }
        meta.p_list = p_list;
        let expect_tail: Vec<&str> = if meta.frame == Frame::Renormalized {
            FIXED_TAIL.iter().chain(RENORM_COLS.iter()).copied().collect()
        } else {
            FIXED_TAIL.to_vec()
        };
        if header[i..] != expect_tail[..] {
            return Err(DiagnosticsError::Format(format!(
                "expected trailing columns {}",
                expect_tail.join(",")
            )));
        }
        let np = meta.p_list.len();
        let mut log = TrajectoryLog::new(meta);
        for (k, r) in data.into_iter().enumerate() {
            if r.len() != header.len() {
                return Err(DiagnosticsError::Format(format!("row {} has {} fields", k + 1, r.len())));
            }
            let base = 5 + np;
            let renorm = log.renormalized();
            log.rows.push(LogRow {
                t: r[0],
                energy: r[1],
                enstrophy: r[2],
                grad_sup: r[3],
                omega_sup: r[4],
                omega_lp: r[5..base].to_vec(),
                bkm_integral: r[base],
                gradint: r[base + 1],
                omega4_integral: r[base + 2],
                tail_fraction: r[base + 3],
                phys_time: renorm.then(|| r[base + 4]),
                log_mu: renorm.then(|| r[base + 5]),
            });
        }
        Ok(log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64, g: f64) -> RowSample {
        RowSample {
            t,
            energy: 1.0,
            enstrophy: 2.0,
            grad_sup: g,
            omega_sup: g,
            omega_lp: vec![0.5, 0.25],
            tail_fraction: 1e-9,
            phys_time: None,
            log_mu: None,
        }
    }

    #[test]
    fn accumulators_and_csv_round_trip() {
        let mut log = TrajectoryLog::new(LogMeta::physical(vec![2.0, f64::INFINITY], GradNorm::Dominant));
        log.meta.manifest = Some("abc".into());
        for i in 0..5 {
            let t = i as f64 * 0.1;
            log.push(sample(t, 1.0 + t)).unwrap();
        }
        let gi = log.column("gradint").unwrap();
        assert!((gi[4] - (0.4 + 0.08)).abs() < 1e-15);
        let text = log.to_csv();
        assert!(text.contains("t,energy,enstrophy,grad_sup,omega_sup,omega_lp_2,omega_lp_inf,bkm_integral,gradint,omega4_integral,tail_fraction\n"));
        let back = TrajectoryLog::from_csv(&text).unwrap();
        assert_eq!(back, log);
    }

    #[test]
    fn rejects_bad_rows() {
        let mut log = TrajectoryLog::new(LogMeta::physical(vec![2.0, 1.0], GradNorm::Frobenius));
        log.push(sample(0.0, 1.0)).unwrap();
        assert!(matches!(log.push(sample(0.0, 1.0)), Err(DiagnosticsError::NonIncreasingTime(_))));
        assert!(matches!(log.push(sample(1.0, f64::NAN)), Err(DiagnosticsError::NonFinite(_))));
        assert!(log.column("omega_lp_3").is_err());
        assert!(log.column("phys_time").is_err());
    }

    #[test]
    fn renormalized_columns() {
        let mut meta = LogMeta::physical(vec![], GradNorm::Frobenius);
        meta.frame = Frame::Renormalized;
        meta.renorm = Some(RenormMeta { alpha: 1.0, mode: "self_consistent_gradient".into(), gamma: 2.0, sign: -1 });
        let mut log = TrajectoryLog::new(meta);
        let mut s = sample(0.0, 1.0);
        s.omega_lp.clear();
        assert!(log.push(s.clone()).is_err());
        s.phys_time = Some(0.0);
        s.log_mu = Some(0.0);
        log.push(s).unwrap();
        let text = log.to_csv();
        assert!(text.lines().any(|l| l.ends_with("tail_fraction,phys_time,log_mu")));
        assert_eq!(TrajectoryLog::from_csv(&text).unwrap(), log);
    }
}
