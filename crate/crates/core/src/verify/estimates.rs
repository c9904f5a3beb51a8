use super::{rel_margin, EstimateReport, ReportParams, VerifyError};
use crate::diagnostics::{Frame, TrajectoryLog};
use crate::quadrature::{cumulative_trapezoid, integral_to, interpolate};

/// Relative slack allowed in `‖∇v‖_{L∞} ≥ ‖ω‖_{L∞}` premises.
const PREMISE_SLACK: f64 = 1e-9;

fn need_rows(log: &TrajectoryLog, k: usize) -> Result<(), VerifyError> {
    if log.len() < k {
        return Err(VerifyError::WrongLog(format!("need at least {k} rows, log has {}", log.len())));
    }
    Ok(())
}

fn physical(log: &TrajectoryLog) -> Result<(), VerifyError> {
    if log.meta.frame != Frame::Physical {
        return Err(VerifyError::WrongLog("expected a physical-frame log".into()));
    }
    Ok(())
}

fn value_at(t: &[f64], f: &[f64], x: f64) -> Result<f64, VerifyError> {
    interpolate(t, f, x).ok_or_else(|| VerifyError::InvalidParameter(format!("t = {x} is outside the log")))
}

fn check_t0(log: &TrajectoryLog, t0: f64) -> Result<(), VerifyError> {
    let t = log.times();
    if !(t0 >= t[0] && t0 < t[t.len() - 1]) {
        return Err(VerifyError::InvalidParameter(format!(
            "t0 = {t0} must lie in [{}, {})",
            t[0],
            t[t.len() - 1]
        )));
    }
    Ok(())
}

fn check_t_blow(log: &TrajectoryLog, t_blow: f64) -> Result<(), VerifyError> {
    let last = *log.times().last().expect("non-empty");
    if !(t_blow > last) {
        return Err(VerifyError::InvalidParameter(format!("T = {t_blow} must exceed the log horizon {last}")));
    }
    Ok(())
}

/// `sup_{t ≥ t₀} (T − t)‖∇v(t)‖_{L∞}` over the logged rows.
pub fn premise_m0(log: &TrajectoryLog, t0: f64, t_blow: f64) -> Result<f64, VerifyError> {
    need_rows(log, 2)?;
    check_t0(log, t0)?;
    check_t_blow(log, t_blow)?;
    let t = log.times();
    let g = log.column("grad_sup")?;
    let mut m = (t_blow - t0) * value_at(&t, &g, t0)?;
    for (ti, gi) in t.iter().zip(&g) {
        if *ti >= t0 {
            m = m.max((t_blow - ti) * gi);
        }
    }
    Ok(m)
}

/// Checks `M₀` against the log; `None` when the premise holds.
fn m0_premise(log: &TrajectoryLog, t0: f64, t_blow: f64, m0: f64) -> Result<Option<String>, VerifyError> {
    let actual = premise_m0(log, t0, t_blow)?;
    if actual > m0 * (1.0 + PREMISE_SLACK) + f64::MIN_POSITIVE {
        return Ok(Some(format!(
            "premise sup (T−t)‖∇v‖ ≤ M₀ fails: logged value {actual:e} exceeds M₀ = {m0:e}"
        )));
    }
    Ok(None)
}

/// `‖ω(t)‖_{L∞} ≤ ‖ω(t₀)‖_{L∞} ((T−t₀)/(T−t))^{M₀}` for `t ≥ t₀`, given
/// `(T−t)‖∇v(t)‖_{L∞} ≤ M₀` after `t₀`.
pub fn verify_sup_vorticity_growth(
    log: &TrajectoryLog,
    t0: f64,
    t_blow: f64,
    m0: f64,
) -> Result<EstimateReport, VerifyError> {
    physical(log)?;
    need_rows(log, 2)?;
    if !(m0 >= 0.0) {
        return Err(VerifyError::InvalidParameter(format!("M₀ must be non-negative, got {m0}")));
    }
    let params = ReportParams { t0: Some(t0), t_blow: Some(t_blow), m0: Some(m0), ..Default::default() };
    let rep = EstimateReport::new("1.7", "‖ω(t)‖∞ ≤ ‖ω(t₀)‖∞ ((T−t₀)/(T−t))^M₀", log, params);
    if let Some(why) = m0_premise(log, t0, t_blow, m0)? {
        return Ok(rep.vacuous(why));
    }
    let t = log.times();
    let w = log.column("omega_sup")?;
    let w0 = value_at(&t, &w, t0)?;
    let mut rep = rep;
    for (ti, wi) in t.iter().zip(&w) {
        if *ti < t0 {
            continue;
        }
        let bound = w0 * ((t_blow - t0) / (t_blow - ti)).powf(m0);
        rep.push(*ti, *wi, bound, rel_margin(bound, *wi));
    }
    let rep = rep.finish();
    Ok(match rep.worst_margin {
        Some(m) if m.abs() <= rep.tol => {
            let mut r = rep;
            r.note = Some("bound is saturated within tolerance".into());
            r
        }
        _ => rep,
    })
}

/// `‖ω(t₀)‖e^{−∫} ≤ ‖ω(t)‖_{Lᵖ} ≤ ‖ω(t₀)‖e^{∫}` with `∫ = ∫_{t₀}^t ‖∇v‖_{L∞}`.
/// Returns the lower and upper reports.
pub fn verify_lp_sandwich(log: &TrajectoryLog, p: f64, t0: f64) -> Result<[EstimateReport; 2], VerifyError> {
    physical(log)?;
    need_rows(log, 2)?;
    check_t0(log, t0)?;
    let t = log.times();
    let w = log.omega_lp(p)?;
    let g = log.column("gradint")?;
    let w0 = value_at(&t, &w, t0)?;
    let g0 = value_at(&t, &g, t0)?;
    let params = ReportParams { p: Some(p), t0: Some(t0), ..Default::default() };
    let mut lo = EstimateReport::new("1.11-lower", "‖ω(t₀)‖_p e^{−∫‖∇v‖∞} ≤ ‖ω(t)‖_p", log, params.clone());
    let mut hi = EstimateReport::new("1.11-upper", "‖ω(t)‖_p ≤ ‖ω(t₀)‖_p e^{∫‖∇v‖∞}", log, params);
    for i in 0..t.len() {
        if t[i] < t0 {
            continue;
        }
        let e = (g[i] - g0).exp();
        let lower = w0 / e;
        let upper = w0 * e;
        lo.push(t[i], w[i], lower, rel_margin(w[i], lower));
        hi.push(t[i], w[i], upper, rel_margin(upper, w[i]));
    }
    Ok([lo.finish(), hi.finish()])
}

/// Two-sided power bound on `‖Ω(s)‖_{Lᵖ}/‖Ω(s₀)‖_{Lᵖ}` in the blow-up-rate
/// similarity frame `μ = 1/(T−t)`. The ratio is recovered from the physical
/// log through the change of norm `‖ω‖ = (T−t)^{3/((α+1)p)−1}‖Ω‖`. `M₀`
/// defaults to the logged `sup (T−t)‖∇v‖`.
pub fn verify_lp_power_sandwich(
    log: &TrajectoryLog,
    p: f64,
    alpha: f64,
    t0: f64,
    t_blow: f64,
    m0: Option<f64>,
) -> Result<EstimateReport, VerifyError> {
    physical(log)?;
    need_rows(log, 2)?;
    if !(alpha > -1.0) {
        return Err(VerifyError::InvalidParameter(format!("alpha must exceed -1, got {alpha}")));
    }
    let m0 = match m0 {
        Some(m) => m,
        None => premise_m0(log, t0, t_blow)?,
    };
    let params = ReportParams {
        p: Some(p),
        alpha: Some(alpha),
        t0: Some(t0),
        t_blow: Some(t_blow),
        m0: Some(m0),
        ..Default::default()
    };
    let rep = EstimateReport::new(
        "1.12",
        "r^{M₀+1−3/((α+1)p)} ≤ ‖Ω(s)‖_p/‖Ω(s₀)‖_p ≤ r^{−M₀+1−3/((α+1)p)}, r = (T−t)/(T−t₀)",
        log,
        params,
    );
    if let Some(why) = m0_premise(log, t0, t_blow, m0)? {
        return Ok(rep.vacuous(why));
    }
    let q = if p.is_infinite() { 0.0 } else { 3.0 / ((alpha + 1.0) * p) };
    let t = log.times();
    let w = log.omega_lp(p)?;
    let w0 = value_at(&t, &w, t0)?;
    let mut rep = rep;
    for i in 0..t.len() {
        if t[i] < t0 {
            continue;
        }
        let r = (t_blow - t[i]) / (t_blow - t0);
        let ratio = if w0 > 0.0 { w[i] / w0 * r.powf(1.0 - q) } else { 0.0 };
        let lower = r.powf(m0 + 1.0 - q);
        let upper = r.powf(-m0 + 1.0 - q);
        let (ml, mu) = (rel_margin(ratio, lower), rel_margin(upper, ratio));
        if w0 == 0.0 {
            rep.push(t[i], 0.0, 0.0, 0.0);
        } else if ml <= mu {
            rep.push(t[i], ratio, lower, ml);
        } else {
            rep.push(t[i], ratio, upper, mu);
        }
    }
    Ok(rep.finish())
}

/// The γ-family bounds on `‖ω(t)‖_{L∞}` for `γ ≥ 1`: the upper bound with
/// `∫e^{γ∫‖∇v‖}`, the lower bound with `∫e^{−γ∫‖∇v‖}` on the interval where
/// its denominator stays positive, the floor `(1+‖ω₀‖t)^{1−γ}` on that
/// denominator, and the combined sinh/cosh estimate. Integrals start at the
/// first logged row.
pub fn verify_gamma_family(log: &TrajectoryLog, gamma: f64) -> Result<Vec<EstimateReport>, VerifyError> {
    physical(log)?;
    need_rows(log, 2)?;
    if !(gamma >= 1.0) {
        return Err(VerifyError::InvalidParameter(format!("γ must be at least 1, got {gamma}")));
    }
    let params = ReportParams { gamma: Some(gamma), ..Default::default() };
    let mut up = EstimateReport::new(
        "2.7",
        "‖ω(t)‖∞ ≤ ‖ω₀‖ e^{γ∫‖∇v‖} / (1 + (γ−1)‖ω₀‖ ∫₀ᵗ e^{γ∫₀^τ‖∇v‖} dτ)",
        log,
        params.clone(),
    );
    let mut low = EstimateReport::new(
        "2.8",
        "‖ω(t)‖∞ ≥ ‖ω₀‖ e^{−γ∫‖∇v‖} / (1 − (γ−1)‖ω₀‖ ∫₀ᵗ e^{−γ∫₀^τ‖∇v‖} dτ)",
        log,
        params.clone(),
    );
    let mut floor = EstimateReport::new(
        "2.8a",
        "1 − (γ−1)‖ω₀‖ ∫₀ᵗ e^{−γ∫₀^τ‖∇v‖} dτ ≥ (1 + ‖ω₀‖t)^{1−γ}",
        log,
        params.clone(),
    );
    let mut comb = EstimateReport::new(
        "2.9",
        "sinh(γ∫₀ᵗ‖∇v‖) / ∫₀ᵗ cosh(γ∫_τ^t‖∇v‖) dτ ≥ (γ−1)‖ω₀‖",
        log,
        params,
    );

    let t = log.times();
    let grad = log.column("grad_sup")?;
    let w = log.column("omega_sup")?;
    if let Some(i) = (0..t.len()).find(|&i| w[i] > grad[i] * (1.0 + PREMISE_SLACK)) {
        let why = format!(
            "premise ‖∇v‖∞ ≥ ‖ω‖∞ fails at t = {} ({:e} < {:e}) under the {} convention",
            t[i], grad[i], w[i], log.meta.grad_norm.label()
        );
        return Ok(vec![up.vacuous(&why), low.vacuous(&why), floor.vacuous(&why), comb.vacuous(why)]);
    }
    let g = log.column("gradint")?;
    let w0 = w[0];
    let ep: Vec<f64> = g.iter().map(|x| (gamma * x).exp()).collect();
    let em: Vec<f64> = g.iter().map(|x| (-gamma * x).exp()).collect();
    let ap = cumulative_trapezoid(&t, &ep);
    let am = cumulative_trapezoid(&t, &em);
    let k = (gamma - 1.0) * w0;
    let mut valid = true;
    for i in 0..t.len() {
        let bound = w0 * ep[i] / (1.0 + k * ap[i]);
        up.push(t[i], w[i], bound, rel_margin(bound, w[i]));

        let den = 1.0 - k * am[i];
        let fl = (1.0 + w0 * (t[i] - t[0])).powf(1.0 - gamma);
        floor.push(t[i], den, fl, rel_margin(den, fl));

        if valid && den <= 0.0 {
            valid = false;
            low.validity_end = Some(t[i]);
            comb.validity_end = Some(t[i]);
        }
        if !valid {
            continue;
        }
        let lb = w0 * em[i] / den;
        low.push(t[i], w[i], lb, rel_margin(w[i], lb));

        if i > 0 {
            let c: Vec<f64> = (0..=i).map(|j| (gamma * (g[i] - g[j])).cosh()).collect();
            let lhs = (gamma * g[i]).sinh() / cumulative_trapezoid(&t[..=i], &c)[i];
            comb.push(t[i], lhs, k, rel_margin(lhs, k));
        }
    }
    Ok(vec![up.finish(), low.finish(), floor.finish(), comb.finish()])
}

/// Decay bounds for a renormalized run: `‖Ω⁺(s)‖∞ ≤ ‖Ω₀‖/(1+(γ−1)s‖Ω₀‖)` and
/// `‖Ω⁻(s)‖∞ ≥ ‖Ω₀‖/(1−(γ−1)s‖Ω₀‖)` for the gradient-driven systems, and
/// `‖Ω(s)‖_{L²} ≤ ‖Ω₀‖/(1+(γ−C)s‖Ω₀‖⁴)^{1/4}` for the enstrophy-driven one,
/// where `C = C₀/ν³` is the constant of the energy inequality at viscosity ν.
pub fn verify_renorm_field_decay(log: &TrajectoryLog, c0: f64) -> Result<EstimateReport, VerifyError> {
    need_rows(log, 2)?;
    let meta = log
        .meta
        .renorm
        .as_ref()
        .filter(|_| log.meta.frame == Frame::Renormalized)
        .ok_or_else(|| VerifyError::WrongLog("expected a renormalized log".into()))?;
    let s = log.times();
    let gamma = meta.gamma;
    match meta.mode.as_str() {
        "self_consistent_gradient" => {
            let sign = meta.sign;
            let params = ReportParams { gamma: Some(gamma), alpha: Some(meta.alpha), sign: Some(sign), ..Default::default() };
            let mut rep = if sign > 0 {
                EstimateReport::new("2.10", "‖Ω⁺(s)‖∞ ≤ ‖Ω₀‖∞ / (1 + (γ−1)s‖Ω₀‖∞)", log, params)
            } else {
                EstimateReport::new("2.11", "‖Ω⁻(s)‖∞ ≥ ‖Ω₀‖∞ / (1 − (γ−1)s‖Ω₀‖∞)", log, params)
            };
            let grad = log.column("grad_sup")?;
            let w = log.column("omega_sup")?;
            if let Some(i) = (0..s.len()).find(|&i| w[i] > grad[i] * (1.0 + PREMISE_SLACK)) {
                return Ok(rep.vacuous(format!("premise ‖∇V‖∞ ≥ ‖Ω‖∞ fails at s = {}", s[i])));
            }
            let w0 = w[0];
            let k = (gamma - 1.0) * w0;
            for i in 0..s.len() {
                let ds = s[i] - s[0];
                if sign > 0 {
                    let b = w0 / (1.0 + k * ds);
                    rep.push(s[i], w[i], b, rel_margin(b, w[i]));
                } else {
                    let den = 1.0 - k * ds;
                    if den <= 0.0 {
                        rep.validity_end = Some(s[i]);
                        break;
                    }
                    let b = w0 / den;
                    rep.push(s[i], w[i], b, rel_margin(w[i], b));
                }
            }
            Ok(rep.finish())
        }
        "self_consistent_enstrophy" => {
            let c = effective_c0(c0, log.meta.viscosity)?;
            if !(gamma > c) {
                return Err(VerifyError::InvalidParameter(format!(
                    "the enstrophy decay bound needs γ > C₀/ν³ = {c}, got γ = {gamma}"
                )));
            }
            let params = ReportParams { gamma: Some(gamma), alpha: Some(meta.alpha), c0: Some(c), ..Default::default() };
            let mut rep =
                EstimateReport::new("3.8", "‖Ω(s)‖₂ ≤ ‖Ω₀‖₂ / (1 + (γ−C₀)s‖Ω₀‖₂⁴)^{1/4}", log, params);
            let ens = log.column("enstrophy")?;
            let w0 = ens[0].sqrt();
            for i in 0..s.len() {
                let wi = ens[i].sqrt();
                let b = w0 / (1.0 + (gamma - c) * (s[i] - s[0]) * w0.powi(4)).powf(0.25);
                rep.push(s[i], wi, b, rel_margin(b, wi));
            }
            Ok(rep.finish())
        }
        other => Err(VerifyError::WrongLog(format!("no decay bound for drift mode {other}"))),
    }
}

fn effective_c0(c0: f64, nu: f64) -> Result<f64, VerifyError> {
    if !(nu > 0.0) {
        return Err(VerifyError::WrongLog("the enstrophy estimates need a viscous run".into()));
    }
    if !(c0 > 0.0) {
        return Err(VerifyError::InvalidParameter(format!("C₀ must be positive, got {c0}")));
    }
    Ok(c0 / nu.powi(3))
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln ∫₀^{tᵢ} e^{f}` with `f` linear between rows, integrated exactly. The
/// trapezoid rule on `e^{f}` itself overestimates wildly once `f` jumps by
/// more than a few units per row.
fn log_cumulative_exp(t: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; t.len()];
    for i in 1..t.len() {
        let (lo, hi) = (f[i - 1].min(f[i]), f[i - 1].max(f[i]));
        let x = hi - lo;
        // ∫ e^{f} over the row = Δt·e^{lo}·(e^x − 1)/x
        let shape = if x < 1e-12 { 0.5 * x } else { x + (-(-x).exp_m1() / x).ln() };
        let piece = (t[i] - t[i - 1]).ln() + lo + shape;
        out[i] = log_add_exp(out[i - 1], piece);
    }
    out
}

/// [`rel_margin`] of `e^{ln_big}` over `e^{ln_small}` without forming either.
fn log_rel_margin(ln_big: f64, ln_small: f64) -> f64 {
    let d = ln_small - ln_big;
    if d <= 0.0 {
        1.0 - d.exp()
    } else {
        (-d).exp() - 1.0
    }
}

/// The enstrophy estimate of a viscous physical run and the upper bound on
/// its denominator, for `γ ≥ C = C₀/ν³`. The denominator bound is checked
/// while `1 − C‖ω₀‖₂⁴t > 0`.
pub fn verify_enstrophy_estimate(log: &TrajectoryLog, gamma: f64, c0: f64) -> Result<[EstimateReport; 2], VerifyError> {
    physical(log)?;
    need_rows(log, 2)?;
    let c = effective_c0(c0, log.meta.viscosity)?;
    if !(gamma >= c) {
        return Err(VerifyError::InvalidParameter(format!("γ must be at least C₀/ν³ = {c}, got {gamma}")));
    }
    let params = ReportParams { gamma: Some(gamma), c0: Some(c), ..Default::default() };
    let mut est = EstimateReport::new(
        "3.2",
        "‖ω(t)‖₂ ≤ ‖ω₀‖₂ e^{(γ/4)∫‖ω‖₂⁴} / (1 + (γ−C₀)‖ω₀‖₂⁴ ∫₀ᵗ e^{γ∫₀^τ‖ω‖₂⁴} dτ)^{1/4}",
        log,
        params.clone(),
    );
    let mut den_rep = EstimateReport::new(
        "3.2a",
        "1 + (γ−C₀)‖ω₀‖₂⁴ ∫₀ᵗ e^{γ∫₀^τ‖ω‖₂⁴} dτ ≤ (1 − C₀‖ω₀‖₂⁴ t)^{−(γ−C₀)/C₀}",
        log,
        params,
    );
    let t = log.times();
    let ens = log.column("enstrophy")?;
    let q = log.column("omega4_integral")?;
    let w0 = ens[0].sqrt();
    let w04 = w0.powi(4);
    // logs throughout: e^{γ∫‖ω‖⁴} overflows long before the bounds do when C₀/ν³ is large
    let ln_b = log_cumulative_exp(&t, &q.iter().map(|x| gamma * x).collect::<Vec<_>>());
    let ln_k = ((gamma - c) * w04).ln();
    let mut valid = true;
    for i in 0..t.len() {
        let ln_den = log_add_exp(0.0, ln_k + ln_b[i]);
        let wi = ens[i].sqrt();
        let bound = w0 * (0.25 * (gamma * q[i] - ln_den)).exp();
        est.push(t[i], wi, bound, rel_margin(bound, wi));
        let base = 1.0 - c * w04 * (t[i] - t[0]);
        if valid && base <= 0.0 {
            valid = false;
            den_rep.validity_end = Some(t[i]);
        }
        if valid {
            let ln_cap = -(gamma - c) / c * base.ln();
            den_rep.push(t[i], ln_den.exp(), ln_cap.exp(), log_rel_margin(ln_cap, ln_den));
        }
    }
    Ok([est.finish(), den_rep.finish()])
}

/// `μ(t)^{−2+3/((α+1)p)} ≤ ‖Ω(s)‖_{Lᵖ}/‖Ω₀‖_{Lᵖ}` with `μ = exp ∫‖∇v‖_{L∞}`,
/// pairing a physical log (for `μ`) with a renormalized run driven by
/// `γ = 1`, sign `+` (for `Ω`). The note states whether the exponent is
/// positive, the regime in which the bound rules out an `Lᵖ` profile.
pub fn verify_ratio_lower_bound(
    phys: &TrajectoryLog,
    ren: &TrajectoryLog,
    p: f64,
) -> Result<EstimateReport, VerifyError> {
    physical(phys)?;
    need_rows(phys, 2)?;
    need_rows(ren, 2)?;
    let meta = ren
        .meta
        .renorm
        .as_ref()
        .filter(|_| ren.meta.frame == Frame::Renormalized)
        .ok_or_else(|| VerifyError::WrongLog("second log must be renormalized".into()))?;
    if meta.mode != "self_consistent_gradient" || meta.gamma != 1.0 || meta.sign != 1 {
        return Err(VerifyError::WrongLog("the ratio bound needs μ = exp ∫‖∇v‖ (gradient drift, γ = 1, sign +)".into()));
    }
    if ren.meta.grad_norm != phys.meta.grad_norm {
        return Err(VerifyError::Unpaired("logs use different gradient-norm conventions".into()));
    }
    let alpha = meta.alpha;
    let q = if p.is_infinite() { 0.0 } else { 3.0 / ((alpha + 1.0) * p) };
    let expo = -2.0 + q;
    let params = ReportParams { alpha: Some(alpha), p: Some(p), gamma: Some(1.0), ..Default::default() };
    let mut rep = EstimateReport::new("2.21", "μ(t)^{−2+3/((α+1)p)} ≤ ‖Ω(s)‖_p / ‖Ω₀‖_p", ren, params);
    let tp = phys.times();
    let grad = phys.column("grad_sup")?;
    let s = ren.times();
    let pt = ren.column("phys_time")?;
    let w = ren.omega_lp(p)?;
    let w0 = w[0];
    let t_end = tp[tp.len() - 1];
    for i in 0..s.len() {
        if pt[i] > t_end * (1.0 + 1e-12) {
            break;
        }
        let big_g = integral_to(&tp, &grad, pt[i].min(t_end))
            .ok_or_else(|| VerifyError::Unpaired(format!("physical log does not cover t = {}", pt[i])))?;
        let bound = (expo * big_g).exp();
        let ratio = if w0 > 0.0 { w[i] / w0 } else { 0.0 };
        rep.push(s[i], ratio, bound, rel_margin(ratio, bound));
    }
    if rep.margins.len() < 2 {
        return Err(VerifyError::Unpaired("no overlapping time coverage".into()));
    }
    let mut rep = rep.finish();
    rep.note = Some(if expo > 0.0 {
        format!("exponent {expo} > 0: p < 3/(2(α+1)), the nonexistence regime")
    } else {
        format!("exponent {expo} ≤ 0: outside the nonexistence regime p < 3/(2(α+1))")
    });
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{GradNorm, LogMeta, RowSample};

    fn log_from(t: &[f64], grad: impl Fn(f64) -> f64, omega: impl Fn(f64) -> f64) -> TrajectoryLog {
        let mut log = TrajectoryLog::new(LogMeta::physical(vec![], GradNorm::Frobenius));
        for &ti in t {
            log.push(RowSample { t: ti, grad_sup: grad(ti), omega_sup: omega(ti), ..Default::default() })
                .unwrap();
        }
        log
    }

    fn grid(n: usize, end: f64) -> Vec<f64> {
        (0..=n).map(|i| end * i as f64 / n as f64).collect()
    }

    #[test]
    fn shear_gamma_family() {
        let t = grid(400, 1.0);
        let log = log_from(&t, |_| 1.0, |_| 1.0);
        for gamma in [1.0, 2.0, 4.0] {
            let r = verify_gamma_family(&log, gamma).unwrap();
            for rep in &r {
                assert!(!rep.failed(), "{} γ={gamma}: {:?}", rep.id, rep.worst_margin);
            }
            // closed form e^{γt}/(1+(γ−1)(e^{γt}−1)/γ) up to trapezoid error
            let last = r[0].margins.last().unwrap();
            let e = (gamma * 1.0f64).exp();
            let closed = e / (1.0 + (gamma - 1.0) * (e - 1.0) / gamma);
            assert!((last.bound - closed).abs() < 1e-4 * closed);
            assert!(closed >= 1.0);
        }
    }

    #[test]
    fn saturating_power_law() {
        let (tb, m0) = (1.0, 0.7);
        let t = grid(200, 0.9);
        let log = log_from(&t, |s| m0 / (tb - s), |s| 3.0 * (tb / (tb - s)).powf(m0));
        let r = verify_sup_vorticity_growth(&log, 0.0, tb, m0).unwrap();
        assert!(r.worst_margin.unwrap().abs() < 1e-12);
        assert!(r.note.is_some());
        let r = verify_sup_vorticity_growth(&log, 0.0, tb, 0.5).unwrap();
        assert_eq!(r.status, super::super::CheckStatus::Vacuous);
    }

    #[test]
    fn sandwich_of_zero_flow_is_tight() {
        let t = grid(10, 1.0);
        let log = log_from(&t, |_| 0.0, |_| 0.0);
        let [lo, hi] = verify_lp_sandwich(&log, f64::INFINITY, 0.0).unwrap();
        assert_eq!(lo.worst_margin, Some(0.0));
        assert_eq!(hi.worst_margin, Some(0.0));
    }

    #[test]
    fn gamma_premise_violation_is_vacuous() {
        let t = grid(10, 0.5);
        let log = log_from(&t, |_| 0.0, |_| 1.0);
        let r = verify_gamma_family(&log, 2.0).unwrap();
        assert!(r.iter().all(|x| x.status == super::super::CheckStatus::Vacuous));
        assert!(verify_gamma_family(&log, 0.5).is_err());
    }
}
