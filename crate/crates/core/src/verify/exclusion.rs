use serde::Serialize;
use std::fmt;

use super::VerifyError;

/// An interval of exponents `p`; `hi = ∞` with `hi_closed` includes `p = ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl PInterval {
    pub fn contains(&self, p: f64) -> bool {
        let above = if self.lo_closed { p >= self.lo } else { p > self.lo };
        let below = if self.hi_closed { p <= self.hi } else { p < self.hi };
        above && below
    }
}

fn fmt_end(x: f64) -> String {
    if x.is_infinite() {
        "∞".into()
    } else {
        format!("{x}")
    }
}

impl fmt::Display for PInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            fmt_end(self.lo),
            fmt_end(self.hi),
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExclusionVerdict {
    pub m: f64,
    pub alpha: f64,
    pub p: f64,
    /// `3/((α+1)p)`, zero at `p = ∞`.
    pub q: f64,
    /// `|1 − q|`.
    pub threshold: f64,
    /// `M < |1 − 3/((α+1)p)|`: no α-asymptotically self-similar blow-up in `Lᵖ`.
    pub excluded: bool,
    /// `p < 3/(2(α+1))`: excluded regardless of `M`.
    pub small_p_excluded: bool,
}

fn check(m: f64, alpha: f64) -> Result<(), VerifyError> {
    if !(alpha > -1.0) || !alpha.is_finite() {
        return Err(VerifyError::InvalidParameter(format!("alpha must exceed -1, got {alpha}")));
    }
    if !(m >= 0.0) {
        return Err(VerifyError::InvalidParameter(format!("M must be non-negative, got {m}")));
    }
    Ok(())
}

pub fn exclusion_verdict(m: f64, alpha: f64, p: f64) -> Result<ExclusionVerdict, VerifyError> {
    check(m, alpha)?;
    if !(p > 0.0) {
        return Err(VerifyError::InvalidParameter(format!("p must be positive, got {p}")));
    }
    let q = if p.is_infinite() { 0.0 } else { 3.0 / ((alpha + 1.0) * p) };
    let mut threshold = (1.0 - q).abs();
    // boundary exponents such as p = 6/5 at α = 3/2 land within rounding of q = 1
    if threshold < 1e-12 {
        threshold = 0.0;
    }
    Ok(ExclusionVerdict {
        m,
        alpha,
        p,
        q,
        threshold,
        excluded: m < threshold,
        small_p_excluded: p < 3.0 / (2.0 * (alpha + 1.0)),
    })
}

/// Self-similar profiles (`α = 3/2`): `‖∇V‖_{L∞} < |1 − 6/(5p)|` excludes.
pub fn profile_exclusion(grad_sup: f64, p: f64) -> Result<ExclusionVerdict, VerifyError> {
    exclusion_verdict(grad_sup, 1.5, p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExclusionRegion {
    pub m: f64,
    pub alpha: f64,
    /// `{p ∈ (0,∞] : M < |1 − 3/((α+1)p)|}`.
    pub excluded: Vec<PInterval>,
    /// Supremum of the excluded exponents near zero, `3/((α+1)(1+M))`.
    pub small_p_sup: f64,
    /// The `M`-independent region `p < 3/(2(α+1))`.
    pub small_p_region: PInterval,
}

impl fmt::Display for ExclusionRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.excluded.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", if parts.is_empty() { "∅".to_string() } else { parts.join(" ∪ ") })
    }
}

pub fn exclusion_region(m: f64, alpha: f64) -> Result<ExclusionRegion, VerifyError> {
    check(m, alpha)?;
    let a1 = alpha + 1.0;
    // q > 1 + M  ⇔  p < 3/((α+1)(1+M))
    let small = 3.0 / (a1 * (1.0 + m));
    let mut excluded = vec![PInterval { lo: 0.0, hi: small, lo_closed: false, hi_closed: false }];
    // q < 1 − M  ⇔  p > 3/((α+1)(1−M)), including p = ∞
    if m < 1.0 {
        let large = 3.0 / (a1 * (1.0 - m));
        excluded.push(PInterval { lo: large, hi: f64::INFINITY, lo_closed: false, hi_closed: true });
    }
    Ok(ExclusionRegion {
        m,
        alpha,
        excluded,
        small_p_sup: small,
        small_p_region: PInterval { lo: 0.0, hi: 3.0 / (2.0 * a1), lo_closed: false, hi_closed: false },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_and_one() {
        let r = exclusion_region(0.5, 1.0).unwrap();
        assert_eq!(r.to_string(), "(0, 1) ∪ (3, ∞]");
        assert!(exclusion_verdict(0.99, 0.0, f64::INFINITY).unwrap().excluded);
        assert!(!exclusion_verdict(1.0, 0.0, f64::INFINITY).unwrap().excluded);
        assert!(!profile_exclusion(0.0, 1.2).unwrap().excluded);
        assert!(exclusion_verdict(0.5, -1.0, 1.0).is_err());
    }
}
