use bulb_core::diagnostics::p_label;
use bulb_core::verify::{exclusion_region, exclusion_verdict, VerifyError};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExclusionArgs {
    pub m: f64,
    pub alpha: f64,
    /// `None` selects region mode.
    pub p: Option<f64>,
}

fn usage(e: VerifyError) -> CliError {
    CliError::Usage(e.to_string())
}

/// Verdict text for one exponent, or the excluded `p`-region for `(M, α)`.
pub fn exclusion(a: ExclusionArgs) -> Result<String, CliError> {
    let mut s = String::new();
    match a.p {
        Some(p) => {
            let v = exclusion_verdict(a.m, a.alpha, p).map_err(usage)?;
            s.push_str(&format!(
                "M = {}, alpha = {}, p = {}: q = 3/((alpha+1)p) = {}, threshold |1 - q| = {}\n",
                a.m,
                a.alpha,
                p_label(p),
                v.q,
                v.threshold
            ));
            if v.excluded {
                s.push_str(&format!(
                    "excluded: M < {}, no alpha-asymptotically self-similar blow-up in L^{}\n",
                    v.threshold,
                    p_label(p)
                ));
            } else {
                s.push_str(&format!("not excluded: M >= {}\n", v.threshold));
            }
            if v.small_p_excluded {
                s.push_str(&format!(
                    "small-p regime: p < 3/(2(alpha+1)) = {}, excluded for every M\n",
                    3.0 / (2.0 * (a.alpha + 1.0))
                ));
            }
        }
        None => {
            let r = exclusion_region(a.m, a.alpha).map_err(usage)?;
            s.push_str(&format!("M = {}, alpha = {}: excluded p-region {r}\n", a.m, a.alpha));
            s.push_str(&format!("M-independent region: p in {}\n", r.small_p_region));
        }
    }
    Ok(s)
}
