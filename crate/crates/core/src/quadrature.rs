//! Trapezoid rules on (possibly non-uniform) sample grids.

/// Running trapezoid integral of `f` over `t`, starting at zero.
pub fn cumulative_trapezoid(t: &[f64], f: &[f64]) -> Vec<f64> {
    assert_eq!(t.len(), f.len());
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    for i in 0..t.len() {
        if i > 0 {
            acc += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
        }
        out.push(acc);
    }
    out
}

/// Trapezoid integral over the whole grid.
pub fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    cumulative_trapezoid(t, f).last().copied().unwrap_or(0.0)
}

/// Piecewise-linear interpolation of samples `(t, f)` at `x`; `None` outside
/// the covered range.
pub fn interpolate(t: &[f64], f: &[f64], x: f64) -> Option<f64> {
    if t.is_empty() || x < t[0] || x > t[t.len() - 1] {
        return None;
    }
    let i = t.partition_point(|&s| s < x);
    if i < t.len() && t[i] == x {
        return Some(f[i]);
    }
    if i == 0 {
        return Some(f[0]);
    }
    let (t0, t1) = (t[i - 1], t[i]);
    let w = (x - t0) / (t1 - t0);
    Some(f[i - 1] + w * (f[i] - f[i - 1]))
}

/// Integral of the piecewise-linear interpolant of `(t, f)` over `[t[0], x]`.
pub fn integral_to(t: &[f64], f: &[f64], x: f64) -> Option<f64> {
    if t.is_empty() || x < t[0] || x > t[t.len() - 1] {
        return None;
    }
    let mut acc = 0.0;
    for i in 1..t.len() {
        if t[i] <= x {
            acc += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
        } else {
            let fx = interpolate(t, f, x)?;
            acc += 0.5 * (x - t[i - 1]) * (fx + f[i - 1]);
            break;
        }
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_functions_are_exact() {
        let t = [0.0, 0.1, 0.35, 1.0];
        let f: Vec<f64> = t.iter().map(|x| 3.0 * x + 1.0).collect();
        assert!((trapezoid(&t, &f) - 2.5).abs() < 1e-15);
        assert!((integral_to(&t, &f, 0.5).unwrap() - (1.5 * 0.25 + 0.5)).abs() < 1e-15);
        assert!((interpolate(&t, &f, 0.5).unwrap() - 2.5).abs() < 1e-15);
        assert!(interpolate(&t, &f, 1.5).is_none());
    }
}
