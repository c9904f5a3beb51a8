//! Self-similar profiles: exact synthesis from a template, convergence of
//! renormalized snapshot sequences, and weak residuals of the stationary
//! systems a limiting profile has to satisfy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{grad_sup_lattice, lp_of_values, DiagnosticsError, GradNorm};
use crate::spectral::{curl, eval_tensor_grid, gradient, Field, GridSpec, SpectralError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("scaled support reaches {extent}, beyond the box half-width {half_width}")]
    SupportEscape { extent: f64, half_width: f64 },
    #[error("support touches the window boundary (boundary/peak = {0:e})")]
    NotCompact(f64),
    #[error("test function support {extent} exceeds the window radius {radius}")]
    TestSupport { extent: f64, radius: f64 },
    #[error("snapshot {0} is on a different lattice")]
    LatticeMismatch(usize),
    #[error("need at least 3 snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

/// Peak ratio in the outer shell below which a field counts as compactly
/// supported inside its window.
pub const COMPACT_TOL: f64 = 1e-10;

/// Lattice layers treated as the window boundary.
const SHELL: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Synthesized,
    RunLimit,
    External,
}

impl Provenance {
    pub fn code(self) -> u8 {
        match self {
            Provenance::Synthesized => 0,
            Provenance::RunLimit => 1,
            Provenance::External => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Provenance::Synthesized),
            1 => Some(Provenance::RunLimit),
            2 => Some(Provenance::External),
            _ => None,
        }
    }
}

/// A candidate profile `V̄` sampled on the centred window `[-R, R)³`.
#[derive(Debug, Clone)]
pub struct ProfileCandidate {
    pub field: Field,
    pub alpha: f64,
    pub gamma: Option<f64>,
    pub p: Option<f64>,
    pub provenance: Provenance,
    /// Convention for `‖∇V̄‖_{L∞}` in the exponential-family system.
    pub grad_norm: GradNorm,
}

impl ProfileCandidate {
    pub fn new(field: Field, alpha: f64, provenance: Provenance) -> Result<Self, ProfileError> {
        check_window(field.grid())?;
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(ProfileError::InvalidParameter(format!("alpha must exceed -1, got {alpha}")));
        }
        let field = field.as_physical()?;
        if !field.is_finite() {
            return Err(ProfileError::InvalidParameter("candidate has non-finite values".into()));
        }
        Ok(ProfileCandidate {
            field,
            alpha,
            gamma: None,
            p: None,
            provenance,
            grad_norm: GradNorm::Frobenius,
        })
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.field.grid().domain_length
    }

    /// `‖div V̄‖₂ / ‖∇V̄‖₂` with spectral derivatives on the window.
    pub fn divergence_defect(&self) -> Result<f64, ProfileError> {
        let g = gradient(&self.field.as_spectral()?)?.to_physical()?;
        let d = g.physical()?;
        let (mut div2, mut grad2) = (0.0, 0.0);
        for i in 0..self.field.grid().len_physical() {
            let dv = d[0][i] + d[4][i] + d[8][i];
            div2 += dv * dv;
            grad2 += (0..9).map(|c| d[c][i] * d[c][i]).sum::<f64>();
        }
        Ok(if grad2 == 0.0 { 0.0 } else { (div2 / grad2).sqrt() })
    }

    /// Largest magnitude in the outer lattice shell relative to the peak.
    pub fn boundary_ratio(&self) -> Result<f64, ProfileError> {
        boundary_ratio(&self.field)
    }
}

fn check_window(g: &GridSpec) -> Result<(), ProfileError> {
    if (g.origin + 0.5 * g.domain_length).abs() > 1e-12 * g.domain_length {
        return Err(ProfileError::InvalidParameter(format!(
            "expected a centred window, lattice starts at {}",
            g.origin
        )));
    }
    Ok(())
}

fn boundary_ratio(f: &Field) -> Result<f64, ProfileError> {
    let p = f.as_physical()?;
    let g = *p.grid();
    let m = p.magnitude()?;
    let m = m.values()?;
    let peak = m.iter().fold(0.0f64, |a, &b| a.max(b));
    if peak == 0.0 {
        return Ok(0.0);
    }
    let n = g.n;
    let edge = |j: usize| j < SHELL || j >= n - SHELL;
    let mut shell = 0.0f64;
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                if edge(x) || edge(y) || edge(z) {
                    shell = shell.max(m[g.idx(x, y, z)]);
                }
            }
        }
    }
    Ok(shell / peak)
}

/// Decay rate of the bump profile. Larger values concentrate the bump and
/// flatten its edge, which keeps the spectrum resolvable on coarse windows.
const BUMP_SHARPNESS: f64 = 12.0;

/// `exp(−a u²/(1−u²))` on `|u| < 1`, zero outside; smooth with value 1 at 0.
fn bump(u2: f64) -> f64 {
    if u2 >= 1.0 {
        0.0
    } else {
        (-BUMP_SHARPNESS * u2 / (1.0 - u2)).exp()
    }
}

/// `d/d(u²)` of [`bump`].
fn bump_d(u2: f64) -> f64 {
    if u2 >= 1.0 {
        0.0
    } else {
        -BUMP_SHARPNESS * bump(u2) / ((1.0 - u2) * (1.0 - u2))
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn unit_vector(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r > 0.1 && r <= 1.0 {
            return v.map(|x| x / r);
        }
    }
}

/// Random compactly supported solenoidal field on a centred window: a sum of
/// `bumps` fields `curl(β(|y−c|/r) a)` sampled analytically, with supports
/// inside `|y| < 0.7R`.
pub fn compact_template(grid: GridSpec, seed: u64, bumps: usize) -> Result<Field, ProfileError> {
    check_window(&grid)?;
    let r_win = 0.5 * grid.domain_length;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parts: Vec<([f64; 3], f64, [f64; 3])> = (0..bumps)
        .map(|_| {
            let r = r_win * rng.gen_range(0.3..0.45);
            let c = unit_vector(&mut rng).map(|x| x * rng.gen_range(0.0..(0.7 * r_win - r)));
            let a = unit_vector(&mut rng).map(|x| x * rng.gen_range(0.5..1.0));
            (c, r, a)
        })
        .collect();
    Ok(Field::from_fn(grid, |y| {
        let mut v = [0.0; 3];
        for (c, r, a) in &parts {
            let d = [y[0] - c[0], y[1] - c[1], y[2] - c[2]];
            let u2 = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (r * r);
            // ∇β = 2 β'(u²) (y − c)/r²
            let s = 2.0 * bump_d(u2) / (r * r);
            let w = cross(d.map(|x| x * s), *a);
            for i in 0..3 {
                v[i] += w[i];
            }
        }
        v
    }))
}

fn support_extent(f: &Field) -> Result<f64, ProfileError> {
    let p = f.as_physical()?;
    let g = *p.grid();
    let m = p.magnitude()?;
    let m = m.values()?;
    let peak = m.iter().fold(0.0f64, |a, &b| a.max(b));
    let xs = g.coords();
    let mut ext = 0.0f64;
    for z in 0..g.n {
        for y in 0..g.n {
            for x in 0..g.n {
                if m[g.idx(x, y, z)] > 1e-14 * peak {
                    ext = ext.max(xs[x].abs()).max(xs[y].abs()).max(xs[z].abs());
                }
            }
        }
    }
    Ok((ext + g.spacing()).min(0.5 * g.domain_length))
}

/// `v(x,t) = (T−t)^{−α/(α+1)} V̄(x/(T−t)^{1/(α+1)})` on `out`, with `V̄`
/// evaluated by trigonometric interpolation of the template window and set
/// to zero outside it. Physical coordinates are taken as the periodic
/// representative closest to the origin, so the blow-up point is `x = 0`.
/// No projection is applied: sampled values stay exact on commensurate
/// lattices.
pub fn synthesize_selfsimilar(
    template: &Field,
    alpha: f64,
    t_blow: f64,
    t: f64,
    out: GridSpec,
) -> Result<Field, ProfileError> {
    check_window(template.grid())?;
    if !(alpha > -1.0) {
        return Err(ProfileError::InvalidParameter(format!("alpha must exceed -1, got {alpha}")));
    }
    if !(t < t_blow) {
        return Err(ProfileError::InvalidParameter(format!("t = {t} must precede the blow-up time {t_blow}")));
    }
    let sigma = (t_blow - t).powf(1.0 / (alpha + 1.0));
    let amp = (t_blow - t).powf(-alpha / (alpha + 1.0));
    let extent = sigma * support_extent(template)?;
    let half = 0.5 * out.domain_length;
    if extent > half * (1.0 + 1e-12) {
        return Err(ProfileError::SupportEscape { extent, half_width: half });
    }
    let r = 0.5 * template.grid().domain_length;
    // per axis: output indices whose image lies in the template window
    let xs = out.coords();
    let (idx, ys): (Vec<usize>, Vec<f64>) = xs
        .iter()
        .enumerate()
        .filter_map(|(k, &x)| {
            let xr = x - out.domain_length * (x / out.domain_length).round();
            let y = xr / sigma;
            (y.abs() <= r).then_some((k, y))
        })
        .unzip();
    let vals = eval_tensor_grid(&template.as_spectral()?, &ys, &ys, &ys)?;
    let m = idx.len();
    let mut comps: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; out.len_physical()]);
    for (kz, &iz) in idx.iter().enumerate() {
        for (ky, &iy) in idx.iter().enumerate() {
            for (kx, &ix) in idx.iter().enumerate() {
                let src = kx + m * (ky + m * kz);
                let dst = out.idx(ix, iy, iz);
                for c in 0..3 {
                    comps[c][dst] = amp * vals[c][src];
                }
            }
        }
    }
    Ok(Field::from_physical(out, comps)?)
}

/// Radius of the Lᵖ window at each renormalized time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WindowSchedule {
    /// The whole sampled cube.
    Whole,
    /// The ball `|y| < R`.
    Fixed { radius: f64 },
    /// `R(s) = [(γ−1)s + T^{1−γ}]^{γ/((α+1)(γ−1))}`, the image of a fixed
    /// physical ball under the power-law transform; `(e^s/T)^{1/(α+1)}` at γ = 1.
    PowerLaw { t_blow: f64, gamma: f64, alpha: f64 },
}

impl WindowSchedule {
    pub fn radius(&self, s: f64) -> f64 {
        match *self {
            WindowSchedule::Whole => f64::INFINITY,
            WindowSchedule::Fixed { radius } => radius,
            WindowSchedule::PowerLaw { t_blow, gamma, alpha } => {
                if (gamma - 1.0).abs() < 1e-12 {
                    ((s - t_blow.ln()) / (alpha + 1.0)).exp()
                } else {
                    let base = (gamma - 1.0) * s + t_blow.powf(1.0 - gamma);
                    base.powf(gamma / ((alpha + 1.0) * (gamma - 1.0)))
                }
            }
        }
    }

    fn validate(&self) -> Result<(), ProfileError> {
        let ok = match *self {
            WindowSchedule::Whole => true,
            WindowSchedule::Fixed { radius } => radius > 0.0,
            WindowSchedule::PowerLaw { t_blow, gamma, alpha } => t_blow > 0.0 && gamma >= 1.0 && alpha > -1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(ProfileError::InvalidParameter(format!("bad window schedule {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converging,
    Stalling,
    Diverging,
}

/// Slope magnitude (per snapshot index, in `ln dₙ`) separating a trend from a stall.
const TREND: f64 = 1e-2;

/// Differences below this fraction of the largest window norm count as zero.
const EXACT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub p: f64,
    pub schedule: WindowSchedule,
    pub s: Vec<f64>,
    /// `dₙ = ‖Φ(sₙ₊₁) − Φ(sₙ)‖_{Lᵖ(window)}`, window radius `radii[n]`.
    pub differences: Vec<f64>,
    /// `‖Φ(sₙ₊₁)‖` over the same window as `differences[n]`.
    pub norms: Vec<f64>,
    pub radii: Vec<f64>,
    /// `−slope` of a least-squares line through `ln dₙ`; `None` when every
    /// difference is zero to roundoff.
    pub rate: Option<f64>,
    pub verdict: Verdict,
    /// The sequence shrinks to zero: no admissible nonzero profile.
    pub zero_profile: bool,
    /// The last snapshot, reported as the candidate.
    pub terminal_index: usize,
    pub terminal_norm: f64,
}

fn masked_lp(f: &Field, g: &Field, radius: f64, p: f64) -> Result<(f64, f64), ProfileError> {
    let a = f.physical()?;
    let b = g.physical()?;
    let grid = *f.grid();
    let xs = grid.coords();
    let r2 = radius * radius;
    let mut diff = Vec::new();
    let mut norm = Vec::new();
    for z in 0..grid.n {
        for y in 0..grid.n {
            for x in 0..grid.n {
                if xs[x] * xs[x] + xs[y] * xs[y] + xs[z] * xs[z] > r2 {
                    continue;
                }
                let i = grid.idx(x, y, z);
                let (mut d2, mut n2) = (0.0, 0.0);
                for c in 0..3 {
                    d2 += (b[c][i] - a[c][i]).powi(2);
                    n2 += b[c][i] * b[c][i];
                }
                diff.push(d2.sqrt());
                norm.push(n2.sqrt());
            }
        }
    }
    Ok((lp_of_values(diff.into_iter(), &grid, p)?, lp_of_values(norm.into_iter(), &grid, p)?))
}

fn slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        num += (i as f64 - xm) * (y - ym);
        den += (i as f64 - xm).powi(2);
    }
    num / den
}

/// Cauchy differences of a renormalized snapshot sequence `(sₙ, Φ(sₙ))` on a
/// common window lattice, with a trend verdict. When the window norms decrease
/// monotonically while the relative differences `dₙ/‖Φₙ₊₁‖` do not decay,
/// the sequence is collapsing to zero and is flagged as such.
pub fn profile_convergence_test(
    snapshots: &[(f64, Field)],
    p: f64,
    schedule: &WindowSchedule,
) -> Result<ConvergenceReport, ProfileError> {
    if snapshots.len() < 3 {
        return Err(ProfileError::TooFewSnapshots(snapshots.len()));
    }
    if !(p > 0.0) {
        return Err(ProfileError::InvalidParameter(format!("p must be positive, got {p}")));
    }
    schedule.validate()?;
    let g0 = *snapshots[0].1.grid();
    for (i, (_, f)) in snapshots.iter().enumerate() {
        if !f.grid().same_lattice(&g0) {
            return Err(ProfileError::LatticeMismatch(i));
        }
    }
    for w in snapshots.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(ProfileError::InvalidParameter("snapshot times must increase".into()));
        }
    }
    let fields: Vec<Field> = snapshots.iter().map(|(_, f)| f.as_physical()).collect::<Result<_, _>>()?;
    let mut differences = Vec::new();
    let mut norms = Vec::new();
    let mut radii = Vec::new();
    for k in 0..fields.len() - 1 {
        let r = schedule.radius(snapshots[k].0);
        let (d, n) = masked_lp(&fields[k], &fields[k + 1], r, p)?;
        differences.push(d);
        norms.push(n);
        radii.push(r);
    }
    let (_, first_norm) = masked_lp(&fields[0], &fields[0], radii[0], p)?;
    let scale = norms.iter().fold(first_norm, |a, &b| a.max(b));
    let terminal_norm = *norms.last().unwrap();

    let exact = differences.iter().all(|&d| d <= EXACT * scale);
    let (rate, verdict, zero_profile) = if scale == 0.0 {
        (None, Verdict::Converging, true)
    } else if exact {
        (None, Verdict::Converging, terminal_norm <= EXACT * scale)
    } else {
        let floor = EXACT * scale;
        let logs: Vec<f64> = differences.iter().map(|d| d.max(floor).ln()).collect();
        let rate = -slope(&logs);
        let mut seq = vec![first_norm];
        seq.extend(&norms);
        let shrinking = seq.windows(2).all(|w| w[1] <= w[0]) && terminal_norm < first_norm;
        let rel: Vec<f64> = differences
            .iter()
            .zip(&norms)
            .map(|(d, n)| (d / n.max(f64::MIN_POSITIVE)).max(EXACT).ln())
            .collect();
        let collapsing = shrinking && -slope(&rel) < TREND;
        let (d0, dl) = (differences[0], *differences.last().unwrap());
        let verdict = if collapsing {
            Verdict::Diverging
        } else if rate > TREND && dl < d0 {
            Verdict::Converging
        } else if rate < -TREND && dl > d0 {
            Verdict::Diverging
        } else {
            Verdict::Stalling
        };
        (Some(rate), verdict, collapsing || terminal_norm <= EXACT * scale)
    };
    Ok(ConvergenceReport {
        p,
        schedule: *schedule,
        s: snapshots.iter().map(|(s, _)| *s).collect(),
        differences,
        norms,
        radii,
        rate,
        verdict,
        zero_profile,
        terminal_index: snapshots.len() - 1,
        terminal_norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StationarySystem {
    /// `αV̄ + (y·∇)V̄ + (α+1)(V̄·∇)V̄ = −∇P̄`.
    #[serde(rename = "1.4")]
    SelfSimilarEuler,
    /// `−‖∇V̄‖∞[αV̄ + (y·∇)V̄]/(α+1) = (V̄·∇)V̄ + ∇P̄`.
    #[serde(rename = "2.18")]
    ExponentialEuler,
    /// `(V̄·∇)V̄ = ΔV̄ − ∇P̄`.
    #[serde(rename = "3.1a")]
    SteadyNavierStokes,
    /// `∫ V̄·(V̄·∇)φ = 0`.
    #[serde(rename = "weak-euler-limit")]
    WeakEulerLimit,
}

impl StationarySystem {
    pub fn id(&self) -> &'static str {
        match self {
            StationarySystem::SelfSimilarEuler => "1.4",
            StationarySystem::ExponentialEuler => "2.18",
            StationarySystem::SteadyNavierStokes => "3.1a",
            StationarySystem::WeakEulerLimit => "weak-euler-limit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            StationarySystem::SelfSimilarEuler,
            StationarySystem::ExponentialEuler,
            StationarySystem::SteadyNavierStokes,
            StationarySystem::WeakEulerLimit,
        ]
        .into_iter()
        .find(|x| x.id() == s)
    }
}

/// `φ = curl(b e)` with the tensor-product bump
/// `b(y) = Πᵢ β((yᵢ − cᵢ)/h)`; the scalar test function is `ψ = b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub centre: [f64; 3],
    pub half_width: f64,
    pub direction: [f64; 3],
}

impl TestFunction {
    pub fn extent(&self) -> f64 {
        self.centre.iter().fold(0.0f64, |a, c| a.max(c.abs())) + self.half_width
    }

    fn potential(&self, y: [f64; 3]) -> f64 {
        (0..3)
            .map(|i| {
                let u = (y[i] - self.centre[i]) / self.half_width;
                bump(u * u)
            })
            .product()
    }

    /// `ψ e` on `grid`, physical.
    fn stream(&self, grid: GridSpec) -> Field {
        let e = self.direction;
        Field::from_fn(grid, |y| {
            let b = self.potential(y);
            [b * e[0], b * e[1], b * e[2]]
        })
    }

    /// `(φ, ∇ψ)` on `grid`, physical; `φ` is the spectral curl so it is
    /// discretely divergence-free.
    pub fn sample(&self, grid: GridSpec) -> Result<(Field, Field), ProfileError> {
        let a = self.stream(grid).to_spectral()?;
        let phi = curl(&a)?.to_physical()?;
        let psi = Field::from_fn(grid, |y| [self.potential(y), 0.0, 0.0]).to_spectral()?;
        let g = gradient(&psi)?.to_physical()?.into_physical_data()?;
        let [g0, g1, g2, ..] = g;
        Ok((phi, Field::from_physical(grid, [g0, g1, g2])?))
    }
}

/// Fraction-of-radius half-widths of the family.
const FAMILY_SCALES: [f64; 3] = [0.3, 0.4, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFamily {
    pub seed: u64,
    pub radius: f64,
    pub functions: Vec<TestFunction>,
}

/// 24 test functions for a window of radius `radius`: three widths times the
/// eight cube-corner placements, directions drawn from `seed`.
pub fn test_family(radius: f64, seed: u64) -> TestFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut functions = Vec::with_capacity(24);
    for f in FAMILY_SCALES {
        let h = f * radius;
        let off = 0.6 * (0.95 * radius - h);
        for corner in 0..8 {
            let centre = std::array::from_fn(|i| if corner >> i & 1 == 1 { off } else { -off });
            functions.push(TestFunction { centre, half_width: h, direction: unit_vector(&mut rng) });
        }
    }
    TestFamily { seed, radius, functions }
}

/// The pieces of one weak pairing; every integral is a lattice sum with
/// derivatives on `φ`. The system pairing is `total`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairingParts {
    /// `∫ V̄·φ`
    pub mass: f64,
    /// `∫ V̄·(y·∇)φ`
    pub drift: f64,
    /// `∫ V̄·(V̄·∇)φ`
    pub nonlinear: f64,
    /// `∫ V̄·Δφ`
    pub viscous: f64,
    pub total: f64,
}

fn combine(system: StationarySystem, alpha: f64, grad: f64, p: &mut PairingParts) {
    // ∫(y·∇)V̄·φ = −∫V̄·(y·∇)φ − 3∫V̄·φ and ∫(V̄·∇)V̄·φ = −∫V̄·(V̄·∇)φ
    let linear = (alpha - 3.0) * p.mass - p.drift;
    p.total = match system {
        StationarySystem::SelfSimilarEuler => linear - (alpha + 1.0) * p.nonlinear,
        StationarySystem::ExponentialEuler => -p.nonlinear + grad / (alpha + 1.0) * linear,
        StationarySystem::SteadyNavierStokes => -p.nonlinear - p.viscous,
        StationarySystem::WeakEulerLimit => p.nonlinear,
    };
}

fn parts(v: &Field, phi: &Field) -> Result<PairingParts, ProfileError> {
    let grid = *v.grid();
    let vp = v.physical()?;
    let phis = phi.as_spectral()?;
    let gp = gradient(&phis)?.to_physical()?;
    let gd = gp.physical()?;
    let lap = curl(&curl(&phis)?)?.to_physical()?;
    let ld = lap.physical()?;
    let pd = phi.as_physical()?;
    let pd = pd.physical()?;
    let xs = grid.coords();
    let (mut mass, mut drift, mut nonlin, mut visc) = (0.0, 0.0, 0.0, 0.0);
    for z in 0..grid.n {
        for y in 0..grid.n {
            for x in 0..grid.n {
                let i = grid.idx(x, y, z);
                let pos = [xs[x], xs[y], xs[z]];
                let vi = [vp[0][i], vp[1][i], vp[2][i]];
                for a in 0..3 {
                    mass += vi[a] * pd[a][i];
                    // Δφ = −curl curl φ for divergence-free φ
                    visc -= vi[a] * ld[a][i];
                    for b in 0..3 {
                        let d = gd[3 * a + b][i];
                        drift += vi[a] * pos[b] * d;
                        nonlin += vi[a] * vi[b] * d;
                    }
                }
            }
        }
    }
    let h3 = grid.cell_volume();
    Ok(PairingParts {
        mass: mass * h3,
        drift: drift * h3,
        nonlinear: nonlin * h3,
        viscous: visc * h3,
        total: 0.0,
    })
}

fn inner(a: &Field, b: &Field) -> Result<f64, ProfileError> {
    let (a, b) = (a.physical()?, b.physical()?);
    let s: f64 = (0..3).map(|c| a[c].iter().zip(&b[c]).map(|(x, y)| x * y).sum::<f64>()).sum();
    Ok(s)
}

/// Weak pairing of `system` for the candidate against one divergence-free
/// `φ` on the candidate's lattice.
pub fn weak_pairing(
    candidate: &ProfileCandidate,
    system: StationarySystem,
    phi: &Field,
) -> Result<PairingParts, ProfileError> {
    if !phi.grid().same_lattice(candidate.field.grid()) {
        return Err(ProfileError::Spectral(SpectralError::GridMismatch));
    }
    let grad = match system {
        StationarySystem::ExponentialEuler => grad_sup_lattice(&candidate.field.as_spectral()?, candidate.grad_norm)?,
        _ => 0.0,
    };
    let mut p = parts(&candidate.field, phi)?;
    combine(system, candidate.alpha, grad, &mut p);
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub system: String,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_sup: Option<f64>,
    pub family_size: usize,
    pub max_residual: f64,
    pub max_normalized: f64,
    pub worst_index: usize,
    /// Largest `|∫ V̄·∇ψ|` under the same normalization.
    pub divergence_residual: f64,
    pub normalization: String,
    pub candidate_l2_sq: f64,
    pub pairings: Vec<PairingParts>,
    pub family: TestFamily,
}

/// Weak residuals of `system` over `family`: the largest `|pairing|`, raw and
/// divided by `‖V̄‖²_{L²} ‖∇φ‖_{L∞}`.
pub fn stationary_residual(
    candidate: &ProfileCandidate,
    system: StationarySystem,
    family: &TestFamily,
) -> Result<ResidualReport, ProfileError> {
    let grid = *candidate.field.grid();
    let radius = candidate.radius();
    if family.functions.len() < 8 {
        return Err(ProfileError::InvalidParameter(format!(
            "need at least 8 test functions, got {}",
            family.functions.len()
        )));
    }
    for f in &family.functions {
        if f.extent() > radius * (1.0 - 1e-12) {
            return Err(ProfileError::TestSupport { extent: f.extent(), radius });
        }
    }
    let grad = match system {
        StationarySystem::ExponentialEuler => Some(grad_sup_lattice(&candidate.field.as_spectral()?, candidate.grad_norm)?),
        _ => None,
    };
    let v = &candidate.field;
    let v2 = inner(v, v)? * grid.cell_volume();
    let mut pairings = Vec::with_capacity(family.functions.len());
    let (mut max_raw, mut max_norm, mut worst, mut div_res) = (0.0f64, 0.0f64, 0, 0.0f64);
    for (k, f) in family.functions.iter().enumerate() {
        let (phi, dpsi) = f.sample(grid)?;
        let mut p = parts(v, &phi)?;
        combine(system, candidate.alpha, grad.unwrap_or(0.0), &mut p);
        let gphi = grad_sup_lattice(&phi.as_spectral()?, GradNorm::Frobenius)?;
        let scale = v2 * gphi;
        let norm = if scale > 0.0 { p.total.abs() / scale } else { 0.0 };
        let dv = inner(v, &dpsi)? * grid.cell_volume();
        let dscale = v2.sqrt() * lp_of_values(dpsi.magnitude()?.values()?.iter().copied(), &grid, 2.0)?;
        if dscale > 0.0 {
            div_res = div_res.max(dv.abs() / dscale);
        }
        if p.total.abs() > max_raw {
            max_raw = p.total.abs();
        }
        if norm > max_norm {
            max_norm = norm;
            worst = k;
        }
        pairings.push(p);
    }
    Ok(ResidualReport {
        system: system.id().to_string(),
        alpha: candidate.alpha,
        grad_sup: grad,
        family_size: family.functions.len(),
        max_residual: max_raw,
        max_normalized: max_norm,
        worst_index: worst,
        divergence_residual: div_res,
        normalization: "|pairing| / (‖V̄‖²_{L²} ‖∇φ‖_{L∞}); divergence: |∫V̄·∇ψ| / (‖V̄‖_{L²} ‖∇ψ‖_{L²})".into(),
        candidate_l2_sq: v2,
        pairings,
        family: family.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyIdentity {
    pub alpha: f64,
    /// `I = ∫ V̄·[αV̄ + (y·∇)V̄]/(α+1)` by lattice quadrature.
    pub integral: f64,
    /// `(α − 3/2)/(α+1) ‖V̄‖²_{L²}`.
    pub closed_form: f64,
    pub l2_sq: f64,
    /// `|I − closed|/|closed|`, or `|I|/‖V̄‖²` when the closed form vanishes.
    pub rel_diff: f64,
}

/// Pairs the drift part of the exponential-family system with `V̄`. Requires
/// the candidate to vanish near the window boundary.
pub fn profile_energy_identity(candidate: &ProfileCandidate, alpha: f64) -> Result<EnergyIdentity, ProfileError> {
    if !(alpha > -1.0) {
        return Err(ProfileError::InvalidParameter(format!("alpha must exceed -1, got {alpha}")));
    }
    let ratio = candidate.boundary_ratio()?;
    if ratio > COMPACT_TOL {
        return Err(ProfileError::NotCompact(ratio));
    }
    let v = &candidate.field;
    let grid = *v.grid();
    let vp = v.physical()?;
    let gp = gradient(&v.as_spectral()?)?.to_physical()?;
    let gd = gp.physical()?;
    let xs = grid.coords();
    let (mut l2, mut drift) = (0.0, 0.0);
    for z in 0..grid.n {
        for y in 0..grid.n {
            for x in 0..grid.n {
                let i = grid.idx(x, y, z);
                let pos = [xs[x], xs[y], xs[z]];
                for a in 0..3 {
                    l2 += vp[a][i] * vp[a][i];
                    for b in 0..3 {
                        drift += vp[a][i] * pos[b] * gd[3 * a + b][i];
                    }
                }
            }
        }
    }
    let h3 = grid.cell_volume();
    let (l2, drift) = (l2 * h3, drift * h3);
    let integral = (alpha * l2 + drift) / (alpha + 1.0);
    let closed_form = (alpha - 1.5) / (alpha + 1.0) * l2;
    let rel_diff = if closed_form != 0.0 {
        (integral - closed_form).abs() / closed_form.abs()
    } else if l2 > 0.0 {
        integral.abs() / l2
    } else {
        0.0
    };
    Ok(EnergyIdentity { alpha, integral, closed_form, l2_sq: l2, rel_diff })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_candidate() {
        let g = GridSpec::centered(16, 1.0).unwrap();
        let c = ProfileCandidate::new(Field::zeros(g), 1.0, Provenance::External).unwrap();
        let e = profile_energy_identity(&c, 1.0).unwrap();
        assert_eq!((e.integral, e.closed_form), (0.0, 0.0));
        let fam = test_family(1.0, 7);
        assert_eq!(fam.functions.len(), 24);
        let r = stationary_residual(&c, StationarySystem::SelfSimilarEuler, &fam).unwrap();
        assert_eq!(r.max_residual, 0.0);
    }

    #[test]
    fn power_law_window_at_gamma_one_is_the_limit() {
        let a = WindowSchedule::PowerLaw { t_blow: 2.0, gamma: 1.0, alpha: 1.0 }.radius(0.7);
        let b = WindowSchedule::PowerLaw { t_blow: 2.0, gamma: 1.0 + 1e-7, alpha: 1.0 }.radius(0.7);
        assert!((a - b).abs() < 1e-6 * a);
        assert_eq!(StationarySystem::parse("3.1a"), Some(StationarySystem::SteadyNavierStokes));
    }
}
