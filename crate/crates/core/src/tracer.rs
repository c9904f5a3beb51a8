//! Particle trajectories carried with the flow, and the vorticity transport
//! checks made along them.
//!
//! In the renormalized frame a particle obeys
//! `dY/ds = V(Y, s) + b(s)/(α+1) · Y`, the characteristic of the vorticity
//! equation `Ω_s + (V + b y/(α+1))·∇Ω = (Ω·∇)V − bΩ`; along it
//! `|Ω(Y(a,s),s)| = |Ω₀(a)| exp ∫ (Ξ·∇V·Ξ − b)`.

use serde::Serialize;
use std::fmt::Write as _;

use crate::solver::{SimState, SolverError, StageInfo, StepObserver};
use crate::spectral::{curl, Field, SpectralError, SpectralProbe};

/// Relative vorticity floor below which the stretching direction is undefined.
pub const VORTICITY_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ParticleFrame {
    Physical,
    Renormalized { alpha: f64 },
}

/// One committed particle sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParticleSample {
    pub label: usize,
    pub t: f64,
    pub position: [f64; 3],
    pub omega_mag: f64,
    pub stretch_integral: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    /// Seed coordinates `a`.
    pub labels: Vec<[f64; 3]>,
    /// Unwrapped positions; evaluation is periodic.
    pub positions: Vec<[f64; 3]>,
    pub omega_mag: Vec<f64>,
    /// `|ω(a, t₀)|`.
    pub omega0: Vec<f64>,
    /// `∫ ξ·∇v·ξ` along each path.
    pub stretch_integral: Vec<f64>,
    /// `∫ b ds`, shared by all particles (zero in the physical frame).
    pub drift_integral: f64,
    /// Particles that met a vorticity null.
    pub excluded: Vec<bool>,
    /// Lattice `‖ω‖_{L∞}` at seeding; sets the scale of the vorticity floor.
    pub omega_scale0: f64,
    pub frame: ParticleFrame,
    pub time: f64,
    /// Samples at every committed step, including the seeds.
    pub history: Vec<ParticleSample>,
}

fn omega_from_grad(g: &[[f64; 3]; 3]) -> [f64; 3] {
    [g[2][1] - g[1][2], g[0][2] - g[2][0], g[1][0] - g[0][1]]
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Lattice maximum of `|curl v|`.
fn omega_lattice_max(v: &Field) -> Result<f64, SpectralError> {
    let w = curl(&v.as_spectral()?)?.to_physical()?;
    let d = w.physical()?;
    Ok((0..d[0].len())
        .map(|i| (d[0][i] * d[0][i] + d[1][i] * d[1][i] + d[2][i] * d[2][i]).sqrt())
        .fold(0.0, f64::max))
}

impl ParticleSet {
    /// Seeds particles at `seeds` in the field `v` at time `t0`.
    pub fn seed(seeds: Vec<[f64; 3]>, v: &Field, t0: f64, frame: ParticleFrame) -> Result<Self, SpectralError> {
        let probe = SpectralProbe::new(&v.as_spectral()?)?;
        let scale = omega_lattice_max(v)?;
        let floor = VORTICITY_FLOOR * scale;
        let omega: Vec<f64> = seeds.iter().map(|&x| norm(omega_from_grad(&probe.jet(x, 1).d1))).collect();
        let n = seeds.len();
        let mut set = ParticleSet {
            labels: seeds.clone(),
            positions: seeds,
            omega_mag: omega.clone(),
            omega0: omega.clone(),
            stretch_integral: vec![0.0; n],
            drift_integral: 0.0,
            excluded: omega.iter().map(|&w| w <= floor).collect(),
            omega_scale0: scale,
            frame,
            time: t0,
            history: Vec::new(),
        };
        set.record();
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn record(&mut self) {
        for i in 0..self.len() {
            self.history.push(ParticleSample {
                label: i,
                t: self.time,
                position: self.positions[i],
                omega_mag: self.omega_mag[i],
                stretch_integral: self.stretch_integral[i],
            });
        }
    }

    /// CSV with columns `label,t,x,y,z,omega,stretch_integral`.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("label,t,x,y,z,omega,stretch_integral\n");
        for s in &self.history {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{:e}",
                s.label, s.t, s.position[0], s.position[1], s.position[2], s.omega_mag, s.stretch_integral
            );
        }
        out
    }
}

/// Seeds on a `k³` lattice of cell centres plus the lattice argmax of `|ω|`.
pub fn default_seeds(v: &Field, k: usize) -> Result<Vec<[f64; 3]>, SpectralError> {
    let g = *v.grid();
    let mut seeds = Vec::with_capacity(k * k * k + 1);
    for z in 0..k {
        for y in 0..k {
            for x in 0..k {
                let c = |j: usize| g.origin + (j as f64 + 0.5) * g.domain_length / k as f64;
                seeds.push([c(x), c(y), c(z)]);
            }
        }
    }
    let w = curl(&v.as_spectral()?)?.to_physical()?;
    let d = w.physical()?;
    let best = (0..d[0].len())
        .map(|i| (i, d[0][i] * d[0][i] + d[1][i] * d[1][i] + d[2][i] * d[2][i]))
        .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a })
        .0;
    let (x, y, z) = (best % g.n, (best / g.n) % g.n, best / (g.n * g.n));
    seeds.push([g.coord(x), g.coord(y), g.coord(z)]);
    Ok(seeds)
}

/// Four points spanning a regular-ish tetrahedron of edge `edge` at `centre`.
pub fn tetra_cluster(centre: [f64; 3], edge: f64) -> Vec<[f64; 3]> {
    let e = edge;
    vec![
        centre,
        [centre[0] + e, centre[1], centre[2]],
        [centre[0], centre[1] + e, centre[2]],
        [centre[0], centre[1], centre[2] + e],
    ]
}

/// Signed volume of the tetrahedron with the given vertices.
pub fn tetra_volume(p: &[[f64; 3]]) -> f64 {
    let d = |i: usize| [p[i][0] - p[0][0], p[i][1] - p[0][1], p[i][2] - p[0][2]];
    let (a, b, c) = (d(1), d(2), d(3));
    (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])) / 6.0
}

/// Advances a particle set with the RK4 stages of the flow solver.
#[derive(Debug, Clone)]
pub struct ParticleTracer {
    pub particles: ParticleSet,
    base: Vec<[f64; 3]>,
    slope: Vec<[f64; 3]>,
    acc: Vec<[f64; 3]>,
    acc_stretch: Vec<f64>,
    acc_drift: f64,
    floor: f64,
    /// Record every `stride`-th committed step in the history.
    pub stride: u64,
    commits: u64,
}

const NODES: [f64; 4] = [0.0, 0.5, 0.5, 1.0];
const WEIGHTS: [f64; 4] = [1.0, 2.0, 2.0, 1.0];

impl ParticleTracer {
    pub fn new(particles: ParticleSet, omega_max: f64) -> Self {
        let n = particles.len();
        ParticleTracer {
            base: particles.positions.clone(),
            slope: vec![[0.0; 3]; n],
            acc: vec![[0.0; 3]; n],
            acc_stretch: vec![0.0; n],
            acc_drift: 0.0,
            floor: VORTICITY_FLOOR * omega_max,
            stride: 1,
            commits: 0,
            particles,
        }
    }

    /// Tracer for particles seeded in `v`.
    pub fn from_field(seeds: Vec<[f64; 3]>, v: &Field, t0: f64, frame: ParticleFrame) -> Result<Self, SpectralError> {
        let set = ParticleSet::seed(seeds, v, t0, frame)?;
        let scale = set.omega_scale0;
        Ok(Self::new(set, scale))
    }

    fn drift_factor(&self) -> f64 {
        match self.particles.frame {
            ParticleFrame::Physical => 0.0,
            ParticleFrame::Renormalized { alpha } => 1.0 / (alpha + 1.0),
        }
    }

    fn do_stage(&mut self, stage: usize, h: f64, v: &Field, drift: f64) -> Result<(), SpectralError> {
        if stage == 0 {
            self.base.clone_from(&self.particles.positions);
            self.acc.iter_mut().for_each(|a| *a = [0.0; 3]);
            self.acc_stretch.iter_mut().for_each(|a| *a = 0.0);
            self.acc_drift = 0.0;
        }
        let probe = SpectralProbe::new(v)?;
        let c = drift * self.drift_factor();
        for i in 0..self.particles.len() {
            let y: [f64; 3] = std::array::from_fn(|a| self.base[i][a] + NODES[stage] * h * self.slope[i][a]);
            let jet = probe.jet(y, 1);
            let k: [f64; 3] = std::array::from_fn(|a| jet.value[a] + c * y[a]);
            let om = omega_from_grad(&jet.d1);
            let m = norm(om);
            let sigma = if m > self.floor && m > 0.0 {
                let xi = om.map(|x| x / m);
                let mut s = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        s += xi[a] * jet.d1[a][b] * xi[b];
                    }
                }
                s
            } else {
                self.particles.excluded[i] = true;
                0.0
            };
            for a in 0..3 {
                self.acc[i][a] += WEIGHTS[stage] * k[a];
            }
            self.acc_stretch[i] += WEIGHTS[stage] * sigma;
            self.slope[i] = k;
        }
        self.acc_drift += WEIGHTS[stage] * drift;
        Ok(())
    }

    fn do_commit(&mut self, h: f64, t: f64, v: &Field) -> Result<(), SpectralError> {
        let probe = SpectralProbe::new(&v.as_spectral()?)?;
        self.floor = VORTICITY_FLOOR * omega_lattice_max(v)?;
        let p = &mut self.particles;
        for i in 0..p.len() {
            for a in 0..3 {
                p.positions[i][a] = self.base[i][a] + h / 6.0 * self.acc[i][a];
            }
            p.stretch_integral[i] += h / 6.0 * self.acc_stretch[i];
            let m = norm(omega_from_grad(&probe.jet(p.positions[i], 1).d1));
            if m <= self.floor {
                p.excluded[i] = true;
            }
            p.omega_mag[i] = m;
        }
        p.drift_integral += h / 6.0 * self.acc_drift;
        p.time = t;
        self.commits += 1;
        if self.commits % self.stride.max(1) == 0 {
            p.record();
        }
        Ok(())
    }

    /// One RK4 step of size `h` with stage velocities supplied by `provider`,
    /// which returns the field and drift coefficient at a given time.
    pub fn advect<F>(&mut self, mut provider: F, h: f64) -> Result<(), SpectralError>
    where
        F: FnMut(f64) -> Result<(Field, f64), SpectralError>,
    {
        let t0 = self.particles.time;
        let mut last = None;
        for st in 0..4 {
            let (v, b) = provider(t0 + NODES[st] * h)?;
            let v = v.as_spectral()?;
            self.do_stage(st, h, &v, b)?;
            last = Some(v);
        }
        let v = last.expect("four stages");
        self.do_commit(h, t0 + h, &v)
    }
}

impl StepObserver for ParticleTracer {
    fn stage(&mut self, info: &StageInfo<'_>) -> Result<(), SolverError> {
        Ok(self.do_stage(info.stage, info.h, info.velocity, info.drift)?)
    }

    fn commit(&mut self, state: &SimState) -> Result<(), SolverError> {
        let h = state.time - self.particles.time;
        Ok(self.do_commit(h, state.time, &state.velocity)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportReport {
    /// Largest `| |ω(X)| − |ω₀| e^{∫σ} | / (|ω₀| e^{∫σ})` over checked particles.
    pub max_rel_error: f64,
    pub checked: usize,
    pub excluded: usize,
}

/// Compares the interpolated `|ω|` at each particle with the value
/// transported by the accumulated stretching (and drift, when renormalized).
pub fn verify_transport_identity(p: &ParticleSet) -> TransportReport {
    let damping = match p.frame {
        ParticleFrame::Physical => 0.0,
        ParticleFrame::Renormalized { .. } => p.drift_integral,
    };
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in 0..p.len() {
        if p.excluded[i] {
            continue;
        }
        let predicted = p.omega0[i] * (p.stretch_integral[i] - damping).exp();
        worst = worst.max((p.omega_mag[i] - predicted).abs() / predicted);
        checked += 1;
    }
    TransportReport {
        max_rel_error: worst,
        checked,
        excluded: p.len() - checked,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    /// Smallest relative margin of the per-particle bound over the history;
    /// negative values are violations.
    pub worst_margin: f64,
    pub worst_label: Option<usize>,
    pub worst_time: Option<f64>,
    pub samples_checked: usize,
    /// Samples skipped after the lower bound's denominator reached zero.
    pub suspended: usize,
}

/// Checks `|Ω(Y,s)| ≤ |Ω₀|/(1+(γ−1)s|Ω₀|)` for `sign = +1` and
/// `|Ω(Y,s)| ≥ |Ω₀|/(1−(γ−1)s|Ω₀|)` for `sign = −1` on every history sample.
/// `s` is measured from the seeding time. Margins are relative to the bound,
/// floored at the vorticity floor so that seeds on vorticity nulls (where
/// both sides vanish) do not turn round-off into violations.
pub fn verify_renormalized_decay_along_particles(p: &ParticleSet, gamma: f64, sign: i8) -> DecayReport {
    let s0 = p.history.first().map_or(0.0, |h| h.t);
    let floor = VORTICITY_FLOOR * p.omega_scale0;
    let mut rep = DecayReport {
        worst_margin: f64::INFINITY,
        worst_label: None,
        worst_time: None,
        samples_checked: 0,
        suspended: 0,
    };
    for h in &p.history {
        let w0 = p.omega0[h.label];
        let s = h.t - s0;
        let margin = if sign > 0 {
            let bound = w0 / (1.0 + (gamma - 1.0) * s * w0);
            (bound - h.omega_mag) / bound.max(floor)
        } else {
            let den = 1.0 - (gamma - 1.0) * s * w0;
            if den <= 0.0 {
                rep.suspended += 1;
                continue;
            }
            let bound = w0 / den;
            (h.omega_mag - bound) / bound.max(floor)
        };
        rep.samples_checked += 1;
        if margin < rep.worst_margin {
            rep.worst_margin = margin;
            rep.worst_label = Some(h.label);
            rep.worst_time = Some(h.t);
        }
    }
    rep
}
