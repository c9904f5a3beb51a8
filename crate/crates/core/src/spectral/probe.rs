//! Off-lattice evaluation of spectral fields by direct Fourier summation.

use num_complex::Complex64;

use super::{Field, GridSpec, SpectralError};

#[derive(Debug, Clone)]
struct Mode {
    /// Offsets into the per-axis phase tables.
    slot: [usize; 3],
    k: [f64; 3],
    c: [Complex64; 3],
}

/// Value and derivatives of a vector field at one point. `d1[i][j] = ∂_j f_i`,
/// `d2[i][j][l] = ∂_j ∂_l f_i`, `d3[i][j][l][m] = ∂_j ∂_l ∂_m f_i`; entries
/// beyond the requested order are zero.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub value: [f64; 3],
    pub d1: [[f64; 3]; 3],
    pub d2: [[[f64; 3]; 3]; 3],
    pub d3: [[[[f64; 3]; 3]; 3]; 3],
}

/// Precomputed list of the nonzero modes of a field, ready for evaluation at
/// arbitrary points. Evaluation is exact trigonometric interpolation; the
/// Nyquist basis function is `cos(n/2 · x)` so lattice values are reproduced.
#[derive(Debug, Clone)]
pub struct SpectralProbe {
    grid: GridSpec,
    modes: Vec<Mode>,
}

impl SpectralProbe {
    pub fn new(f: &Field) -> Result<Self, SpectralError> {
        let d = f.spectral()?;
        let g = *f.grid();
        let (n, nh) = (g.n, g.nh());
        let half = n / 2;
        let zero = Complex64::new(0.0, 0.0);
        let mut modes = Vec::new();
        for kz in 0..n {
            for ky in 0..n {
                for kx in 0..nh {
                    let i = g.sidx(kx, ky, kz);
                    let c = [d[0][i], d[1][i], d[2][i]];
                    if c.iter().all(|x| *x == zero) {
                        continue;
                    }
                    let w = g.hermitian_weight(kx);
                    let ints = [kx as i64, g.wavenumber(ky), g.wavenumber(kz)];
                    modes.push(Mode {
                        slot: ints.map(|k| (k + half as i64) as usize),
                        k: [g.k_eff(kx), g.k_eff(ky), g.k_eff(kz)],
                        c: c.map(|x| x * w),
                    });
                }
            }
        }
        Ok(SpectralProbe { grid: g, modes })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn active_modes(&self) -> usize {
        self.modes.len()
    }

    /// `e^{i k u}` for `k = -n/2..=n/2` along one axis; the Nyquist entries
    /// use the real cosine.
    fn phases(&self, x: f64) -> Vec<Complex64> {
        let g = &self.grid;
        let half = g.n / 2;
        let u = (x - g.origin) * g.k_scale();
        let mut t = Vec::with_capacity(g.n + 1);
        for s in 0..=g.n {
            let k = s as f64 - half as f64;
            if s == 0 || s == g.n {
                t.push(Complex64::new((half as f64 * u).cos(), 0.0));
            } else {
                let (sn, cs) = (k * u).sin_cos();
                t.push(Complex64::new(cs, sn));
            }
        }
        t
    }

    pub fn eval(&self, x: [f64; 3]) -> [f64; 3] {
        let (px, py, pz) = (self.phases(x[0]), self.phases(x[1]), self.phases(x[2]));
        let mut v = [0.0; 3];
        for m in &self.modes {
            let p = px[m.slot[0]] * py[m.slot[1]] * pz[m.slot[2]];
            for i in 0..3 {
                v[i] += (m.c[i] * p).re;
            }
        }
        v
    }

    /// Value and derivatives up to `order` (at most 3).
    pub fn jet(&self, x: [f64; 3], order: usize) -> Jet {
        let (px, py, pz) = (self.phases(x[0]), self.phases(x[1]), self.phases(x[2]));
        let mut j = Jet::default();
        for m in &self.modes {
            let p = px[m.slot[0]] * py[m.slot[1]] * pz[m.slot[2]];
            let k = m.k;
            for i in 0..3 {
                let d = m.c[i] * p;
                j.value[i] += d.re;
                if order >= 1 {
                    for a in 0..3 {
                        j.d1[i][a] -= k[a] * d.im;
                    }
                }
                if order >= 2 {
                    for a in 0..3 {
                        for b in a..3 {
                            j.d2[i][a][b] -= k[a] * k[b] * d.re;
                        }
                    }
                }
                if order >= 3 {
                    for a in 0..3 {
                        for b in a..3 {
                            let kab = k[a] * k[b] * d.im;
                            for c in b..3 {
                                j.d3[i][a][b][c] += kab * k[c];
                            }
                        }
                    }
                }
            }
        }
        // mirror the symmetric derivative tensors
        for i in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    let (s0, s1) = if a <= b { (a, b) } else { (b, a) };
                    j.d2[i][a][b] = j.d2[i][s0][s1];
                    for c in 0..3 {
                        let mut s = [a, b, c];
                        s.sort_unstable();
                        j.d3[i][a][b][c] = j.d3[i][s[0]][s[1]][s[2]];
                    }
                }
            }
        }
        j
    }
}

/// Trigonometric interpolation of a spectral field at arbitrary points.
pub fn point_eval(f: &Field, points: &[[f64; 3]]) -> Result<Vec<[f64; 3]>, SpectralError> {
    let probe = SpectralProbe::new(f)?;
    Ok(points.iter().map(|&x| probe.eval(x)).collect())
}

/// Evaluates a spectral field on the tensor product `xs × ys × zs` (x fastest)
/// by separable partial sums. Returns one lattice per component.
pub fn eval_tensor_grid(
    f: &Field,
    xs: &[f64],
    ys: &[f64],
    zs: &[f64],
) -> Result<[Vec<f64>; 3], SpectralError> {
    let d = f.spectral()?;
    let g = *f.grid();
    let (n, nh) = (g.n, g.nh());
    let zero = Complex64::new(0.0, 0.0);

    let phase = |k_idx_full: Option<usize>, kx: Option<usize>, x: f64| -> Complex64 {
        let u = (x - g.origin) * g.k_scale();
        let (k, nyq) = match (k_idx_full, kx) {
            (Some(j), _) => (g.wavenumber(j) as f64, j == n / 2),
            (_, Some(j)) => (j as f64, j == n / 2),
            _ => unreachable!(),
        };
        if nyq {
            Complex64::new((k * u).cos(), 0.0)
        } else {
            let (s, c) = (k * u).sin_cos();
            Complex64::new(c, s)
        }
    };

    // active rows and columns
    let mut active_x = vec![false; nh];
    let mut active_yz = vec![false; n * n];
    for comp in d.iter() {
        for kz in 0..n {
            for ky in 0..n {
                for kx in 0..nh {
                    if comp[g.sidx(kx, ky, kz)] != zero {
                        active_x[kx] = true;
                        active_yz[ky + n * kz] = true;
                    }
                }
            }
        }
    }
    let kxs: Vec<usize> = (0..nh).filter(|&k| active_x[k]).collect();
    let kys: Vec<usize> = (0..n).filter(|&ky| (0..n).any(|kz| active_yz[ky + n * kz])).collect();
    let kzs: Vec<usize> = (0..n).filter(|&kz| (0..n).any(|ky| active_yz[ky + n * kz])).collect();

    let ex: Vec<Vec<Complex64>> = xs
        .iter()
        .map(|&x| kxs.iter().map(|&k| phase(None, Some(k), x) * g.hermitian_weight(k)).collect())
        .collect();
    let ey: Vec<Vec<Complex64>> = ys
        .iter()
        .map(|&y| kys.iter().map(|&k| phase(Some(k), None, y)).collect())
        .collect();
    let ez: Vec<Vec<Complex64>> = zs
        .iter()
        .map(|&z| kzs.iter().map(|&k| phase(Some(k), None, z)).collect())
        .collect();

    let (nx, ny, nz) = (xs.len(), ys.len(), zs.len());
    let (ay, az) = (kys.len(), kzs.len());
    let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; nx * ny * nz]);
    for c in 0..3 {
        // sum over kx: a[(xi, iy, iz)]
        let mut a = vec![zero; nx * ay * az];
        for (iz, &kz) in kzs.iter().enumerate() {
            for (iy, &ky) in kys.iter().enumerate() {
                if !active_yz[ky + n * kz] {
                    continue;
                }
                let row: Vec<Complex64> = kxs.iter().map(|&kx| d[c][g.sidx(kx, ky, kz)]).collect();
                for xi in 0..nx {
                    let mut s = zero;
                    for (r, e) in row.iter().zip(&ex[xi]) {
                        s += r * e;
                    }
                    a[xi + nx * (iy + ay * iz)] = s;
                }
            }
        }
        // sum over ky: b[(xi, yj, iz)]
        let mut b = vec![zero; nx * ny * az];
        for iz in 0..az {
            for yj in 0..ny {
                for iy in 0..ay {
                    let e = ey[yj][iy];
                    let src = &a[nx * (iy + ay * iz)..nx * (iy + ay * iz) + nx];
                    let dst = &mut b[nx * (yj + ny * iz)..nx * (yj + ny * iz) + nx];
                    for (o, s) in dst.iter_mut().zip(src) {
                        *o += s * e;
                    }
                }
            }
        }
        // sum over kz: real part
        for zk in 0..nz {
            let mut plane = vec![zero; nx * ny];
            for iz in 0..az {
                let e = ez[zk][iz];
                let src = &b[nx * ny * iz..nx * ny * (iz + 1)];
                for (o, s) in plane.iter_mut().zip(src) {
                    *o += s * e;
                }
            }
            for (i, p) in plane.iter().enumerate() {
                out[c][i + nx * ny * zk] = p.re;
            }
        }
    }
    Ok(out)
}

/// Same field on a lattice of `n_new` points per axis: modes resolvable on both
/// grids are copied, everything else is dropped (zero padding when refining).
pub fn resample(f: &Field, n_new: usize) -> Result<Field, SpectralError> {
    let d = f.spectral()?;
    let g = *f.grid();
    let mut g2 = g;
    g2.n = n_new;
    g2.validate()?;
    let kmax = (g.n.min(n_new) / 2) as i64;
    let mut out: [Vec<Complex64>; 3] =
        std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); g2.len_spectral()]);
    let to_idx = |k: i64, n: usize| -> usize {
        if k >= 0 {
            k as usize
        } else {
            (k + n as i64) as usize
        }
    };
    for kz in 0..g.n {
        let wz = g.wavenumber(kz);
        if wz.abs() >= kmax {
            continue;
        }
        for ky in 0..g.n {
            let wy = g.wavenumber(ky);
            if wy.abs() >= kmax {
                continue;
            }
            for kx in 0..(kmax as usize) {
                let src = g.sidx(kx, ky, kz);
                let dst = g2.sidx(kx, to_idx(wy, n_new), to_idx(wz, n_new));
                for c in 0..3 {
                    out[c][dst] = d[c][src];
                }
            }
        }
    }
    Field::from_spectral(g2, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{random_field, random_solenoidal};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sine_at_quarter_period() {
        let g = GridSpec::new(8).unwrap();
        let f = Field::from_fn(g, |x| [x[0].sin(), 0.0, 0.0]).to_spectral().unwrap();
        let v = point_eval(&f, &[[std::f64::consts::FRAC_PI_2, 0.0, 0.0]]).unwrap();
        assert!((v[0][0] - 1.0).abs() < 1e-15);
        assert!(v[0][1].abs() < 1e-15 && v[0][2].abs() < 1e-15);
    }

    #[test]
    fn lattice_points_reproduce_values() {
        let g = GridSpec::new(8).unwrap();
        let f = random_field(g, 1);
        let s = f.to_spectral().unwrap();
        let probe = SpectralProbe::new(&s).unwrap();
        let d = f.physical().unwrap();
        let scale = f.max_abs();
        for z in 0..8 {
            for y in 0..8 {
                for x in 0..8 {
                    let v = probe.eval([g.coord(x), g.coord(y), g.coord(z)]);
                    for c in 0..3 {
                        assert!((v[c] - d[c][g.idx(x, y, z)]).abs() < 1e-12 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn off_lattice_matches_refined_lattice() {
        let g = GridSpec::new(16).unwrap();
        let f = random_solenoidal(g, 21, 7, 1.0).unwrap();
        let fine = resample(&f, 32).unwrap().to_physical().unwrap();
        let fd = fine.physical().unwrap();
        let probe = SpectralProbe::new(&f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let ix = [0; 3].map(|_| 2 * rng.gen_range(0..16) + 1);
            let x = ix.map(|j| fine.grid().coord(j));
            let v = probe.eval(x);
            for c in 0..3 {
                assert!((v[c] - fd[c][fine.grid().idx(ix[0], ix[1], ix[2])]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn wraps_coordinates() {
        let g = GridSpec::new(16).unwrap();
        let f = random_solenoidal(g, 2, 5, 1.0).unwrap();
        let probe = SpectralProbe::new(&f).unwrap();
        let l = g.domain_length;
        let a = probe.eval([0.3, 1.1, -2.0]);
        let b = probe.eval([0.3 + l, 1.1 - 3.0 * l, -2.0 + l]);
        for c in 0..3 {
            assert!((a[c] - b[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn jet_matches_finite_differences() {
        let g = GridSpec::new(16).unwrap();
        let f = random_solenoidal(g, 8, 4, 1.0).unwrap();
        let probe = SpectralProbe::new(&f).unwrap();
        let x = [0.37, 2.1, 4.4];
        let j = probe.jet(x, 3);
        let h = 1e-4;
        for a in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            let (jp, jm) = (probe.jet(xp, 2), probe.jet(xm, 2));
            for i in 0..3 {
                let fd1 = (jp.value[i] - jm.value[i]) / (2.0 * h);
                assert!((fd1 - j.d1[i][a]).abs() < 1e-6);
                for b in 0..3 {
                    let fd2 = (jp.d1[i][b] - jm.d1[i][b]) / (2.0 * h);
                    assert!((fd2 - j.d2[i][b][a]).abs() < 1e-6);
                    for c in 0..3 {
                        let fd3 = (jp.d2[i][b][c] - jm.d2[i][b][c]) / (2.0 * h);
                        assert!((fd3 - j.d3[i][b][c][a]).abs() < 1e-5);
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_grid_matches_pointwise() {
        let g = GridSpec::new(16).unwrap();
        let f = random_solenoidal(g, 5, 5, 1.0).unwrap();
        let probe = SpectralProbe::new(&f).unwrap();
        let xs = [0.1, 1.7, 3.3];
        let ys = [-0.4, 2.2];
        let zs = [5.0, 0.9, 7.1, 2.5];
        let out = eval_tensor_grid(&f, &xs, &ys, &zs).unwrap();
        for (k, &z) in zs.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                for (i, &x) in xs.iter().enumerate() {
                    let v = probe.eval([x, y, z]);
                    for c in 0..3 {
                        assert!((out[c][i + 3 * (j + 2 * k)] - v[c]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn resample_round_trip() {
        let g = GridSpec::new(16).unwrap();
        let f = random_solenoidal(g, 6, 6, 1.0).unwrap();
        let up = resample(&f, 32).unwrap();
        let down = resample(&up, 16).unwrap();
        assert!(down.add_scaled(-1.0, &f).unwrap().max_abs() < 1e-15);
        assert!((up.l2_norm_sq() - f.l2_norm_sq()).abs() < 1e-12 * f.l2_norm_sq());
    }
}
