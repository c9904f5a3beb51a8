//! Spectral differential operators on half-spectrum lattices.

use num_complex::Complex64;
use std::array;

use super::{Field, GridSpec, Lattice, ScalarLattice, SpectralError, TensorLattice};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Differentiation wavenumbers of a grid, Nyquist entries zeroed.
#[derive(Debug, Clone)]
pub(crate) struct Wavenumbers {
    pub nh: usize,
    pub n: usize,
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
}

impl Wavenumbers {
    pub fn new(g: &GridSpec) -> Self {
        let nh = g.nh();
        Wavenumbers {
            nh,
            n: g.n,
            kx: (0..nh).map(|j| g.k_eff(j)).collect(),
            ky: (0..g.n).map(|j| g.k_eff(j)).collect(),
        }
    }

    /// Visit every stored mode as `(index, kx index, [kx, ky, kz])`.
    #[inline]
    pub fn for_each<F: FnMut(usize, usize, [f64; 3])>(&self, mut f: F) {
        let (n, nh) = (self.n, self.nh);
        for kz in 0..n {
            for ky in 0..n {
                let base = nh * (ky + n * kz);
                for kx in 0..nh {
                    f(base + kx, kx, [self.kx[kx], self.ky[ky], self.ky[kz]]);
                }
            }
        }
    }
}

fn cross(a: [f64; 3], b: [Complex64; 3]) -> [Complex64; 3] {
    [
        b[2] * a[1] - b[1] * a[2],
        b[0] * a[2] - b[2] * a[0],
        b[1] * a[0] - b[0] * a[1],
    ]
}

/// `∂_j f_i` for every component pair; output index `3*i + j`.
pub fn gradient(f: &Field) -> Result<TensorLattice, SpectralError> {
    let d = f.spectral()?;
    let g = *f.grid();
    let w = Wavenumbers::new(&g);
    let mut out: [Vec<Complex64>; 9] = array::from_fn(|_| vec![Complex64::new(0.0, 0.0); g.len_spectral()]);
    w.for_each(|idx, _, k| {
        for i in 0..3 {
            let c = I * d[i][idx];
            for j in 0..3 {
                out[3 * i + j][idx] = c * k[j];
            }
        }
    });
    TensorLattice::from_spectral(g, out)
}

pub fn curl(f: &Field) -> Result<Field, SpectralError> {
    let d = f.spectral()?;
    let g = *f.grid();
    let w = Wavenumbers::new(&g);
    let mut out: [Vec<Complex64>; 3] = array::from_fn(|_| vec![Complex64::new(0.0, 0.0); g.len_spectral()]);
    w.for_each(|idx, _, k| {
        let c = cross(k, [d[0][idx], d[1][idx], d[2][idx]]);
        for i in 0..3 {
            out[i][idx] = I * c[i];
        }
    });
    Field::from_spectral(g, out)
}

pub fn divergence(f: &Field) -> Result<ScalarLattice, SpectralError> {
    let d = f.spectral()?;
    let g = *f.grid();
    let w = Wavenumbers::new(&g);
    let mut out = vec![Complex64::new(0.0, 0.0); g.len_spectral()];
    w.for_each(|idx, _, k| {
        out[idx] = I * (d[0][idx] * k[0] + d[1][idx] * k[1] + d[2][idx] * k[2]);
    });
    ScalarLattice::from_spectral(g, [out])
}

/// Applies the Leray projector in place on raw spectral components.
pub(crate) fn project_in_place(w: &Wavenumbers, d: &mut [Vec<Complex64>; 3]) {
    w.for_each(|idx, _, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 > 0.0 {
            let dot = (d[0][idx] * k[0] + d[1][idx] * k[1] + d[2][idx] * k[2]) / k2;
            for i in 0..3 {
                d[i][idx] -= dot * k[i];
            }
        }
    });
}

/// Orthogonal projection onto divergence-free fields; modes without a
/// differentiation wavenumber (mean, pure Nyquist) pass through.
pub fn leray_project(f: &Field) -> Result<Field, SpectralError> {
    let mut d = f.spectral()?.clone();
    project_in_place(&Wavenumbers::new(f.grid()), &mut d);
    Field::from_spectral(*f.grid(), d)
}

/// Relative tolerance used when checking Biot–Savart preconditions.
pub const SOLENOIDAL_TOL: f64 = 1e-10;

/// Mean-free divergence-free velocity whose curl is `omega`.
pub fn biot_savart(omega: &Field) -> Result<Field, SpectralError> {
    let d = omega.spectral()?;
    let g = *omega.grid();
    let w = Wavenumbers::new(&g);
    let scale = omega.max_abs();
    let mut mean: f64 = 0.0;
    let mut div: f64 = 0.0;
    let mut kmag: f64 = 0.0;
    w.for_each(|idx, _, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let c = [d[0][idx], d[1][idx], d[2][idx]];
        if k2 == 0.0 {
            mean = mean.max(c.iter().map(|x| x.norm()).fold(0.0, f64::max));
        } else {
            kmag = kmag.max(k2.sqrt());
            div = div.max((c[0] * k[0] + c[1] * k[1] + c[2] * k[2]).norm() / k2.sqrt());
        }
    });
    if mean > SOLENOIDAL_TOL * scale {
        return Err(SpectralError::NonzeroMean(mean));
    }
    if div > SOLENOIDAL_TOL * scale {
        return Err(SpectralError::NotSolenoidal(div / scale.max(f64::MIN_POSITIVE)));
    }
    let mut out: [Vec<Complex64>; 3] = array::from_fn(|_| vec![Complex64::new(0.0, 0.0); g.len_spectral()]);
    w.for_each(|idx, _, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 > 0.0 {
            let c = cross(k, [d[0][idx], d[1][idx], d[2][idx]]);
            for i in 0..3 {
                out[i][idx] = I * c[i] / k2;
            }
        }
    });
    Field::from_spectral(g, out)
}

/// Zeroes modes with any `|k_i|` above `dealias_fraction · n/2` in place.
pub(crate) fn dealias_in_place<const C: usize>(g: &GridSpec, d: &mut [Vec<Complex64>; C]) {
    let n = g.n;
    let nh = g.nh();
    let keep_x: Vec<bool> = (0..nh).map(|j| g.keeps(j as i64)).collect();
    let keep: Vec<bool> = (0..n).map(|j| g.keeps(g.wavenumber(j))).collect();
    let zero = Complex64::new(0.0, 0.0);
    for kz in 0..n {
        for ky in 0..n {
            let base = nh * (ky + n * kz);
            let row_kept = keep[ky] && keep[kz];
            for kx in 0..nh {
                if !(row_kept && keep_x[kx]) {
                    for comp in d.iter_mut() {
                        comp[base + kx] = zero;
                    }
                }
            }
        }
    }
}

pub fn dealias<const C: usize>(f: &Lattice<C>) -> Result<Lattice<C>, SpectralError> {
    let mut d = f.spectral()?.clone();
    dealias_in_place(f.grid(), &mut d);
    Lattice::from_spectral(*f.grid(), d)
}

/// Half-spectrum weighted sum `L³ Σ w Re(a·conj(b))`, i.e. `∫ a·b` for real
/// fields given by their coefficients.
fn spectral_inner(g: &GridSpec, a: &[Vec<Complex64>; 3], b: &[Vec<Complex64>; 3]) -> f64 {
    let nh = g.nh();
    let mut s = 0.0;
    for c in 0..3 {
        for (i, (x, y)) in a[c].iter().zip(&b[c]).enumerate() {
            s += g.hermitian_weight(i % nh) * (x * y.conj()).re;
        }
    }
    s * g.volume()
}

/// `½‖v‖²_{L²}`.
pub fn kinetic_energy(v: &Field) -> Result<f64, SpectralError> {
    Ok(0.5 * v.as_spectral()?.l2_norm_sq())
}

/// `‖curl v‖²_{L²}`.
pub fn enstrophy(v: &Field) -> Result<f64, SpectralError> {
    Ok(curl(&v.as_spectral()?)?.l2_norm_sq())
}

/// `∫ v·curl v`.
pub fn helicity(v: &Field) -> Result<f64, SpectralError> {
    let v = v.as_spectral()?;
    let w = curl(&v)?;
    Ok(spectral_inner(v.grid(), v.spectral()?, w.spectral()?))
}

/// `∫ a·b` for two fields on the same lattice.
pub fn inner_product(a: &Field, b: &Field) -> Result<f64, SpectralError> {
    if !a.grid().same_lattice(b.grid()) {
        return Err(SpectralError::GridMismatch);
    }
    let (a, b) = (a.as_spectral()?, b.as_spectral()?);
    Ok(spectral_inner(a.grid(), a.spectral()?, b.spectral()?))
}

/// Fraction of enstrophy carried by the outer quarter of the retained band
/// (modes whose largest `|k_i|` exceeds three quarters of the cutoff).
pub fn tail_fraction(v: &Field) -> Result<f64, SpectralError> {
    let d = v.spectral()?;
    let g = *v.grid();
    let w = Wavenumbers::new(&g);
    let edge = 0.75 * g.cutoff();
    let scale = g.k_scale();
    let (mut tail, mut total) = (0.0, 0.0);
    w.for_each(|idx, kx, k| {
        let e = (0..3)
            .map(|i| d[i][idx].norm_sqr())
            .sum::<f64>()
            * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2])
            * g.hermitian_weight(kx);
        total += e;
        let kmax = k.iter().fold(0.0f64, |m, x| m.max(x.abs())) / scale;
        if kmax > edge {
            tail += e;
        }
    });
    Ok(if total > 0.0 { tail / total } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{random_field, random_solenoidal};

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    fn max_diff(a: &Field, b: &Field) -> f64 {
        let (a, b) = (a.as_physical().unwrap(), b.as_physical().unwrap());
        let (a, b) = (a.physical().unwrap(), b.physical().unwrap());
        (0..3)
            .flat_map(|c| a[c].iter().zip(&b[c]).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn curl_of_shear() {
        let g = grid(16);
        let v = Field::from_fn(g, |x| [x[1].sin(), 0.0, 0.0]).to_spectral().unwrap();
        let w = curl(&v).unwrap();
        let expect = Field::from_fn(g, |x| [0.0, 0.0, -x[1].cos()]);
        assert!(max_diff(&w, &expect) < 1e-13);
    }

    #[test]
    fn constant_field_has_no_derivatives() {
        let g = grid(8);
        let v = Field::from_fn(g, |_| [1.5, -2.0, 0.25]).to_spectral().unwrap();
        assert!(gradient(&v).unwrap().max_abs() < 1e-15);
        assert!(divergence(&v).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn div_curl_vanishes() {
        let g = grid(16);
        let f = random_field(g, 5).to_spectral().unwrap();
        let dc = divergence(&curl(&f).unwrap()).unwrap();
        assert!(dc.max_abs() < 1e-12 * f.l2_norm_sq().sqrt());
    }

    #[test]
    fn leray_examples() {
        let g = grid(16);
        let v = random_solenoidal(g, 4, 5, 1.0).unwrap();
        let p = leray_project(&v).unwrap();
        let diff = p.add_scaled(-1.0, &v).unwrap();
        assert!(diff.max_abs() < 1e-13 * v.max_abs());

        // ∇φ with φ = sin x
        let grad = Field::from_fn(g, |x| [x[0].cos(), 0.0, 0.0]).to_spectral().unwrap();
        assert!(leray_project(&grad).unwrap().max_abs() < 1e-15);

        let f = random_field(g, 9).to_spectral().unwrap();
        let pf = leray_project(&f).unwrap();
        let qf = f.add_scaled(-1.0, &pf).unwrap();
        let (a, b, c) = (f.l2_norm_sq(), pf.l2_norm_sq(), qf.l2_norm_sq());
        assert!((a - b - c).abs() < 1e-12 * a);
        let div = divergence(&pf).unwrap();
        assert!(div.max_abs() < 1e-12 * f.max_abs());
        let ppf = leray_project(&pf).unwrap();
        assert!(ppf.add_scaled(-1.0, &pf).unwrap().max_abs() < 1e-15 * f.max_abs().max(1.0));
    }

    #[test]
    fn biot_savart_examples() {
        let g = grid(16);
        let w = Field::from_fn(g, |x| [0.0, 0.0, -x[1].cos()]).to_spectral().unwrap();
        let v = biot_savart(&w).unwrap();
        let expect = Field::from_fn(g, |x| [x[1].sin(), 0.0, 0.0]);
        assert!(max_diff(&v, &expect) < 1e-13);

        assert_eq!(biot_savart(&Field::zeros(g)).unwrap().max_abs(), 0.0);

        let v = random_solenoidal(g, 3, 6, 1.0).unwrap();
        let w = curl(&v).unwrap();
        let back = curl(&biot_savart(&w).unwrap()).unwrap();
        assert!(back.add_scaled(-1.0, &w).unwrap().max_abs() < 1e-12 * w.max_abs());
        let vv = biot_savart(&w).unwrap();
        assert!(vv.add_scaled(-1.0, &v).unwrap().max_abs() < 1e-12 * v.max_abs());
    }

    #[test]
    fn biot_savart_rejects_bad_input() {
        let g = grid(8);
        let mean = Field::from_fn(g, |_| [1.0, 0.0, 0.0]).to_spectral().unwrap();
        assert!(matches!(biot_savart(&mean), Err(SpectralError::NonzeroMean(_))));
        let grad = Field::from_fn(g, |x| [x[0].cos(), 0.0, 0.0]).to_spectral().unwrap();
        assert!(matches!(biot_savart(&grad), Err(SpectralError::NotSolenoidal(_))));
        let phys = Field::from_fn(g, |_| [0.0; 3]);
        assert!(biot_savart(&phys).is_err());
    }

    #[test]
    fn dealias_examples() {
        let g = grid(32);
        let v = random_solenoidal(g, 1, 8, 1.0).unwrap();
        assert_eq!(dealias(&v).unwrap(), v);

        // single mode at k = n/2 - 1 = 15 > 2/3 · 16
        let f = Field::from_fn(g, |x| [(15.0 * x[0]).sin(), 0.0, 0.0]).to_spectral().unwrap();
        assert!(dealias(&f).unwrap().max_abs() < 1e-15);

        let r = random_field(g, 2).to_spectral().unwrap();
        let once = dealias(&r).unwrap();
        assert_eq!(dealias(&once).unwrap(), once);
    }

    #[test]
    fn energy_of_taylor_green() {
        let g = grid(16);
        let v = crate::init::taylor_green(g, 1.0).unwrap();
        let e = kinetic_energy(&v).unwrap();
        let exact = (2.0 * std::f64::consts::PI).powi(3) / 8.0;
        assert!((e - exact).abs() < 1e-12 * exact);
        assert!(helicity(&v).unwrap().abs() < 1e-12);
    }
}
