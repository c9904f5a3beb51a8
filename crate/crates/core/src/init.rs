//! Standard initial conditions. All returned velocity fields are spectral.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand::distributions::Distribution;

use crate::spectral::{dealias, leray_project, Field, GridSpec, SpectralError};

/// `A (sin κx cos κy cos κz, −cos κx sin κy cos κz, 0)` with `κ = 2π/L`.
pub fn taylor_green(grid: GridSpec, amplitude: f64) -> Result<Field, SpectralError> {
    let k = grid.k_scale();
    Field::from_fn(grid, |x| {
        let (sx, cx) = (k * x[0]).sin_cos();
        let (sy, cy) = (k * x[1]).sin_cos();
        let cz = (k * x[2]).cos();
        [amplitude * sx * cy * cz, -amplitude * cx * sy * cz, 0.0]
    })
    .to_spectral()
}

/// Arnold–Beltrami–Childress flow with unit wavenumbers; `curl v = κ v`.
pub fn abc(grid: GridSpec, a: f64, b: f64, c: f64) -> Result<Field, SpectralError> {
    let k = grid.k_scale();
    Field::from_fn(grid, |x| {
        let (sx, cx) = (k * x[0]).sin_cos();
        let (sy, cy) = (k * x[1]).sin_cos();
        let (sz, cz) = (k * x[2]).sin_cos();
        [a * sz + c * cy, b * sx + a * cz, c * sy + b * cx]
    })
    .to_spectral()
}

/// Steady shear `(A sin κy, 0, 0)`.
pub fn shear(grid: GridSpec, amplitude: f64) -> Result<Field, SpectralError> {
    let k = grid.k_scale();
    Field::from_fn(grid, |x| [amplitude * (k * x[1]).sin(), 0.0, 0.0]).to_spectral()
}

/// Random mean-free divergence-free field with uniform random coefficients weighted
/// by `1/(1+|k|²)` on integer wavenumbers `1 ≤ |k| ≤ band`, dealiased and
/// scaled so that the largest lattice velocity magnitude equals `amplitude`.
pub fn random_solenoidal(
    grid: GridSpec,
    seed: u64,
    band: usize,
    amplitude: f64,
) -> Result<Field, SpectralError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = rand::distributions::Uniform::new(-1.0f64, 1.0);
    let n = grid.n;
    let nh = grid.nh();
    let band2 = (band * band) as i64;
    let mut d: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); grid.len_spectral()]);
    for kz in 0..n {
        for ky in 0..n {
            for kx in 0..nh {
                let k = [kx as i64, grid.wavenumber(ky), grid.wavenumber(kz)];
                let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                // draw unconditionally so the sequence does not depend on band
                let draws: [f64; 6] = std::array::from_fn(|_| unit.sample(&mut rng));
                if k2 == 0 || k2 > band2 || k.iter().any(|&q| q.unsigned_abs() as usize == n / 2) {
                    continue;
                }
                let w = 1.0 / (1.0 + k2 as f64);
                for c in 0..3 {
                    d[c][grid.sidx(kx, ky, kz)] = Complex64::new(draws[2 * c], draws[2 * c + 1]) * w;
                }
            }
        }
    }
    // The inverse transform keeps the Hermitian part; transforming back yields
    // a consistent real field.
    let f = Field::from_spectral(grid, d)?.to_physical()?.to_spectral()?;
    let f = leray_project(&dealias(&f)?)?;
    let mut d = f.into_spectral_data()?;
    for c in d.iter_mut() {
        c[0] = Complex64::new(0.0, 0.0);
    }
    let f = Field::from_spectral(grid, d)?;
    let peak = f.to_physical()?.magnitude()?.max_abs();
    if peak == 0.0 {
        return Ok(f);
    }
    Ok(f.scaled(amplitude / peak))
}

/// Uniform white noise in every component; not solenoidal. Physical.
pub fn random_field(grid: GridSpec, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = std::array::from_fn(|_| {
        (0..grid.len_physical()).map(|_| rng.gen_range(-1.0..1.0)).collect()
    });
    Field::from_physical(grid, comps).expect("lengths match the grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{curl, divergence};

    #[test]
    fn abc_is_beltrami() {
        let g = GridSpec::new(16).unwrap();
        let v = abc(g, 1.0, 1.0, 1.0).unwrap();
        let w = curl(&v).unwrap();
        assert!(w.add_scaled(-1.0, &v).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn random_solenoidal_is_clean() {
        let g = GridSpec::new(16).unwrap();
        let v = random_solenoidal(g, 3, 4, 2.0).unwrap();
        assert!(divergence(&v).unwrap().max_abs() < 1e-13);
        let peak = v.to_physical().unwrap().magnitude().unwrap().max_abs();
        assert!((peak - 2.0).abs() < 1e-12);
        let again = random_solenoidal(g, 3, 4, 2.0).unwrap();
        assert_eq!(v, again);
        let mean = v.spectral().unwrap()[0][0];
        assert_eq!(mean, Complex64::new(0.0, 0.0));
    }
}
