use num_complex::Complex64;
use std::array;

use super::fft::plan;
use super::{GridSpec, SpectralError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Representation {
    Physical,
    Spectral,
}

#[derive(Debug, Clone, PartialEq)]
enum Data<const C: usize> {
    Physical([Vec<f64>; C]),
    Spectral([Vec<Complex64>; C]),
}

/// `C` real scalar lattices on one grid, held either as point values or as
/// half-spectrum Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice<const C: usize> {
    grid: GridSpec,
    data: Data<C>,
}

/// Three-component vector field (velocity, vorticity, profiles).
pub type Field = Lattice<3>;
/// Single scalar lattice (divergence, pointwise magnitudes).
pub type ScalarLattice = Lattice<1>;
/// Velocity-gradient lattice, component `3*i + j` holds `∂_j f_i`.
pub type TensorLattice = Lattice<9>;

impl<const C: usize> Lattice<C> {
    pub fn from_physical(grid: GridSpec, comps: [Vec<f64>; C]) -> Result<Self, SpectralError> {
        grid.validate()?;
        for c in &comps {
            if c.len() != grid.len_physical() {
                return Err(SpectralError::LengthMismatch {
                    expected: grid.len_physical(),
                    found: c.len(),
                });
            }
        }
        Ok(Lattice {
            grid,
            data: Data::Physical(comps),
        })
    }

    pub fn from_spectral(grid: GridSpec, comps: [Vec<Complex64>; C]) -> Result<Self, SpectralError> {
        grid.validate()?;
        for c in &comps {
            if c.len() != grid.len_spectral() {
                return Err(SpectralError::LengthMismatch {
                    expected: grid.len_spectral(),
                    found: c.len(),
                });
            }
        }
        Ok(Lattice {
            grid,
            data: Data::Spectral(comps),
        })
    }

    /// The zero field, stored spectrally.
    pub fn zeros(grid: GridSpec) -> Self {
        Lattice {
            grid,
            data: Data::Spectral(array::from_fn(|_| {
                vec![Complex64::new(0.0, 0.0); grid.len_spectral()]
            })),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        match self.data {
            Data::Physical(_) => Representation::Physical,
            Data::Spectral(_) => Representation::Spectral,
        }
    }

    pub fn physical(&self) -> Result<&[Vec<f64>; C], SpectralError> {
        match &self.data {
            Data::Physical(d) => Ok(d),
            Data::Spectral(_) => Err(SpectralError::WrongRepresentation {
                expected: Representation::Physical,
            }),
        }
    }

    pub fn spectral(&self) -> Result<&[Vec<Complex64>; C], SpectralError> {
        match &self.data {
            Data::Spectral(d) => Ok(d),
            Data::Physical(_) => Err(SpectralError::WrongRepresentation {
                expected: Representation::Spectral,
            }),
        }
    }

    pub fn into_physical_data(self) -> Result<[Vec<f64>; C], SpectralError> {
        match self.data {
            Data::Physical(d) => Ok(d),
            Data::Spectral(_) => Err(SpectralError::WrongRepresentation {
                expected: Representation::Physical,
            }),
        }
    }

    pub fn into_spectral_data(self) -> Result<[Vec<Complex64>; C], SpectralError> {
        match self.data {
            Data::Spectral(d) => Ok(d),
            Data::Physical(_) => Err(SpectralError::WrongRepresentation {
                expected: Representation::Spectral,
            }),
        }
    }

    /// Forward transform; the input must be physical.
    pub fn to_spectral(&self) -> Result<Self, SpectralError> {
        self.to_spectral_band(None)
    }

    /// Forward transform computing only modes with every `|k_i| ≤ band`.
    pub fn to_spectral_band(&self, band: Option<usize>) -> Result<Self, SpectralError> {
        let d = self.physical()?;
        let p = plan(self.grid.n);
        Ok(Lattice {
            grid: self.grid,
            data: Data::Spectral(array::from_fn(|c| p.forward(&self.grid, &d[c], band))),
        })
    }

    /// Inverse transform; the input must be spectral.
    pub fn to_physical(&self) -> Result<Self, SpectralError> {
        let d = self.spectral()?;
        let p = plan(self.grid.n);
        Ok(Lattice {
            grid: self.grid,
            data: Data::Physical(array::from_fn(|c| p.inverse(&d[c]))),
        })
    }

    /// Spectral copy regardless of the current representation.
    pub fn as_spectral(&self) -> Result<Self, SpectralError> {
        match self.data {
            Data::Spectral(_) => Ok(self.clone()),
            Data::Physical(_) => self.to_spectral(),
        }
    }

    /// Physical copy regardless of the current representation.
    pub fn as_physical(&self) -> Result<Self, SpectralError> {
        match self.data {
            Data::Physical(_) => Ok(self.clone()),
            Data::Spectral(_) => self.to_physical(),
        }
    }

    /// Same data on a relabelled grid with the same number of points.
    pub fn with_grid(mut self, grid: GridSpec) -> Result<Self, SpectralError> {
        grid.validate()?;
        if grid.n != self.grid.n {
            return Err(SpectralError::GridMismatch);
        }
        self.grid = grid;
        Ok(self)
    }

    pub fn scaled(&self, a: f64) -> Self {
        let data = match &self.data {
            Data::Physical(d) => Data::Physical(array::from_fn(|c| d[c].iter().map(|x| a * x).collect())),
            Data::Spectral(d) => Data::Spectral(array::from_fn(|c| d[c].iter().map(|x| x * a).collect())),
        };
        Lattice { grid: self.grid, data }
    }

    /// `self + a * other`, both in the same representation on the same lattice.
    pub fn add_scaled(&self, a: f64, other: &Self) -> Result<Self, SpectralError> {
        if !self.grid.same_lattice(&other.grid) {
            return Err(SpectralError::GridMismatch);
        }
        let data = match (&self.data, &other.data) {
            (Data::Physical(x), Data::Physical(y)) => Data::Physical(array::from_fn(|c| {
                x[c].iter().zip(&y[c]).map(|(u, v)| u + a * v).collect()
            })),
            (Data::Spectral(x), Data::Spectral(y)) => Data::Spectral(array::from_fn(|c| {
                x[c].iter().zip(&y[c]).map(|(u, v)| u + v * a).collect()
            })),
            (_, o) => {
                return Err(SpectralError::WrongRepresentation {
                    expected: match o {
                        Data::Physical(_) => Representation::Spectral,
                        Data::Spectral(_) => Representation::Physical,
                    },
                })
            }
        };
        Ok(Lattice { grid: self.grid, data })
    }

    /// Largest point value magnitude (physical) or coefficient modulus
    /// (spectral) over all components.
    pub fn max_abs(&self) -> f64 {
        match &self.data {
            Data::Physical(d) => d.iter().flatten().fold(0.0, |m, x| m.max(x.abs())),
            Data::Spectral(d) => d.iter().flatten().fold(0.0, |m, x| m.max(x.norm())),
        }
    }

    pub fn is_finite(&self) -> bool {
        match &self.data {
            Data::Physical(d) => d.iter().flatten().all(|x| x.is_finite()),
            Data::Spectral(d) => d.iter().flatten().all(|x| x.re.is_finite() && x.im.is_finite()),
        }
    }

    /// Squared L² norm summed over components (box quadrature or Parseval).
    pub fn l2_norm_sq(&self) -> f64 {
        match &self.data {
            Data::Physical(d) => {
                d.iter().flatten().map(|x| x * x).sum::<f64>() * self.grid.cell_volume()
            }
            Data::Spectral(d) => {
                let g = &self.grid;
                let nh = g.nh();
                let mut s = 0.0;
                for comp in d {
                    for (i, c) in comp.iter().enumerate() {
                        s += g.hermitian_weight(i % nh) * c.norm_sqr();
                    }
                }
                s * g.volume()
            }
        }
    }
}

impl Field {
    /// Sample `f(x)` at every lattice point.
    pub fn from_fn<F: Fn([f64; 3]) -> [f64; 3]>(grid: GridSpec, f: F) -> Self {
        let n = grid.n;
        let xs = grid.coords();
        let mut comps: [Vec<f64>; 3] = array::from_fn(|_| vec![0.0; grid.len_physical()]);
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    let v = f([xs[x], xs[y], xs[z]]);
                    let i = grid.idx(x, y, z);
                    for c in 0..3 {
                        comps[c][i] = v[c];
                    }
                }
            }
        }
        Lattice {
            grid,
            data: Data::Physical(comps),
        }
    }

    /// Pointwise Euclidean magnitude of a physical field.
    pub fn magnitude(&self) -> Result<ScalarLattice, SpectralError> {
        let d = self.physical()?;
        let m = (0..self.grid.len_physical())
            .map(|i| (d[0][i] * d[0][i] + d[1][i] * d[1][i] + d[2][i] * d[2][i]).sqrt())
            .collect();
        ScalarLattice::from_physical(self.grid, [m])
    }
}

impl ScalarLattice {
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self, SpectralError> {
        ScalarLattice::from_physical(grid, [values])
    }

    pub fn values(&self) -> Result<&[f64], SpectralError> {
        Ok(&self.physical()?[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::random_field;

    #[test]
    fn zero_round_trip() {
        let g = GridSpec::new(8).unwrap();
        let z = Field::zeros(g);
        let p = z.to_physical().unwrap();
        assert_eq!(p.max_abs(), 0.0);
        assert_eq!(p.to_spectral().unwrap().max_abs(), 0.0);
    }

    #[test]
    fn single_mode_sine() {
        let g = GridSpec::new(16).unwrap();
        let f = Field::from_fn(g, |x| [x[0].sin(), 0.0, 0.0]);
        let s = f.to_spectral().unwrap();
        let d = s.spectral().unwrap();
        // sin x = (e^{ix} - e^{-ix}) / 2i, stored as c_{(1,0,0)} = -i/2
        let c = d[0][g.sidx(1, 0, 0)];
        assert!((c - Complex64::new(0.0, -0.5)).norm() < 1e-15);
        for (i, v) in d[0].iter().enumerate() {
            if i != g.sidx(1, 0, 0) {
                assert!(v.norm() < 1e-13, "mode {i} = {v}");
            }
        }
        assert!(d[1].iter().chain(&d[2]).all(|v| v.norm() < 1e-13));
    }

    #[test]
    fn random_round_trip_and_parseval() {
        for &n in &[8usize, 16, 24] {
            let g = GridSpec::new(n).unwrap();
            let f = random_field(g, 11);
            let back = f.to_spectral().unwrap().to_physical().unwrap();
            let scale = f.max_abs();
            let (a, b) = (f.physical().unwrap(), back.physical().unwrap());
            for c in 0..3 {
                for i in 0..g.len_physical() {
                    assert!((a[c][i] - b[c][i]).abs() < 1e-12 * scale);
                }
            }
            let ps = f.l2_norm_sq();
            let ss = f.to_spectral().unwrap().l2_norm_sq();
            assert!((ps - ss).abs() < 1e-12 * ps);
        }
    }

    #[test]
    fn band_limited_forward_matches_truncation() {
        let g = GridSpec::new(16).unwrap();
        let f = random_field(g, 3);
        let full = f.to_spectral().unwrap();
        let band = f.to_spectral_band(Some(5)).unwrap();
        let (a, b) = (full.spectral().unwrap(), band.spectral().unwrap());
        let nh = g.nh();
        for c in 0..3 {
            for kz in 0..g.n {
                for ky in 0..g.n {
                    for kx in 0..nh {
                        let i = g.sidx(kx, ky, kz);
                        let inside = kx <= 5
                            && g.wavenumber(ky).abs() <= 5
                            && g.wavenumber(kz).abs() <= 5;
                        if inside {
                            assert_eq!(a[c][i], b[c][i]);
                        } else {
                            assert_eq!(b[c][i], Complex64::new(0.0, 0.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn representation_errors() {
        let g = GridSpec::new(8).unwrap();
        let z = Field::zeros(g);
        assert!(z.to_spectral().is_err());
        assert!(z.to_physical().unwrap().to_physical().is_err());
        let other = Field::zeros(GridSpec::new(16).unwrap());
        assert!(matches!(z.add_scaled(1.0, &other), Err(SpectralError::GridMismatch)));
    }
}
