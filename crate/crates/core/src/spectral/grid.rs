use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::SpectralError;

/// Uniform periodic lattice of `n³` points on a cube of side `domain_length`
/// whose lower corner sits at `origin` on every axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub domain_length: f64,
    pub dealias_fraction: f64,
    pub origin: f64,
}

/// Sizes built from the primes 2, 3 and 5 keep the mixed-radix transforms
/// fast and cover the usual 2^k and 3·2^k grids.
fn smooth_size(mut n: usize) -> bool {
    for p in [2, 3, 5] {
        while n % p == 0 {
            n /= p;
        }
    }
    n == 1
}

impl GridSpec {
    /// `n` points on the 2π box with the 2/3 dealiasing rule.
    pub fn new(n: usize) -> Result<Self, SpectralError> {
        let g = GridSpec {
            n,
            domain_length: 2.0 * PI,
            dealias_fraction: 2.0 / 3.0,
            origin: 0.0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_domain_length(mut self, l: f64) -> Result<Self, SpectralError> {
        self.domain_length = l;
        self.validate()?;
        Ok(self)
    }

    pub fn with_dealias_fraction(mut self, f: f64) -> Result<Self, SpectralError> {
        self.dealias_fraction = f;
        self.validate()?;
        Ok(self)
    }

    pub fn with_origin(mut self, origin: f64) -> Result<Self, SpectralError> {
        self.origin = origin;
        self.validate()?;
        Ok(self)
    }

    /// Cube `[-half_width, half_width)³` sampled with `n` points per axis.
    pub fn centered(n: usize, half_width: f64) -> Result<Self, SpectralError> {
        GridSpec::new(n)?
            .with_domain_length(2.0 * half_width)?
            .with_origin(-half_width)
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        if self.n < 8 || self.n % 2 != 0 {
            return Err(SpectralError::InvalidGrid(format!(
                "n = {} must be even and at least 8",
                self.n
            )));
        }
        if !smooth_size(self.n) {
            return Err(SpectralError::UnsupportedSize(self.n));
        }
        if !(self.domain_length > 0.0 && self.domain_length.is_finite()) {
            return Err(SpectralError::InvalidGrid(format!(
                "domain_length = {} must be positive",
                self.domain_length
            )));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(SpectralError::InvalidGrid(format!(
                "dealias_fraction = {} must lie in (0, 1]",
                self.dealias_fraction
            )));
        }
        if !self.origin.is_finite() {
            return Err(SpectralError::InvalidGrid("origin must be finite".into()));
        }
        Ok(())
    }

    /// Number of stored x-wavenumbers in the half spectrum.
    pub fn nh(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn len_physical(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn len_spectral(&self) -> usize {
        self.nh() * self.n * self.n
    }

    pub fn spacing(&self) -> f64 {
        self.domain_length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.domain_length.powi(3)
    }

    /// Factor turning integer wavenumbers into physical ones.
    pub fn k_scale(&self) -> f64 {
        2.0 * PI / self.domain_length
    }

    /// Coordinate of lattice index `j` along any axis.
    pub fn coord(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    /// Signed integer wavenumber for a full-axis index (y or z). The Nyquist
    /// index maps to `+n/2`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j <= n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Physical wavenumber used for differentiation; the Nyquist mode has no
    /// well-defined derivative of a real field and is treated as zero.
    pub fn k_eff(&self, j: usize) -> f64 {
        if j == self.n / 2 {
            0.0
        } else {
            self.wavenumber(j) as f64 * self.k_scale()
        }
    }

    /// Largest integer |k| kept by `dealias`.
    pub fn cutoff(&self) -> f64 {
        self.dealias_fraction * (self.n / 2) as f64
    }

    pub fn keeps(&self, k: i64) -> bool {
        (k.unsigned_abs() as f64) <= self.cutoff() + 1e-9
    }

    /// Same lattice (size, box, placement); the dealias setting may differ.
    pub fn same_lattice(&self, other: &GridSpec) -> bool {
        self.n == other.n
            && (self.domain_length - other.domain_length).abs() <= 1e-14 * self.domain_length
            && (self.origin - other.origin).abs() <= 1e-14 * self.domain_length.max(1.0)
    }

    /// Index of physical point `(x, y, z)` in x-fastest order.
    #[inline]
    pub fn idx(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.n * (y + self.n * z)
    }

    /// Index of half-spectrum mode `(kx, ky, kz)` (storage indices).
    #[inline]
    pub fn sidx(&self, kx: usize, ky: usize, kz: usize) -> usize {
        kx + self.nh() * (ky + self.n * kz)
    }

    /// Weight of a half-spectrum column in full-spectrum sums: interior x
    /// wavenumbers stand for themselves and their conjugate partner.
    #[inline]
    pub fn hermitian_weight(&self, kx: usize) -> f64 {
        if kx == 0 || kx == self.n / 2 {
            1.0
        } else {
            2.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(GridSpec::new(6).is_err());
        assert!(GridSpec::new(9).is_err());
        assert!(matches!(
            GridSpec::new(14),
            Err(SpectralError::UnsupportedSize(14))
        ));
        assert!(GridSpec::new(8).is_ok());
        assert!(GridSpec::new(96).is_ok());
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = GridSpec::new(16).unwrap();
        assert!(g.with_dealias_fraction(0.0).is_err());
        assert!(g.with_dealias_fraction(1.5).is_err());
        assert!(g.with_domain_length(-1.0).is_err());
        assert!(g.with_dealias_fraction(1.0).is_ok());
    }

    #[test]
    fn wavenumbers_wrap() {
        let g = GridSpec::new(8).unwrap();
        let ks: Vec<i64> = (0..8).map(|j| g.wavenumber(j)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        assert_eq!(g.k_eff(4), 0.0);
    }

    #[test]
    fn cutoff_follows_two_thirds_rule() {
        let g = GridSpec::new(64).unwrap();
        assert!(g.keeps(21));
        assert!(!g.keeps(22));
        let g = GridSpec::new(32).unwrap();
        assert!(g.keeps(10));
        assert!(!g.keeps(11));
    }
}
