//! Periodic spectral field algebra: transforms, derivatives, projection,
//! dealiasing and off-lattice evaluation.

pub(crate) mod fft;
mod field;
mod grid;
mod ops;
mod probe;

pub use field::{Field, Lattice, Representation, ScalarLattice, TensorLattice};
pub use grid::GridSpec;
pub use ops::{
    biot_savart, curl, dealias, divergence, enstrophy, gradient, helicity, inner_product,
    kinetic_energy, leray_project, tail_fraction, SOLENOIDAL_TOL,
};
#[allow(unused_imports)]
pub(crate) use ops::{dealias_in_place, project_in_place, Wavenumbers};
pub use probe::{eval_tensor_grid, point_eval, resample, Jet, SpectralProbe};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid size {0} has a prime factor larger than 5")]
    UnsupportedSize(usize),
    #[error("expected a {expected:?} representation")]
    WrongRepresentation { expected: Representation },
    #[error("fields live on different lattices")]
    GridMismatch,
    #[error("lattice has {found} entries, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("vorticity has nonzero mean content ({0:e})")]
    NonzeroMean(f64),
    #[error("vorticity is not solenoidal (relative divergence {0:e})")]
    NotSolenoidal(f64),
}
