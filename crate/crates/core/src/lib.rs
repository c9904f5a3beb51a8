//! Pseudospectral solver for the 3D Euler and Navier–Stokes equations on a
//! periodic box, together with similarity-frame transforms, trajectory
//! diagnostics and numerical checks of a-priori vorticity estimates.

pub mod diagnostics;
pub mod init;
pub mod profile;
pub mod quadrature;
pub mod similarity;
pub mod solver;
pub mod tracer;
pub mod verify;
pub mod spectral;
