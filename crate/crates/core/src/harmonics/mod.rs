//! Angular discretization: real spherical harmonics, sphere quadrature and
//! the moment matrices of the angular operators.

mod basis;
mod operators;
mod quadrature;

pub use basis::{real_harmonic, Harmonic, HarmonicTable, SphericalBasis, Vec3};
pub use operators::{
    boundary_exactness, boundary_weight_matrix, laplace_beltrami_diagonal, lorentz_matrices,
    operator_exactness, streaming_matrices, AngularOperators,
};
pub use quadrature::{gauss_legendre, gauss_legendre_interval, SphereQuadrature};


