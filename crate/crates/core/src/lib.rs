//! Point-vortex statistical mechanics on compact surfaces.
//!
//! The crate discretizes three surfaces (round or weighted sphere, square
//! torus, unit disk), solves the mean-field equation
//! `dd^c u = e^{βu} dV / ∫e^{βu} dV − θ` with Newton continuation in β,
//! builds entropy and free-energy curves, samples canonical and
//! microcanonical vortex ensembles, and integrates both the point-vortex
//! flow and the continuum Euler equation.
//!
//! Normalization used everywhere: `∫dV = 1`, `∫θ = 1`, and `dd^c` is scaled
//! so that the Liouville threshold on the disk and the first eigenvalue on
//! the round sphere both sit at `β = −1`.

pub mod dynamics;
pub mod error;
pub mod euler;
pub mod functionals;
pub mod geometry;
pub mod io;
pub mod krylov;
pub mod meanfield;
pub mod ode;
pub mod quadrature;
pub mod sampler;
pub mod thermo;

pub use error::{Error, Result};
pub use functionals::{Density, EnergyReport, PointConfig};
pub use geometry::{Field, Geometry, GeometrySpec, Point};
