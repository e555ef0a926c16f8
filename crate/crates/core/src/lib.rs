//! Minimization of maxitive set functionals `F(Ω∖Σ)` over connected planar
//! curve networks Σ of fixed length, with the supporting geometry, lattice
//! solvers, property checks and regularity audits.

pub mod audit;
pub mod battery;
pub mod bessel;
pub mod functionals;
pub mod geometry;
pub mod grid;
mod linalg;
pub mod optimizer;
pub mod pde;
mod scalar;

pub use scalar::Real;

pub use linalg::LinalgError;

/// Double-precision aliases for the common types.
pub type Point = geometry::Point2<f64>;
pub type Network = geometry::CurveNetwork<f64>;
pub type Domain = geometry::DomainSpec<f64>;
pub type Lattice = grid::Grid<f64>;
pub type Region = grid::OpenRegion<f64>;
pub type Coeffs = pde::Coefficients<f64>;
