//! Numerical toolkit for layered dissipative transmission problems on nested
//! balls in three dimensions.

pub mod num;
pub mod special;
pub mod model;
pub mod spectral;
pub mod resolvent;
pub mod evolution;

pub use model::{DomainConfig, InnerBc, ModeProblem, ProblemKind};

/// Double-precision instantiations.
pub type Domain = model::LayeredBallDomain<f64>;
pub type Grid = model::RadialGrid<f64>;
pub type Field = model::RadialField<f64>;
pub type Exterior = resolvent::ExteriorDomain<f64>;
pub type Trace = evolution::EnergyTrace<f64>;
pub type Complex = num_complex::Complex64;
