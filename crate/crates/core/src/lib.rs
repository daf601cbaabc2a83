//! Persistence and bifurcation of bounded solutions near planar homoclinic orbits.

pub mod bifurcation;
pub mod conditions;
pub mod error;
pub mod homoclinic;
pub mod interp;
pub mod ode;
pub mod planar;
pub mod quadrature;
pub mod systems;
pub mod variational;

pub use error::{Error, Result};
pub use planar::{wedge, EpsilonBeta, Mat2, PlanarSystem, Vec2};
