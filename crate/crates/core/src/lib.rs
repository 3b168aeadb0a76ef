//! Stationary densities of semimartingale reflected Brownian motion in a
//! planar wedge when they are finite sums of exponentials, with numerical
//! checks and a Monte Carlo simulator.

pub mod density;
pub mod error;
pub mod geometry;
pub mod quadrature;
pub mod sim;
pub mod spectral;
pub mod validation;

pub use density::{normalize, NormalizedDensity, SumOfExponentials};
pub use error::{Result, WedgeError};
pub use geometry::{Drift, Face, LabelKind, LabelMatrix, Vec2, WedgeGeometry};
