//! Reduction, normal forms and relative equilibria for the perturbed 4-D
//! isotropic oscillator `H = ½|Q|² + ½ω²|q|² + ε ρ (β²(a − b)² + 4ab)`.

pub mod charts;
pub mod equilibria;
pub mod error;
pub mod invariants;
pub mod model;
pub mod normalform;
pub mod ode;
pub mod poly;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
