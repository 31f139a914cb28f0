//! Quantum Rényi conditional entropies and the strong converse exponent of
//! privacy amplification against quantum side information.
//!
//! All logarithms are natural; conversion to bits happens at the edges
//! (see [`to_base`]).

pub mod divergence;
pub mod entropy;
pub mod error;
pub mod exponent;
pub mod extreal;
pub mod linalg;
pub mod optimize;
pub mod pa;
pub mod parallel;
pub mod states;
pub mod symmetric;
pub mod verify;

pub use error::{Error, Result};
pub use extreal::ExtReal;

/// Converts a quantity in nats to the given logarithm base.
pub fn to_base(nats: f64, base: f64) -> f64 {
    nats / base.ln()
}

/// Converts a quantity in the given logarithm base to nats.
pub fn from_base(value: f64, base: f64) -> f64 {
    value * base.ln()
}
