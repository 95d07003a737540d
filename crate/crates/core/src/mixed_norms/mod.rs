//! Sampled fields, lattice coefficient arrays and their mixed norms.

mod coeffs;
mod exponents;
mod field;
mod grid;
mod norms;

pub use coeffs::CoefficientArray;
pub use exponents::{conjugate, exponent_value, parse_exponent, MixedExponents};
pub use field::{Decay, SampledField};
pub use grid::{Grid, IBox, Layout};
pub use norms::{amalgam_norm, lpq_norm, lpq_seq_norm, wiener_norm};

pub(crate) use field::shifted_dot;
