pub mod discrete_oracle;
pub mod duality;
pub mod error;
pub mod fiberization;
pub mod frontdesk;
pub mod lattice_ops;
mod tensor;
pub mod mixed_norms;

pub use error::{Error, Result};
