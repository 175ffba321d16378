//! Spectral gaps of bit-symmetric spike Hamiltonians in the symmetric subspace.

pub mod error;
pub mod logdomain;
pub mod model;
mod precision;

pub use error::{Error, Result};
pub use precision::{check_precision, MAX_PRECISION_BITS, NATIVE_BITS};
pub mod estimate;
pub mod search;
pub mod spectrum;

pub use estimate::{Flag, GapEstimate, Method};
pub mod variational;
pub mod quadrature;
pub mod scaling;
pub mod instanton;
pub mod wkb;
pub mod crossings;
