//! Finite-scale certificates of property A, strong embeddability and coarse
//! embeddability, with exact verification.

pub mod config;
pub mod error;
pub mod exact;
pub mod certificates;
pub mod combinators;
pub mod generators;
pub mod groups;
pub mod hilbert;
pub mod io;
pub mod metric;

pub use config::{Caps, RunConfig};
pub use error::{Error, Result};
pub use exact::{Real, Scalar, Q};
