pub mod builders;
pub mod error;
pub mod exact;
pub mod harness;
pub mod model;
pub mod pmf;
pub mod protocol;
pub mod reliability;
pub mod rng;
pub mod sc;
pub mod transform;
pub mod verification;

pub use error::{Error, Result};
