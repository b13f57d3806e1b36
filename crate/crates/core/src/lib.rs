pub mod alpha;
pub mod analysis;
pub mod contfrac;
pub mod error;
pub mod farey;
pub mod numerics;
pub mod partition;
pub mod report;

pub use error::{Error, Result};
