//! Measuring translation difficulty with cross-mutual information.

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod report;
pub mod scoring;
pub mod subword;

pub use error::{Error, Result};
